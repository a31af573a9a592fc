#include "collapselab/collapse.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/core.h>

namespace collapselab {

std::string_view to_string(CollapseKind k) {
  switch (k) {
    case CollapseKind::fitted: return "fitted";
    case CollapseKind::full_collapse: return "full_collapse";
    case CollapseKind::partial_collapse: return "partial_collapse";
    case CollapseKind::other: return "other";
  }
  return "other";
}

CollapseKind parse_collapse_kind(std::string_view s) {
  for (CollapseKind k : {CollapseKind::fitted, CollapseKind::full_collapse,
                         CollapseKind::partial_collapse, CollapseKind::other}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument(fmt::format("unknown collapse kind '{}'", s));
}

namespace {

nlohmann::json vec_json(const Vector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector json_vec(const nlohmann::json& a) {
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

}  // namespace

nlohmann::json to_json(const CollapseReport& r) {
  nlohmann::json j;
  j["kind"] = std::string(to_string(r.kind));
  j["zero_layer"] = r.zero_layer ? nlohmann::json(*r.zero_layer) : nlohmann::json(nullptr);
  j["constant_value"] = r.constant_value ? vec_json(*r.constant_value) : nlohmann::json(nullptr);
  nlohmann::json regions = nlohmann::json::array();
  for (const auto& g : r.regions) {
    regions.push_back({{"lo", vec_json(g.lo)},
                       {"hi", vec_json(g.hi)},
                       {"constant", vec_json(g.constant)},
                       {"target_mean", vec_json(g.target_mean)},
                       {"points", g.points}});
  }
  j["regions"] = regions;
  j["max_grad_norm_prefix"] = r.max_grad_norm_prefix;
  j["max_abs_error"] = r.max_abs_error;
  j["matches_statistic"] = r.matches_statistic;
  j["tol"] = r.tol;
  return j;
}

CollapseReport collapse_report_from_json(const nlohmann::json& j) {
  CollapseReport r;
  r.kind = parse_collapse_kind(j.at("kind").get<std::string>());
  if (!j.at("zero_layer").is_null()) r.zero_layer = j.at("zero_layer").get<int>();
  if (!j.at("constant_value").is_null()) r.constant_value = json_vec(j.at("constant_value"));
  for (const auto& g : j.at("regions")) {
    Region reg;
    reg.lo = json_vec(g.at("lo"));
    reg.hi = json_vec(g.at("hi"));
    reg.constant = json_vec(g.at("constant"));
    reg.target_mean = json_vec(g.at("target_mean"));
    reg.points = g.at("points").get<int>();
    r.regions.push_back(std::move(reg));
  }
  r.max_grad_norm_prefix = j.at("max_grad_norm_prefix").get<double>();
  r.max_abs_error = j.at("max_abs_error").get<double>();
  r.matches_statistic = j.at("matches_statistic").get<bool>();
  r.tol = j.at("tol").get<double>();
  return r;
}

Matrix default_grid(int input_dim) {
  const double lo = -std::sqrt(3.0);
  const double hi = std::sqrt(3.0);
  if (input_dim == 1) {
    Matrix g(1, kGridPoints1d);
    for (int i = 0; i < kGridPoints1d; ++i) g(0, i) = lo + (hi - lo) * i / (kGridPoints1d - 1);
    return g;
  }
  if (input_dim == 2) {
    const int m = kGridPoints2dPerAxis;
    Matrix g(2, m * m);
    // Column index i * m + j holds (axis[i], axis[j]).
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        g(0, i * m + j) = lo + (hi - lo) * i / (m - 1);
        g(1, i * m + j) = lo + (hi - lo) * j / (m - 1);
      }
    }
    return g;
  }
  throw std::invalid_argument("default grid supports input dimension 1 or 2");
}

Matrix default_grid(TargetId id) { return default_grid(target_spec(id).input_dim); }

std::vector<bool> zero_layers(const Network& net, const Matrix& grid) {
  const BatchTrace trace = forward_batch(net, grid);
  std::vector<bool> zero(static_cast<std::size_t>(net.depth()));
  for (int l = 0; l < net.depth(); ++l) zero[static_cast<std::size_t>(l)] = trace.post[l].isZero(0.0);
  return zero;
}

std::optional<int> detect_zero_layer(const Network& net, const Matrix& grid) {
  const auto zero = zero_layers(net, grid);
  for (std::size_t l = 0; l < zero.size(); ++l) {
    if (!zero[l]) continue;
    const bool propagates = net.arch.bias_free && net.activation == Activation::relu &&
                            net.norm.mode != NormMode::batchnorm;
    if (propagates) {
      for (std::size_t n = l; n < zero.size(); ++n) {
        if (!zero[n]) {
          throw std::logic_error(
              fmt::format("bias-free net: layer {} is zero but layer {} is not", l + 1, n + 1));
        }
      }
    }
    return static_cast<int>(l) + 1;
  }
  return std::nullopt;
}

namespace {

double target_component(TargetId id, int k, double x1, double x2) {
  const std::array<double, 2> x{x1, x2};
  const int d = target_spec(id).input_dim;
  return evaluate(id, std::span<const double>(x.data(), static_cast<std::size_t>(d))).y[k];
}

// Average of f over [lo, hi], splitting at the interior breakpoints.
template <class F>
double interval_mean(F f, double lo, double hi, std::vector<double> breaks) {
  breaks.push_back(lo);
  breaks.push_back(hi);
  std::sort(breaks.begin(), breaks.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = std::clamp(breaks[i], lo, hi);
    const double b = std::clamp(breaks[i + 1], lo, hi);
    if (b <= a) continue;
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13);
  }
  return total / (hi - lo);
}

double target_mean_component(TargetId id, int k) {
  const TargetSpec s = target_spec(id);
  if (s.input_dim == 1) {
    return interval_mean([&](double x) { return target_component(id, k, x, 0.0); }, s.lo, s.hi,
                         {0.0});
  }
  // Kinks of |x1 +- x2| lie on x2 = -x1 and x2 = x1.
  auto inner = [&](double x1) {
    return interval_mean([&](double x2) { return target_component(id, k, x1, x2); }, s.lo, s.hi,
                         {-x1, x1});
  };
  return interval_mean(inner, s.lo, s.hi, {0.0});
}

constexpr int kLevelCells = 20000;

// Measure of {x in [lo, hi] : g(x) <= 0} / (hi - lo). Sign changes are
// located per cell by bisection; level sets thinner than a cell can be missed.
template <class G>
double sublevel_fraction(G g, double lo, double hi, int cells) {
  std::vector<double> cuts{lo};
  double a = lo;
  bool below_a = g(a) <= 0.0;
  for (int i = 1; i <= cells; ++i) {
    const double b = lo + (hi - lo) * i / cells;
    const bool below_b = g(b) <= 0.0;
    if (below_a != below_b) {
      double u = a, v = b;
      for (int it = 0; it < 80 && v - u > 0.0; ++it) {
        const double m = 0.5 * (u + v);
        if (m <= u || m >= v) break;
        if ((g(m) <= 0.0) == below_a) u = m; else v = m;
      }
      cuts.push_back(0.5 * (u + v));
    }
    a = b;
    below_a = below_b;
  }
  cuts.push_back(hi);
  double measure = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] <= cuts[i]) continue;
    if (g(0.5 * (cuts[i] + cuts[i + 1])) <= 0.0) measure += cuts[i + 1] - cuts[i];
  }
  return measure / (hi - lo);
}

// CDF accuracy limits how tightly the flat part at 1/2 can be resolved.
double cdf_slack(int input_dim) { return input_dim == 1 ? 1e-9 : 1e-6; }

std::pair<double, double> median_interval(TargetId id, int k) {
  const TargetSpec s = target_spec(id);
  const Matrix grid = default_grid(s.input_dim);
  const Matrix y = evaluate_batch(id, grid);
  double lo = y.row(k).minCoeff() - 1.0;
  double hi = y.row(k).maxCoeff() + 1.0;
  const double delta = cdf_slack(s.input_dim);
  auto cdf = [&](double c) { return target_cdf(id, k, c); };
  const int iterations = s.input_dim == 1 ? 100 : 48;
  // Lower end: inf { c : F(c) >= 1/2 - delta }.
  double u = lo, v = hi;
  for (int it = 0; it < iterations; ++it) {
    const double m = 0.5 * (u + v);
    if (cdf(m) >= 0.5 - delta) v = m; else u = m;
  }
  const double med_lo = v;
  // Upper end: sup { c : F(c) <= 1/2 + delta }.
  u = lo;
  v = hi;
  for (int it = 0; it < iterations; ++it) {
    const double m = 0.5 * (u + v);
    if (cdf(m) <= 0.5 + delta) u = m; else v = m;
  }
  const double med_hi = u;
  return {std::min(med_lo, med_hi), std::max(med_lo, med_hi)};
}

}  // namespace

double target_cdf(TargetId id, int output, double c) {
  const TargetSpec s = target_spec(id);
  if (output < 0 || output >= s.output_dim) throw std::out_of_range("target output index");
  if (s.input_dim == 1) {
    return sublevel_fraction([&](double x) { return target_component(id, output, x, 0.0) - c; },
                             s.lo, s.hi, kLevelCells);
  }
  // Composite Simpson over x1 of the inner level-set fraction.
  constexpr int kOuter = 200;
  const double h = (s.hi - s.lo) / kOuter;
  double total = 0.0;
  for (int i = 0; i <= kOuter; ++i) {
    const double x1 = s.lo + h * i;
    const double w = (i == 0 || i == kOuter) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    total += w * sublevel_fraction(
                     [&](double x2) { return target_component(id, output, x1, x2) - c; }, s.lo,
                     s.hi, 400);
  }
  return total * h / 3.0 / (s.hi - s.lo);
}

const TargetStatistics& target_statistics(TargetId id) {
  static std::mutex mu;
  static std::map<TargetId, TargetStatistics> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(id);
  if (it != cache.end()) return it->second;
  const TargetSpec s = target_spec(id);
  TargetStatistics st;
  st.mean.resize(s.output_dim);
  for (int k = 0; k < s.output_dim; ++k) {
    st.mean[k] = target_mean_component(id, k);
    st.median_set.push_back(median_interval(id, k));
  }
  return cache.emplace(id, std::move(st)).first->second;
}

namespace {

struct Plateau {
  std::vector<Eigen::Index> points;
};

// Max over outputs of |N(a) - N(b)| / |x(a) - x(b)|.
double slope(const Matrix& out, const Matrix& grid, Eigen::Index a, Eigen::Index b) {
  const double dx = (grid.col(a) - grid.col(b)).norm();
  return (out.col(a) - out.col(b)).cwiseAbs().maxCoeff() / dx;
}

std::vector<Plateau> plateaus_1d(const Matrix& out, const Matrix& grid, double flat) {
  // Sort by x so the grid need not be ordered.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(grid.cols()));
  for (Eigen::Index i = 0; i < grid.cols(); ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return grid(0, a) < grid(0, b); });
  std::vector<Plateau> result;
  std::size_t i = 0;
  while (i + 1 < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && slope(out, grid, order[j], order[j + 1]) < flat) ++j;
    if (j - i >= 2) {
      Plateau p;
      p.points.assign(order.begin() + static_cast<std::ptrdiff_t>(i),
                      order.begin() + static_cast<std::ptrdiff_t>(j) + 1);
      result.push_back(std::move(p));
    }
    i = j == i ? i + 1 : j;
  }
  return result;
}

// 2-D tensor grid (column i * m + j). A point is flat when every step to a
// 4-neighbour is flat; flat points are grouped by 4-connectivity.
std::vector<Plateau> plateaus_2d(const Matrix& out, const Matrix& grid, double flat) {
  const auto m = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(grid.cols()))));
  if (m * m != grid.cols()) throw std::invalid_argument("2-D classification needs a square tensor grid");
  auto idx = [m](Eigen::Index i, Eigen::Index j) { return i * m + j; };
  std::vector<char> is_flat(static_cast<std::size_t>(grid.cols()), 1);
  const std::array<std::pair<int, int>, 4> nbr{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      for (auto [di, dj] : nbr) {
        const Eigen::Index a = i + di, b = j + dj;
        if (a < 0 || b < 0 || a >= m || b >= m) continue;
        if (slope(out, grid, idx(i, j), idx(a, b)) >= flat) is_flat[static_cast<std::size_t>(idx(i, j))] = 0;
      }
    }
  }
  std::vector<char> seen(is_flat.size(), 0);
  std::vector<Plateau> result;
  for (Eigen::Index s = 0; s < grid.cols(); ++s) {
    if (!is_flat[static_cast<std::size_t>(s)] || seen[static_cast<std::size_t>(s)]) continue;
    Plateau p;
    std::vector<Eigen::Index> stack{s};
    seen[static_cast<std::size_t>(s)] = 1;
    while (!stack.empty()) {
      const Eigen::Index c = stack.back();
      stack.pop_back();
      p.points.push_back(c);
      const Eigen::Index i = c / m, j = c % m;
      for (auto [di, dj] : nbr) {
        const Eigen::Index a = i + di, b = j + dj;
        if (a < 0 || b < 0 || a >= m || b >= m) continue;
        const auto n = static_cast<std::size_t>(idx(a, b));
        if (is_flat[n] && !seen[n]) {
          seen[n] = 1;
          stack.push_back(idx(a, b));
        }
      }
    }
    if (p.points.size() >= 3) result.push_back(std::move(p));
  }
  return result;
}

// Grid points adjacent to a plateau (steep transitions are allowed there).
std::vector<char> halo(const std::vector<Plateau>& plateaus, const Matrix& grid) {
  std::vector<char> mark(static_cast<std::size_t>(grid.cols()), 0);
  if (plateaus.empty()) return mark;
  // Nearest-neighbour spacing along each axis of a tensor grid.
  Vector spacing = Vector::Constant(grid.rows(), std::numeric_limits<double>::infinity());
  for (Eigen::Index r = 0; r < grid.rows(); ++r) {
    std::vector<double> v(static_cast<std::size_t>(grid.cols()));
    for (Eigen::Index c = 0; c < grid.cols(); ++c) v[static_cast<std::size_t>(c)] = grid(r, c);
    std::sort(v.begin(), v.end());
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
      if (v[i + 1] > v[i]) spacing[r] = std::min(spacing[r], v[i + 1] - v[i]);
    }
  }
  for (const auto& p : plateaus) {
    for (Eigen::Index q : p.points) mark[static_cast<std::size_t>(q)] = 1;
  }
  std::vector<char> out = mark;
  for (Eigen::Index c = 0; c < grid.cols(); ++c) {
    if (mark[static_cast<std::size_t>(c)]) continue;
    for (const auto& p : plateaus) {
      for (Eigen::Index q : p.points) {
        bool near = true;
        for (Eigen::Index r = 0; r < grid.rows() && near; ++r) {
          near = std::abs(grid(r, c) - grid(r, q)) <= 1.5 * spacing[r];
        }
        if (near) {
          out[static_cast<std::size_t>(c)] = 1;
          break;
        }
      }
      if (out[static_cast<std::size_t>(c)]) break;
    }
  }
  return out;
}

}  // namespace

CollapseReport classify_state(const Network& net, TargetId id, const Matrix& grid, LossKind loss,
                              double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  const TargetSpec spec = target_spec(id);
  if (grid.rows() != spec.input_dim || grid.cols() < 2) throw ShapeError("grid does not match target");
  const Matrix out = evaluate(net, grid);
  const Matrix y = evaluate_batch(id, grid);
  if (out.rows() != y.rows()) throw ShapeError("network output does not match target");

  CollapseReport r;
  r.tol = tol;
  r.max_abs_error = (out - y).cwiseAbs().maxCoeff();
  r.zero_layer = detect_zero_layer(net, grid);

  const GradientSet g = backward(net, grid, y, loss);
  const int prefix = r.zero_layer ? *r.zero_layer : std::max(1, net.depth() - 1);
  for (int l = 0; l < prefix && l < net.depth(); ++l) {
    r.max_grad_norm_prefix = std::max(r.max_grad_norm_prefix, max_abs(g[static_cast<std::size_t>(l)]));
  }

  if (!std::isfinite(r.max_abs_error)) return r;
  if (r.max_abs_error < tol) {
    r.kind = CollapseKind::fitted;
    return r;
  }

  const Vector range = out.rowwise().maxCoeff() - out.rowwise().minCoeff();
  if (range.maxCoeff() < tol) {
    r.kind = CollapseKind::full_collapse;
    const Vector c = range.maxCoeff() == 0.0 ? Vector(out.col(0)) : Vector(out.rowwise().mean());
    r.constant_value = c;
    const TargetStatistics& st = target_statistics(id);
    bool match = true;
    for (Eigen::Index k = 0; k < c.size(); ++k) {
      if (loss == LossKind::mse) {
        match = match && std::abs(c[k] - st.mean[k]) < tol;
      } else {
        const auto [lo, hi] = st.median_set[static_cast<std::size_t>(k)];
        match = match && c[k] >= lo - tol && c[k] <= hi + tol;
      }
    }
    r.matches_statistic = match;
    return r;
  }

  const double flat = tol / 10.0;
  const std::vector<Plateau> plateaus =
      spec.input_dim == 1 ? plateaus_1d(out, grid, flat) : plateaus_2d(out, grid, flat);
  if (plateaus.empty()) return r;

  bool all_match = true;
  for (const auto& p : plateaus) {
    Region reg;
    reg.points = static_cast<int>(p.points.size());
    reg.lo = Vector::Constant(grid.rows(), std::numeric_limits<double>::infinity());
    reg.hi = Vector::Constant(grid.rows(), -std::numeric_limits<double>::infinity());
    reg.constant = Vector::Zero(out.rows());
    reg.target_mean = Vector::Zero(y.rows());
    for (Eigen::Index q : p.points) {
      reg.lo = reg.lo.cwiseMin(grid.col(q));
      reg.hi = reg.hi.cwiseMax(grid.col(q));
      reg.constant += out.col(q);
      reg.target_mean += y.col(q);
    }
    reg.constant /= static_cast<double>(p.points.size());
    reg.target_mean /= static_cast<double>(p.points.size());
    // A plateau on which the net already fits the target is not a collapse.
    double fit_err = 0.0;
    for (Eigen::Index q : p.points) fit_err = std::max(fit_err, (out.col(q) - y.col(q)).cwiseAbs().maxCoeff());
    if (fit_err < tol) continue;
    all_match = all_match && (reg.constant - reg.target_mean).cwiseAbs().maxCoeff() < tol;
    r.regions.push_back(std::move(reg));
  }
  if (r.regions.empty() || !all_match) {
    r.regions.clear();
    return r;
  }
  const std::vector<char> near = halo(plateaus, grid);
  for (Eigen::Index c = 0; c < grid.cols(); ++c) {
    if (near[static_cast<std::size_t>(c)]) continue;
    if ((out.col(c) - y.col(c)).cwiseAbs().maxCoeff() >= tol) {
      r.regions.clear();
      return r;
    }
  }
  r.kind = CollapseKind::partial_collapse;
  return r;
}

GradientVanishingReport verify_vanishing_gradients(const Network& net, const Dataset& data,
                                                   LossKind loss) {
  if (data.size() == 0) throw std::invalid_argument("dataset must be non-empty");
  GradientVanishingReport rep;
  const GradientSet g = backward(net, data.x, data.y, loss);
  for (const auto& layer : g) rep.layer_max_abs.push_back(max_abs(layer));
  rep.all_zero = std::all_of(rep.layer_max_abs.begin(), rep.layer_max_abs.end(),
                             [](double v) { return v == 0.0; });
  rep.zero_layer = detect_zero_layer(net, data.x);
  if (rep.zero_layer) {
    rep.zero_prefix_exact = true;
    for (int l = 0; l < *rep.zero_layer; ++l) {
      rep.zero_prefix_exact = rep.zero_prefix_exact && rep.layer_max_abs[static_cast<std::size_t>(l)] == 0.0;
    }
  }

  const Matrix out = evaluate(net, data.x);
  bool constant = true;
  for (Eigen::Index c = 1; c < out.cols() && constant; ++c) constant = out.col(c) == out.col(0);
  if (constant) {
    const Vector mean = data.y.rowwise().mean();
    const double scale = 1.0 + mean.cwiseAbs().maxCoeff();
    rep.constant_at_empirical_mean = (out.col(0) - mean).cwiseAbs().maxCoeff() <= 1e-12 * scale;
  }

  // Group samples by bit-identical output; groups of >= 2 are plateaus.
  auto less = [](const Vector& a, const Vector& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
  };
  std::map<Vector, std::vector<Eigen::Index>, decltype(less)> groups(less);
  for (Eigen::Index c = 0; c < out.cols(); ++c) groups[out.col(c)].push_back(c);
  bool partial = false;
  bool ok = true;
  for (const auto& [value, members] : groups) {
    if (members.size() >= 2) {
      Vector m = Vector::Zero(data.y.rows());
      for (Eigen::Index c : members) m += data.y.col(c);
      m /= static_cast<double>(members.size());
      const double scale = 1.0 + m.cwiseAbs().maxCoeff();
      ok = ok && (value - m).cwiseAbs().maxCoeff() <= 1e-9 * scale;
      partial = true;
    } else {
      const Eigen::Index c = members.front();
      ok = ok && (out.col(c) - data.y.col(c)).cwiseAbs().maxCoeff() <= 1e-9;
    }
  }
  rep.partial_mean_condition = partial && ok;
  return rep;
}

}  // namespace collapselab
