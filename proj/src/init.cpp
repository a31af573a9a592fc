#include "collapselab/init.hpp"

#include <cmath>

#include <fmt/core.h>

namespace collapselab {

std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::he_normal: return "he_normal";
    case Scheme::lecun_normal: return "lecun_normal";
    case Scheme::glorot_uniform: return "glorot_uniform";
    case Scheme::symmetric_normal: return "symmetric_normal";
    case Scheme::symmetric_uniform: return "symmetric_uniform";
    case Scheme::rademacher: return "rademacher";
    case Scheme::orthogonal: return "orthogonal";
    case Scheme::lsuv: return "lsuv";
  }
  return "he_normal";
}

Scheme parse_scheme(std::string_view s) {
  for (Scheme k : {Scheme::he_normal, Scheme::lecun_normal, Scheme::glorot_uniform,
                   Scheme::symmetric_normal, Scheme::symmetric_uniform, Scheme::rademacher,
                   Scheme::orthogonal, Scheme::lsuv}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument(fmt::format("unknown initializer '{}'", s));
}

std::string_view to_string(BiasMode m) { return m == BiasMode::zero ? "zero" : "symmetric"; }

BiasMode parse_bias_mode(std::string_view s) {
  if (s == "zero") return BiasMode::zero;
  if (s == "symmetric") return BiasMode::symmetric;
  throw std::invalid_argument(fmt::format("unknown bias mode '{}'", s));
}

bool is_symmetric(Scheme s) { return s != Scheme::orthogonal && s != Scheme::lsuv; }

namespace {

enum class Family { normal, uniform, rademacher };

Family family(Scheme s) {
  switch (s) {
    case Scheme::glorot_uniform:
    case Scheme::symmetric_uniform:
      return Family::uniform;
    case Scheme::rademacher:
      return Family::rademacher;
    default:
      return Family::normal;
  }
}

// `sd` is the standard deviation of the draw.
double draw(Family f, CounterRng& rng, double sd) {
  switch (f) {
    case Family::normal:
      return sd * rng.normal();
    case Family::uniform:
      return rng.symmetric_uniform(std::sqrt(3.0) * sd);
    case Family::rademacher:
      return rng.rademacher(sd);
  }
  return 0.0;
}

double weight_variance(const InitializerSpec& spec, int fan_in, int fan_out) {
  switch (spec.scheme) {
    case Scheme::he_normal: return 2.0 / fan_in;
    case Scheme::lecun_normal: return 1.0 / fan_in;
    // Bound sqrt(6 / (fan_in + fan_out)) <=> variance 2 / (fan_in + fan_out).
    case Scheme::glorot_uniform: return 2.0 / (fan_in + fan_out);
    default: return spec.weight_gain / fan_in;
  }
}

}  // namespace

Matrix orthogonal_matrix(int rows, int cols, CounterRng& rng) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("orthogonal matrix needs rows, cols >= 1");
  const int tall = std::max(rows, cols);
  const int narrow = std::min(rows, cols);
  Matrix a(tall, narrow);
  for (int i = 0; i < tall; ++i) {
    for (int j = 0; j < narrow; ++j) a(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(tall, narrow);
  const Matrix r = qr.matrixQR().topRows(narrow).triangularView<Eigen::Upper>();
  for (int j = 0; j < narrow; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  if (rows < cols) return q.transpose();
  return q;
}

Matrix orthogonal_matrix(int rows, int cols, std::uint64_t seed) {
  CounterRng rng(seed);
  return orthogonal_matrix(rows, cols, rng);
}

ParameterStream::ParameterStream(const Architecture& arch, const InitializerSpec& spec)
    : arch_(arch), spec_(spec), rng_(spec.seed, spec.sign_flip) {
  arch_.validate();
}

LayerParams ParameterStream::next() {
  if (done()) throw std::out_of_range("parameter stream exhausted");
  const int l = layer_++;
  const int fan_in = arch_.fan_in(l);
  const int fan_out = arch_.widths[l];
  const Family fam = family(spec_.scheme);
  LayerParams p;
  p.bias = Vector::Zero(fan_out);
  if (spec_.scheme == Scheme::orthogonal || spec_.scheme == Scheme::lsuv) {
    p.weight = orthogonal_matrix(fan_out, fan_in, rng_);
  } else {
    p.weight.resize(fan_out, fan_in);
    const double sd = std::sqrt(weight_variance(spec_, fan_in, fan_out));
    for (int i = 0; i < fan_out; ++i) {
      for (int j = 0; j < fan_in; ++j) p.weight(i, j) = draw(fam, rng_, sd);
    }
  }
  if (spec_.bias_mode == BiasMode::symmetric && !arch_.bias_free) {
    const double sd = std::sqrt(spec_.bias_variance);
    for (int i = 0; i < fan_out; ++i) p.bias[i] = draw(fam, rng_, sd);
  }
  return p;
}

Network init_parameters(const Architecture& arch, const InitializerSpec& spec,
                        Activation activation) {
  Network net = Network::zeros(arch, activation);
  ParameterStream stream(arch, spec);
  for (auto& layer : net.params) layer = stream.next();
  return net;
}

LsuvResult lsuv_rescale(const Network& net, const Matrix& probe_batch) {
  if (probe_batch.cols() == 0) throw std::invalid_argument("LSUV needs a non-empty probe batch");
  LsuvResult result{net, std::vector<LsuvLayerInfo>(static_cast<std::size_t>(net.depth()))};
  Network& out = result.net;

  for (int l = 0; l < out.depth(); ++l) {
    auto& info = result.layers[static_cast<std::size_t>(l)];
    auto& p = out.params[static_cast<std::size_t>(l)];
    for (;;) {
      // Only layers before l affect the input to layer l; they are final by now.
      const BatchTrace trace = forward_batch(out, probe_batch);
      const Matrix& h = trace.pre[l];
      const double mean = h.mean();
      const double std = std::sqrt((h.array() - mean).square().mean());
      info.final_std = std;
      const Matrix& x = trace.post[l];
      if (std == 0.0 || (out.has_activation(l) && x.isZero(0.0))) {
        info.dead = true;
        break;
      }
      if (std::abs(std - 1.0) <= kLsuvTolerance) {
        info.converged = true;
        break;
      }
      if (info.iterations == kLsuvMaxIterations) break;
      const double factor = 1.0 / std;
      p.weight *= factor;
      p.bias *= factor;
      info.scale *= factor;
      ++info.iterations;
    }
  }
  return result;
}

}  // namespace collapselab
