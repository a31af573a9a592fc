#include "collapselab/exact.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "collapselab/quadrature.hpp"

namespace collapselab {

namespace {

// Transition probabilities in units of 1/96; row = next case, column = current case.
constexpr int kTransition96[kCaseCount][kCaseCount] = {
    {17, 14, 14, 0, 14, 24, 6, 0, 14, 6, 24, 0, 0, 0, 0, 0},
    {3, 4, 4, 0, 4, 0, 6, 0, 4, 6, 0, 0, 0, 0, 0, 0},
    {3, 4, 4, 0, 4, 0, 6, 0, 4, 6, 0, 0, 0, 0, 0, 0},
    {1, 2, 2, 24, 2, 0, 6, 24, 2, 6, 0, 24, 0, 0, 0, 0},
    {3, 4, 4, 0, 4, 0, 6, 0, 4, 6, 0, 0, 0, 0, 0, 0},
    {17, 14, 14, 0, 14, 24, 6, 0, 14, 6, 24, 0, 0, 0, 0, 0},
    {1, 2, 2, 0, 2, 0, 6, 0, 2, 6, 0, 0, 0, 0, 0, 0},
    {3, 4, 4, 24, 4, 0, 6, 24, 4, 6, 0, 24, 0, 0, 0, 0},
    {3, 4, 4, 0, 4, 0, 6, 0, 4, 6, 0, 0, 0, 0, 0, 0},
    {1, 2, 2, 0, 2, 0, 6, 0, 2, 6, 0, 0, 0, 0, 0, 0},
    {17, 14, 14, 0, 14, 24, 6, 0, 14, 6, 24, 0, 0, 0, 0, 0},
    {3, 4, 4, 24, 4, 0, 6, 24, 4, 6, 0, 24, 0, 0, 0, 0},
    {1, 2, 2, 0, 2, 0, 6, 0, 2, 6, 0, 0, 24, 24, 24, 0},
    {3, 4, 4, 0, 4, 0, 6, 0, 4, 6, 0, 0, 24, 24, 24, 0},
    {3, 4, 4, 0, 4, 0, 6, 0, 4, 6, 0, 0, 24, 24, 24, 0},
    {17, 14, 14, 24, 14, 24, 6, 24, 14, 6, 24, 24, 24, 24, 24, 96},
};

void check_case(int c) {
  if (c < 1 || c > kCaseCount) throw std::out_of_range("case number must be in 1..16");
}

CaseDistribution step(const TransitionMatrix& p, const CaseDistribution& pi) {
  CaseDistribution next;
  for (int j = 1; j <= kCaseCount; ++j) {
    Rational s = 0;
    for (int i = 1; i <= kCaseCount; ++i) {
      if (pi[i] != 0) s += p(j, i) * pi[i];
    }
    next.p[static_cast<std::size_t>(j - 1)] = s;
  }
  return next;
}

}  // namespace

TransitionMatrix::TransitionMatrix() {
  for (int j = 0; j < kCaseCount; ++j) {
    for (int i = 0; i < kCaseCount; ++i) p_[j][i] = Rational(kTransition96[j][i], 96);
  }
}

const Rational& TransitionMatrix::operator()(int next_case, int current_case) const {
  check_case(next_case);
  check_case(current_case);
  return p_[next_case - 1][current_case - 1];
}

Rational TransitionMatrix::column_sum(int current_case) const {
  check_case(current_case);
  Rational s = 0;
  for (int j = 0; j < kCaseCount; ++j) s += p_[j][current_case - 1];
  return s;
}

Rational CaseDistribution::sum() const {
  Rational s = 0;
  for (const auto& v : p) s += v;
  return s;
}

const TransitionMatrix& transition_matrix() {
  static const TransitionMatrix p;
  return p;
}

CaseDistribution initial_distribution() {
  // A scalar-input first layer puts each neuron on exactly one ray, so only the
  // four "one neuron per ray" cases occur.
  CaseDistribution pi;
  for (auto& v : pi.p) v = 0;
  for (int c : {4, 7, 10, 13}) pi.p[static_cast<std::size_t>(c - 1)] = Rational(1, 4);
  return pi;
}

CaseDistribution case_distribution(int layer) {
  if (layer < 1) throw std::invalid_argument("layer index must be >= 1");
  const auto& p = transition_matrix();
  CaseDistribution pi = initial_distribution();
  for (int l = 1; l < layer; ++l) pi = step(p, pi);
  return pi;
}

Rational exact_constant_probability(int depth, bool last_layer_relu) {
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  if (last_layer_relu) return case_distribution(depth)[kCaseCount];
  if (depth == 1) return Rational(0);
  return case_distribution(depth - 1)[kCaseCount];
}

double collapse_probability_bound(std::span<const int> widths, bool last_layer_relu,
                                  bool biases_nonzero) {
  if (widths.empty()) throw std::invalid_argument("widths must be non-empty");
  for (int w : widths) {
    if (w < 1) throw std::invalid_argument("widths must be >= 1");
  }
  const std::size_t depth = widths.size();
  if (biases_nonzero) {
    if (last_layer_relu) return std::ldexp(1.0, -widths[depth - 1]);
    // A single affine layer with random weights is constant only on a null set.
    if (depth == 1) return 0.0;
    return std::ldexp(1.0, -widths[depth - 2]);
  }
  const std::size_t active = last_layer_relu ? depth : depth - 1;
  double log_survive = 0.0;
  for (std::size_t l = 0; l < active; ++l) log_survive += std::log1p(-std::ldexp(1.0, -widths[l]));
  return -std::expm1(log_survive);
}

std::int64_t max_safe_depth(int width, double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must lie in (0, 1)");
  if (width < 1) throw std::invalid_argument("width must be >= 1");
  const double per_layer = std::log1p(-std::ldexp(1.0, -width));
  if (per_layer == 0.0) return std::numeric_limits<std::int64_t>::max();
  const double bound = std::floor(std::log1p(-p) / per_layer);
  if (bound >= 9.2e18) return std::numeric_limits<std::int64_t>::max();
  return static_cast<std::int64_t>(bound);
}

namespace {

void check_params(const LengthMapParams& params) {
  if (params.sigma_w2 < 0.0 || params.sigma_b2 < 0.0 || params.q0 < 0.0) {
    throw std::invalid_argument("length-map parameters must be nonnegative");
  }
  if (params.depth < 1) throw std::invalid_argument("length map needs depth >= 1");
}

}  // namespace

LengthTrajectory length_map_relu(const LengthMapParams& params) {
  check_params(params);
  if (params.activation != Activation::relu) {
    throw std::invalid_argument("closed-form length map applies to ReLU only");
  }
  LengthTrajectory t;
  t.expected_q.reserve(static_cast<std::size_t>(params.depth));
  double q = params.sigma_w2 * params.q0 + params.sigma_b2;
  t.expected_q.push_back(q);
  for (int l = 2; l <= params.depth; ++l) {
    q = params.sigma_w2 / 2.0 * q + params.sigma_b2;
    t.expected_q.push_back(q);
  }
  return t;
}

LengthTrajectory length_map_general(const LengthMapParams& params) {
  check_params(params);
  static const GaussHermiteRule coarse = gauss_hermite(kGaussHermiteNodes);
  static const GaussHermiteRule fine = gauss_hermite(2 * kGaussHermiteNodes);

  LengthTrajectory t;
  t.expected_q.reserve(static_cast<std::size_t>(params.depth));
  double q = params.sigma_w2 * params.q0 + params.sigma_b2;
  t.expected_q.push_back(q);
  for (int l = 2; l <= params.depth; ++l) {
    const double s = std::sqrt(q);
    auto integrand = [&](double z) {
      const double v = activate(params.activation, s * z);
      return v * v;
    };
    const double next = params.sigma_w2 * gaussian_expectation(integrand, coarse) + params.sigma_b2;
    const double check = params.sigma_w2 * gaussian_expectation(integrand, fine) + params.sigma_b2;
    const double change = std::abs(next - check);
    t.max_refinement_change = std::max(t.max_refinement_change, change);
    if (change > kQuadratureTolerance) t.quadrature_converged = false;
    q = next;
    t.expected_q.push_back(q);
  }
  return t;
}

}  // namespace collapselab
