#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "collapselab/net.hpp"

namespace collapselab {

using Rational = boost::multiprecision::cpp_rational;

inline constexpr int kCaseCount = 16;

/// Sign-pattern cases of a bias-free width-2 layer with scalar input. Case c
/// (1..16) records which of the two neurons are active on x > 0 and x < 0;
/// case 16 has both neurons zero on both rays and is absorbing.
///
/// Entry (next, current) is the probability that the next layer is in case
/// `next` given the current layer is in case `current`.
class TransitionMatrix {
 public:
  TransitionMatrix();

  /// 1-based case numbers.
  const Rational& operator()(int next_case, int current_case) const;

  Rational column_sum(int current_case) const;

 private:
  std::array<std::array<Rational, kCaseCount>, kCaseCount> p_;
};

/// Probability vector over the 16 cases (1-based access).
struct CaseDistribution {
  std::array<Rational, kCaseCount> p;

  const Rational& operator[](int case_no) const { return p.at(static_cast<std::size_t>(case_no - 1)); }
  Rational sum() const;
};

const TransitionMatrix& transition_matrix();

/// Distribution after the first hidden layer.
CaseDistribution initial_distribution();

/// pi^layer = P^{layer-1} pi^1. Throws std::invalid_argument for layer < 1.
CaseDistribution case_distribution(int layer);

/// Probability that a bias-free width-2 network with scalar input is
/// initialized to a constant function. All-ReLU: (P^{L-1} pi^1)_16. With a
/// linear last layer the output is constant iff layer L-1 is in case 16, so
/// (P^{L-2} pi^1)_16 for L >= 2 and 0 for L = 1.
Rational exact_constant_probability(int depth, bool last_layer_relu);

/// Per-point zero probability. Zero biases: 1 - prod(1 - 2^-N^l) over ReLU
/// layers. Nonzero biases: 2^-N^L with a last ReLU, otherwise 2^-N^{L-1}
/// (the probability that the output equals b^L).
double collapse_probability_bound(std::span<const int> widths, bool last_layer_relu,
                                  bool biases_nonzero);

/// floor(ln(1 - p) / ln(1 - 2^-width)). Throws for p outside (0, 1) or
/// width < 1.
std::int64_t max_safe_depth(int width, double p);

struct LengthMapParams {
  double sigma_w2 = 2.0;
  double sigma_b2 = 0.0;
  double q0 = 1.0;
  int depth = 10;
  Activation activation = Activation::relu;
};

/// E[q^1] ... E[q^L].
struct LengthTrajectory {
  std::vector<double> expected_q;
  /// False when doubling the quadrature nodes moved some layer by > 1e-10.
  bool quadrature_converged = true;
  double max_refinement_change = 0.0;
};

inline constexpr int kGaussHermiteNodes = 64;
inline constexpr double kQuadratureTolerance = 1e-10;

/// Closed-form ReLU recursion E[q^l] = sigma_w^2/2 E[q^{l-1}] + sigma_b^2.
LengthTrajectory length_map_relu(const LengthMapParams& params);

/// E[q^l] = sigma_w^2 * int Dz phi(sqrt(E[q^{l-1}]) z)^2 + sigma_b^2 by
/// 64-point Gauss-Hermite, checked against 128 points.
LengthTrajectory length_map_general(const LengthMapParams& params);

}  // namespace collapselab
