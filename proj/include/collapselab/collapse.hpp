#pragma once

#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "collapselab/net.hpp"
#include "collapselab/targets.hpp"

namespace collapselab {

enum class CollapseKind { fitted, full_collapse, partial_collapse, other };

std::string_view to_string(CollapseKind k);
CollapseKind parse_collapse_kind(std::string_view s);

/// A plateau of the network output: an interval (1-D) or bounding box.
struct Region {
  Vector lo;
  Vector hi;
  Vector constant;
  /// Mean of the target over the grid points of the plateau.
  Vector target_mean;
  int points = 0;
};

struct CollapseReport {
  CollapseKind kind = CollapseKind::other;
  /// 1-based index of the first layer with x^l == 0 on the whole grid.
  std::optional<int> zero_layer;
  std::optional<Vector> constant_value;
  std::vector<Region> regions;
  /// Largest |gradient| over layers 1..zero_layer (layers 1..L-1 when there
  /// is no zero layer), evaluated on the classification grid.
  double max_grad_norm_prefix = 0.0;
  double max_abs_error = 0.0;
  /// Full collapse only: constant agrees with the mean (mse) or lies in the
  /// median set (mae) within tol.
  bool matches_statistic = false;
  double tol = 0.0;
};

nlohmann::json to_json(const CollapseReport& r);
CollapseReport collapse_report_from_json(const nlohmann::json& j);

inline constexpr int kGridPoints1d = 2048;
inline constexpr int kGridPoints2dPerAxis = 64;
inline constexpr double kDefaultCollapseTol = 2e-2;

/// Uniform tensor grid over the target domain: 2048 points in 1-D, 64 x 64
/// in 2-D. One point per column.
Matrix default_grid(int input_dim);
Matrix default_grid(TargetId id);

/// Per layer (0-based): x^l exactly zero on every grid point.
std::vector<bool> zero_layers(const Network& net, const Matrix& grid);

/// Smallest 1-based l with x^l == 0 on every grid point. For bias-free ReLU
/// nets every later layer must then be zero too; a violation throws
/// std::logic_error.
std::optional<int> detect_zero_layer(const Network& net, const Matrix& grid);

struct TargetStatistics {
  Vector mean;
  /// Per output, the interval of constants minimizing the L1 loss.
  std::vector<std::pair<double, double>> median_set;
};

/// Mean by adaptive Gauss-Kronrod quadrature over the uniform input law;
/// median set from the CDF P(y_k <= c) crossing 1/2. Cached per target.
const TargetStatistics& target_statistics(TargetId id);

/// P(y_k <= c) under the uniform input law.
double target_cdf(TargetId id, int output, double c);

/// fitted, full_collapse, partial_collapse or other, in that order of
/// precedence. Plateaus are runs of grid steps with |dN/dx| < tol / 10
/// spanning at least two cells.
CollapseReport classify_state(const Network& net, TargetId id, const Matrix& grid, LossKind loss,
                              double tol = kDefaultCollapseTol);

struct GradientVanishingReport {
  /// Largest |gradient| per layer.
  std::vector<double> layer_max_abs;
  std::optional<int> zero_layer;
  /// Layers 1..zero_layer have bit-exact zero gradients.
  bool zero_prefix_exact = false;
  bool all_zero = false;
  /// Output constant on the dataset and equal to the dataset mean.
  bool constant_at_empirical_mean = false;
  /// Each group of samples sharing one output value has that value as its
  /// target mean; every other sample is fitted exactly.
  bool partial_mean_condition = false;
};

GradientVanishingReport verify_vanishing_gradients(const Network& net, const Dataset& data,
                                                   LossKind loss);

}  // namespace collapselab
