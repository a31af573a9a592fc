#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace collapselab {

using Vector = Eigen::VectorXd;
/// Column-major; batches store one sample per column.
using Matrix = Eigen::MatrixXd;

/// Raised when an input or batch does not match the network shape.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Activation { relu, selu, identity };

enum class NormMode { none, batchnorm, weightnorm, selu, dropout };

struct Normalization {
  NormMode mode = NormMode::none;
  double dropout_rate = 0.0;
};

inline constexpr double kSeluLambda = 1.0507009873554805;
inline constexpr double kSeluAlpha = 1.6732632423543772;
inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

double activate(Activation a, double z);
/// Derivative used by backprop. ReLU'(0) is 0.
double activate_derivative(Activation a, double z);

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view s);
std::string_view to_string(NormMode m);
NormMode parse_norm_mode(std::string_view s);

struct Architecture {
  int input_dim = 1;
  /// N^1 ... N^L; the last entry is the output dimension.
  std::vector<int> widths;
  bool last_layer_relu = false;
  bool bias_free = false;

  int depth() const { return static_cast<int>(widths.size()); }
  int output_dim() const { return widths.back(); }
  /// Width of the input to layer `layer` (0-based).
  int fan_in(int layer) const { return layer == 0 ? input_dim : widths[layer - 1]; }
  /// Throws std::invalid_argument when widths are empty or non-positive.
  void validate() const;

  /// `depth` layers of `width`, the last one of `output_dim` (or `width` when
  /// output_dim is 0).
  static Architecture uniform(int input_dim, int width, int depth, int output_dim,
                              bool last_layer_relu, bool bias_free);
};

/// Trainable parameters of one layer. Optional members are empty when the
/// normalization mode does not use them.
struct LayerParams {
  /// N^l x N^{l-1}. Under weight normalization this is the direction v.
  Matrix weight;
  Vector bias;
  /// Weight-norm gain g (one per row).
  Vector gain;
  /// Batch-norm scale gamma and shift beta.
  Vector bn_scale;
  Vector bn_shift;
};

using Parameters = std::vector<LayerParams>;
/// Same shapes as Parameters.
using GradientSet = std::vector<LayerParams>;

/// Flat views over every tensor of a layer, in a fixed order:
/// weight, bias, gain, bn_scale, bn_shift (empty tensors skipped).
std::vector<std::span<double>> tensors(LayerParams& p);
std::vector<std::span<const double>> tensors(const LayerParams& p);

/// A zero-filled GradientSet shaped like `params`.
GradientSet zeros_like(const Parameters& params);

struct BatchNormStats {
  Vector running_mean;
  Vector running_var;
};

struct Network {
  Architecture arch;
  Parameters params;
  Activation activation = Activation::relu;
  Normalization norm;
  /// Per layer; empty vectors on layers without batch norm.
  std::vector<BatchNormStats> bn_stats;

  int depth() const { return arch.depth(); }
  /// 0-based layer index.
  bool has_activation(int layer) const {
    return layer + 1 < depth() || arch.last_layer_relu;
  }
  bool has_batchnorm(int layer) const {
    return norm.mode == NormMode::batchnorm && has_activation(layer);
  }
  bool has_dropout(int layer) const {
    return norm.mode == NormMode::dropout && norm.dropout_rate > 0.0 &&
           layer + 1 < depth();
  }
  /// W^l as used in the affine map (g * v / |v| under weight normalization).
  Matrix effective_weight(int layer) const;

  /// Zero-initialized parameters with consistent shapes.
  static Network zeros(const Architecture& arch, Activation activation = Activation::relu);
};

/// Checks shapes, bias-free zeros and normalization members; throws ShapeError.
void validate(const Network& net);

enum class Phase { eval, train };

struct ForwardOptions {
  Phase phase = Phase::eval;
  /// Dropout masks are drawn from this seed (train phase only).
  std::uint64_t dropout_seed = 0;
};

/// Per-sample trace of a single input.
struct ForwardTrace {
  /// h^l for l = 1..L.
  std::vector<Vector> pre;
  /// x^l for l = 1..L; x^L is the network output.
  std::vector<Vector> post;
  const Vector& output() const { return post.back(); }
};

/// Batch trace with everything backward needs.
struct BatchTrace {
  Matrix input;
  /// h^l = W^l x^{l-1} + b^l.
  std::vector<Matrix> pre;
  /// Batch-norm normalized pre-activation (empty without batch norm).
  std::vector<Matrix> normalized;
  /// Argument of the activation: gamma * xhat + beta, or h^l.
  std::vector<Matrix> act_in;
  /// 1 / sqrt(var + eps) per unit (batch-norm layers).
  std::vector<Vector> inv_std;
  std::vector<Vector> batch_mean;
  std::vector<Vector> batch_var;
  /// Inverted-dropout multipliers (0 or 1/(1-rate)); empty when unused.
  std::vector<Matrix> dropout_mask;
  /// x^l; the last entry is the network output.
  std::vector<Matrix> post;
  Phase phase = Phase::eval;

  const Matrix& output() const { return post.back(); }
};

/// h = W x + b with a fixed summation order, so results are bit-identical
/// whatever the batch size.
Matrix affine(const Matrix& weight, const Vector& bias, const Matrix& x);

BatchTrace forward_batch(const Network& net, const Matrix& inputs,
                         const ForwardOptions& options = {});
ForwardTrace forward(const Network& net, std::span<const double> input);
/// Network outputs for a batch (eval phase).
Matrix evaluate(const Network& net, const Matrix& inputs);

enum class LossKind { mse, mae };

std::string_view to_string(LossKind k);
LossKind parse_loss(std::string_view s);

/// Mean over every entry of the batch of the squared / absolute error.
double loss_value(LossKind kind, const Matrix& predictions, const Matrix& targets);

/// Gradient of the mean batch loss for a batch trace.
GradientSet backward(const Network& net, const BatchTrace& trace, const Matrix& targets,
                     LossKind loss);
/// Convenience: forward then backward. Throws std::invalid_argument on an
/// empty batch.
GradientSet backward(const Network& net, const Matrix& inputs, const Matrix& targets,
                     LossKind loss, const ForwardOptions& options = {});

/// Central-difference gradient oracle. Perturbs every trainable entry by
/// +-eps and re-evaluates the batch loss with the same options.
GradientSet finite_diff_grad(const Network& net, const Matrix& inputs, const Matrix& targets,
                             LossKind loss, double eps, const ForwardOptions& options = {});

/// Exact constructions: "abs1d" (width 2) and "abs2d" (width 4).
Network reference_network(std::string_view target_id);

/// Largest absolute entry of a layer's gradient tensors.
double max_abs(const LayerParams& g);

}  // namespace collapselab
