#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "collapselab/collapse.hpp"
#include "collapselab/init.hpp"
#include "collapselab/net.hpp"
#include "collapselab/targets.hpp"

namespace collapselab {

enum class OptimizerKind { sgd, sgd_nesterov, adagrad, rmsprop, adam };

std::string_view to_string(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view s);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  /// RMSProp decay.
  double rho = 0.9;
  double epsilon = 1e-7;
};

/// Moment slots start at zero, so a parameter whose gradient has always been
/// exactly zero never moves.
struct OptimizerState {
  std::uint64_t step = 0;
  Parameters first;
  Parameters second;
};

OptimizerState make_optimizer_state(const Parameters& params);

/// One update. Nesterov follows the Keras form v = mu v - lr g,
/// w += mu v - lr g.
Parameters optimizer_step(OptimizerState& state, const Parameters& params,
                          const GradientSet& grads, const OptimizerConfig& config);

inline constexpr double kDefaultDropoutRate = 0.1;

/// Switches an unnormalized net to `norm`. Batch norm starts at gamma = 1,
/// beta = 0 with running mean 0 and variance 1; weight norm sets g = |v| per
/// row so the function is unchanged; selu swaps the activation.
Network apply_normalization(const Network& net, const Normalization& norm);

struct TrainConfig {
  OptimizerConfig optimizer;
  int steps = 20000;
  int batch_size = 128;
  LossKind loss = LossKind::mse;
  Normalization norm;
  std::uint64_t seed = 0;
  /// Upper bound on recorded (step, loss) pairs.
  int trajectory_points = 200;
  double collapse_tol = kDefaultCollapseTol;
};

struct TrainReport {
  /// Eval-phase loss on the classification grid.
  double final_loss = 0.0;
  std::vector<std::pair<int, double>> trajectory;
  Network final_net;
  CollapseReport collapse;
  bool diverged = false;
  int steps_run = 0;
};

/// Initializes (LeCun normal under selu, LSUV on a probe batch for lsuv),
/// applies the normalization and trains. Minibatches and dropout masks come
/// from config.seed; parameters from spec.seed.
TrainReport train(const Architecture& arch, const InitializerSpec& spec, TargetId target,
                  const TrainConfig& config);

/// Trains an already-built network (its normalization is kept).
TrainReport train_from(const Network& net, TargetId target, const TrainConfig& config);

/// Hidden layers of `width` followed by a linear output layer; `depth`
/// counts every weight layer.
Architecture training_architecture(TargetId target, int width, int depth);

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

}  // namespace collapselab
