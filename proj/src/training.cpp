#include "collapselab/training.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/core.h>

#include "collapselab/random.hpp"

namespace collapselab {

std::string_view to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::sgd_nesterov: return "sgd_nesterov";
    case OptimizerKind::adagrad: return "adagrad";
    case OptimizerKind::rmsprop: return "rmsprop";
    case OptimizerKind::adam: return "adam";
  }
  return "adam";
}

OptimizerKind parse_optimizer(std::string_view s) {
  for (OptimizerKind k : {OptimizerKind::sgd, OptimizerKind::sgd_nesterov, OptimizerKind::adagrad,
                          OptimizerKind::rmsprop, OptimizerKind::adam}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument(fmt::format("unknown optimizer '{}'", s));
}

OptimizerState make_optimizer_state(const Parameters& params) {
  return OptimizerState{0, zeros_like(params), zeros_like(params)};
}

Parameters optimizer_step(OptimizerState& state, const Parameters& params,
                          const GradientSet& grads, const OptimizerConfig& c) {
  if (params.size() != grads.size()) throw ShapeError("gradient set does not match parameters");
  if (state.first.size() != params.size()) state = make_optimizer_state(params);
  if (!(c.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double lr = c.learning_rate;
  Parameters out = params;
  for (std::size_t l = 0; l < params.size(); ++l) {
    auto w = tensors(out[l]);
    auto g = tensors(grads[l]);
    auto m = tensors(state.first[l]);
    auto v = tensors(state.second[l]);
    if (w.size() != g.size() || w.size() != m.size() || w.size() != v.size()) {
      throw ShapeError(fmt::format("layer {} gradient tensors do not match", l + 1));
    }
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (w[k].size() != g[k].size()) throw ShapeError("gradient tensor size mismatch");
      for (std::size_t i = 0; i < w[k].size(); ++i) {
        const double gi = g[k][i];
        double& wi = w[k][i];
        double& mi = m[k][i];
        double& vi = v[k][i];
        switch (c.kind) {
          case OptimizerKind::sgd:
            wi -= lr * gi;
            break;
          case OptimizerKind::sgd_nesterov:
            mi = c.momentum * mi - lr * gi;
            wi += c.momentum * mi - lr * gi;
            break;
          case OptimizerKind::adagrad:
            vi += gi * gi;
            wi -= lr * gi / (std::sqrt(vi) + c.epsilon);
            break;
          case OptimizerKind::rmsprop:
            vi = c.rho * vi + (1.0 - c.rho) * gi * gi;
            wi -= lr * gi / (std::sqrt(vi) + c.epsilon);
            break;
          case OptimizerKind::adam: {
            mi = c.beta1 * mi + (1.0 - c.beta1) * gi;
            vi = c.beta2 * vi + (1.0 - c.beta2) * gi * gi;
            const double mhat = mi / (1.0 - std::pow(c.beta1, t));
            const double vhat = vi / (1.0 - std::pow(c.beta2, t));
            wi -= lr * mhat / (std::sqrt(vhat) + c.epsilon);
            break;
          }
        }
      }
    }
  }
  return out;
}

Network apply_normalization(const Network& net, const Normalization& norm) {
  if (net.norm.mode != NormMode::none) throw std::invalid_argument("network is already normalized");
  if (norm.mode == NormMode::dropout && !(norm.dropout_rate >= 0.0 && norm.dropout_rate < 1.0)) {
    throw std::invalid_argument("dropout rate must lie in [0, 1)");
  }
  Network out = net;
  out.norm = norm;
  if (norm.mode != NormMode::dropout) out.norm.dropout_rate = 0.0;
  out.bn_stats.resize(static_cast<std::size_t>(out.depth()));
  switch (norm.mode) {
    case NormMode::none:
    case NormMode::dropout:
      break;
    case NormMode::selu:
      out.activation = Activation::selu;
      break;
    case NormMode::batchnorm:
      for (int l = 0; l < out.depth(); ++l) {
        if (!out.has_batchnorm(l)) continue;
        const int n = out.arch.widths[l];
        auto& p = out.params[static_cast<std::size_t>(l)];
        p.bn_scale = Vector::Ones(n);
        p.bn_shift = Vector::Zero(n);
        auto& s = out.bn_stats[static_cast<std::size_t>(l)];
        s.running_mean = Vector::Zero(n);
        s.running_var = Vector::Ones(n);
      }
      break;
    case NormMode::weightnorm:
      for (auto& p : out.params) p.gain = p.weight.rowwise().norm();
      break;
  }
  validate(out);
  return out;
}

Architecture training_architecture(TargetId target, int width, int depth) {
  const TargetSpec s = target_spec(target);
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  return Architecture::uniform(s.input_dim, width, depth, s.output_dim, false, false);
}

namespace {

constexpr std::uint64_t kDataStream = 0xDA7A;
constexpr std::uint64_t kDropoutStream = 0xD809;
constexpr std::uint64_t kProbeStream = 0x9E0B;

bool finite(const Parameters& params) {
  for (const auto& p : params) {
    for (auto t : tensors(p)) {
      for (double v : t) {
        if (!std::isfinite(v)) return false;
      }
    }
  }
  return true;
}

}  // namespace

TrainReport train_from(const Network& start, TargetId target, const TrainConfig& cfg) {
  if (cfg.steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  validate(start);
  const TargetSpec spec = target_spec(target);
  if (start.arch.input_dim != spec.input_dim || start.arch.output_dim() != spec.output_dim) {
    throw ShapeError("network shape does not match the target");
  }

  TrainReport rep;
  Network net = start;
  OptimizerState state = make_optimizer_state(net.params);
  CounterRng data_rng = CounterRng(cfg.seed).split(kDataStream);
  const int every = std::max(1, cfg.steps / std::max(1, cfg.trajectory_points));

  for (int step = 0; step < cfg.steps; ++step) {
    const Dataset batch = sample_dataset(target, cfg.batch_size, data_rng);
    ForwardOptions fo;
    fo.phase = Phase::train;
    fo.dropout_seed = derive_seed(cfg.seed, kDropoutStream, static_cast<std::uint64_t>(step));
    const BatchTrace trace = forward_batch(net, batch.x, fo);
    const double loss = loss_value(cfg.loss, trace.output(), batch.y);
    rep.steps_run = step + 1;
    if (step % every == 0 || step + 1 == cfg.steps) rep.trajectory.emplace_back(step, loss);
    if (!std::isfinite(loss)) {
      rep.diverged = true;
      break;
    }
    const GradientSet grads = backward(net, trace, batch.y, cfg.loss);
    for (int l = 0; l < net.depth(); ++l) {
      if (!net.has_batchnorm(l)) continue;
      auto& s = net.bn_stats[static_cast<std::size_t>(l)];
      s.running_mean = kBatchNormMomentum * s.running_mean + (1.0 - kBatchNormMomentum) * trace.batch_mean[l];
      s.running_var = kBatchNormMomentum * s.running_var + (1.0 - kBatchNormMomentum) * trace.batch_var[l];
    }
    net.params = optimizer_step(state, net.params, grads, cfg.optimizer);
    if (!finite(net.params)) {
      rep.diverged = true;
      break;
    }
  }

  const Matrix grid = default_grid(target);
  const Matrix out = evaluate(net, grid);
  rep.final_loss = loss_value(cfg.loss, out, evaluate_batch(target, grid));
  if (!std::isfinite(rep.final_loss)) rep.diverged = true;
  if (!rep.diverged) {
    rep.collapse = classify_state(net, target, grid, cfg.loss, cfg.collapse_tol);
  } else {
    rep.collapse.tol = cfg.collapse_tol;
  }
  rep.final_net = std::move(net);
  return rep;
}

TrainReport train(const Architecture& arch, const InitializerSpec& spec, TargetId target,
                  const TrainConfig& cfg) {
  InitializerSpec s = spec;
  Activation act = Activation::relu;
  if (cfg.norm.mode == NormMode::selu) {
    s.scheme = Scheme::lecun_normal;
    act = Activation::selu;
  }
  Network net = init_parameters(arch, s, act);
  if (s.scheme == Scheme::lsuv) {
    const Dataset probe = sample_dataset(target, cfg.batch_size, derive_seed(cfg.seed, kProbeStream));
    net = lsuv_rescale(net, probe.x).net;
  }
  net = apply_normalization(net, cfg.norm);
  return train_from(net, target, cfg);
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"optimizer",
           {{"kind", std::string(to_string(c.optimizer.kind))},
            {"learning_rate", c.optimizer.learning_rate},
            {"momentum", c.optimizer.momentum},
            {"beta1", c.optimizer.beta1},
            {"beta2", c.optimizer.beta2},
            {"rho", c.optimizer.rho},
            {"epsilon", c.optimizer.epsilon}}},
          {"steps", c.steps},
          {"batch_size", c.batch_size},
          {"loss", std::string(to_string(c.loss))},
          {"normalization",
           {{"mode", std::string(to_string(c.norm.mode))}, {"dropout_rate", c.norm.dropout_rate}}},
          {"seed", c.seed},
          {"trajectory_points", c.trajectory_points},
          {"collapse_tol", c.collapse_tol}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  const auto& o = j.at("optimizer");
  c.optimizer.kind = parse_optimizer(o.at("kind").get<std::string>());
  c.optimizer.learning_rate = o.at("learning_rate").get<double>();
  c.optimizer.momentum = o.at("momentum").get<double>();
  c.optimizer.beta1 = o.at("beta1").get<double>();
  c.optimizer.beta2 = o.at("beta2").get<double>();
  c.optimizer.rho = o.at("rho").get<double>();
  c.optimizer.epsilon = o.at("epsilon").get<double>();
  c.steps = j.at("steps").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.loss = parse_loss(j.at("loss").get<std::string>());
  c.norm.mode = parse_norm_mode(j.at("normalization").at("mode").get<std::string>());
  c.norm.dropout_rate = j.at("normalization").at("dropout_rate").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.trajectory_points = j.at("trajectory_points").get<int>();
  c.collapse_tol = j.at("collapse_tol").get<double>();
  return c;
}

}  // namespace collapselab
