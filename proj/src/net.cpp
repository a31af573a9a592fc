#include "collapselab/net.hpp"

#include <cmath>
#include <string>

#include <fmt/core.h>

#include "collapselab/random.hpp"

namespace collapselab {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::relu:
      return z > 0.0 ? z : 0.0;
    case Activation::selu:
      return z > 0.0 ? kSeluLambda * z : kSeluLambda * kSeluAlpha * std::expm1(z);
    case Activation::identity:
      return z;
  }
  return z;
}

double activate_derivative(Activation a, double z) {
  switch (a) {
    case Activation::relu:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::selu:
      return z > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(z);
    case Activation::identity:
      return 1.0;
  }
  return 1.0;
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::selu: return "selu";
    case Activation::identity: return "identity";
  }
  return "relu";
}

Activation parse_activation(std::string_view s) {
  if (s == "relu") return Activation::relu;
  if (s == "selu") return Activation::selu;
  if (s == "identity") return Activation::identity;
  throw std::invalid_argument(fmt::format("unknown activation '{}'", s));
}

std::string_view to_string(NormMode m) {
  switch (m) {
    case NormMode::none: return "none";
    case NormMode::batchnorm: return "batchnorm";
    case NormMode::weightnorm: return "weightnorm";
    case NormMode::selu: return "selu";
    case NormMode::dropout: return "dropout";
  }
  return "none";
}

NormMode parse_norm_mode(std::string_view s) {
  if (s == "none") return NormMode::none;
  if (s == "batchnorm") return NormMode::batchnorm;
  if (s == "weightnorm") return NormMode::weightnorm;
  if (s == "selu") return NormMode::selu;
  if (s == "dropout") return NormMode::dropout;
  throw std::invalid_argument(fmt::format("unknown normalization '{}'", s));
}

std::string_view to_string(LossKind k) { return k == LossKind::mse ? "mse" : "mae"; }

LossKind parse_loss(std::string_view s) {
  if (s == "mse") return LossKind::mse;
  if (s == "mae") return LossKind::mae;
  throw std::invalid_argument(fmt::format("unknown loss '{}'", s));
}

void Architecture::validate() const {
  if (input_dim < 1) throw std::invalid_argument("input dimension must be >= 1");
  if (widths.empty()) throw std::invalid_argument("architecture needs at least one layer");
  for (int w : widths) {
    if (w < 1) throw std::invalid_argument("layer widths must be >= 1");
  }
}

Architecture Architecture::uniform(int input_dim, int width, int depth, int output_dim,
                                   bool last_layer_relu, bool bias_free) {
  Architecture a;
  a.input_dim = input_dim;
  a.widths.assign(static_cast<std::size_t>(depth), width);
  if (output_dim > 0 && depth > 0) a.widths.back() = output_dim;
  a.last_layer_relu = last_layer_relu;
  a.bias_free = bias_free;
  a.validate();
  return a;
}

std::vector<std::span<double>> tensors(LayerParams& p) {
  std::vector<std::span<double>> out;
  out.emplace_back(p.weight.data(), static_cast<std::size_t>(p.weight.size()));
  for (Vector* v : {&p.bias, &p.gain, &p.bn_scale, &p.bn_shift}) {
    if (v->size() > 0) out.emplace_back(v->data(), static_cast<std::size_t>(v->size()));
  }
  return out;
}

std::vector<std::span<const double>> tensors(const LayerParams& p) {
  std::vector<std::span<const double>> out;
  out.emplace_back(p.weight.data(), static_cast<std::size_t>(p.weight.size()));
  for (const Vector* v : {&p.bias, &p.gain, &p.bn_scale, &p.bn_shift}) {
    if (v->size() > 0) out.emplace_back(v->data(), static_cast<std::size_t>(v->size()));
  }
  return out;
}

GradientSet zeros_like(const Parameters& params) {
  GradientSet g(params.size());
  for (std::size_t l = 0; l < params.size(); ++l) {
    const auto& p = params[l];
    g[l].weight = Matrix::Zero(p.weight.rows(), p.weight.cols());
    g[l].bias = Vector::Zero(p.bias.size());
    g[l].gain = Vector::Zero(p.gain.size());
    g[l].bn_scale = Vector::Zero(p.bn_scale.size());
    g[l].bn_shift = Vector::Zero(p.bn_shift.size());
  }
  return g;
}

double max_abs(const LayerParams& g) {
  double m = 0.0;
  for (auto t : tensors(g)) {
    for (double v : t) m = std::max(m, std::abs(v));
  }
  return m;
}

Matrix Network::effective_weight(int layer) const {
  const auto& p = params[static_cast<std::size_t>(layer)];
  if (norm.mode != NormMode::weightnorm) return p.weight;
  Matrix w = p.weight;
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    const double n = p.weight.row(i).norm();
    if (n > 0.0) w.row(i) *= p.gain[i] / n;
  }
  return w;
}

Network Network::zeros(const Architecture& arch, Activation activation) {
  arch.validate();
  Network net;
  net.arch = arch;
  net.activation = activation;
  net.params.resize(static_cast<std::size_t>(arch.depth()));
  net.bn_stats.resize(static_cast<std::size_t>(arch.depth()));
  for (int l = 0; l < arch.depth(); ++l) {
    auto& p = net.params[static_cast<std::size_t>(l)];
    p.weight = Matrix::Zero(arch.widths[l], arch.fan_in(l));
    p.bias = Vector::Zero(arch.widths[l]);
  }
  return net;
}

void validate(const Network& net) {
  net.arch.validate();
  if (static_cast<int>(net.params.size()) != net.depth()) {
    throw ShapeError("parameter count does not match architecture depth");
  }
  for (int l = 0; l < net.depth(); ++l) {
    const auto& p = net.params[static_cast<std::size_t>(l)];
    const int rows = net.arch.widths[l];
    const int cols = net.arch.fan_in(l);
    if (p.weight.rows() != rows || p.weight.cols() != cols || p.bias.size() != rows) {
      throw ShapeError(fmt::format("layer {} has inconsistent shapes", l + 1));
    }
    if (net.arch.bias_free && !p.bias.isZero(0.0)) {
      throw ShapeError(fmt::format("layer {} has a nonzero bias in a bias-free network", l + 1));
    }
    if (net.norm.mode == NormMode::weightnorm && p.gain.size() != rows) {
      throw ShapeError(fmt::format("layer {} is missing weight-norm gains", l + 1));
    }
    if (net.has_batchnorm(l)) {
      const auto& s = net.bn_stats.at(static_cast<std::size_t>(l));
      if (p.bn_scale.size() != rows || p.bn_shift.size() != rows ||
          s.running_mean.size() != rows || s.running_var.size() != rows) {
        throw ShapeError(fmt::format("layer {} is missing batch-norm members", l + 1));
      }
    }
  }
}

Matrix affine(const Matrix& weight, const Vector& bias, const Matrix& x) {
  const Eigen::Index rows = weight.rows();
  const Eigen::Index inner = weight.cols();
  Matrix h(rows, x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    double* out = h.col(j).data();
    for (Eigen::Index i = 0; i < rows; ++i) out[i] = 0.0;
    for (Eigen::Index k = 0; k < inner; ++k) {
      const double xk = x(k, j);
      const double* wk = weight.col(k).data();
      for (Eigen::Index i = 0; i < rows; ++i) out[i] += wk[i] * xk;
    }
    for (Eigen::Index i = 0; i < rows; ++i) out[i] += bias[i];
  }
  return h;
}

BatchTrace forward_batch(const Network& net, const Matrix& inputs, const ForwardOptions& options) {
  if (inputs.rows() != net.arch.input_dim) {
    throw ShapeError(fmt::format("input has dimension {}, network expects {}", inputs.rows(),
                                 net.arch.input_dim));
  }
  const int depth = net.depth();
  BatchTrace t;
  t.phase = options.phase;
  t.input = inputs;
  t.pre.resize(depth);
  t.normalized.resize(depth);
  t.act_in.resize(depth);
  t.inv_std.resize(depth);
  t.batch_mean.resize(depth);
  t.batch_var.resize(depth);
  t.dropout_mask.resize(depth);
  t.post.resize(depth);

  const bool train = options.phase == Phase::train;
  CounterRng dropout_rng(options.dropout_seed);
  const Eigen::Index batch = inputs.cols();

  const Matrix* x = &inputs;
  for (int l = 0; l < depth; ++l) {
    const auto& p = net.params[static_cast<std::size_t>(l)];
    t.pre[l] = affine(net.effective_weight(l), p.bias, *x);
    const Matrix& h = t.pre[l];

    if (net.has_batchnorm(l)) {
      Vector mean;
      Vector var;
      if (train) {
        mean = h.rowwise().mean();
        var = (h.colwise() - mean).array().square().rowwise().mean();
      } else {
        const auto& s = net.bn_stats[static_cast<std::size_t>(l)];
        mean = s.running_mean;
        var = s.running_var;
      }
      Vector inv = (var.array() + kBatchNormEpsilon).rsqrt();
      Matrix xhat = (h.colwise() - mean).array().colwise() * inv.array();
      Matrix z = (xhat.array().colwise() * p.bn_scale.array()).colwise() + p.bn_shift.array();
      t.batch_mean[l] = std::move(mean);
      t.batch_var[l] = std::move(var);
      t.inv_std[l] = std::move(inv);
      t.normalized[l] = std::move(xhat);
      t.act_in[l] = std::move(z);
    } else {
      t.act_in[l] = h;
    }

    Matrix out = t.act_in[l];
    if (net.has_activation(l)) {
      out = out.unaryExpr([a = net.activation](double z) { return activate(a, z); });
    }

    if (train && net.has_dropout(l)) {
      const double keep = 1.0 - net.norm.dropout_rate;
      Matrix mask(out.rows(), batch);
      for (Eigen::Index j = 0; j < batch; ++j) {
        for (Eigen::Index i = 0; i < out.rows(); ++i) {
          mask(i, j) = dropout_rng.uniform01() < keep ? 1.0 / keep : 0.0;
        }
      }
      out.array() *= mask.array();
      t.dropout_mask[l] = std::move(mask);
    }
    t.post[l] = std::move(out);
    x = &t.post[l];
  }
  return t;
}

ForwardTrace forward(const Network& net, std::span<const double> input) {
  if (static_cast<int>(input.size()) != net.arch.input_dim) {
    throw ShapeError(fmt::format("input has dimension {}, network expects {}", input.size(),
                                 net.arch.input_dim));
  }
  Matrix x(net.arch.input_dim, 1);
  for (std::size_t i = 0; i < input.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = input[i];
  BatchTrace bt = forward_batch(net, x);
  ForwardTrace t;
  t.pre.reserve(bt.pre.size());
  t.post.reserve(bt.post.size());
  for (std::size_t l = 0; l < bt.pre.size(); ++l) {
    t.pre.emplace_back(bt.pre[l].col(0));
    t.post.emplace_back(bt.post[l].col(0));
  }
  return t;
}

Matrix evaluate(const Network& net, const Matrix& inputs) {
  return forward_batch(net, inputs).output();
}

double loss_value(LossKind kind, const Matrix& predictions, const Matrix& targets) {
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols()) {
    throw ShapeError("predictions and targets have different shapes");
  }
  if (predictions.size() == 0) throw std::invalid_argument("empty batch");
  double sum = 0.0;
  for (Eigen::Index j = 0; j < predictions.cols(); ++j) {
    for (Eigen::Index i = 0; i < predictions.rows(); ++i) {
      const double r = predictions(i, j) - targets(i, j);
      sum += kind == LossKind::mse ? r * r : std::abs(r);
    }
  }
  return sum / static_cast<double>(predictions.size());
}

GradientSet backward(const Network& net, const BatchTrace& trace, const Matrix& targets,
                     LossKind loss) {
  const Matrix& out = trace.output();
  if (out.rows() != targets.rows() || out.cols() != targets.cols()) {
    throw ShapeError("targets do not match the network output shape");
  }
  const Eigen::Index batch = out.cols();
  if (batch == 0) throw std::invalid_argument("empty batch");
  const int depth = net.depth();
  GradientSet grads = zeros_like(net.params);

  // The 1/n factor is applied once at the end so that residuals summing to
  // exactly zero give exactly zero gradients.
  const double scale = 1.0 / static_cast<double>(out.size());
  Matrix delta(out.rows(), batch);
  for (Eigen::Index j = 0; j < batch; ++j) {
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      const double r = out(i, j) - targets(i, j);
      if (loss == LossKind::mse) {
        delta(i, j) = 2.0 * r;
      } else {
        delta(i, j) = r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
      }
    }
  }

  const bool train = trace.phase == Phase::train;
  for (int l = depth - 1; l >= 0; --l) {
    const auto& p = net.params[static_cast<std::size_t>(l)];
    auto& g = grads[static_cast<std::size_t>(l)];

    if (trace.dropout_mask[l].size() > 0) delta.array() *= trace.dropout_mask[l].array();

    if (net.has_activation(l)) {
      const Matrix& z = trace.act_in[l];
      for (Eigen::Index j = 0; j < batch; ++j) {
        for (Eigen::Index i = 0; i < delta.rows(); ++i) {
          delta(i, j) *= activate_derivative(net.activation, z(i, j));
        }
      }
    }

    if (net.has_batchnorm(l)) {
      const Matrix& xhat = trace.normalized[l];
      g.bn_scale = (delta.array() * xhat.array()).rowwise().sum();
      g.bn_shift = delta.rowwise().sum();
      Matrix dxhat = delta.array().colwise() * p.bn_scale.array();
      const Vector& inv = trace.inv_std[l];
      if (train) {
        const double n = static_cast<double>(batch);
        Vector sum_dxhat = dxhat.rowwise().sum();
        Vector sum_dxhat_xhat = (dxhat.array() * xhat.array()).rowwise().sum();
        Matrix dh(delta.rows(), batch);
        for (Eigen::Index j = 0; j < batch; ++j) {
          for (Eigen::Index i = 0; i < delta.rows(); ++i) {
            dh(i, j) = inv[i] / n *
                       (n * dxhat(i, j) - sum_dxhat[i] - xhat(i, j) * sum_dxhat_xhat[i]);
          }
        }
        delta = std::move(dh);
      } else {
        delta = dxhat.array().colwise() * inv.array();
      }
    }

    const Matrix& x_prev = l == 0 ? trace.input : trace.post[l - 1];
    Matrix dw = Matrix::Zero(p.weight.rows(), p.weight.cols());
    for (Eigen::Index j = 0; j < batch; ++j) {
      for (Eigen::Index k = 0; k < dw.cols(); ++k) {
        const double xk = x_prev(k, j);
        for (Eigen::Index i = 0; i < dw.rows(); ++i) dw(i, k) += delta(i, j) * xk;
      }
    }
    if (!net.arch.bias_free) g.bias = delta.rowwise().sum();

    const Matrix w_eff = net.effective_weight(l);
    if (net.norm.mode == NormMode::weightnorm) {
      // W_i = g_i v_i / |v_i|:  dg_i = dW_i . v_i/|v_i|,  dv_i = g_i/|v_i| (dW_i - dg_i v_i/|v_i|).
      for (Eigen::Index i = 0; i < dw.rows(); ++i) {
        const double norm = p.weight.row(i).norm();
        if (norm == 0.0) {
          g.gain[i] = 0.0;
          g.weight.row(i).setZero();
          continue;
        }
        const Eigen::RowVectorXd unit = p.weight.row(i) / norm;
        const double dg = dw.row(i).dot(unit);
        g.gain[i] = dg;
        g.weight.row(i) = (p.gain[i] / norm) * (dw.row(i) - dg * unit);
      }
    } else {
      g.weight = std::move(dw);
    }

    if (l > 0) {
      Matrix prev = Matrix::Zero(w_eff.cols(), batch);
      for (Eigen::Index j = 0; j < batch; ++j) {
        for (Eigen::Index i = 0; i < w_eff.rows(); ++i) {
          const double d = delta(i, j);
          if (d == 0.0) continue;
          for (Eigen::Index k = 0; k < w_eff.cols(); ++k) prev(k, j) += w_eff(i, k) * d;
        }
      }
      delta = std::move(prev);
    }
  }
  for (auto& g : grads) {
    for (auto t : tensors(g)) {
      for (double& v : t) v *= scale;
    }
  }
  return grads;
}

GradientSet backward(const Network& net, const Matrix& inputs, const Matrix& targets,
                     LossKind loss, const ForwardOptions& options) {
  if (inputs.cols() == 0) throw std::invalid_argument("backward needs a non-empty batch");
  return backward(net, forward_batch(net, inputs, options), targets, loss);
}

GradientSet finite_diff_grad(const Network& net, const Matrix& inputs, const Matrix& targets,
                             LossKind loss, double eps, const ForwardOptions& options) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  if (inputs.cols() == 0) throw std::invalid_argument("finite differences need a non-empty batch");
  Network probe = net;
  GradientSet grads = zeros_like(net.params);
  auto batch_loss = [&] {
    return loss_value(loss, forward_batch(probe, inputs, options).output(), targets);
  };
  for (std::size_t l = 0; l < probe.params.size(); ++l) {
    auto params = tensors(probe.params[l]);
    auto out = tensors(grads[l]);
    for (std::size_t t = 0; t < params.size(); ++t) {
      const bool is_bias = t == 1;
      if (is_bias && net.arch.bias_free) continue;
      for (std::size_t k = 0; k < params[t].size(); ++k) {
        const double original = params[t][k];
        params[t][k] = original + eps;
        const double up = batch_loss();
        params[t][k] = original - eps;
        const double down = batch_loss();
        params[t][k] = original;
        out[t][k] = (up - down) / (2.0 * eps);
      }
    }
  }
  return grads;
}

Network reference_network(std::string_view target_id) {
  if (target_id == "abs1d") {
    Architecture arch{1, {2, 1}, false, true};
    Network net = Network::zeros(arch);
    net.params[0].weight << 1.0, -1.0;
    net.params[1].weight << 1.0, 1.0;
    return net;
  }
  if (target_id == "abs2d") {
    Architecture arch{2, {4, 2}, false, true};
    Network net = Network::zeros(arch);
    net.params[0].weight << 1.0, 1.0,
                           -1.0, -1.0,
                            1.0, -1.0,
                           -1.0, 1.0;
    net.params[1].weight << 1.0, 1.0, 0.0, 0.0,
                            0.0, 0.0, 1.0, 1.0;
    return net;
  }
  throw std::invalid_argument(fmt::format("no reference network for target '{}'", target_id));
}

}  // namespace collapselab
