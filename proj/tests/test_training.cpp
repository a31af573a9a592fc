#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "collapselab/init.hpp"
#include "collapselab/training.hpp"

using namespace collapselab;

namespace {

const std::vector<OptimizerKind> kOptimizers{OptimizerKind::sgd, OptimizerKind::sgd_nesterov,
                                             OptimizerKind::adagrad, OptimizerKind::rmsprop,
                                             OptimizerKind::adam};

// Width-2 training net whose third layer is dead on every input: its
// weights are non-positive and its biases negative while x^2 >= 0.
Network dead_prefix_net(std::uint64_t seed) {
  InitializerSpec spec;
  spec.seed = seed;
  spec.bias_mode = BiasMode::symmetric;
  spec.bias_variance = 0.1;
  Network net = init_parameters(training_architecture(TargetId::abs1d, 2, 6), spec);
  net.params[2].weight = -net.params[2].weight.cwiseAbs();
  net.params[2].bias.setConstant(-1.0);
  return net;
}

bool same(const LayerParams& a, const LayerParams& b) {
  return a.weight == b.weight && a.bias == b.bias;
}

}  // namespace

TEST_CASE("loss values") {
  Matrix p(1, 1), t(1, 1);
  p << 0.0;
  t << 2.0;
  CHECK(loss_value(LossKind::mse, p, t) == 4.0);
  Matrix p2 = Matrix::Zero(1, 2), t2(1, 2);
  t2 << 1.0, -3.0;
  CHECK(loss_value(LossKind::mae, p2, t2) == 2.0);
  const Network ref = reference_network("abs1d");
  const Dataset d = sample_dataset(TargetId::abs1d, 128, 1);
  CHECK(loss_value(LossKind::mse, evaluate(ref, d.x), d.y) < 1e-30);
}

TEST_CASE("sgd step on a scalar") {
  Architecture a;
  a.input_dim = 1;
  a.widths = {1};
  a.bias_free = true;
  Network net = Network::zeros(a);
  net.params[0].weight(0, 0) = 1.0;
  GradientSet g = zeros_like(net.params);
  g[0].weight(0, 0) = 2.0;
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::sgd;
  cfg.learning_rate = 0.1;
  OptimizerState st = make_optimizer_state(net.params);
  const Parameters next = optimizer_step(st, net.params, g, cfg);
  CHECK(next[0].weight(0, 0) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(st.step == 1);
}

TEST_CASE("zero gradient history leaves parameters unchanged for every optimizer") {
  InitializerSpec spec;
  spec.seed = 2;
  spec.bias_mode = BiasMode::symmetric;
  const Network net = init_parameters(training_architecture(TargetId::abs1d, 3, 4), spec);
  const GradientSet zero = zeros_like(net.params);
  for (OptimizerKind k : kOptimizers) {
    OptimizerConfig cfg;
    cfg.kind = k;
    OptimizerState st = make_optimizer_state(net.params);
    Parameters p = net.params;
    for (int i = 0; i < 100; ++i) p = optimizer_step(st, p, zero, cfg);
    for (std::size_t l = 0; l < p.size(); ++l) CHECK(same(p[l], net.params[l]));
  }
}

TEST_CASE("layers below a dead layer stay bit-unchanged for 1000 steps of every optimizer") {
  for (OptimizerKind k : kOptimizers) {
    CAPTURE(to_string(k));
    const Network net = dead_prefix_net(5);
    REQUIRE(detect_zero_layer(net, default_grid(1)) == 3);
    TrainConfig cfg;
    cfg.optimizer.kind = k;
    cfg.optimizer.learning_rate = 1e-2;
    cfg.steps = 1000;
    cfg.seed = 6;
    const TrainReport r = train_from(net, TargetId::abs1d, cfg);
    CHECK_FALSE(r.diverged);
    for (int l = 0; l < 3; ++l) CHECK(same(r.final_net.params[l], net.params[l]));
    // The linear output bias is still trained.
    CHECK(r.final_net.params.back().bias != net.params.back().bias);
  }
}

TEST_CASE("batch norm on a constant-zero pre-activation outputs the shift") {
  Architecture a;
  a.input_dim = 1;
  a.widths = {2, 1};
  Network net = apply_normalization(Network::zeros(a), {NormMode::batchnorm, 0.0});
  net.params[0].bn_shift << 0.3, -0.2;
  const Matrix x = sample_dataset(TargetId::abs1d, 16, 1).x;
  for (Phase ph : {Phase::train, Phase::eval}) {
    ForwardOptions fo;
    fo.phase = ph;
    const BatchTrace t = forward_batch(net, x, fo);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      CHECK(t.act_in[0](0, j) == 0.3);
      CHECK(t.act_in[0](1, j) == -0.2);
      CHECK(t.post[0](0, j) == 0.3);
      CHECK(t.post[0](1, j) == 0.0);
    }
  }
  CHECK_THROWS(apply_normalization(net, {NormMode::batchnorm, 0.0}));
}

TEST_CASE("weight norm and zero-rate dropout leave the function unchanged") {
  InitializerSpec spec;
  spec.seed = 8;
  spec.bias_mode = BiasMode::symmetric;
  const Network net = init_parameters(training_architecture(TargetId::abs2d, 5, 4), spec);
  const Matrix x = sample_dataset(TargetId::abs2d, 64, 2).x;
  const Matrix base = evaluate(net, x);

  const Network wn = apply_normalization(net, {NormMode::weightnorm, 0.0});
  CHECK((evaluate(wn, x) - base).cwiseAbs().maxCoeff() <= 1e-12);

  const Network drop = apply_normalization(net, {NormMode::dropout, 0.0});
  ForwardOptions fo;
  fo.phase = Phase::train;
  fo.dropout_seed = 4;
  CHECK(forward_batch(drop, x, fo).output() == forward_batch(net, x, fo).output());

  const Network selu = apply_normalization(net, {NormMode::selu, 0.0});
  CHECK(selu.activation == Activation::selu);
}

TEST_CASE("training from the exact reference keeps the loss below 1e-6") {
  TrainConfig cfg;
  cfg.optimizer.learning_rate = 1e-5;
  cfg.steps = 1000;
  cfg.seed = 3;
  const TrainReport r = train_from(reference_network("abs1d"), TargetId::abs1d, cfg);
  CHECK_FALSE(r.diverged);
  CHECK(r.final_loss < 1e-6);
  REQUIRE_FALSE(r.trajectory.empty());
  for (const auto& [step, loss] : r.trajectory) CHECK(loss < 1e-6);
  CHECK(r.collapse.kind == CollapseKind::fitted);
}

TEST_CASE("training is deterministic per seed") {
  TrainConfig cfg;
  cfg.steps = 300;
  cfg.seed = 12;
  InitializerSpec spec;
  spec.seed = 12;
  const Architecture a = training_architecture(TargetId::xsin5x, 3, 4);
  for (NormMode m : {NormMode::none, NormMode::batchnorm, NormMode::dropout}) {
    cfg.norm = {m, m == NormMode::dropout ? kDefaultDropoutRate : 0.0};
    const TrainReport x = train(a, spec, TargetId::xsin5x, cfg);
    const TrainReport y = train(a, spec, TargetId::xsin5x, cfg);
    CHECK(x.final_loss == y.final_loss);
    CHECK(x.trajectory == y.trajectory);
    for (std::size_t l = 0; l < x.final_net.params.size(); ++l) CHECK(same(x.final_net.params[l], y.final_net.params[l]));
  }
  cfg.norm = {};
  cfg.seed = 13;
  CHECK(train(a, spec, TargetId::xsin5x, cfg).final_loss != train(a, spec, TargetId::xsin5x, TrainConfig{}).final_loss);
}

TEST_CASE("divergence is reported, not thrown") {
  TrainConfig cfg;
  cfg.optimizer.kind = OptimizerKind::sgd;
  cfg.optimizer.learning_rate = 1e6;
  cfg.steps = 200;
  InitializerSpec spec;
  spec.seed = 1;
  spec.bias_mode = BiasMode::symmetric;
  TrainReport r;
  CHECK_NOTHROW(r = train(training_architecture(TargetId::abs1d, 8, 3), spec, TargetId::abs1d, cfg));
  CHECK(r.diverged);
  CHECK(r.steps_run < 200);
}

TEST_CASE("selu training uses lecun normal and the selu activation") {
  TrainConfig cfg;
  cfg.steps = 10;
  cfg.norm = {NormMode::selu, 0.0};
  InitializerSpec spec;
  spec.seed = 4;
  const Architecture a = training_architecture(TargetId::abs1d, 2, 3);
  const TrainReport r = train(a, spec, TargetId::abs1d, cfg);
  CHECK(r.final_net.activation == Activation::selu);
}

TEST_CASE("config JSON round trip and names") {
  TrainConfig c;
  c.optimizer.kind = OptimizerKind::rmsprop;
  c.optimizer.learning_rate = 3e-4;
  c.steps = 1234;
  c.batch_size = 64;
  c.loss = LossKind::mae;
  c.norm = {NormMode::dropout, 0.25};
  c.seed = 99;
  const TrainConfig back = train_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(back.optimizer.kind == OptimizerKind::rmsprop);
  CHECK(back.norm.dropout_rate == 0.25);
  for (OptimizerKind k : kOptimizers) CHECK(parse_optimizer(to_string(k)) == k);
  CHECK_THROWS_AS(parse_optimizer("lbfgs"), std::invalid_argument);
}

TEST_CASE("training architecture") {
  const Architecture a = training_architecture(TargetId::abs2d, 4, 10);
  CHECK(a.input_dim == 2);
  CHECK(a.depth() == 10);
  CHECK(a.widths.back() == 2);
  CHECK(a.widths.front() == 4);
  CHECK_FALSE(a.last_layer_relu);
  CHECK_FALSE(a.bias_free);
}
