// collapselab command-line front end.
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "cli_common.hpp"
#include "collapselab/artifacts.hpp"
#include "collapselab/collapse.hpp"
#include "collapselab/exact.hpp"
#include "collapselab/init.hpp"
#include "collapselab/montecarlo.hpp"
#include "collapselab/net_io.hpp"
#include "collapselab/svg.hpp"
#include "collapselab/training.hpp"

namespace cl = collapselab;
using nlohmann::json;

namespace {

struct ExactArgs {
  std::string depths = "2";
  bool last_relu = true;
  std::string out;
};

struct BoundArgs {
  std::string widths;
  bool last_relu = true;
  bool biases_nonzero = false;
};

struct McArgs {
  std::string widths = "2";
  std::string depths = "1..12";
  std::string inits = "he_normal";
  std::uint64_t samples = 100000;
  int input_dim = 1;
  std::string bias_mode = "zero";
  double bias_variance = 1.0;
  double weight_gain = 2.0;
  std::string point;
  std::string event = "zero";
  bool last_relu = true;
  std::string out;
};

struct SafeArgs {
  std::string p = "0.01,0.1";
  std::string widths = "1..64";
  std::string out = "out/safe_region";
};

struct LengthArgs {
  double sigma_w2 = 2.0;
  double sigma_b2 = 0.0;
  double q0 = 1.0;
  int depth = 10;
  std::string activation = "relu";
  std::string out;
};

struct TrainArgs {
  std::string target = "abs1d";
  int depth = 10;
  int width = 2;
  std::string init = "he_normal";
  std::string loss = "mse";
  std::string opt = "adam";
  double lr = 1e-3;
  int steps = 20000;
  int batch = 128;
  std::string norm = "none";
  double dropout_rate = cl::kDefaultDropoutRate;
  std::string report = "out/train_report.json";
};

struct ClassifyArgs {
  std::string net;
  std::string target = "abs1d";
  std::string loss = "mse";
  double tol = cl::kDefaultCollapseTol;
  std::string report;
};

json with_seed(json config, std::uint64_t seed) {
  config["seed"] = seed;
  return config;
}

int cmd_exact(const ExactArgs& a, std::uint64_t seed) {
  const json config = {{"command", "prob exact"}, {"depths", a.depths}, {"last_layer_relu", a.last_relu}};
  const auto prov = cl::Provenance::from_config(with_seed(config, seed), seed);
  cl::CsvTable t({"depth", "last_layer_relu", "exact", "value"});
  for (int L : cli::parse_int_list(a.depths)) {
    const cl::Rational r = cl::exact_constant_probability(L, a.last_relu);
    const double v = r.convert_to<double>();
    fmt::print("L={} last_layer_relu={} p={} = {}\n", L, a.last_relu, r.str(), cl::format_real(v));
    t.add_row({std::to_string(L), a.last_relu ? "1" : "0", r.str(), cl::format_real(v)});
  }
  if (!a.out.empty()) cli::emit(a.out, t.to_string(&prov));
  return 0;
}

int cmd_bound(const BoundArgs& a) {
  const std::vector<int> widths = cli::parse_int_list(a.widths);
  const double b = cl::collapse_probability_bound(widths, a.last_relu, a.biases_nonzero);
  fmt::print("bound={} layers={} last_layer_relu={} biases_nonzero={}\n", cl::format_real(b),
             widths.size(), a.last_relu, a.biases_nonzero);
  return 0;
}

int cmd_mc(const McArgs& a, std::uint64_t seed) {
  const auto widths = cli::parse_int_list(a.widths);
  const auto depths = cli::parse_int_list(a.depths);
  std::vector<cl::InitializerSpec> specs;
  for (const auto& name : cli::parse_name_list(a.inits)) {
    cl::InitializerSpec s;
    s.scheme = cl::parse_scheme(name);
    s.bias_mode = cl::parse_bias_mode(a.bias_mode);
    s.bias_variance = a.bias_variance;
    s.weight_gain = a.weight_gain;
    specs.push_back(s);
  }
  if (a.event != "zero" && a.event != "last-bias") throw cli::UsageError("--event must be zero or last-bias");
  const bool zero_bias = specs.front().bias_mode == cl::BiasMode::zero;
  std::vector<double> point;
  if (!a.point.empty()) {
    point = cli::parse_real_list(a.point);
    if (static_cast<int>(point.size()) != a.input_dim) throw cli::UsageError("--point must have input-dim entries");
  }
  if (point.empty() && !(zero_bias && a.event == "zero")) {
    throw cli::UsageError("--point is required unless estimating the zero function with zero biases");
  }
  const json config = {{"command", "prob mc"},     {"widths", widths},         {"depths", depths},
                       {"inits", a.inits},         {"samples", a.samples},     {"input_dim", a.input_dim},
                       {"bias_mode", a.bias_mode}, {"bias_variance", a.bias_variance},
                       {"weight_gain", a.weight_gain}, {"point", point},       {"event", a.event},
                       {"last_layer_relu", a.last_relu}, {"algorithm", cl::CounterRng::kAlgorithm}};
  const auto prov = cl::Provenance::from_config(with_seed(config, seed), seed);

  std::vector<cl::SweepCell> cells;
  for (int w : widths) {
    for (int d : depths) {
      const auto arch = cl::Architecture::uniform(a.input_dim, w, d, 0, a.last_relu, zero_bias);
      for (std::size_t s = 0; s < specs.size(); ++s) {
        const std::uint64_t cell_seed = cl::derive_seed(seed, static_cast<std::uint64_t>(w),
                                                        static_cast<std::uint64_t>(d), s);
        cl::SweepCell c{w, d, std::string(cl::to_string(specs[s].scheme)), {}};
        if (point.empty()) {
          c.estimate = cl::estimate_zero_function(arch, specs[s], a.samples, cell_seed);
        } else if (a.event == "zero") {
          c.estimate = cl::estimate_zero_at_point(arch, specs[s], point, a.samples, cell_seed);
        } else {
          c.estimate = cl::estimate_last_bias_at_point(arch, specs[s], point, a.samples, cell_seed);
        }
        cells.push_back(std::move(c));
      }
    }
  }
  if (cells.size() <= 40) {
    for (const auto& c : cells) {
      fmt::print("width={} depth={} scheme={} p_hat={} ci=[{}, {}] n={}\n", c.width, c.depth, c.scheme,
                 cl::format_real(c.estimate.p_hat), cl::format_real(c.estimate.ci_low),
                 cl::format_real(c.estimate.ci_high), c.estimate.n);
    }
  }
  if (!a.out.empty()) cli::emit(a.out, cl::sweep_table(cells).to_string(&prov));
  return 0;
}

int cmd_safe(const SafeArgs& a, std::uint64_t seed) {
  const auto ps = cli::parse_real_list(a.p);
  const auto widths = cli::parse_int_list(a.widths);
  const json config = {{"command", "safe-region"}, {"p", ps}, {"widths", widths}};
  const auto prov = cl::Provenance::from_config(with_seed(config, seed), seed);
  cl::CsvTable t({"width", "p", "max_depth"});
  std::vector<cl::Series> series;
  for (double p : ps) {
    cl::Series s{fmt::format("p = {}", cl::format_real(p)), {}, {}, false};
    for (int w : widths) {
      const std::int64_t d = cl::max_safe_depth(w, p);
      t.add_row({std::to_string(w), cl::format_real(p), std::to_string(d)});
      s.x.push_back(w);
      s.y.push_back(static_cast<double>(d));
    }
    series.push_back(std::move(s));
  }
  cl::PlotSpec plot{"Largest depth with collapse bound below p", "width", "max depth", true, 640, 420};
  cli::emit(a.out + ".csv", t.to_string(&prov));
  cli::emit(a.out + ".svg", cl::render_svg(plot, series));
  fmt::print("safe-region: {} rows\n", t.rows());
  return 0;
}

int cmd_lengthmap(const LengthArgs& a, std::uint64_t seed) {
  cl::LengthMapParams p;
  p.sigma_w2 = a.sigma_w2;
  p.sigma_b2 = a.sigma_b2;
  p.q0 = a.q0;
  p.depth = a.depth;
  p.activation = cl::parse_activation(a.activation);
  const cl::LengthTrajectory general = cl::length_map_general(p);
  std::optional<cl::LengthTrajectory> closed;
  if (p.activation == cl::Activation::relu) closed = cl::length_map_relu(p);
  const json config = {{"command", "lengthmap"}, {"sigma_w2", a.sigma_w2}, {"sigma_b2", a.sigma_b2},
                       {"q0", a.q0},            {"depth", a.depth},       {"activation", a.activation}};
  const auto prov = cl::Provenance::from_config(with_seed(config, seed), seed);
  cl::CsvTable t({"layer", "expected_q", "closed_form"});
  for (int l = 0; l < a.depth; ++l) {
    const auto i = static_cast<std::size_t>(l);
    t.add_row({std::to_string(l + 1), cl::format_real(general.expected_q[i]),
               closed ? cl::format_real(closed->expected_q[i]) : ""});
  }
  if (!a.out.empty()) cli::emit(a.out, t.to_string(&prov));
  fmt::print("lengthmap: E[q^{}]={} quadrature_converged={} max_refinement_change={}\n", a.depth,
             cl::format_real(general.expected_q.back()), general.quadrature_converged,
             cl::format_real(general.max_refinement_change));
  return 0;
}

cl::TrainConfig make_train_config(const TrainArgs& a, std::uint64_t seed) {
  cl::TrainConfig c;
  c.optimizer.kind = cl::parse_optimizer(a.opt);
  c.optimizer.learning_rate = a.lr;
  c.steps = a.steps;
  c.batch_size = a.batch;
  c.loss = cl::parse_loss(a.loss);
  c.norm.mode = cl::parse_norm_mode(a.norm);
  c.norm.dropout_rate = c.norm.mode == cl::NormMode::dropout ? a.dropout_rate : 0.0;
  c.seed = seed;
  return c;
}

int cmd_train(const TrainArgs& a, std::uint64_t seed) {
  if (!(a.lr > 0.0)) throw cli::UsageError("--lr must be positive");
  if (a.steps < 1 || a.batch < 1 || a.depth < 1 || a.width < 1) {
    throw cli::UsageError("--steps, --batch, --depth and --width must be >= 1");
  }
  const cl::TargetId target = cl::parse_target(a.target);
  const cl::Architecture arch = cl::training_architecture(target, a.width, a.depth);
  cl::InitializerSpec spec;
  spec.scheme = cl::parse_scheme(a.init);
  spec.seed = seed;
  const cl::TrainConfig cfg = make_train_config(a, seed);
  const json config = {{"command", "train"},
                       {"target", a.target},
                       {"architecture", cl::to_json(arch)},
                       {"init", cl::to_json(spec)},
                       {"train", cl::to_json(cfg)}};
  const auto prov = cl::Provenance::from_config(config, seed);
  const cl::TrainReport rep = cl::train(arch, spec, target, cfg);
  json doc = cl::to_json(rep);
  doc["provenance"] = prov.to_json();
  cli::emit(a.report, cli::pretty(doc));
  fmt::print("train: target={} final_loss={} kind={} zero_layer={} diverged={}\n", a.target,
             cl::format_real(rep.final_loss), cl::to_string(rep.collapse.kind),
             rep.collapse.zero_layer ? std::to_string(*rep.collapse.zero_layer) : "none", rep.diverged);
  if (rep.diverged) {
    std::cout << json{{"error", "training diverged"}, {"steps_run", rep.steps_run}}.dump() << "\n";
    return 1;
  }
  return 0;
}

int cmd_classify(const ClassifyArgs& a, std::uint64_t seed) {
  const cl::Network net = cl::load_network(a.net);
  const cl::TargetId target = cl::parse_target(a.target);
  if (!(a.tol > 0.0)) throw cli::UsageError("--tol must be positive");
  const cl::CollapseReport r =
      cl::classify_state(net, target, cl::default_grid(target), cl::parse_loss(a.loss), a.tol);
  if (!a.report.empty()) {
    const json config = {{"command", "classify"}, {"net", a.net}, {"target", a.target},
                         {"loss", a.loss},        {"tol", a.tol}};
    json doc = cl::to_json(r);
    doc["provenance"] = cl::Provenance::from_config(config, seed).to_json();
    cli::emit(a.report, cli::pretty(doc));
  }
  std::string constant = "none";
  if (r.constant_value) {
    constant.clear();
    for (Eigen::Index i = 0; i < r.constant_value->size(); ++i) {
      constant += (i ? "," : "") + cl::format_real((*r.constant_value)[i]);
    }
  }
  fmt::print("classify: kind={} constant={} matches_statistic={} regions={} max_abs_error={}\n",
             cl::to_string(r.kind), constant, r.matches_statistic, r.regions.size(),
             cl::format_real(r.max_abs_error));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"collapselab: collapse of deep, narrow ReLU networks"};
  app.set_version_flag("--version", std::string(cl::kVersion));
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  try {
    seed = cli::default_seed();
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  app.add_option("--seed", seed, "Global seed (default: $COLLAPSELAB_SEED or 0)");
  // Lets --seed follow the subcommand too.
  app.fallthrough();

  auto* prob = app.add_subcommand("prob", "Collapse probabilities at initialization");
  prob->require_subcommand(1);

  ExactArgs ea;
  auto* exact = prob->add_subcommand("exact", "Exact width-2 chain probability");
  exact->add_option("--depth", ea.depths, "Depth L, or a list such as 1..12")->required();
  exact->add_flag("--last-layer-relu,!--no-last-layer-relu", ea.last_relu, "ReLU on the output layer");
  exact->add_option("--out", ea.out, "CSV output path");

  BoundArgs ba;
  auto* bound = prob->add_subcommand("bound", "Upper bound on the collapse probability");
  bound->add_option("--widths", ba.widths, "Layer widths, e.g. 3x10 or 4,4,2")->required();
  bound->add_flag("--last-layer-relu,!--no-last-layer-relu", ba.last_relu, "ReLU on the output layer");
  bound->add_flag("--biases-nonzero", ba.biases_nonzero, "Symmetric nonzero biases");

  McArgs ma;
  auto* mc = prob->add_subcommand("mc", "Monte Carlo estimate at initialization");
  mc->add_option("--width", ma.widths, "Width list");
  mc->add_option("--depth", ma.depths, "Depth list");
  mc->add_option("--init", ma.inits, "Initializer list");
  mc->add_option("--samples", ma.samples, "Initializations per cell")->check(CLI::PositiveNumber);
  mc->add_option("--input-dim", ma.input_dim, "Input dimension")->check(CLI::PositiveNumber);
  mc->add_option("--bias-mode", ma.bias_mode, "zero or symmetric");
  mc->add_option("--bias-variance", ma.bias_variance, "sigma_b^2 for symmetric biases");
  mc->add_option("--weight-gain", ma.weight_gain, "sigma_w^2 for the generic symmetric schemes");
  mc->add_option("--point", ma.point, "Fixed input (comma separated)");
  mc->add_option("--event", ma.event, "zero or last-bias");
  mc->add_flag("--last-layer-relu,!--no-last-layer-relu", ma.last_relu, "ReLU on the output layer");
  mc->add_option("--out", ma.out, "CSV output path");

  SafeArgs sa;
  auto* safe = app.add_subcommand("safe-region", "Largest safe depth per width");
  safe->add_option("--p", sa.p, "Collapse budget(s)");
  safe->add_option("--widths", sa.widths, "Width list");
  safe->add_option("--out", sa.out, "Output prefix (.csv and .svg)");

  LengthArgs la;
  auto* lengthmap = app.add_subcommand("lengthmap", "Expected length recursion");
  lengthmap->add_option("--sigma-w2", la.sigma_w2)->check(CLI::NonNegativeNumber);
  lengthmap->add_option("--sigma-b2", la.sigma_b2)->check(CLI::NonNegativeNumber);
  lengthmap->add_option("--q0", la.q0)->check(CLI::NonNegativeNumber);
  lengthmap->add_option("--depth", la.depth)->check(CLI::PositiveNumber);
  lengthmap->add_option("--activation", la.activation, "relu, selu or identity");
  lengthmap->add_option("--out", la.out, "CSV output path");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train one network");
  train->add_option("--target", ta.target);
  train->add_option("--depth", ta.depth, "Weight layers including the output layer");
  train->add_option("--width", ta.width);
  train->add_option("--init", ta.init);
  train->add_option("--loss", ta.loss, "mse or mae");
  train->add_option("--opt", ta.opt, "sgd, sgd_nesterov, adagrad, rmsprop or adam");
  train->add_option("--lr", ta.lr);
  train->add_option("--steps", ta.steps);
  train->add_option("--batch", ta.batch);
  train->add_option("--norm", ta.norm, "none, batchnorm, weightnorm, selu or dropout");
  train->add_option("--dropout-rate", ta.dropout_rate);
  train->add_option("--report", ta.report, "Report JSON path");

  ClassifyArgs ca;
  auto* classify = app.add_subcommand("classify", "Classify a saved network");
  classify->add_option("--net", ca.net, "Network or train-report JSON")->required();
  classify->add_option("--target", ca.target);
  classify->add_option("--loss", ca.loss);
  classify->add_option("--tol", ca.tol);
  classify->add_option("--report", ca.report, "Report JSON path");

  std::string fig_id;
  cli::ExperimentOptions xo;
  std::string out_dir;
  auto* experiment = app.add_subcommand("experiment", "Regenerate a figure's data and plot");
  experiment->add_option("id", fig_id, "fig5a_curves, fig5b_safe_region, fig6_orthogonal or collapse_gallery")
      ->required()
      ->check(CLI::IsMember({"fig5a_curves", "fig5b_safe_region", "fig6_orthogonal", "collapse_gallery"}));
  experiment->add_option("--out", out_dir, "Output directory (default out/<id>)");
  experiment->add_option("--samples", xo.samples, "Monte Carlo samples per cell");
  experiment->add_option("--steps", xo.steps, "Training steps per run");
  experiment->add_option("--runs", xo.runs, "Seeds per gallery target");
  experiment->add_flag("--log-y", xo.log_y, "Logarithmic probability axis");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*exact) return cmd_exact(ea, seed);
    if (*bound) return cmd_bound(ba);
    if (*mc) return cmd_mc(ma, seed);
    if (*safe) return cmd_safe(sa, seed);
    if (*lengthmap) return cmd_lengthmap(la, seed);
    if (*train) return cmd_train(ta, seed);
    if (*classify) return cmd_classify(ca, seed);
    if (*experiment) {
      xo.seed = seed;
      xo.out_dir = out_dir.empty() ? "out/" + fig_id : out_dir;
      cli::run_experiment(fig_id, xo);
      fmt::print("experiment {}: wrote {} files to {}\n", fig_id, cli::emitted().size(), xo.out_dir.string());
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::cout << json{{"error", e.what()}, {"kind", "numerical"}}.dump() << "\n";
    return 1;
  }
  return 2;
}
