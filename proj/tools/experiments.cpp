// Desk-scale regeneration of the figure data. Sample counts are reduced
// (10^4 initializations per cell by default) and can be raised with --samples.
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/core.h>

#include "cli_common.hpp"
#include "collapselab/collapse.hpp"
#include "collapselab/exact.hpp"
#include "collapselab/montecarlo.hpp"
#include "collapselab/svg.hpp"
#include "collapselab/training.hpp"

namespace cl = collapselab;
using nlohmann::json;

namespace cli {

namespace {

constexpr std::uint64_t kDefaultSamples = 10000;

std::vector<int> range(int a, int b) {
  std::vector<int> v;
  for (int i = a; i <= b; ++i) v.push_back(i);
  return v;
}

json base_config(const std::string& id, const ExperimentOptions& o) {
  return {{"command", "experiment"}, {"id", id}, {"seed", o.seed}};
}

void fig5a_curves(const ExperimentOptions& o) {
  const std::uint64_t n = o.samples ? o.samples : kDefaultSamples;
  const auto widths = range(2, 10);
  const auto depths = range(1, 30);
  cl::InitializerSpec he;
  const std::vector<cl::InitializerSpec> specs{he};
  json config = base_config("fig5a_curves", o);
  config["samples"] = n;
  config["widths"] = widths;
  config["depths"] = depths;
  config["scheme"] = "he_normal";
  config["last_layer_relu"] = true;
  const auto prov = cl::Provenance::from_config(config, o.seed);

  const auto cells = cl::sweep(widths, depths, specs, n, o.seed);
  emit(o.out_dir / "fig5a_curves.csv", cl::sweep_table(cells).to_string(&prov));

  cl::CsvTable theory({"width", "depth", "bound", "exact"});
  std::vector<cl::Series> series;
  for (int w : widths) {
    cl::Series mc{fmt::format("MC w={}", w), {}, {}, true};
    cl::Series line{fmt::format("bound w={}", w), {}, {}, false};
    for (const auto& c : cells) {
      if (c.width != w) continue;
      mc.x.push_back(c.depth);
      mc.y.push_back(c.estimate.p_hat);
    }
    for (int d : depths) {
      const std::vector<int> arch(static_cast<std::size_t>(d), w);
      const double b = cl::collapse_probability_bound(arch, true, false);
      std::string exact;
      if (w == 2) exact = cl::format_real(cl::exact_constant_probability(d, true).convert_to<double>());
      theory.add_row({std::to_string(w), std::to_string(d), cl::format_real(b), exact});
      line.x.push_back(d);
      line.y.push_back(b);
    }
    series.push_back(std::move(mc));
    series.push_back(std::move(line));
  }
  cl::Series chain{"chain w=2", {}, {}, false};
  for (int d : depths) {
    chain.x.push_back(d);
    chain.y.push_back(cl::exact_constant_probability(d, true).convert_to<double>());
  }
  series.push_back(std::move(chain));
  emit(o.out_dir / "fig5a_theory.csv", theory.to_string(&prov));
  cl::PlotSpec plot{"Zero function at initialization (he_normal, no bias)", "depth", "probability",
                    o.log_y, 760, 560};
  emit(o.out_dir / "fig5a_curves.svg", cl::render_svg(plot, series));
}

void fig5b_safe_region(const ExperimentOptions& o) {
  const auto widths = range(1, 64);
  const std::vector<double> ps{0.01, 0.1};
  json config = base_config("fig5b_safe_region", o);
  config["widths"] = widths;
  config["p"] = ps;
  const auto prov = cl::Provenance::from_config(config, o.seed);
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
  emit(o.out_dir / "fig5b_safe_region.csv", t.to_string(&prov));
  cl::PlotSpec plot{"Safe region: depth below which the bound stays under p", "width", "max depth",
                    true, 640, 420};
  emit(o.out_dir / "fig5b_safe_region.svg", cl::render_svg(plot, series));
}

void fig6_orthogonal(const ExperimentOptions& o) {
  const std::uint64_t n = o.samples ? o.samples : kDefaultSamples;
  const std::vector<int> widths{2, 3, 4, 5};
  const auto depths = range(1, 20);
  cl::InitializerSpec he;
  cl::InitializerSpec orth;
  orth.scheme = cl::Scheme::orthogonal;
  const std::vector<cl::InitializerSpec> specs{he, orth};
  json config = base_config("fig6_orthogonal", o);
  config["samples"] = n;
  config["widths"] = widths;
  config["depths"] = depths;
  config["schemes"] = {"he_normal", "orthogonal"};
  const auto prov = cl::Provenance::from_config(config, o.seed);
  const auto cells = cl::sweep(widths, depths, specs, n, o.seed);
  emit(o.out_dir / "fig6_orthogonal.csv", cl::sweep_table(cells).to_string(&prov));
  std::vector<cl::Series> series;
  for (int w : widths) {
    for (const char* scheme : {"he_normal", "orthogonal"}) {
      cl::Series s{fmt::format("{} w={}", scheme, w), {}, {}, std::string(scheme) == "orthogonal"};
      for (const auto& c : cells) {
        if (c.width != w || c.scheme != scheme) continue;
        s.x.push_back(c.depth);
        s.y.push_back(c.estimate.p_hat);
      }
      series.push_back(std::move(s));
    }
  }
  cl::PlotSpec plot{"Orthogonal vs symmetric initialization", "depth", "probability", o.log_y, 720, 480};
  emit(o.out_dir / "fig6_orthogonal.svg", cl::render_svg(plot, series));
}

struct GalleryCase {
  cl::TargetId target;
  int width;
};

void collapse_gallery(const ExperimentOptions& o) {
  const int steps = o.steps > 0 ? o.steps : 20000;
  const int runs = o.runs > 0 ? o.runs : 1;
  const std::vector<GalleryCase> cases{{cl::TargetId::abs1d, 2},
                                       {cl::TargetId::xsin5x, 2},
                                       {cl::TargetId::stepsin, 2},
                                       {cl::TargetId::abs2d, 4}};
  json config = base_config("collapse_gallery", o);
  config["steps"] = steps;
  config["runs"] = runs;
  config["depth"] = 10;
  config["scheme"] = "he_normal";
  config["optimizer"] = "adam";
  config["loss"] = "mse";
  const auto prov = cl::Provenance::from_config(config, o.seed);
  cl::CsvTable summary({"target", "run", "seed", "final_loss", "kind", "constant"});

  for (const auto& gc : cases) {
    const auto name = std::string(cl::to_string(gc.target));
    const cl::Architecture arch = cl::training_architecture(gc.target, gc.width, 10);
    std::vector<cl::Series> series;
    const cl::Matrix grid = cl::default_grid(gc.target);
    const cl::Matrix y = cl::evaluate_batch(gc.target, grid);
    const int d_in = static_cast<int>(grid.rows());
    // 2-D targets are plotted along x1 at the grid row closest to x2 = 0.
    const int m = cl::kGridPoints2dPerAxis;
    std::vector<Eigen::Index> slice;
    for (Eigen::Index c = 0; c < grid.cols(); ++c) {
      if (d_in == 1 || c % m == m / 2 - 1) slice.push_back(c);
    }
    cl::Series truth{"target", {}, {}, false};
    for (Eigen::Index c : slice) {
      truth.x.push_back(grid(0, c));
      truth.y.push_back(y(0, c));
    }
    series.push_back(std::move(truth));

    for (int r = 0; r < runs; ++r) {
      const std::uint64_t run_seed =
          cl::derive_seed(o.seed, static_cast<std::uint64_t>(gc.target), static_cast<std::uint64_t>(r));
      cl::InitializerSpec spec;
      spec.seed = run_seed;
      cl::TrainConfig cfg;
      cfg.steps = steps;
      cfg.seed = run_seed;
      const cl::TrainReport rep = cl::train(arch, spec, gc.target, cfg);
      const cl::Matrix out = cl::evaluate(rep.final_net, grid);

      std::vector<std::string> cols;
      for (int i = 0; i < d_in; ++i) cols.push_back(fmt::format("x{}", i + 1));
      for (Eigen::Index k = 0; k < y.rows(); ++k) cols.push_back(fmt::format("y{}", k + 1));
      for (Eigen::Index k = 0; k < out.rows(); ++k) cols.push_back(fmt::format("n{}", k + 1));
      cl::CsvTable t(cols);
      for (Eigen::Index c = 0; c < grid.cols(); ++c) {
        std::vector<std::string> row;
        for (int i = 0; i < d_in; ++i) row.push_back(cl::format_real(grid(i, c)));
        for (Eigen::Index k = 0; k < y.rows(); ++k) row.push_back(cl::format_real(y(k, c)));
        for (Eigen::Index k = 0; k < out.rows(); ++k) row.push_back(cl::format_real(out(k, c)));
        t.add_row(std::move(row));
      }
      emit(o.out_dir / fmt::format("gallery_{}_{}.csv", name, r), t.to_string(&prov));

      std::string constant;
      if (rep.collapse.constant_value) {
        for (Eigen::Index i = 0; i < rep.collapse.constant_value->size(); ++i) {
          constant += (i ? ";" : "") + cl::format_real((*rep.collapse.constant_value)[i]);
        }
      }
      summary.add_row({name, std::to_string(r), std::to_string(run_seed), cl::format_real(rep.final_loss),
                       std::string(cl::to_string(rep.collapse.kind)), constant});

      cl::Series net{fmt::format("run {} ({})", r, cl::to_string(rep.collapse.kind)), {}, {}, false};
      for (Eigen::Index c : slice) {
        net.x.push_back(grid(0, c));
        net.y.push_back(out(0, c));
      }
      series.push_back(std::move(net));
    }
    cl::PlotSpec plot{fmt::format("{}: trained network vs target", name), "x1", "output 1", false, 640, 420};
    emit(o.out_dir / fmt::format("gallery_{}.svg", name), cl::render_svg(plot, series));
  }
  emit(o.out_dir / "gallery_summary.csv", summary.to_string(&prov));
}

}  // namespace

void run_experiment(const std::string& id, const ExperimentOptions& options) {
  if (id == "fig5a_curves") return fig5a_curves(options);
  if (id == "fig5b_safe_region") return fig5b_safe_region(options);
  if (id == "fig6_orthogonal") return fig6_orthogonal(options);
  if (id == "collapse_gallery") return collapse_gallery(options);
  throw UsageError(fmt::format("unknown experiment '{}'", id));
}

}  // namespace cli
