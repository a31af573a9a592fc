#include "collapselab/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "collapselab/random.hpp"

namespace collapselab {

namespace {

constexpr double kZ95 = 1.959963984540054;

Matrix to_column(std::span<const double> input) {
  Matrix x(static_cast<Eigen::Index>(input.size()), 1);
  for (std::size_t i = 0; i < input.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = input[i];
  return x;
}

// Layer-by-layer evaluation of one random draw. Stops drawing once every
// probe point is exactly zero and no later bias can revive it.
enum class Outcome { zero_output, output_equals_last_bias, other };

Outcome run_sample(const Architecture& arch, const InitializerSpec& spec, const Matrix& probes) {
  ParameterStream stream(arch, spec);
  const bool zero_biases = arch.bias_free || spec.bias_mode == BiasMode::zero;
  const int depth = arch.depth();
  Matrix x = probes;
  for (int l = 0; l < depth; ++l) {
    const LayerParams p = stream.next();
    Matrix h = affine(p.weight, p.bias, x);
    const bool relu = l + 1 < depth || arch.last_layer_relu;
    if (relu) h = h.cwiseMax(0.0);
    if (l + 1 == depth) {
      if (h.isZero(0.0)) return Outcome::zero_output;
      bool equals_bias = true;
      for (Eigen::Index j = 0; j < h.cols() && equals_bias; ++j) {
        equals_bias = h.col(j) == p.bias;
      }
      return equals_bias ? Outcome::output_equals_last_bias : Outcome::other;
    }
    if (zero_biases && h.isZero(0.0)) return Outcome::zero_output;
    x = std::move(h);
  }
  return Outcome::other;
}

InitializerSpec with_seed(InitializerSpec spec, std::uint64_t seed) {
  spec.seed = seed;
  return spec;
}

}  // namespace

double MCEstimate::standard_error() const {
  if (n == 0) return 0.0;
  return std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(n));
}

MCEstimate wilson_estimate(std::uint64_t hits, std::uint64_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("estimate needs n >= 1");
  if (hits > n) throw std::invalid_argument("hits cannot exceed n");
  MCEstimate e;
  e.hits = hits;
  e.n = n;
  e.seed = seed;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(hits) / nn;
  e.p_hat = p;
  const double z2 = kZ95 * kZ95;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = kZ95 * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  e.ci_low = std::max(0.0, std::min(p, center - half));
  e.ci_high = std::min(1.0, std::max(p, center + half));
  return e;
}

std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t sample) {
  return CounterRng(seed).split(sample).key();
}

MCEstimate estimate_zero_at_point(const Architecture& arch, const InitializerSpec& spec,
                                  std::span<const double> input, std::uint64_t n,
                                  std::uint64_t seed) {
  arch.validate();
  if (n == 0) throw std::invalid_argument("sample count must be >= 1");
  if (static_cast<int>(input.size()) != arch.input_dim) throw ShapeError("input dimension mismatch");
  const bool zero_input = std::all_of(input.begin(), input.end(), [](double v) { return v == 0.0; });
  const bool zero_biases = arch.bias_free || spec.bias_mode == BiasMode::zero;
  if (zero_input && zero_biases) {
    throw std::invalid_argument("zero input with zero biases always gives a zero output");
  }
  const Matrix probes = to_column(input);
  std::uint64_t hits = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    if (run_sample(arch, with_seed(spec, sample_seed(seed, i)), probes) == Outcome::zero_output) ++hits;
  }
  return wilson_estimate(hits, n, seed);
}

MCEstimate estimate_last_bias_at_point(const Architecture& arch, const InitializerSpec& spec,
                                       std::span<const double> input, std::uint64_t n,
                                       std::uint64_t seed) {
  arch.validate();
  if (n == 0) throw std::invalid_argument("sample count must be >= 1");
  if (static_cast<int>(input.size()) != arch.input_dim) throw ShapeError("input dimension mismatch");
  const Matrix probes = to_column(input);
  std::uint64_t hits = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const Outcome o = run_sample(arch, with_seed(spec, sample_seed(seed, i)), probes);
    // With zero biases a zero output is also "equal to b^L".
    const bool zero_biases = arch.bias_free || spec.bias_mode == BiasMode::zero;
    if (o == Outcome::output_equals_last_bias || (zero_biases && o == Outcome::zero_output)) ++hits;
  }
  return wilson_estimate(hits, n, seed);
}

Matrix probe_directions(int input_dim) {
  if (input_dim < 1) throw std::invalid_argument("input dimension must be >= 1");
  if (input_dim == 1) {
    Matrix d(1, 2);
    d << 1.0, -1.0;
    return d;
  }
  CounterRng rng(0x5EEDD1E5ULL);
  Matrix d(input_dim, kProbeDirections);
  for (int j = 0; j < kProbeDirections; ++j) {
    for (int i = 0; i < input_dim; ++i) d(i, j) = rng.normal();
    d.col(j).normalize();
  }
  return d;
}

MCEstimate estimate_zero_function(const Architecture& arch, const InitializerSpec& spec,
                                  std::uint64_t n, std::uint64_t seed) {
  arch.validate();
  if (n == 0) throw std::invalid_argument("sample count must be >= 1");
  if (!arch.bias_free && spec.bias_mode != BiasMode::zero) {
    throw std::invalid_argument("zero-function estimate requires zero biases");
  }
  const Matrix probes = probe_directions(arch.input_dim);
  std::uint64_t hits = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    if (run_sample(arch, with_seed(spec, sample_seed(seed, i)), probes) == Outcome::zero_output) ++hits;
  }
  return wilson_estimate(hits, n, seed);
}

std::vector<SweepCell> sweep(std::span<const int> widths, std::span<const int> depths,
                             std::span<const InitializerSpec> specs, std::uint64_t n,
                             std::uint64_t seed, const SweepOptions& options) {
  if (widths.empty() || depths.empty() || specs.empty()) {
    throw std::invalid_argument("sweep grids must be non-empty");
  }
  std::vector<SweepCell> cells;
  cells.reserve(widths.size() * depths.size() * specs.size());
  for (int w : widths) {
    for (int d : depths) {
      const Architecture arch = Architecture::uniform(options.input_dim, w, d, 0,
                                                      options.last_layer_relu, true);
      for (std::size_t s = 0; s < specs.size(); ++s) {
        const std::uint64_t cell_seed = derive_seed(seed, static_cast<std::uint64_t>(w),
                                                    static_cast<std::uint64_t>(d), s);
        SweepCell c;
        c.width = w;
        c.depth = d;
        c.scheme = std::string(to_string(specs[s].scheme));
        c.estimate = estimate_zero_function(arch, specs[s], n, cell_seed);
        cells.push_back(std::move(c));
      }
    }
  }
  return cells;
}

CsvTable sweep_table(const std::vector<SweepCell>& cells) {
  CsvTable t({"width", "depth", "scheme", "n", "p_hat", "ci_low", "ci_high", "seed"});
  for (const auto& c : cells) {
    t.add_row({std::to_string(c.width), std::to_string(c.depth), c.scheme,
               std::to_string(c.estimate.n), format_real(c.estimate.p_hat),
               format_real(c.estimate.ci_low), format_real(c.estimate.ci_high),
               std::to_string(c.estimate.seed)});
  }
  return t;
}

}  // namespace collapselab
