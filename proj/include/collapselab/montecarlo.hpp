#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "collapselab/artifacts.hpp"
#include "collapselab/init.hpp"
#include "collapselab/net.hpp"

namespace collapselab {

struct MCEstimate {
  double p_hat = 0.0;
  std::uint64_t hits = 0;
  std::uint64_t n = 0;
  /// 95% Wilson score interval.
  double ci_low = 0.0;
  double ci_high = 1.0;
  std::uint64_t seed = 0;

  /// sqrt(p (1 - p) / n) at the point estimate.
  double standard_error() const;
};

MCEstimate wilson_estimate(std::uint64_t hits, std::uint64_t n, std::uint64_t seed);

/// Sample i is initialized with seed CounterRng(seed).split(i).key().
std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t sample);

/// Fraction of initializations whose output at `input` is exactly the zero
/// vector. A zero input with zero biases is rejected (always zero).
MCEstimate estimate_zero_at_point(const Architecture& arch, const InitializerSpec& spec,
                                  std::span<const double> input, std::uint64_t n,
                                  std::uint64_t seed);

/// Fraction of initializations whose output at `input` equals b^L bit-exactly
/// (linear last layer with a dead input).
MCEstimate estimate_last_bias_at_point(const Architecture& arch, const InitializerSpec& spec,
                                       std::span<const double> input, std::uint64_t n,
                                       std::uint64_t seed);

inline constexpr int kProbeDirections = 64;

/// The fixed unit directions used for the zero-function proxy when
/// input_dim >= 2 (columns).
Matrix probe_directions(int input_dim);

/// Fraction of initializations that are the zero function. Requires a
/// bias-free architecture. For input_dim 1 the test at +1 and -1 is exact
/// (the net is linear on each ray); otherwise 64 fixed directions are used.
MCEstimate estimate_zero_function(const Architecture& arch, const InitializerSpec& spec,
                                  std::uint64_t n, std::uint64_t seed);

struct SweepOptions {
  int input_dim = 1;
  bool last_layer_relu = true;
};

struct SweepCell {
  int width = 0;
  int depth = 0;
  std::string scheme;
  MCEstimate estimate;
};

/// One zero-function estimate per (width, depth, spec) on bias-free nets of
/// `depth` layers of `width`. Cell seed: derive_seed(seed, width, depth, spec index).
std::vector<SweepCell> sweep(std::span<const int> widths, std::span<const int> depths,
                             std::span<const InitializerSpec> specs, std::uint64_t n,
                             std::uint64_t seed, const SweepOptions& options = {});

/// Columns: width, depth, scheme, n, p_hat, ci_low, ci_high, seed.
CsvTable sweep_table(const std::vector<SweepCell>& cells);

}  // namespace collapselab
