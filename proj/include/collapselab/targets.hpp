#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>

#include "collapselab/net.hpp"
#include "collapselab/random.hpp"

namespace collapselab {

enum class TargetId { abs1d, xsin5x, stepsin, abs2d };

/// Inputs are uniform on [-sqrt(3), sqrt(3)]^input_dim (unit variance).
struct TargetSpec {
  TargetId id;
  std::string_view name;
  int input_dim;
  int output_dim;
  double lo;
  double hi;
};

TargetSpec target_spec(TargetId id);
TargetId parse_target(std::string_view name);
std::string_view to_string(TargetId id);

struct TargetValue {
  Vector y;
  bool in_domain = true;
};

/// |x|, x sin(5x), 1{x > 0} + 0.2 sin(5x), (|x1 + x2|, |x1 - x2|).
/// Points outside the domain are evaluated and flagged.
TargetValue evaluate(TargetId id, std::span<const double> x);

/// Labels for a batch of inputs (one sample per column).
Matrix evaluate_batch(TargetId id, const Matrix& x);

struct Dataset {
  Matrix x;
  Matrix y;
  int size() const { return static_cast<int>(x.cols()); }
};

Dataset sample_dataset(TargetId id, int n, std::uint64_t seed);
Dataset sample_dataset(TargetId id, int n, CounterRng& rng);

/// Columns x1..xd, y1..yk.
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);

}  // namespace collapselab
