#include "collapselab/targets.hpp"

#include <cmath>
#include <string>

#include <fmt/core.h>

#include "collapselab/artifacts.hpp"

namespace collapselab {

namespace {
const double kSqrt3 = std::sqrt(3.0);
}

TargetSpec target_spec(TargetId id) {
  switch (id) {
    case TargetId::abs1d: return {id, "abs1d", 1, 1, -kSqrt3, kSqrt3};
    case TargetId::xsin5x: return {id, "xsin5x", 1, 1, -kSqrt3, kSqrt3};
    case TargetId::stepsin: return {id, "stepsin", 1, 1, -kSqrt3, kSqrt3};
    case TargetId::abs2d: return {id, "abs2d", 2, 2, -kSqrt3, kSqrt3};
  }
  throw std::invalid_argument("unknown target");
}

std::string_view to_string(TargetId id) { return target_spec(id).name; }

TargetId parse_target(std::string_view name) {
  for (TargetId id : {TargetId::abs1d, TargetId::xsin5x, TargetId::stepsin, TargetId::abs2d}) {
    if (target_spec(id).name == name) return id;
  }
  throw std::invalid_argument(fmt::format("unknown target '{}'", name));
}

TargetValue evaluate(TargetId id, std::span<const double> x) {
  const TargetSpec spec = target_spec(id);
  if (static_cast<int>(x.size()) != spec.input_dim) {
    throw ShapeError(fmt::format("target {} takes {} inputs", spec.name, spec.input_dim));
  }
  TargetValue v;
  for (double xi : x) {
    if (xi < spec.lo || xi > spec.hi) v.in_domain = false;
  }
  v.y.resize(spec.output_dim);
  switch (id) {
    case TargetId::abs1d:
      v.y[0] = std::abs(x[0]);
      break;
    case TargetId::xsin5x:
      v.y[0] = x[0] * std::sin(5.0 * x[0]);
      break;
    case TargetId::stepsin:
      v.y[0] = (x[0] > 0.0 ? 1.0 : 0.0) + 0.2 * std::sin(5.0 * x[0]);
      break;
    case TargetId::abs2d:
      v.y[0] = std::abs(x[0] + x[1]);
      v.y[1] = std::abs(x[0] - x[1]);
      break;
  }
  return v;
}

Matrix evaluate_batch(TargetId id, const Matrix& x) {
  const TargetSpec spec = target_spec(id);
  Matrix y(spec.output_dim, x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const Vector col = x.col(j);
    y.col(j) = evaluate(id, std::span<const double>(col.data(), static_cast<std::size_t>(col.size()))).y;
  }
  return y;
}

Dataset sample_dataset(TargetId id, int n, CounterRng& rng) {
  if (n < 1) throw std::invalid_argument("dataset size must be >= 1");
  const TargetSpec spec = target_spec(id);
  Dataset d;
  d.x.resize(spec.input_dim, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < spec.input_dim; ++i) {
      d.x(i, j) = spec.lo + (spec.hi - spec.lo) * rng.uniform01();
    }
  }
  d.y = evaluate_batch(id, d.x);
  return d;
}

Dataset sample_dataset(TargetId id, int n, std::uint64_t seed) {
  CounterRng rng(seed);
  return sample_dataset(id, n, rng);
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  std::string out;
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) out += fmt::format("x{},", i + 1);
  for (Eigen::Index i = 0; i < data.y.rows(); ++i) {
    out += fmt::format("y{}{}", i + 1, i + 1 < data.y.rows() ? "," : "\n");
  }
  for (Eigen::Index j = 0; j < data.x.cols(); ++j) {
    for (Eigen::Index i = 0; i < data.x.rows(); ++i) out += fmt::format("{},", format_real(data.x(i, j)));
    for (Eigen::Index i = 0; i < data.y.rows(); ++i) {
      out += fmt::format("{}{}", format_real(data.y(i, j)), i + 1 < data.y.rows() ? "," : "\n");
    }
  }
  atomic_write(path, out);
}

}  // namespace collapselab
