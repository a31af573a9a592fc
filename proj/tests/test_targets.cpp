#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "collapselab/targets.hpp"

using namespace collapselab;

namespace {

double at1(TargetId id, double x) {
  const std::vector<double> v{x};
  return evaluate(id, v).y[0];
}

}  // namespace

TEST_CASE("target specs") {
  for (TargetId id : {TargetId::abs1d, TargetId::xsin5x, TargetId::stepsin}) {
    CHECK(target_spec(id).input_dim == 1);
    CHECK(target_spec(id).output_dim == 1);
  }
  CHECK(target_spec(TargetId::abs2d).input_dim == 2);
  CHECK(target_spec(TargetId::abs2d).output_dim == 2);
  CHECK(target_spec(TargetId::abs1d).hi == std::sqrt(3.0));
  CHECK(target_spec(TargetId::abs1d).lo == -std::sqrt(3.0));
  for (TargetId id : {TargetId::abs1d, TargetId::xsin5x, TargetId::stepsin, TargetId::abs2d}) {
    CHECK(parse_target(to_string(id)) == id);
  }
  CHECK_THROWS_AS(parse_target("sin"), std::invalid_argument);
}

TEST_CASE("evaluation examples") {
  CHECK(at1(TargetId::abs1d, -1.5) == 1.5);
  CHECK(at1(TargetId::stepsin, 0.0) == 0.0);
  CHECK(at1(TargetId::stepsin, 0.5) == 1.0 + 0.2 * std::sin(2.5));
  CHECK(at1(TargetId::stepsin, -0.5) == 0.2 * std::sin(-2.5));
  CHECK(at1(TargetId::xsin5x, 1.0) == std::sin(5.0));
  const std::vector<double> p{1.0, 2.0};
  const TargetValue v = evaluate(TargetId::abs2d, p);
  CHECK(v.y[0] == 3.0);
  CHECK(v.y[1] == 1.0);
  // x2 = 2 lies beyond sqrt 3.
  CHECK_FALSE(v.in_domain);
}

TEST_CASE("out-of-domain points are flagged but still evaluated") {
  const std::vector<double> x{2.0};
  const TargetValue v = evaluate(TargetId::abs1d, x);
  CHECK_FALSE(v.in_domain);
  CHECK(v.y[0] == 2.0);
  const std::vector<double> edge{std::sqrt(3.0)};
  CHECK(evaluate(TargetId::abs1d, edge).in_domain);
  const std::vector<double> wrong{1.0, 1.0};
  CHECK_THROWS_AS(evaluate(TargetId::abs1d, wrong), ShapeError);
}

TEST_CASE("abs1d sample of 10^6: label mean and input variance") {
  const Dataset d = sample_dataset(TargetId::abs1d, 1000000, 17);
  const double n = d.size();
  const double mean_y = d.y.mean();
  // |x| is uniform on [0, sqrt 3]: variance 3/12.
  const double se_y = std::sqrt(0.25 / n);
  CHECK(std::abs(mean_y - std::sqrt(3.0) / 2) < 3.0 * se_y);
  const double mean_x = d.x.mean();
  const double var_x = d.x.array().square().mean() - mean_x * mean_x;
  // Var of x^2 for U[-a, a] with a^2 = 3 is 9/5 - 1 = 4/5.
  CHECK(std::abs(var_x - 1.0) < 3.0 * std::sqrt(0.8 / n));
}

TEST_CASE("labels equal evaluate exactly and sampling is deterministic") {
  for (TargetId id : {TargetId::abs1d, TargetId::xsin5x, TargetId::stepsin, TargetId::abs2d}) {
    const Dataset a = sample_dataset(id, 500, 3);
    const Dataset b = sample_dataset(id, 500, 3);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
    CHECK(a.y == evaluate_batch(id, a.x));
    const double lim = std::sqrt(3.0);
    CHECK(a.x.maxCoeff() <= lim);
    CHECK(a.x.minCoeff() >= -lim);
    CHECK(sample_dataset(id, 500, 4).x != a.x);
  }
  CHECK_THROWS_AS(sample_dataset(TargetId::abs1d, 0, 1), std::invalid_argument);
}

TEST_CASE("input marginals pass Kolmogorov-Smirnov at alpha 0.01 for n = 10^5") {
  const int n = 100000;
  for (TargetId id : {TargetId::abs1d, TargetId::abs2d}) {
    const Dataset d = sample_dataset(id, n, 23);
    const double a = std::sqrt(3.0);
    for (Eigen::Index r = 0; r < d.x.rows(); ++r) {
      std::vector<double> xs(d.x.row(r).begin(), d.x.row(r).end());
      std::sort(xs.begin(), xs.end());
      double dmax = 0.0;
      for (int i = 0; i < n; ++i) {
        const double f = (xs[i] + a) / (2 * a);
        dmax = std::max({dmax, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
      }
      // Asymptotic critical value at alpha = 0.01.
      CHECK(dmax < 1.628 / std::sqrt(static_cast<double>(n)));
    }
  }
}

TEST_CASE("dataset CSV dump") {
  const Dataset d = sample_dataset(TargetId::abs2d, 3, 1);
  const auto path = std::filesystem::temp_directory_path() / "collapselab_test_dataset.csv";
  write_dataset_csv(d, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "x1,x2,y1,y2");
  int rows = 0;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line[0] != '#') ++rows;
  }
  CHECK(rows == 3);
  std::filesystem::remove(path);
}
