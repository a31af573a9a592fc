#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "collapselab/artifacts.hpp"

namespace cli {

/// Bad user input; maps to exit code 2.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// "3x10" (ten 3s), "2..10", "2,3,5" or a mix joined by commas.
std::vector<int> parse_int_list(const std::string& text);
std::vector<double> parse_real_list(const std::string& text);
std::vector<std::string> parse_name_list(const std::string& text);

/// Seed from COLLAPSELAB_SEED, else 0.
std::uint64_t default_seed();

/// Writes `content` atomically and records the path for the summary line.
void emit(const std::filesystem::path& path, const std::string& content);
const std::vector<std::string>& emitted();

std::string pretty(const nlohmann::json& j);

struct ExperimentOptions {
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
  /// 0 selects the per-experiment default.
  std::uint64_t samples = 0;
  int steps = 0;
  int runs = 0;
  bool log_y = false;
};

/// fig5a_curves, fig5b_safe_region, fig6_orthogonal, collapse_gallery.
void run_experiment(const std::string& id, const ExperimentOptions& options);

}  // namespace cli
