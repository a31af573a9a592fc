#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace collapselab {

inline constexpr std::string_view kVersion = COLLAPSELAB_VERSION;

/// Writes to a sibling temp file and renames it over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view content);

/// Shortest round-trip decimal form.
std::string format_real(double v);

/// FNV-1a 64 over the canonical (sorted-key, compact) JSON dump.
std::uint64_t config_hash(const nlohmann::json& config);
std::string hex64(std::uint64_t v);

/// Identity stamped into every artifact.
struct Provenance {
  std::string tool = "collapselab";
  std::string version{kVersion};
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  nlohmann::json config;

  static Provenance from_config(nlohmann::json config, std::uint64_t seed);
  nlohmann::json to_json() const;
  /// "collapselab <version> seed=<seed> config=<hash>"
  std::string stamp() const;
};

/// CSV with a fixed header; the provenance stamp is the first line, prefixed
/// by '#'.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);

  void add_row(std::vector<std::string> cells);
  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<std::string>>& data() const { return rows_; }

  std::string to_string(const Provenance* provenance = nullptr) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace collapselab
