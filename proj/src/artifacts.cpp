#include "collapselab/artifacts.hpp"

#include <fstream>
#include <stdexcept>
#include <system_error>

#include <unistd.h>

#include <fmt/core.h>

namespace collapselab {

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += fmt::format(".tmp.{}", ::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("cannot open {} for writing", tmp.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error(fmt::format("write to {} failed", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error(fmt::format("cannot rename {} to {}: {}", tmp.string(),
                                         path.string(), ec.message()));
  }
}

std::string format_real(double v) { return fmt::format("{}", v); }

std::uint64_t config_hash(const nlohmann::json& config) {
  // nlohmann::json objects are std::map-backed, so dump() is key-sorted.
  const std::string canonical = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) { return fmt::format("{:016x}", v); }

Provenance Provenance::from_config(nlohmann::json config, std::uint64_t seed) {
  Provenance p;
  p.seed = seed;
  p.config_hash = collapselab::config_hash(config);
  p.config = std::move(config);
  return p;
}

nlohmann::json Provenance::to_json() const {
  return {{"tool", tool},
          {"version", version},
          {"seed", seed},
          {"config_hash", hex64(config_hash)},
          {"config", config}};
}

std::string Provenance::stamp() const {
  return fmt::format("{} {} seed={} config={}", tool, version, seed, hex64(config_hash));
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns_.size()) {
    throw std::invalid_argument("CSV row width does not match the header");
  }
  rows_.push_back(std::move(cells));
}

std::string CsvTable::to_string(const Provenance* provenance) const {
  std::string out;
  if (provenance != nullptr) out += "# " + provenance->stamp() + "\n";
  auto append_row = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      out += cells[i];
      out += i + 1 < cells.size() ? ',' : '\n';
    }
  };
  append_row(columns_);
  for (const auto& r : rows_) append_row(r);
  return out;
}

}  // namespace collapselab
