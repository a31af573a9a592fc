#include "cli_common.hpp"

#include <charconv>
#include <cstdlib>
#include <sstream>

#include <fmt/core.h>

namespace cli {

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw UsageError(fmt::format("empty item in list '{}'", text));
    parts.push_back(item.substr(b, e - b + 1));
  }
  if (parts.empty()) throw UsageError("empty list");
  return parts;
}

int to_int(const std::string& s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw UsageError(fmt::format("'{}' is not an integer", s));
  return v;
}

std::vector<std::string> g_emitted;

}  // namespace

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (const auto& part : split(text, ',')) {
    if (const auto r = part.find(".."); r != std::string::npos) {
      const int a = to_int(part.substr(0, r));
      const int b = to_int(part.substr(r + 2));
      if (b < a) throw UsageError(fmt::format("empty range '{}'", part));
      for (int v = a; v <= b; ++v) out.push_back(v);
    } else if (const auto x = part.find('x'); x != std::string::npos) {
      const int w = to_int(part.substr(0, x));
      const int n = to_int(part.substr(x + 1));
      if (n < 1) throw UsageError(fmt::format("repeat count must be >= 1 in '{}'", part));
      out.insert(out.end(), static_cast<std::size_t>(n), w);
    } else {
      out.push_back(to_int(part));
    }
  }
  return out;
}

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& part : split(text, ',')) {
    char* end = nullptr;
    const double v = std::strtod(part.c_str(), &end);
    if (end != part.c_str() + part.size()) throw UsageError(fmt::format("'{}' is not a number", part));
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> parse_name_list(const std::string& text) { return split(text, ','); }

std::uint64_t default_seed() {
  const char* env = std::getenv("COLLAPSELAB_SEED");
  if (env == nullptr || *env == '\0') return 0;
  std::uint64_t v = 0;
  const std::string s(env);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw UsageError(fmt::format("COLLAPSELAB_SEED='{}' is not an unsigned integer", s));
  }
  return v;
}

void emit(const std::filesystem::path& path, const std::string& content) {
  collapselab::atomic_write(path, content);
  g_emitted.push_back(path.string());
}

const std::vector<std::string>& emitted() { return g_emitted; }

std::string pretty(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace cli
