#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace sgdlab::cli {

/// Flag values merged from the command line and an optional JSON config.
/// Command-line values win. Values are parsed lazily so a malformed number
/// surfaces as ConfigError naming the flag.
///
/// Every getter records the effective value (including defaults) so the
/// resolved configuration can be echoed into provenance files.
class Settings {
 public:
  /// Sets `key` unless it is already present.
  void set_default_source(const std::string& key, nlohmann::json value);
  void set(const std::string& key, nlohmann::json value) { values_[key] = std::move(value); }
  /// Merges a JSON object from a config file; existing keys are kept.
  /// Unknown keys (not in `known`) are a ConfigError.
  void merge_config(const nlohmann::json& config, const std::vector<std::string>& known);

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  double number(const std::string& key, double fallback);
  std::optional<double> optional_number(const std::string& key);
  std::int64_t integer(const std::string& key, std::int64_t fallback);
  std::uint64_t seed(const std::string& key, std::uint64_t fallback);
  std::string text(const std::string& key, const std::string& fallback);
  bool flag(const std::string& key, bool fallback = false);
  /// "lo,hi"
  std::pair<double, double> range(const std::string& key, std::pair<double, double> fallback);
  /// "NxM"
  std::pair<std::int64_t, std::int64_t> grid(const std::string& key, std::pair<std::int64_t, std::int64_t> fallback);

  /// Comma-separated numbers ("0.001,0.1") or a JSON array.
  std::vector<double> list(const std::string& key, const std::vector<double>& fallback);

  const nlohmann::json& resolved() const { return resolved_; }

 private:
  const nlohmann::json* find(const std::string& key) const;
  std::map<std::string, nlohmann::json> values_;
  nlohmann::json resolved_ = nlohmann::json::object();
};

double parse_number(std::string_view s, std::string_view what);
std::int64_t parse_integer(std::string_view s, std::string_view what);

}  // namespace sgdlab::cli
