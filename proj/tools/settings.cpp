#include "settings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "sgdlab/types.hpp"

namespace sgdlab::cli {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::string as_string(const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

}  // namespace

double parse_number(std::string_view s, std::string_view what) {
  s = trim(s);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ConfigError("--" + std::string(what) + ": expected a number, got '" + std::string(s) + "'");
  }
  return v;
}

std::int64_t parse_integer(std::string_view s, std::string_view what) {
  s = trim(s);
  std::int64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec == std::errc() && res.ptr == s.data() + s.size()) return v;
  // accept "1e4" style integers
  const double d = parse_number(s, what);
  if (d != std::floor(d) || std::abs(d) > 9.0e15) {
    throw ConfigError("--" + std::string(what) + ": expected an integer, got '" + std::string(s) + "'");
  }
  return static_cast<std::int64_t>(d);
}

void Settings::set_default_source(const std::string& key, nlohmann::json value) {
  values_.try_emplace(key, std::move(value));
}

void Settings::merge_config(const nlohmann::json& config, const std::vector<std::string>& known) {
  if (!config.is_object()) throw ConfigError("config file must hold a JSON object");
  for (const auto& [key, value] : config.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
    set_default_source(key, value);
  }
}

const nlohmann::json* Settings::find(const std::string& key) const {
  const auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

double Settings::number(const std::string& key, double fallback) {
  double v = fallback;
  if (const auto* j = find(key)) v = j->is_number() ? j->get<double>() : parse_number(as_string(*j), key);
  resolved_[key] = v;
  return v;
}

std::optional<double> Settings::optional_number(const std::string& key) {
  if (!find(key)) return std::nullopt;
  return number(key, 0.0);
}

std::int64_t Settings::integer(const std::string& key, std::int64_t fallback) {
  std::int64_t v = fallback;
  if (const auto* j = find(key)) {
    if (j->is_number_integer()) {
      v = j->get<std::int64_t>();
    } else {
      v = parse_integer(as_string(*j), key);
    }
  }
  resolved_[key] = v;
  return v;
}

std::uint64_t Settings::seed(const std::string& key, std::uint64_t fallback) {
  std::uint64_t v = fallback;
  if (const auto* j = find(key)) {
    if (j->is_number_unsigned()) {
      v = j->get<std::uint64_t>();
    } else {
      const std::string s = as_string(*j);
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ConfigError("--" + key + ": expected a non-negative integer, got '" + s + "'");
      }
    }
  }
  resolved_[key] = v;
  return v;
}

std::string Settings::text(const std::string& key, const std::string& fallback) {
  std::string v = fallback;
  if (const auto* j = find(key)) v = as_string(*j);
  resolved_[key] = v;
  return v;
}

bool Settings::flag(const std::string& key, bool fallback) {
  bool v = fallback;
  if (const auto* j = find(key)) {
    if (j->is_boolean()) {
      v = j->get<bool>();
    } else {
      const std::string s = as_string(*j);
      if (s == "true" || s == "1") {
        v = true;
      } else if (s == "false" || s == "0") {
        v = false;
      } else {
        throw ConfigError("--" + key + ": expected true or false");
      }
    }
  }
  resolved_[key] = v;
  return v;
}

std::pair<double, double> Settings::range(const std::string& key, std::pair<double, double> fallback) {
  std::pair<double, double> v = fallback;
  if (const auto* j = find(key)) {
    if (j->is_array() && j->size() == 2) {
      v = {(*j)[0].get<double>(), (*j)[1].get<double>()};
    } else {
      const std::string s = as_string(*j);
      const auto comma = s.find(',');
      if (comma == std::string::npos) throw ConfigError("--" + key + ": expected lo,hi");
      v = {parse_number(std::string_view(s).substr(0, comma), key),
           parse_number(std::string_view(s).substr(comma + 1), key)};
    }
  }
  if (!(v.first <= v.second)) throw ConfigError("--" + key + ": lo must not exceed hi");
  resolved_[key] = {v.first, v.second};
  return v;
}

std::pair<std::int64_t, std::int64_t> Settings::grid(const std::string& key,
                                                     std::pair<std::int64_t, std::int64_t> fallback) {
  std::pair<std::int64_t, std::int64_t> v = fallback;
  if (const auto* j = find(key)) {
    const std::string s = as_string(*j);
    const auto x = s.find_first_of("xX");
    if (x == std::string::npos) throw ConfigError("--" + key + ": expected NxM");
    v = {parse_integer(std::string_view(s).substr(0, x), key), parse_integer(std::string_view(s).substr(x + 1), key)};
  }
  if (v.first < 2 || v.second < 2) throw ConfigError("--" + key + ": both grid sizes must be >= 2");
  resolved_[key] = std::to_string(v.first) + "x" + std::to_string(v.second);
  return v;
}

std::vector<double> Settings::list(const std::string& key, const std::vector<double>& fallback) {
  std::vector<double> v = fallback;
  if (const auto* j = find(key)) {
    v.clear();
    if (j->is_array()) {
      for (const auto& e : *j) v.push_back(e.is_number() ? e.get<double>() : parse_number(as_string(e), key));
    } else if (j->is_number()) {
      v.push_back(j->get<double>());
    } else {
      const std::string s = as_string(*j);
      std::size_t start = 0;
      while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto end = comma == std::string::npos ? s.size() : comma;
        v.push_back(parse_number(std::string_view(s).substr(start, end - start), key));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
    }
  }
  if (v.empty()) throw ConfigError("--" + key + ": list is empty");
  resolved_[key] = v;
  return v;
}

}  // namespace sgdlab::cli
