#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "imbf/error.hpp"

namespace imbf {

// Flat `key = value` config. Keys are dotted (`plan.strategy`), `#` starts a
// comment, later assignments win (CLI flags are applied as late assignments).
// Every key must be consumed by the command that runs; leftovers are
// reported as config errors so typos never pass silently.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig from_string(const std::string& text, const std::string& origin = "<string>") {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const size_t eq = trimmed.find('=');
      if (eq == std::string::npos) {
        throw config_error(ErrorCode::BadConfig,
                           origin + ": line " + std::to_string(line_no) + ": expected key = value");
      }
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty()) {
        throw config_error(ErrorCode::BadConfig,
                           origin + ": line " + std::to_string(line_no) + ": empty key");
      }
      cfg.values_[key] = value;
    }
    return cfg;
  }

  static KeyValueConfig from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error(ErrorCode::MissingFile, "cannot open config: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_string(text, path.string());
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
      throw config_error(ErrorCode::BadConfig, "missing config key: " + key);
    }
    return it->second;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
  }

  uint64_t get_u64(const std::string& key) const { return parse_u64(key, get_string(key)); }
  uint64_t get_u64(const std::string& key, uint64_t fallback) const {
    return has(key) ? get_u64(key) : fallback;
  }

  double get_double(const std::string& key) const { return parse_double(key, get_string(key)); }
  double get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  bool get_bool(const std::string& key) const {
    const std::string v = get_string(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw config_error(ErrorCode::BadConfig, "config key " + key + ": expected boolean, got " + v);
  }
  bool get_bool(const std::string& key, bool fallback) const {
    return has(key) ? get_bool(key) : fallback;
  }

  std::vector<uint64_t> get_u64_list(const std::string& key) const {
    std::vector<uint64_t> out;
    for (const auto& item : split_list(get_string(key))) out.push_back(parse_u64(key, item));
    return out;
  }

  std::vector<double> get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split_list(get_string(key))) out.push_back(parse_double(key, item));
    return out;
  }

  std::vector<std::string> keys() const {
    std::vector<std::string> out;
    for (const auto& [key, value] : values_) out.push_back(key);
    return out;
  }

  // Keys outside the given catalog are almost always typos; fail loudly
  // before any side effects.
  void require_known_keys(const std::set<std::string>& known) const {
    std::vector<std::string> leftover;
    for (const auto& [key, value] : values_) {
      if (!known.count(key)) leftover.push_back(key);
    }
    if (!leftover.empty()) {
      std::string msg = "unknown config key(s):";
      for (const auto& k : leftover) msg += " " + k;
      throw config_error(ErrorCode::BadConfig, msg);
    }
  }

 private:
  static std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

  static std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
      const std::string t = trim(item);
      if (!t.empty()) out.push_back(t);
    }
    return out;
  }

  static uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
      size_t pos = 0;
      const uint64_t out = std::stoull(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw config_error(ErrorCode::BadConfig, "config key " + key + ": expected integer, got " + v);
    }
  }

  static double parse_double(const std::string& key, const std::string& v) {
    try {
      size_t pos = 0;
      const double out = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw config_error(ErrorCode::BadConfig, "config key " + key + ": expected number, got " + v);
    }
  }

  std::map<std::string, std::string> values_;
};

}  // namespace imbf
