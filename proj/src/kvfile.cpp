// Copyright 2026 The fluxcqed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fluxcqed/kvfile.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fluxcqed/error.hpp"

namespace fluxcqed {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return std::to_string(v);
  return std::string(buf, ptr);
}

double parse_double(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  double v = 0.0;
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  if (!t.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (t.empty() || ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::kConfig, what + ": cannot parse '" + text + "' as a number");
  }
  return v;
}

KeyValues KeyValues::parse(const std::string& text, const std::string& origin) {
  KeyValues kv;
  kv.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kConfig, origin + ":" + std::to_string(lineno) +
                                          ": expected 'name = value'");
    }
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) {
      throw Error(ErrorCode::kConfig,
                  origin + ":" + std::to_string(lineno) + ": empty key");
    }
    kv.values_[key] = trim(t.substr(eq + 1));
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kConfig, "cannot open file: " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void KeyValues::set(const std::string& key, const std::string& value) {
  values_[key] = value;
}

void KeyValues::set(const std::string& key, double value) {
  values_[key] = format_double(value);
}

std::optional<std::string> KeyValues::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValues::get_string(const std::string& key,
                                  const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double KeyValues::get_double(const std::string& key, double fallback) const {
  auto v = get(key);
  return v ? parse_double(*v, origin_ + ": key '" + key + "'") : fallback;
}

long KeyValues::get_int(const std::string& key, long fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  const double d = parse_double(*v, origin_ + ": key '" + key + "'");
  if (std::floor(d) != d) {
    throw Error(ErrorCode::kConfig, origin_ + ": key '" + key + "' must be an integer");
  }
  return static_cast<long>(d);
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  std::string s = *v;
  std::transform(s.begin(), s.end(), s.begin(), ::tolower);
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw Error(ErrorCode::kConfig, origin_ + ": key '" + key + "' is not a boolean");
}

std::string KeyValues::require_string(const std::string& key) const {
  auto v = get(key);
  if (!v) throw Error(ErrorCode::kConfig, origin_ + ": missing key '" + key + "'");
  return *v;
}

double KeyValues::require_double(const std::string& key) const {
  return parse_double(require_string(key), origin_ + ": key '" + key + "'");
}

std::vector<double> KeyValues::get_list(const std::string& key,
                                        const std::vector<double>& fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  std::vector<double> out;
  std::stringstream ss(*v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(parse_double(item, origin_ + ": key '" + key + "'"));
  }
  return out;
}

std::string KeyValues::serialize() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

void KeyValues::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write file: " + path.string());
  out << serialize();
}

void KeyValues::merge(const KeyValues& other) {
  for (const auto& [k, v] : other.values_) values_[k] = v;
}

}  // namespace fluxcqed
