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

// Flat `name = value` text files used for device parameters, run configs and
// result metadata. Lines starting with '#' are comments. Keys carry their
// units as suffixes (_hz, _s, _ma).

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fluxcqed {

class KeyValues {
 public:
  static KeyValues parse(const std::string& text, const std::string& origin = "<string>");
  static KeyValues load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Like get_* but throws a config error naming the key when it is missing.
  std::string require_string(const std::string& key) const;
  double require_double(const std::string& key) const;

  /// Comma-separated list of reals.
  std::vector<double> get_list(const std::string& key,
                               const std::vector<double>& fallback) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

  /// Sorted `key = value` lines.
  std::string serialize() const;
  void save(const std::filesystem::path& path) const;

  /// Entries of `other` override ours.
  void merge(const KeyValues& other);

 private:
  std::map<std::string, std::string> values_;
  std::string origin_ = "<memory>";
};

/// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

/// Strict parse of a full string as a double; throws a config error otherwise.
double parse_double(const std::string& text, const std::string& what);

}  // namespace fluxcqed
