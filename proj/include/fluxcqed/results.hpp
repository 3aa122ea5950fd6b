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

// Grids and result containers shared by the experiments and the CLI.
//
// CSV layout: `# key = value` metadata lines, then a header row whose first
// cell names both axes ("rows\cols") followed by the column-axis values,
// then one line per row-axis value. Wall-clock timestamps go only into the
// sidecar file so the CSV itself is reproducible byte for byte.

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fluxcqed/kvfile.hpp"
#include "fluxcqed/linalg.hpp"

namespace fluxcqed {

/// Uniform axis with `points` samples from lo to hi inclusive.
struct Axis {
  double lo = -2.5;
  double hi = 2.5;
  std::size_t points = 21;

  void validate() const;
  double at(std::size_t i) const;
  double step() const;
  std::vector<double> values() const;
};

/// Phase-space grid: point (i, j) is re.at(j) + i im.at(i).
struct GridSpec {
  Axis re;
  Axis im;

  static GridSpec square(double half_width, std::size_t points);
  void validate() const;
  cplx point(std::size_t i, std::size_t j) const { return {re.at(j), im.at(i)}; }
  double cell_area() const { return re.step() * im.step(); }
  double max_radius() const;
};

enum class GridKind { kWigner, kCharRe, kCharIm };

const char* to_string(GridKind kind);

struct TomographyGrid {
  GridSpec spec;
  GridKind kind = GridKind::kWigner;
  Eigen::MatrixXd values;  // rows follow im, columns follow re

  /// 2/pi for Wigner grids, 1 for characteristic-function grids.
  double bound() const;
  /// Shape check plus |value| <= bound + slack.
  void validate(double slack = 0.01) const;
};

struct ExperimentResult {
  std::string protocol;
  std::string row_axis = "row";
  std::string col_axis = "col";
  std::string value_name = "value";
  std::vector<double> rows;
  std::vector<double> cols;
  Eigen::MatrixXd values;  // rows.size() x cols.size()
  KeyValues metadata;

  void validate() const;
};

ExperimentResult to_result(const TomographyGrid& grid, const std::string& protocol);

std::string result_to_csv(const ExperimentResult& result);
ExperimentResult result_from_csv(const std::string& text);

/// Writes `path` and the sidecar `path` + ".meta" (metadata plus a UTC
/// timestamp). Returns the sidecar path.
std::filesystem::path write_result(const ExperimentResult& result,
                                   const std::filesystem::path& path);
ExperimentResult read_result(const std::filesystem::path& path);

}  // namespace fluxcqed
