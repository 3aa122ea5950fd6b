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

#include "fluxcqed/results.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include "fluxcqed/error.hpp"

namespace fluxcqed {

void Axis::validate() const {
  if (points == 0 || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw Error(ErrorCode::kInvalidArgument, "Axis: need at least one point and finite bounds");
  }
  if (points > 1 && !(hi > lo)) {
    throw Error(ErrorCode::kInvalidArgument, "Axis: hi must exceed lo");
  }
}

double Axis::at(std::size_t i) const {
  if (points == 1) return lo;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
}

double Axis::step() const {
  return points > 1 ? (hi - lo) / static_cast<double>(points - 1) : 1.0;
}

std::vector<double> Axis::values() const {
  std::vector<double> v(points);
  for (std::size_t i = 0; i < points; ++i) v[i] = at(i);
  return v;
}

GridSpec GridSpec::square(double half_width, std::size_t points) {
  GridSpec g{{-half_width, half_width, points}, {-half_width, half_width, points}};
  g.validate();
  return g;
}

void GridSpec::validate() const {
  re.validate();
  im.validate();
}

double GridSpec::max_radius() const {
  const double x = std::max(std::abs(re.lo), std::abs(re.hi));
  const double y = std::max(std::abs(im.lo), std::abs(im.hi));
  return std::hypot(x, y);
}

const char* to_string(GridKind kind) {
  switch (kind) {
    case GridKind::kWigner:
      return "wigner";
    case GridKind::kCharRe:
      return "charfunc_re";
    case GridKind::kCharIm:
      return "charfunc_im";
  }
  return "unknown";
}

double TomographyGrid::bound() const { return kind == GridKind::kWigner ? 2.0 / kPi : 1.0; }

void TomographyGrid::validate(double slack) const {
  spec.validate();
  if (values.rows() != static_cast<Eigen::Index>(spec.im.points) ||
      values.cols() != static_cast<Eigen::Index>(spec.re.points)) {
    throw Error(ErrorCode::kDimensionMismatch, "TomographyGrid: values do not match the axes");
  }
  if (!values.allFinite()) {
    throw Error(ErrorCode::kIntegrationFailure, "TomographyGrid: non-finite value");
  }
  const double worst = values.cwiseAbs().maxCoeff();
  if (worst > bound() + slack) {
    throw Error(ErrorCode::kOutOfRange, std::string("TomographyGrid: ") + to_string(kind) +
                                            " value " + format_double(worst) +
                                            " exceeds bound " + format_double(bound()));
  }
}

void ExperimentResult::validate() const {
  if (values.rows() != static_cast<Eigen::Index>(rows.size()) ||
      values.cols() != static_cast<Eigen::Index>(cols.size())) {
    throw Error(ErrorCode::kDimensionMismatch,
                "ExperimentResult: grid shape does not match the axes");
  }
}

ExperimentResult to_result(const TomographyGrid& grid, const std::string& protocol) {
  ExperimentResult r;
  r.protocol = protocol;
  r.row_axis = "im";
  r.col_axis = "re";
  r.value_name = to_string(grid.kind);
  r.rows = grid.spec.im.values();
  r.cols = grid.spec.re.values();
  r.values = grid.values;
  return r;
}

std::string result_to_csv(const ExperimentResult& result) {
  result.validate();
  std::ostringstream out;
  out << "# protocol = " << result.protocol << '\n';
  out << "# value = " << result.value_name << '\n';
  for (const auto& [k, v] : result.metadata.entries()) out << "# " << k << " = " << v << '\n';
  out << result.row_axis << '\\' << result.col_axis;
  for (double c : result.cols) out << ',' << format_double(c);
  out << '\n';
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    out << format_double(result.rows[i]);
    for (std::size_t j = 0; j < result.cols.size(); ++j)
      out << ',' << format_double(result.values(i, j));
    out << '\n';
  }
  return out.str();
}

ExperimentResult result_from_csv(const std::string& text) {
  ExperimentResult r;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  std::vector<std::vector<double>> rows;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    return cells;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
      };
      const std::string key = trim(line.substr(1, eq - 1));
      const std::string val = trim(line.substr(eq + 1));
      if (key == "protocol")
        r.protocol = val;
      else if (key == "value")
        r.value_name = val;
      else
        r.metadata.set(key, val);
      continue;
    }
    const auto cells = split(line);
    if (!header) {
      const auto slash = cells[0].find('\\');
      r.row_axis = cells[0].substr(0, slash);
      r.col_axis = slash == std::string::npos ? "" : cells[0].substr(slash + 1);
      for (std::size_t j = 1; j < cells.size(); ++j)
        r.cols.push_back(parse_double(cells[j], "result csv header"));
      header = true;
      continue;
    }
    if (cells.size() != r.cols.size() + 1) {
      throw Error(ErrorCode::kConfig, "result csv: ragged row");
    }
    r.rows.push_back(parse_double(cells[0], "result csv"));
    std::vector<double> v;
    for (std::size_t j = 1; j < cells.size(); ++j) v.push_back(parse_double(cells[j], "result csv"));
    rows.push_back(std::move(v));
  }
  r.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(r.cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < r.cols.size(); ++j) r.values(i, j) = rows[i][j];
  return r;
}

std::filesystem::path write_result(const ExperimentResult& result,
                                   const std::filesystem::path& path) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write file: " + path.string());
    out << result_to_csv(result);
  }
  KeyValues meta = result.metadata;
  meta.set("protocol", result.protocol);
  meta.set("rows", static_cast<double>(result.rows.size()));
  meta.set("cols", static_cast<double>(result.cols.size()));
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  meta.set("written_utc", std::string(stamp));
  std::filesystem::path sidecar = path;
  sidecar += ".meta";
  meta.save(sidecar);
  return sidecar;
}

ExperimentResult read_result(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return result_from_csv(ss.str());
}

}  // namespace fluxcqed
