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

// Command-line front end. Every subcommand is a thin adapter that turns its
// flags into a flat key-value run configuration; `run <file>` reads the same
// configuration from disk. Keys that name system parameters (g_hz,
// t2_transmon_s, ...) override the parameter file.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "fluxcqed/kvfile.hpp"

namespace fluxcqed {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,      // bad flags, unknown experiment
  kExitConfig = 2,     // invalid configuration, missing files, bad inputs
  kExitNumerical = 3,  // fit failure, instability, integration failure
};

/// Registered experiment names.
const std::vector<std::string>& experiment_names();

/// Output directory: `out_dir` key, else $FLUXCQED_OUT_DIR, else ".".
std::filesystem::path output_dir(const KeyValues& config);

/// Runs one experiment described by `config` (which must carry
/// `experiment`). Writes outputs and one summary line to `out`. Throws
/// fluxcqed::Error; unknown experiments throw UsageError.
void run_experiment(const KeyValues& config, std::ostream& out);

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Full CLI: parses argv, runs, maps failures onto ExitCode.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fluxcqed
