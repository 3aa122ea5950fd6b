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

// Device model: flux-to-frequency map, coupled and dispersive Hamiltonians,
// dressed-state chi/Kerr extraction and the Lindblad channels.
//
// Conventions. Parameters are ordinary frequencies in Hz and times in
// seconds. Hamiltonians are returned in angular units (rad/s, i.e. H / hbar)
// in a frame rotating at the cavity frequency for both modes, so the only
// frequency that appears is the detuning Delta = omega_c - omega_t.

#pragma once

#include <array>
#include <vector>

#include "fluxcqed/hilbert.hpp"
#include "fluxcqed/kvfile.hpp"

namespace fluxcqed {

struct SystemParams {
  double omega_c_hz = 5.740e9;
  double omega_t_max_hz = 6.409e9;
  /// Positive; enters the Hamiltonian as -(alpha/2) b^dag b^dag b b.
  double alpha_hz = 200e6;
  double g_hz = 6.65e6;
  double t1_transmon_s = 15e-6;
  double t2_transmon_s = 2e-6;
  double t1_cavity_s = 200e-6;
  /// Stands in for infinite coherence times: no collapse operators.
  bool noiseless = false;

  void validate() const;
  SystemParams without_noise() const {
    SystemParams p = *this;
    p.noiseless = true;
    return p;
  }
};

struct FluxRelation {
  /// Flux per coil current, in flux quanta per mA.
  double k_phi0_per_ma = 0.039;
  SystemParams params;

  void validate() const;
  /// Current period of the flux curve, mA.
  double period_ma() const { return 1.0 / k_phi0_per_ma; }
};

struct DispersiveParams {
  double chi_hz = 0.0;
  double kerr_hz = 0.0;
  double detuning_hz = 0.0;
};

struct CollapseTerm {
  Operator op;
  double rate = 0.0;  // 1/s; the dissipator is D[sqrt(rate) * op]
  const char* label = "";
};

struct LindbladModel {
  std::vector<CollapseTerm> terms;
  bool empty() const { return terms.empty(); }
};

/// omega_t = (omega_max + alpha) sqrt|cos(pi k I)| - alpha, all in Hz.
double freq_from_current(double current_ma, const FluxRelation& rel);

/// Principal-branch inverse of freq_from_current: the smallest non-negative
/// current in [0, period/2]. Throws kOutOfRange outside [-alpha, omega_max].
double current_from_freq(double freq_hz, const FluxRelation& rel);

/// H/hbar = -Delta b^dag b + g (a^dag b + a b^dag) - (alpha/2) b^dag b^dag b b.
Operator jc_hamiltonian(const SystemParams& params, double detuning_hz,
                        const SpaceConfig& cfg);

/// H/hbar = -chi a^dag a b^dag b - (K/2) a^dag a^dag a a.
Operator dispersive_hamiltonian(const DispersiveParams& dp, const SpaceConfig& cfg);

/// Dressed-state chi and Kerr from exact diagonalisation of jc_hamiltonian.
/// chi = (E_{1g} - E_{0g}) - (E_{1e} - E_{0e}), positive for a transmon below
/// the cavity; K = -(E_{2g} - 2 E_{1g} + E_{0g}).
DispersiveParams extract_chi_kerr(const SystemParams& params, double detuning_hz,
                                  const SpaceConfig& cfg,
                                  Warnings* warnings = nullptr);

/// Dressed eigenenergies (Hz, rotating frame) labelled by maximum overlap with
/// bare |n, q>; entry [n][q] for n <= max_photon, q <= max_level.
struct DressedLevels {
  std::vector<std::vector<double>> energy_hz;
  std::vector<std::vector<double>> overlap;
  double energy(int photon, int level) const { return energy_hz.at(photon).at(level); }
};

DressedLevels dressed_levels(const SystemParams& params, double detuning_hz,
                             const SpaceConfig& cfg, int max_photon, int max_level);

/// Leading-order dispersive shift 2 g^2 alpha / (Delta (Delta + alpha)).
double perturbative_chi(const SystemParams& params, double detuning_hz);

/// Cavity decay, transmon decay and transmon pure dephasing with
/// 1/T_phi = 1/T2 - 1/(2 T1). Empty when params.noiseless.
LindbladModel collapse_operators(const SystemParams& params, const SpaceConfig& cfg);

/// Pure-dephasing time in seconds (infinity when T2 = 2 T1).
double pure_dephasing_time(const SystemParams& params);

/// Reference flux points of the device (labels A-F).
struct FluxPoint {
  char label;
  double detuning_hz;
  double chi_exp_hz;
  double omega_t_exp_hz;
  double omega_t_sim_hz;
  double kerr_sim_hz;
};

const std::array<FluxPoint, 6>& reference_flux_points();
/// Throws kConfig for labels outside A-F.
const FluxPoint& flux_point(char label);

/// Parameter-file I/O. Recognised keys: omega_c_hz, omega_t_max_hz, alpha_hz,
/// g_hz, t1_transmon_s, t2_transmon_s, t1_cavity_s, k_phi0_per_ma, noiseless.
/// Missing keys keep the defaults above.
SystemParams params_from_keys(const KeyValues& kv);
FluxRelation flux_relation_from_keys(const KeyValues& kv);
KeyValues params_to_keys(const SystemParams& params);

}  // namespace fluxcqed
