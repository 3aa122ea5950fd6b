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

// Time evolution under piecewise-constant schedules (fixed-step RK4, H frozen
// over each sample; density matrices use the integrating-factor form with
// the exact no-jump propagator), ideal instantaneous transmon gates and
// projective transmon readout with a confusion matrix.

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "fluxcqed/hilbert.hpp"
#include "fluxcqed/system.hpp"

namespace fluxcqed {

/// Sampled control channels. Every channel has one entry per sample; sample
/// k covers [k dt, (k+1) dt).
struct PulseSchedule {
  double dt_s = 1e-10;
  std::vector<double> detuning_hz;     // omega_c - omega_t
  std::vector<cplx> transmon_drive_hz;  // Rabi-rate envelope Omega(t)
  std::vector<cplx> cavity_drive_hz;    // displacement-rate envelope

  /// Constant detuning, no drives, round(duration / dt) samples.
  static PulseSchedule constant(double detuning_hz, double duration_s, double dt_s);

  std::size_t size() const { return detuning_hz.size(); }
  double duration() const { return static_cast<double>(size()) * dt_s; }
  /// Concatenates; throws kTimestepMismatch on differing dt.
  PulseSchedule& append(const PulseSchedule& other);

  /// Channel lengths and dt > 0. The accuracy guard additionally requires
  /// dt <= 1 / (50 max(|Delta|, g, alpha)); alpha only counts when the
  /// transmon keeps a third level, since the quartic term vanishes otherwise.
  void validate() const;
  void check_guard(const SystemParams& params, const SpaceConfig& cfg) const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<QuantumState> states;

  const QuantumState& final_state() const { return states.back(); }
};

/// Called with (time, state) at every recorded step.
using Observer = std::function<void(double, const QuantumState&)>;

/// Lindblad evolution. `stride` = 0 records only the final state; otherwise
/// the initial state, every stride-th step and the final state. A pure rho0
/// is promoted to a density matrix.
Trajectory evolve_master(const QuantumState& rho0, const PulseSchedule& sched,
                         const LindbladModel& model, const SystemParams& params,
                         const SpaceConfig& cfg, std::size_t stride = 0);

/// Schrodinger evolution of a ket under the same Hamiltonian.
Trajectory evolve_unitary(const QuantumState& psi0, const PulseSchedule& sched,
                          const SystemParams& params, const SpaceConfig& cfg,
                          std::size_t stride = 0);

/// Streaming variants: the observer sees every stride-th step (and the
/// first and last) without the trajectory being stored. Returns the final
/// state. An empty model with a pure state integrates the ket.
QuantumState evolve_observed(const QuantumState& state, const PulseSchedule& sched,
                             const LindbladModel& model, const SystemParams& params,
                             const SpaceConfig& cfg, std::size_t stride,
                             const Observer& observer);

/// Time-independent evolution for `duration` under `h` (rad/s). Without
/// collapse terms the exact propagator is used; otherwise an integrating-
/// factor RK4 (exact no-jump propagator, RK4 on the jump terms) with a step
/// no larger than max_dt and at least 10 steps per period of the spectral
/// spread plus total rate.
QuantumState evolve_static(const QuantumState& state, const Operator& h,
                           const LindbladModel& model, double duration_s,
                           double max_dt_s = 1e-9);

/// Instantaneous gates. Transmon rotations act on the g-e subspace only.
struct RotationY { double theta; };
struct RotationX { double theta; };
/// exp(-i theta/2 (cos(phi) X + sin(phi) Y)).
struct RotationXY { double theta; double phi; };
/// diag(e^{-i phi/2}, e^{i phi/2}) on g, e.
struct PhaseRotation { double phi; };
struct Displacement { cplx beta; };
using Gate = std::variant<RotationY, RotationX, RotationXY, PhaseRotation, Displacement>;

Operator gate_operator(const Gate& gate, const SpaceConfig& cfg);
QuantumState apply_gate(const QuantumState& state, const Gate& gate, const SpaceConfig& cfg);
/// U rho U^dag (or U psi) for any composite unitary.
QuantumState apply_unitary(const QuantumState& state, const Operator& u);

struct ReadoutModel {
  double p_e_given_g = 0.0;
  double p_g_given_e = 0.0;

  /// Equal error rates with fidelity 1 - (p_e|g + p_g|e) / 2.
  static ReadoutModel symmetric(double fidelity);
  static ReadoutModel ideal() { return {}; }
  double fidelity() const { return 1.0 - 0.5 * (p_e_given_g + p_g_given_e); }
  void validate() const;
};

struct Measurement {
  double p_g_ideal = 0.0;  // projection onto transmon level 0
  double p_e_ideal = 0.0;  // projection onto levels >= 1
  double p_g = 0.0;        // after the confusion matrix
  double p_e = 0.0;
  /// Normalised conditional states; empty when the branch has zero weight.
  std::optional<QuantumState> post_g;
  std::optional<QuantumState> post_e;
};

Measurement measure_transmon(const QuantumState& state, const ReadoutModel& readout,
                             const SpaceConfig& cfg);

/// Projector onto transmon level 0 (g) on the composite space.
Operator ground_projector(const SpaceConfig& cfg);

}  // namespace fluxcqed
