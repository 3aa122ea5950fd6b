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

// Protocols: flux-trajectory spectroscopy, vacuum Rabi, Fock preparation,
// Wigner and characteristic-function tomography (direct and simulated
// protocol), self-Kerr and dephasing experiments, plus the fits and figures
// of merit used to analyse them.
//
// Transmon outcomes: "g" is level 0, "e" is every level above it.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fluxcqed/dynamics.hpp"
#include "fluxcqed/predistort.hpp"
#include "fluxcqed/results.hpp"
#include "fluxcqed/system.hpp"

namespace fluxcqed {

// ---------------------------------------------------------------- fits

struct LorentzianFit {
  double center = 0.0;
  double half_width = 0.0;
  double amplitude = 0.0;
  double offset = 0.0;
  double residual_rms = 0.0;
};
/// y = offset + amplitude / (1 + ((x - center) / half_width)^2).
LorentzianFit fit_lorentzian(const std::vector<double>& x, const std::vector<double>& y);

struct GaussianFit {
  double amplitude = 1.0;
  double offset = 0.0;
  double sigma = 1.0;
  double residual_rms = 0.0;
};
/// y = offset + amplitude exp(-x^2 / (2 sigma^2)), centred at zero.
GaussianFit fit_gaussian(const std::vector<double>& x, const std::vector<double>& y);

struct OscillationFit {
  double freq_hz = 0.0;
  double decay_time_s = 0.0;  // infinity when no decay is resolved
  double amplitude = 0.0;
  double baseline = 0.0;
  double residual_rms = 0.0;
};
/// y = c0 + c1 t + exp(-t / tau) (A cos 2 pi f t + B sin 2 pi f t).
OscillationFit fit_damped_oscillation(const std::vector<double>& t, const std::vector<double>& y);

// ------------------------------------------------------------ pi-scope

struct PiScopeSpec {
  Waveform flux_ma;                  // coil current trajectory
  std::vector<double> delays_s;      // probe start times
  std::vector<double> probe_freqs_hz;
  double probe_len_s = 16e-9;
  /// Probe Rabi rate; power broadening stays below this.
  double probe_rabi_hz = 1e6;
};

/// P_e(delay, probe frequency) of a ground-state transmon riding the flux
/// waveform and driven by a constant probe during [delay, delay+probe_len).
/// The transmon is treated as a two-level system; the cavity is empty and
/// plays no role.
ExperimentResult pi_scope(const PiScopeSpec& spec, const FluxRelation& rel);

struct FrequencyTrack {
  std::vector<double> times_s;
  std::vector<double> freq_hz;     // NaN in gaps
  std::vector<double> current_ma;  // NaN in gaps
  std::vector<bool> valid;
};

/// Lorentzian centre per delay; delays whose peak stays below
/// `threshold` * (largest peak in the scan) become gaps.
FrequencyTrack extract_trajectory(const ExperimentResult& scan, const FluxRelation& rel,
                                  double threshold = 0.2);

// ------------------------------------------------------ vacuum Rabi

/// P_e(detuning, time) starting from |e, 0>. `noise` selects the
/// Lindblad model of `params`.
ExperimentResult vacuum_rabi_chevron(const std::vector<double>& detunings_hz,
                                     const std::vector<double>& times_s,
                                     const SystemParams& params, const SpaceConfig& cfg,
                                     bool noise, double dt_s = 1e-10);

// ---------------------------------------------------- Fock states

enum class PulseMode { kInstant, kFinite };

struct FockOptions {
  int photons = 1;  // 1 or 2
  PulseMode mode = PulseMode::kInstant;
  bool noise = false;
  double park_detuning_hz = 35e6;
  double pi_pulse_s = 80e-9;
  double dt_s = 1e-10;
};

struct FockResult {
  QuantumState state;  // composite state at the end of the last swap
  /// <n, g| rho |n, g>: photon number n with the transmon back in g.
  double fidelity = 0.0;
  double p_ground = 0.0;
};

/// pi pulse, resonant swap for pi/(2g); for two photons the transmon is
/// re-excited and swapped again for pi/(2 g sqrt 2). Finite pulses are
/// Hann-shaped at the dressed transition frequency of the park point.
FockResult prepare_fock(const FockOptions& options, const SystemParams& params,
                        const SpaceConfig& cfg);

/// pi / (2 g sqrt(n)) in seconds: swap time of |e, n-1> -> |g, n>.
double swap_time(const SystemParams& params, int photons = 1);

// ------------------------------------------------------ tomography

/// Affine readout correction: corrected = (raw - offset) / scale. sigma is
/// the width the vacuum calibration found.
struct Calibration {
  double scale = 1.0;
  double offset = 0.0;
  double sigma = 1.0;

  double apply(double raw) const { return (raw - offset) / scale; }
};

struct ProtocolOptions {
  ReadoutModel readout;
  Calibration calibration;
  /// Lindblad channels active during the parity wait / ECD waits; empty =
  /// noiseless.
  LindbladModel model;
  /// Cavity truncation used for the displacements; 0 picks one large
  /// enough for the grid.
  int cavity_dim = 0;
  /// Finite shot count per point (0 = exact probabilities).
  std::size_t shots = 0;
  std::uint64_t seed = 1;
};

/// W(beta) = (2/pi) Tr(D(-beta) rho D(-beta)^dag P) on a zero-padded cavity.
TomographyGrid wigner_direct(const Operator& rho_cavity, const GridSpec& grid,
                             int cavity_dim = 0);

/// Displacement, Ry(pi/2), dispersive wait pi/chi, Ry(+-pi/2), readout;
/// W = (2/pi) (P_e(+) - P_e(-)), then the calibration. Throws kInvalidArgument
/// when chi = 0.
TomographyGrid wigner_protocol(const QuantumState& composite, const SpaceConfig& cfg,
                               const GridSpec& grid, const DispersiveParams& dp,
                               const ProtocolOptions& options = {});

enum class CharPart { kRe, kIm };
enum class EcdMode { kIdeal, kDecomposed };

/// C(nu) = Tr(D(nu) rho).
TomographyGrid charfunc_direct(const Operator& rho_cavity, const GridSpec& grid, CharPart part,
                               int cavity_dim = 0, Warnings* warnings = nullptr);

struct EcdOptions {
  EcdMode mode = EcdMode::kIdeal;
  /// Decomposed gate: first displacement and the dispersive wait between
  /// displacement pairs. wait_s = 0 picks 1/(2 chi), a conditional phase of pi.
  cplx first_displacement{2.0, 0.0};
  double wait_s = 0.0;
};

/// Ry(pi/2), ECD(nu), final pi/2 pulse with phase 0 (Re) or 90 deg (Im);
/// C = 2 P_e - 1, then the calibration.
TomographyGrid charfunc_protocol(const QuantumState& composite, const SpaceConfig& cfg,
                                 const GridSpec& grid, CharPart part,
                                 const DispersiveParams& dp, const ProtocolOptions& options = {},
                                 const EcdOptions& ecd = {}, Warnings* warnings = nullptr);

/// D(nu/2) (x) |e><g| + D(-nu/2) (x) |g><e| on the composite space.
Operator ecd_operator(cplx nu, const SpaceConfig& cfg);

/// Gaussian fit of a vacuum sweep along Im(nu) = 0.
Calibration calibrate_vacuum(const std::vector<double>& nu, const std::vector<double>& measured);

/// F = pi sum W_meas W_ideal dA (Wigner) or (1/pi) sum C_meas C_ideal dA
/// (one characteristic part; exact for states with real C). Throws
/// kInsufficientCoverage when the ideal state's norm captured by the grid
/// falls below 0.99.
double estimate_fidelity(const TomographyGrid& measured, const Operator& ideal_cavity);

// ---------------------------------------------- Kerr and dephasing

/// Fringe contrast: amplitude of the cos(2 phi) component of Re C(r e^{i phi}),
/// maximised over rings r <= max_radius. Re C is even in nu, so this is its
/// lowest angular harmonic; it vanishes for phase-randomised states.
double fringe_contrast(const Operator& rho_cavity, double max_radius = 2.0,
                       int cavity_dim = 0);

/// max_phi <alpha e^{i phi}| rho |alpha e^{i phi}>, alpha = |reference|.
struct AlignedFidelity {
  double fidelity = 0.0;
  double phase = 0.0;
};
AlignedFidelity phase_aligned_fidelity(const Operator& rho_cavity, cplx reference);

struct KerrOptions {
  cplx alpha0{2.5, 0.0};
  double duration_s = 10e-6;
  GridSpec grid = GridSpec::square(2.0, 41);
  bool noise = true;
};

struct KerrResult {
  TomographyGrid im_grid;    // Im C of the evolved cavity
  TomographyGrid reference;  // Im C of the phase-aligned decayed coherent state
  double distortion = 0.0;   // max |im_grid - reference|
  AlignedFidelity aligned;
  Operator cavity;
};

/// |alpha0, g> evolved under the dispersive Hamiltonian of `dp_evolve` (and
/// the cavity/transmon channels when noise is on), then read out with the
/// Im part of the characteristic function.
KerrResult kerr_evolution(const KerrOptions& options, const DispersiveParams& dp_evolve,
                          const SystemParams& params, const SpaceConfig& cfg);

enum class WalkVariant { kDecohere, kProject };

struct WalkOptions {
  cplx alpha0{2.5, 0.0};
  int cycles = 10;
  double tau_s = 400e-9;
  double chi_hz = 0.94e6;
  WalkVariant variant = WalkVariant::kDecohere;
  GridSpec grid = GridSpec::square(2.0, 41);
  bool noise = true;
};

struct WalkResult {
  TomographyGrid re_grid;
  Operator cavity;  // cavity marginal; the transmon is reset to g
  double p_ground = 0.0;
  double contrast = 0.0;
  double step_phase = 0.0;  // 2 pi chi tau
};

/// Cycles of [Ry(pi/2); tau under -chi n q with transmon decoherence]; the
/// project variant adds a non-selective transmon measurement after each
/// cycle. The transmon is then reset to g, leaving the cavity marginal.
WalkResult dephasing_random_walk(const WalkOptions& options, const SystemParams& params,
                                 const SpaceConfig& cfg);

// -------------------------------------------------------- helpers

/// |psi_cavity> (x) |g>.
QuantumState with_ground_transmon(const QuantumState& cavity, const SpaceConfig& cfg);

/// Copies a composite state into a larger cavity truncation.
QuantumState pad_cavity(const QuantumState& state, const SpaceConfig& cfg, int cavity_dim);

/// Cavity truncation that keeps displacements up to `radius` accurate on a
/// state supported below `support` photons.
int tomography_dim(int support, double radius);

/// Per-point deterministic seed.
std::uint64_t point_seed(std::uint64_t root, std::uint64_t index);

/// Fraction of successes in `shots` Bernoulli(p) draws.
double sample_fraction(double p, std::size_t shots, std::uint64_t seed);

}  // namespace fluxcqed
