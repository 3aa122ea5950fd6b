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

// Flux-line predistortion: fit the measured step response with exponentials,
// invert each with a first-order IIR filter obtained by the bilinear
// transform, then mop up the remaining fast ripple with regularised FIR
// inverses. All filters are causal with zero initial conditions.

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace fluxcqed {

struct Waveform {
  double ts = 1e-9;              // sample period, s
  std::vector<double> samples;   // mA for currents, V for drive

  void validate() const;
  std::size_t size() const { return samples.size(); }
  double time(std::size_t i) const { return static_cast<double>(i) * ts; }
};

struct StepResponse {
  Waveform waveform;
  /// First sample at or after the step edge. Samples before it are baseline.
  std::size_t onset = 0;

  void validate() const;
};

/// Half-open range of absolute sample indices.
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end > begin ? end - begin : 0; }
};

struct ExponentialFit {
  double amplitude = 0.0;   // A
  double exp_amp = 0.0;     // B, referred to the onset (t = 0)
  double tau = 0.0;         // s
  double residual_rms = 0.0;
  /// False when B is indistinguishable from zero, so tau carries no information.
  bool tau_constrained = true;
};

/// Least-squares fit of A + B exp(-t/tau) over `window`, t measured from the
/// onset. Requires at least 8 samples at or after the onset.
ExponentialFit fit_exponential(const StepResponse& resp, IndexRange window);

struct IIRFilter {
  double a1 = 0.0;
  double b0 = 1.0;
  double b1 = 0.0;
  // Fit the coefficients were derived from.
  double fit_amplitude = 1.0;
  double fit_exp_amp = 0.0;
  double fit_tau = 0.0;
  double ts = 0.0;
};

/// Bilinear-transform discretisation of (1 + s tau) / (A + s tau (A + B)).
/// Throws kInstability when |a1| >= 1.
IIRFilter iir_from_fit(double amplitude, double exp_amp, double tau, double ts);

struct FIRFilter {
  std::vector<double> taps;
  double alpha_reg = 0.0;
  /// Sample period the taps were trained at; 0 accepts any waveform.
  double ts = 0.0;
};

using Filter = std::variant<IIRFilter, FIRFilter>;

struct FilterChain {
  double ts = 1e-9;
  std::vector<Filter> stages;  // applied in order

  std::size_t iir_count() const;
  std::size_t fir_count() const;
};

/// y[n] = b0 x[n] + b1 x[n-1] + a1 y[n-1].
Waveform apply_iir(const IIRFilter& f, const Waveform& w);
/// y[n] = sum_i taps[i] x[n-i], output truncated to the input length.
Waveform apply_fir(const FIRFilter& f, const Waveform& w);
Waveform apply_filter(const Filter& f, const Waveform& w);

/// Minimises ||h * x - delta||^2 + alpha ||h||^2 ||D x||^2 over n_taps
/// coefficients, where the delta sits at index 0 of the full convolution and
/// D takes first differences with taps past the end treated as zero.
FIRFilter fir_inverse(const std::vector<double>& h, double alpha_reg, std::size_t n_taps,
                      double ts = 0.0);

/// The objective fir_inverse minimises, evaluated for arbitrary taps.
double fir_objective(const std::vector<double>& h, const std::vector<double>& taps,
                     double alpha_reg);

/// h[n] = (s[n] - s[n-1]) / ts with s[-1] = 0 (the record starts at rest).
std::vector<double> impulse_from_step(const StepResponse& resp);

struct FirStageSpec {
  double alpha_reg = 1e-3;
  std::size_t n_taps = 64;
};

struct TrainingOptions {
  /// Exponential windows never start earlier than this many samples after
  /// the onset, keeping the rising edge out of the IIR fits.
  std::size_t min_window_offset = 16;
  /// Ladder growth factor for candidate window starts.
  double window_growth = 1.5;
  /// A window is accepted when its largest misfit is below
  /// max(5 * noise floor, rel_floor * |final value|) and the stage flattens
  /// the response; failing that, the flattening window with the smallest
  /// RMS deviation is used, and a stage that cannot flatten anything is an
  /// identity.
  double rel_floor = 2e-5;
  /// Fits whose time constant is shorter than (window offset) / this are
  /// skipped: extrapolating them back to the onset amplifies errors by e^this.
  double max_extrapolation = 7.0;
  /// FIR kernel length = fir_kernel_factor * n_taps samples after the onset.
  std::size_t fir_kernel_factor = 4;
  /// Flatness metric window (after settle samples).
  std::size_t settle_samples = 16;
  std::size_t flat_window = 1500;
};

struct StageReport {
  std::string kind;          // "iir" or "fir"
  std::size_t window_start;  // IIR only
  ExponentialFit fit;        // IIR only
  double max_deviation;      // max |r - r_final| over the flatness window
  double rms_deviation;
};

struct TrainedChain {
  FilterChain chain;
  std::vector<StageReport> stages;
  StepResponse corrected;  // step response after the whole chain
};

/// Iterative training: fit the dominant exponential of the current
/// response, build its IIR inverse, apply it numerically, repeat n_iir times;
/// then derive the residual impulse response and train the FIR stages in
/// order. Errors carry the failing stage index.
TrainedChain train_chain(const StepResponse& resp, std::size_t n_iir,
                         const std::vector<FirStageSpec>& fir_specs,
                         const TrainingOptions& options = {});

Waveform predistort_waveform(const Waveform& target, const FilterChain& chain);

/// Synthetic flux line: step response
///   S(t) = dc_gain + sum_i A_i e^{-t/tau_i}
///          + sum_j R_j e^{-t/tau_j} cos(2 pi f_j t + phi_j),   t >= 0.
struct LineModel {
  struct Exponential {
    double amplitude;
    double tau;
  };
  struct Ringing {
    double amplitude;
    double tau;
    double freq_hz;
    double phase;
  };
  double dc_gain = 1.0;
  std::vector<Exponential> exponentials;
  std::vector<Ringing> ringing;

  void validate() const;
  double step_value(double t) const;
  /// Discrete impulse response h[n] = S(n ts) - S((n-1) ts).
  std::vector<double> impulse(double ts, std::size_t n) const;
};

/// Exact discrete convolution of the input with the line's impulse response.
Waveform simulate_line(const LineModel& model, const Waveform& input);

/// Unit step sampled at ts with `onset` leading zeros.
Waveform unit_step(double ts, std::size_t n, std::size_t onset);

/// The three-exponential plus ringing stand-in used by the acceptance tests
/// and the CLI demo.
LineModel reference_line_model();

/// Step-response figures of merit.
/// Deviations are relative to `level`, the ideal step height.
struct StepMetrics {
  double final_value;
  double max_deviation;  // max |y / level - 1| over the flatness window
  double rise_10_90;     // seconds
};
StepMetrics step_metrics(const Waveform& response, std::size_t onset,
                         std::size_t settle_samples, std::size_t window,
                         double level = 1.0);

// Text formats.
void write_waveform_csv(const Waveform& w, const std::filesystem::path& path);
Waveform read_waveform_csv(const std::filesystem::path& path);
std::string serialize_chain(const FilterChain& chain);
FilterChain parse_chain(const std::string& text);
void write_chain(const FilterChain& chain, const std::filesystem::path& path);
FilterChain read_chain(const std::filesystem::path& path);

}  // namespace fluxcqed
