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

#include "fluxcqed/predistort.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

#include "fluxcqed/error.hpp"
#include "fluxcqed/kvfile.hpp"
#include "fluxcqed/linalg.hpp"

namespace fluxcqed {

namespace {

[[noreturn]] void invalid(const std::string& msg) {
  throw Error(ErrorCode::kInvalidArgument, msg);
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void check_ts(const Filter& f, double ts) {
  const double fts = std::visit([](const auto& s) { return s.ts; }, f);
  if (fts > 0.0 && std::abs(fts - ts) > 1e-9 * fts) {
    throw Error(ErrorCode::kTimestepMismatch,
                "filter trained at ts=" + format_double(fts) +
                    " applied to waveform with ts=" + format_double(ts));
  }
}

struct LinearFit {
  double rss;
  double offset;
  double amp_at_start;  // exponential amplitude at the first window sample
};

// Closed-form 2x2 least squares for y ~ c0 + c1 exp(-(t - t0) / tau).
LinearFit project(const std::vector<double>& t, const std::vector<double>& y, double tau) {
  const std::size_t n = y.size();
  const double t0 = t.front();
  double s1 = 0, se = 0, see = 0, sy = 0, sey = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::exp(-(t[i] - t0) / tau);
    s1 += 1.0;
    se += e;
    see += e * e;
    sy += y[i];
    sey += e * y[i];
    syy += y[i] * y[i];
  }
  const double det = s1 * see - se * se;
  LinearFit f{};
  if (!(det > 1e-12 * s1 * see)) {
    // Exponential indistinguishable from a constant on this window.
    f.offset = sy / s1;
    f.amp_at_start = 0.0;
    f.rss = std::max(0.0, syy - sy * sy / s1);
    return f;
  }
  f.offset = (see * sy - se * sey) / det;
  f.amp_at_start = (s1 * sey - se * sy) / det;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - f.offset - f.amp_at_start * std::exp(-(t[i] - t0) / tau);
    rss += r * r;
  }
  f.rss = rss;
  return f;
}

}  // namespace

void Waveform::validate() const {
  if (!(ts > 0.0) || !std::isfinite(ts)) invalid("Waveform: ts must be positive");
  if (samples.empty()) invalid("Waveform: no samples");
  if (!all_finite(samples)) invalid("Waveform: non-finite sample");
}

void StepResponse::validate() const {
  waveform.validate();
  if (onset >= waveform.size()) invalid("StepResponse: onset beyond the record");
}

ExponentialFit fit_exponential(const StepResponse& resp, IndexRange window) {
  resp.validate();
  const double ts = resp.waveform.ts;
  if (window.begin < resp.onset || window.end > resp.waveform.size() ||
      window.size() < 8) {
    throw Error(ErrorCode::kFitFailure,
                "fit_exponential: window must hold at least 8 samples after the onset");
  }
  std::vector<double> t, y;
  for (std::size_t i = window.begin; i < window.end; ++i) {
    t.push_back(static_cast<double>(i - resp.onset) * ts);
    y.push_back(resp.waveform.samples[i]);
  }
  const double span = t.back() - t.front();

  // Variable projection: tau is searched on a log grid and refined by
  // golden section; A and B follow linearly.
  const double lo = std::log(0.25 * ts);
  const double hi = std::log(100.0 * span);
  constexpr int kGrid = 240;
  std::vector<double> grid(kGrid), rss(kGrid);
  std::size_t best = 0;
  for (int k = 0; k < kGrid; ++k) {
    grid[k] = lo + (hi - lo) * k / (kGrid - 1);
    rss[k] = project(t, y, std::exp(grid[k])).rss;
    if (rss[k] < rss[best]) best = k;
  }
  double a = grid[best == 0 ? 0 : best - 1];
  double b = grid[std::min<std::size_t>(best + 1, kGrid - 1)];
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = project(t, y, std::exp(c)).rss, fd = project(t, y, std::exp(d)).rss;
  for (int it = 0; it < 80 && b - a > 1e-10; ++it) {
    if (fc < fd) {
      b = d, d = c, fd = fc;
      c = b - phi * (b - a);
      fc = project(t, y, std::exp(c)).rss;
    } else {
      a = c, c = d, fc = fd;
      d = a + phi * (b - a);
      fd = project(t, y, std::exp(d)).rss;
    }
  }
  double log_tau = 0.5 * (a + b);
  LinearFit lf = project(t, y, std::exp(log_tau));
  if (rss[best] < lf.rss) {
    log_tau = grid[best];
    lf = project(t, y, std::exp(log_tau));
  }

  ExponentialFit fit;
  fit.tau = std::exp(log_tau);
  fit.amplitude = lf.offset;
  fit.residual_rms = std::sqrt(lf.rss / static_cast<double>(y.size()));
  const double negligible =
      std::max({3.0 * fit.residual_rms, 1e-9 * std::abs(fit.amplitude), 1e-15});
  if (std::abs(lf.amp_at_start) <= negligible) {
    fit.tau_constrained = false;
    fit.exp_amp = 0.0;
    return fit;
  }
  const bool at_edge = best == 0 || best + 1 == static_cast<std::size_t>(kGrid);
  fit.exp_amp = lf.amp_at_start * std::exp(t.front() / fit.tau);
  if (at_edge || !std::isfinite(fit.exp_amp) || !std::isfinite(fit.amplitude)) {
    throw Error(ErrorCode::kFitFailure,
                "fit_exponential: no converged time constant on samples [" +
                    std::to_string(window.begin) + ", " + std::to_string(window.end) +
                    "), residual rms " + format_double(fit.residual_rms));
  }
  return fit;
}

IIRFilter iir_from_fit(double amplitude, double exp_amp, double tau, double ts) {
  if (!(ts > 0.0) || !(tau > 0.0) || !std::isfinite(amplitude) || !std::isfinite(exp_amp)) {
    invalid("iir_from_fit: tau and ts must be positive and amplitudes finite");
  }
  const double lambda = 2.0 * amplitude * tau + 2.0 * exp_amp * tau + amplitude * ts;
  if (lambda == 0.0) {
    throw Error(ErrorCode::kInstability, "iir_from_fit: filter pole at infinity");
  }
  IIRFilter f;
  f.a1 = (2.0 * amplitude * tau + 2.0 * exp_amp * tau - amplitude * ts) / lambda;
  f.b0 = (2.0 * tau + ts) / lambda;
  f.b1 = (-2.0 * tau + ts) / lambda;
  f.fit_amplitude = amplitude;
  f.fit_exp_amp = exp_amp;
  f.fit_tau = tau;
  f.ts = ts;
  if (!(std::abs(f.a1) < 1.0)) {
    throw Error(ErrorCode::kInstability,
                "iir_from_fit: |a1| = " + format_double(std::abs(f.a1)) +
                    " >= 1 (A=" + format_double(amplitude) + ", B=" + format_double(exp_amp) +
                    ", tau=" + format_double(tau) + ")");
  }
  return f;
}

std::size_t FilterChain::iir_count() const {
  return std::count_if(stages.begin(), stages.end(), [](const Filter& f) {
    return std::holds_alternative<IIRFilter>(f);
  });
}

std::size_t FilterChain::fir_count() const { return stages.size() - iir_count(); }

Waveform apply_iir(const IIRFilter& f, const Waveform& w) {
  w.validate();
  check_ts(f, w.ts);
  Waveform out{w.ts, std::vector<double>(w.size())};
  double xp = 0.0, yp = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) {
    const double y = f.b0 * w.samples[n] + f.b1 * xp + f.a1 * yp;
    out.samples[n] = y;
    xp = w.samples[n];
    yp = y;
  }
  return out;
}

Waveform apply_fir(const FIRFilter& f, const Waveform& w) {
  w.validate();
  check_ts(f, w.ts);
  if (f.taps.empty()) invalid("apply_fir: no taps");
  Waveform out{w.ts, std::vector<double>(w.size(), 0.0)};
  for (std::size_t n = 0; n < w.size(); ++n) {
    const std::size_t m = std::min(f.taps.size(), n + 1);
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += f.taps[i] * w.samples[n - i];
    out.samples[n] = acc;
  }
  return out;
}

Waveform apply_filter(const Filter& f, const Waveform& w) {
  return std::visit(
      [&](const auto& s) {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, IIRFilter>)
          return apply_iir(s, w);
        else
          return apply_fir(s, w);
      },
      f);
}

FIRFilter fir_inverse(const std::vector<double>& h, double alpha_reg, std::size_t n_taps,
                      double ts) {
  if (n_taps == 0 || h.empty()) invalid("fir_inverse: empty kernel or zero taps");
  if (!(alpha_reg >= 0.0)) invalid("fir_inverse: alpha_reg must be non-negative");
  if (!all_finite(h)) invalid("fir_inverse: non-finite kernel");
  const int n = static_cast<int>(n_taps);
  const int m = static_cast<int>(h.size());
  // H^T H is Toeplitz in the autocorrelation of h.
  std::vector<double> r(n, 0.0);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i + k < m; ++i) r[k] += h[i] * h[i + k];
  const double energy = r[0];
  Eigen::MatrixXd normal(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) normal(i, j) = r[std::abs(i - j)];
  // D^T D for first differences with an implicit zero after the last tap.
  const double reg = alpha_reg * energy;
  for (int i = 0; i < n; ++i) {
    normal(i, i) += reg * (i == 0 ? 1.0 : 2.0);
    if (i > 0) {
      normal(i, i - 1) -= reg;
      normal(i - 1, i) -= reg;
    }
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(0) = h[0];
  Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  const double scale = normal.diagonal().cwiseAbs().maxCoeff();
  const double pivot = ldlt.vectorD().cwiseAbs().minCoeff();
  if (ldlt.info() != Eigen::Success || !(scale > 0.0) || pivot <= 1e-13 * scale) {
    throw Error(ErrorCode::kSingularSystem,
                "fir_inverse: normal equations are singular (use alpha_reg > 0 or a "
                "non-degenerate kernel)");
  }
  const Eigen::VectorXd x = ldlt.solve(rhs);
  FIRFilter f;
  f.taps.assign(x.data(), x.data() + n);
  f.alpha_reg = alpha_reg;
  f.ts = ts;
  if (!all_finite(f.taps)) {
    throw Error(ErrorCode::kSingularSystem, "fir_inverse: non-finite solution");
  }
  return f;
}

double fir_objective(const std::vector<double>& h, const std::vector<double>& taps,
                     double alpha_reg) {
  const std::size_t len = h.size() + taps.size() - 1;
  std::vector<double> conv(len, 0.0);
  for (std::size_t i = 0; i < h.size(); ++i)
    for (std::size_t j = 0; j < taps.size(); ++j) conv[i + j] += h[i] * taps[j];
  conv[0] -= 1.0;
  double misfit = 0.0;
  for (double v : conv) misfit += v * v;
  double rough = 0.0;
  for (std::size_t j = 0; j < taps.size(); ++j) {
    const double next = j + 1 < taps.size() ? taps[j + 1] : 0.0;
    rough += (next - taps[j]) * (next - taps[j]);
  }
  const double energy = std::inner_product(h.begin(), h.end(), h.begin(), 0.0);
  return misfit + alpha_reg * energy * rough;
}

std::vector<double> impulse_from_step(const StepResponse& resp) {
  resp.validate();
  const auto& s = resp.waveform.samples;
  std::vector<double> h(s.size());
  double prev = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    h[i] = (s[i] - prev) / resp.waveform.ts;
    prev = s[i];
  }
  return h;
}

namespace {

double mean_tail(const std::vector<double>& v, std::size_t n) {
  n = std::min(n, v.size());
  return std::accumulate(v.end() - n, v.end(), 0.0) / static_cast<double>(n);
}

// White-noise level from second differences of the record's second half.
double noise_floor(const std::vector<double>& v, std::size_t onset) {
  const std::size_t start = onset + (v.size() - onset) / 2;
  if (v.size() < start + 3) return 0.0;
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = start + 2; i < v.size(); ++i) {
    const double d2 = v[i] - 2.0 * v[i - 1] + v[i - 2];
    acc += d2 * d2;
    ++n;
  }
  return std::sqrt(acc / static_cast<double>(n) / 6.0);
}

StageReport report_for(const std::string& kind, const StepResponse& cur,
                       const TrainingOptions& options) {
  StageReport r{kind, 0, {}, 0.0, 0.0};
  const auto& s = cur.waveform.samples;
  const double final_value = mean_tail(s, 64);
  const std::size_t begin = std::min(s.size(), cur.onset + options.settle_samples);
  const std::size_t end = std::min(s.size(), begin + options.flat_window);
  double acc = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    const double d = std::abs(s[i] - final_value);
    r.max_deviation = std::max(r.max_deviation, d);
    acc += d * d;
  }
  if (end > begin) r.rms_deviation = std::sqrt(acc / static_cast<double>(end - begin));
  return r;
}

// Largest |data - fit| over the fit window. A faster term leaking into the
// start of a long window barely moves the RMS but shows up here.
double max_misfit(const StepResponse& r, std::size_t off, const ExponentialFit& f) {
  double worst = 0.0;
  for (std::size_t i = r.onset + off; i < r.waveform.size(); ++i) {
    const double t = static_cast<double>(i - r.onset) * r.waveform.ts;
    const double model = f.amplitude + (f.exp_amp == 0.0 ? 0.0 : f.exp_amp * std::exp(-t / f.tau));
    worst = std::max(worst, std::abs(r.waveform.samples[i] - model));
  }
  return worst;
}

Error stage_error(std::size_t stage, const Error& e) {
  return Error(e.code(), "stage " + std::to_string(stage) + ": " + e.what());
}

}  // namespace

TrainedChain train_chain(const StepResponse& resp, std::size_t n_iir,
                         const std::vector<FirStageSpec>& fir_specs,
                         const TrainingOptions& options) {
  resp.validate();
  if (!(options.window_growth > 1.0)) invalid("train_chain: window_growth must exceed 1");
  TrainedChain out;
  out.chain.ts = resp.waveform.ts;
  StepResponse cur = resp;
  const std::size_t avail = resp.waveform.size() - resp.onset;

  std::size_t stage = 0;
  for (std::size_t k = 0; k < n_iir; ++k, ++stage) {
    const auto& s = cur.waveform.samples;
    const double threshold =
        std::max(5.0 * noise_floor(s, cur.onset), options.rel_floor * std::abs(mean_tail(s, 64)));
    const double before = report_for("iir", cur, options).rms_deviation;
    // Candidates on the window ladder, longest first. The first whose fit is
    // good enough and which flattens the response wins; otherwise the one
    // that flattens it most; otherwise the stage is an identity.
    struct Candidate {
      std::size_t off = 0;
      ExponentialFit fit;
      IIRFilter filter;
      Waveform applied;
      double rms = 0.0;
    };
    std::optional<Candidate> chosen, fallback;
    std::optional<Error> last_error;
    bool any_fit = false;
    for (std::size_t off = options.min_window_offset; off + 8 <= avail;
         off = std::max(off + 1, static_cast<std::size_t>(
                                     std::ceil(static_cast<double>(off) * options.window_growth)))) {
      try {
        Candidate c;
        c.off = off;
        c.fit = fit_exponential(cur, {cur.onset + off, cur.waveform.size()});
        const double lead = static_cast<double>(off) * cur.waveform.ts;
        if (c.fit.tau_constrained && lead / c.fit.tau > options.max_extrapolation) continue;
        any_fit = true;
        c.filter = iir_from_fit(c.fit.amplitude, c.fit.exp_amp, c.fit.tau, cur.waveform.ts);
        c.applied = apply_iir(c.filter, cur.waveform);
        c.rms = report_for("iir", {c.applied, cur.onset}, options).rms_deviation;
        if (c.rms >= before) continue;
        const bool good = max_misfit(cur, off, c.fit) < threshold;
        if (good) {
          chosen = std::move(c);
          break;
        }
        if (!fallback || c.rms < fallback->rms) fallback = std::move(c);
      } catch (const Error& e) {
        if (!e.is_numerical()) throw stage_error(stage, e);
        last_error = e;
      }
    }
    if (!chosen) chosen = std::move(fallback);
    if (!chosen) {
      if (!any_fit) {
        throw stage_error(stage, last_error ? *last_error
                                            : Error(ErrorCode::kFitFailure,
                                                    "record too short for an exponential fit"));
      }
      // Nothing left to correct: pass the response through unchanged.
      Candidate c;
      c.fit.amplitude = 1.0;
      c.fit.tau = static_cast<double>(avail) * cur.waveform.ts;
      c.fit.tau_constrained = false;
      c.filter = iir_from_fit(1.0, 0.0, c.fit.tau, cur.waveform.ts);
      c.applied = cur.waveform;
      chosen = std::move(c);
    }
    const IIRFilter f = chosen->filter;
    const std::size_t chosen_off = chosen->off;
    cur.waveform = std::move(chosen->applied);
    out.chain.stages.emplace_back(f);
    StageReport r = report_for("iir", cur, options);
    r.window_start = cur.onset + chosen_off;
    r.fit = chosen->fit;
    out.stages.push_back(r);
  }

  for (const auto& spec : fir_specs) {
    const std::vector<double> h_full = impulse_from_step(cur);
    const std::size_t len = std::min(avail, options.fir_kernel_factor * spec.n_taps);
    std::vector<double> h(h_full.begin() + cur.onset, h_full.begin() + cur.onset + len);
    for (double& v : h) v *= cur.waveform.ts;  // per-sample impulse
    FIRFilter f;
    try {
      f = fir_inverse(h, spec.alpha_reg, spec.n_taps, cur.waveform.ts);
    } catch (const Error& e) {
      throw stage_error(stage, e);
    }
    cur.waveform = apply_fir(f, cur.waveform);
    out.chain.stages.emplace_back(f);
    out.stages.push_back(report_for("fir", cur, options));
    ++stage;
  }
  out.corrected = cur;
  return out;
}

Waveform predistort_waveform(const Waveform& target, const FilterChain& chain) {
  target.validate();
  if (std::abs(chain.ts - target.ts) > 1e-9 * chain.ts) {
    throw Error(ErrorCode::kTimestepMismatch,
                "predistort_waveform: chain ts=" + format_double(chain.ts) +
                    " but waveform ts=" + format_double(target.ts));
  }
  Waveform w = target;
  for (const auto& f : chain.stages) w = apply_filter(f, w);
  return w;
}

void LineModel::validate() const {
  if (!std::isfinite(dc_gain)) invalid("LineModel: dc_gain must be finite");
  for (const auto& e : exponentials)
    if (!(e.tau > 0.0) || !std::isfinite(e.amplitude)) invalid("LineModel: bad exponential");
  for (const auto& r : ringing)
    if (!(r.tau > 0.0) || !std::isfinite(r.amplitude) || !std::isfinite(r.freq_hz))
      invalid("LineModel: bad ringing term");
}

double LineModel::step_value(double t) const {
  if (t < 0.0) return 0.0;
  double s = dc_gain;
  for (const auto& e : exponentials) s += e.amplitude * std::exp(-t / e.tau);
  for (const auto& r : ringing)
    s += r.amplitude * std::exp(-t / r.tau) * std::cos(kTwoPi * r.freq_hz * t + r.phase);
  return s;
}

std::vector<double> LineModel::impulse(double ts, std::size_t n) const {
  std::vector<double> h(n);
  double prev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = step_value(static_cast<double>(i) * ts);
    h[i] = s - prev;
    prev = s;
  }
  return h;
}

Waveform simulate_line(const LineModel& model, const Waveform& input) {
  model.validate();
  input.validate();
  const std::vector<double> h = model.impulse(input.ts, input.size());
  Waveform out{input.ts, std::vector<double>(input.size(), 0.0)};
  for (std::size_t j = 0; j < input.size(); ++j) {
    const double x = input.samples[j];
    if (x == 0.0) continue;
    for (std::size_t n = j; n < input.size(); ++n) out.samples[n] += h[n - j] * x;
  }
  return out;
}

Waveform unit_step(double ts, std::size_t n, std::size_t onset) {
  Waveform w{ts, std::vector<double>(n, 0.0)};
  for (std::size_t i = onset; i < n; ++i) w.samples[i] = 1.0;
  w.validate();
  return w;
}

LineModel reference_line_model() {
  LineModel m;
  m.dc_gain = 1.0;
  m.exponentials = {{-0.5, 2e-9}, {0.08, 40e-9}, {-0.04, 300e-9}};
  m.ringing = {{0.03, 8e-9, 80e6, 0.0}};
  return m;
}

StepMetrics step_metrics(const Waveform& response, std::size_t onset,
                         std::size_t settle_samples, std::size_t window, double level) {
  response.validate();
  if (onset >= response.size()) invalid("step_metrics: onset beyond the record");
  if (level == 0.0) invalid("step_metrics: level must be non-zero");
  const auto& s = response.samples;
  StepMetrics m{mean_tail(s, 64), 0.0, 0.0};
  const std::size_t begin = std::min(s.size(), onset + settle_samples);
  const std::size_t end = std::min(s.size(), begin + window);
  for (std::size_t i = begin; i < end; ++i)
    m.max_deviation = std::max(m.max_deviation, std::abs(s[i] / level - 1.0));
  // First crossings of 10% and 90%, linearly interpolated.
  auto crossing = [&](double frac) {
    const double thr = frac * level;
    for (std::size_t i = onset; i < s.size(); ++i) {
      if ((level > 0 && s[i] >= thr) || (level < 0 && s[i] <= thr)) {
        if (i == 0) return 0.0;
        const double prev = s[i - 1];
        return static_cast<double>(i - 1) + (thr - prev) / (s[i] - prev);
      }
    }
    return std::numeric_limits<double>::quiet_NaN();
  };
  m.rise_10_90 = (crossing(0.9) - crossing(0.1)) * response.ts;
  return m;
}

void write_waveform_csv(const Waveform& w, const std::filesystem::path& path) {
  w.validate();
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write file: " + path.string());
  out << "time_s,value\n";
  for (std::size_t i = 0; i < w.size(); ++i)
    out << format_double(w.time(i)) << ',' << format_double(w.samples[i]) << '\n';
}

Waveform read_waveform_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open file: " + path.string());
  std::vector<double> t, v;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line.rfind("time", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw Error(ErrorCode::kConfig,
                  path.string() + ":" + std::to_string(lineno) + ": expected 'time,value'");
    }
    const std::string where = path.string() + ":" + std::to_string(lineno);
    t.push_back(parse_double(line.substr(0, comma), where));
    v.push_back(parse_double(line.substr(comma + 1), where));
  }
  if (t.size() < 2) throw Error(ErrorCode::kConfig, path.string() + ": need at least 2 samples");
  Waveform w{t[1] - t[0], std::move(v)};
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (std::abs(t[i] - t[0] - static_cast<double>(i) * w.ts) > 1e-6 * w.ts) {
      throw Error(ErrorCode::kConfig, path.string() + ": samples are not uniformly spaced");
    }
  }
  w.validate();
  return w;
}

std::string serialize_chain(const FilterChain& chain) {
  std::ostringstream out;
  out << "fluxcqed-filter-chain 1\n";
  out << "ts " << format_double(chain.ts) << '\n';
  for (const auto& stage : chain.stages) {
    if (const auto* f = std::get_if<IIRFilter>(&stage)) {
      out << "iir " << format_double(f->a1) << ' ' << format_double(f->b0) << ' '
          << format_double(f->b1) << ' ' << format_double(f->fit_amplitude) << ' '
          << format_double(f->fit_exp_amp) << ' ' << format_double(f->fit_tau) << ' '
          << format_double(f->ts) << '\n';
    } else {
      const auto& g = std::get<FIRFilter>(stage);
      out << "fir " << format_double(g.alpha_reg) << ' ' << format_double(g.ts) << ' '
          << g.taps.size();
      for (double v : g.taps) out << ' ' << format_double(v);
      out << '\n';
    }
  }
  return out.str();
}

FilterChain parse_chain(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto bad = [](const std::string& msg) { throw Error(ErrorCode::kConfig, "filter chain: " + msg); };
  if (!std::getline(in, line) || line != "fluxcqed-filter-chain 1") bad("missing header");
  FilterChain chain;
  bool have_ts = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    std::vector<std::string> tok;
    for (std::string s; ls >> s;) tok.push_back(s);
    auto num = [&](std::size_t i) {
      if (i >= tok.size()) bad("truncated line '" + line + "'");
      return parse_double(tok[i], "filter chain");
    };
    if (kind == "ts") {
      chain.ts = num(0);
      have_ts = true;
    } else if (kind == "iir") {
      if (tok.size() != 7) bad("iir line needs 7 fields");
      IIRFilter f;
      f.a1 = num(0), f.b0 = num(1), f.b1 = num(2);
      f.fit_amplitude = num(3), f.fit_exp_amp = num(4), f.fit_tau = num(5), f.ts = num(6);
      chain.stages.emplace_back(f);
    } else if (kind == "fir") {
      FIRFilter f;
      f.alpha_reg = num(0);
      f.ts = num(1);
      const double n = num(2);
      if (n < 1 || std::floor(n) != n || tok.size() != 3 + static_cast<std::size_t>(n))
        bad("fir tap count does not match");
      for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) f.taps.push_back(num(3 + i));
      chain.stages.emplace_back(f);
    } else {
      bad("unknown stage '" + kind + "'");
    }
  }
  if (!have_ts || !(chain.ts > 0.0)) bad("missing or invalid ts");
  return chain;
}

void write_chain(const FilterChain& chain, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write file: " + path.string());
  out << serialize_chain(chain);
}

FilterChain read_chain(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_chain(ss.str());
}

}  // namespace fluxcqed
