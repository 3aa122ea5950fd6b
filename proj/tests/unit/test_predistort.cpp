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

#include <cmath>
#include <filesystem>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "fluxcqed/error.hpp"

namespace fluxcqed {
namespace {

constexpr double kTs = 1e-9;

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kConfig;
}

// A + B exp(-t / tau) for t >= 0, zero before the onset.
StepResponse exp_step(double a, double b, double tau, std::size_t n, std::size_t onset) {
  Waveform w{kTs, std::vector<double>(n, 0.0)};
  for (std::size_t i = onset; i < n; ++i) w.samples[i] = a + b * std::exp(-w.time(i - onset) / tau);
  return {w, onset};
}

// Direct full convolution, independent of apply_fir.
std::vector<double> convolve(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> out(x.size() + y.size() - 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j) out[i + j] += x[i] * y[j];
  return out;
}

double delta_error(const std::vector<double>& h, const std::vector<double>& inv) {
  const std::vector<double> c = convolve(h, inv);
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double d = c[i] - (i == 0 ? 1.0 : 0.0);
    s += d * d;
  }
  return std::sqrt(s);
}

Waveform random_waveform(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g;
  Waveform w{kTs, std::vector<double>(n)};
  for (double& v : w.samples) v = g(rng);
  return w;
}

TEST(ExponentialFit, RecoversNoiselessParameters) {
  const StepResponse r = exp_step(1.0, 0.2, 300e-9, 3000, 50);
  const ExponentialFit f = fit_exponential(r, {60, 3000});
  EXPECT_NEAR(f.amplitude, 1.0, 1e-6);
  EXPECT_NEAR(f.exp_amp / 0.2, 1.0, 1e-6);
  EXPECT_NEAR(f.tau / 300e-9, 1.0, 1e-6);
  EXPECT_TRUE(f.tau_constrained);
}

TEST(ExponentialFit, FlatResponseLeavesTauUnconstrained) {
  const StepResponse r = exp_step(0.8, 0.0, 300e-9, 500, 10);
  const ExponentialFit f = fit_exponential(r, {20, 500});
  EXPECT_NEAR(f.amplitude, 0.8, 1e-12);
  EXPECT_EQ(f.exp_amp, 0.0);
  EXPECT_FALSE(f.tau_constrained);
}

TEST(ExponentialFit, NoisyMonteCarlo) {
  int a_ok = 0, tau_ok = 0;
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.005);
    StepResponse r = exp_step(1.0, 0.2, 300e-9, 3000, 50);
    for (std::size_t i = 50; i < 3000; ++i) r.waveform.samples[i] += noise(rng);
    const ExponentialFit f = fit_exponential(r, {50, 3000});
    a_ok += std::abs(f.amplitude - 1.0) < 0.01;
    tau_ok += std::abs(f.tau / 300e-9 - 1.0) < 0.10;
  }
  EXPECT_EQ(a_ok, 100);
  EXPECT_EQ(tau_ok, 100);
}

TEST(ExponentialFit, RejectsShortWindows) {
  const StepResponse r = exp_step(1.0, 0.2, 300e-9, 100, 50);
  EXPECT_EQ(code_of([&] { fit_exponential(r, {50, 55}); }), ErrorCode::kFitFailure);
  EXPECT_EQ(code_of([&] { fit_exponential(r, {40, 100}); }), ErrorCode::kFitFailure);
}

TEST(Iir, CoefficientFormulas) {
  for (double a : {1.0, 0.7, 1.3})
    for (double b : {0.0, 0.2, -0.3})
      for (double tau : {5e-9, 300e-9}) {
        const IIRFilter f = iir_from_fit(a, b, tau, kTs);
        const double lambda = 2 * a * tau + 2 * b * tau + a * kTs;
        EXPECT_DOUBLE_EQ(f.a1, (2 * a * tau + 2 * b * tau - a * kTs) / lambda);
        EXPECT_DOUBLE_EQ(f.b0, (2 * tau + kTs) / lambda);
        EXPECT_DOUBLE_EQ(f.b1, (-2 * tau + kTs) / lambda);
        EXPECT_NEAR(lambda * f.a1 + a * kTs, 2 * a * tau + 2 * b * tau, 1e-15 * lambda);
        if (b == 0.0) EXPECT_NEAR((f.b0 + f.b1) / (1.0 - f.a1), 1.0 / a, 1e-12);
        EXPECT_LT(std::abs(f.a1), 1.0);
      }
}

TEST(Iir, FlattensItsOwnExponential) {
  const StepResponse r = exp_step(1.0, 0.2, 300e-9, 3000, 100);
  const Waveform y = apply_iir(iir_from_fit(1.0, 0.2, 300e-9, kTs), r.waveform);
  for (std::size_t i = 105; i < 3000; ++i) EXPECT_NEAR(y.samples[i], 1.0, 1e-3) << i;
}

TEST(Iir, UnstableFitThrows) {
  // A + B and A of opposite sign: the inverse has a pole outside the unit circle.
  EXPECT_EQ(code_of([] { iir_from_fit(1.0, -1.5, 100e-9, kTs); }), ErrorCode::kInstability);
}

TEST(Iir, ZeroPoleIsTwoTapFir) {
  IIRFilter f;
  f.a1 = 0.0;
  f.b0 = 0.6;
  f.b1 = -0.25;
  std::mt19937_64 rng(1);
  const Waveform x = random_waveform(rng, 200);
  const Waveform y = apply_iir(f, x);
  const Waveform z = apply_fir(FIRFilter{{0.6, -0.25}, 0.0, 0.0}, x);
  for (std::size_t i = 0; i < 200; ++i) EXPECT_NEAR(y.samples[i], z.samples[i], 1e-15);
}

TEST(Fir, IdentityTapsLeaveWaveform) {
  std::mt19937_64 rng(2);
  const Waveform x = random_waveform(rng, 50);
  EXPECT_EQ(apply_fir(FIRFilter{{1.0}, 0.0, 0.0}, x).samples, x.samples);
}

TEST(Fir, TimestepMismatch) {
  std::mt19937_64 rng(2);
  const Waveform x = random_waveform(rng, 50);
  EXPECT_EQ(code_of([&] { apply_fir(FIRFilter{{1.0}, 0.0, 2e-9}, x); }),
            ErrorCode::kTimestepMismatch);
  FilterChain c;
  c.ts = 2e-9;
  EXPECT_EQ(code_of([&] { predistort_waveform(x, c); }), ErrorCode::kTimestepMismatch);
}

TEST(FirInverse, TrivialKernels) {
  // Tiny regularisation: exact inverse. Default regularisation: O(alpha) bias only.
  const FIRFilter one = fir_inverse({1.0}, 1e-9, 8);
  EXPECT_NEAR(one.taps[0], 1.0, 1e-6);
  for (std::size_t i = 1; i < 8; ++i) EXPECT_NEAR(one.taps[i], 0.0, 1e-6);
  const FIRFilter biased = fir_inverse({1.0}, 1e-3, 8);
  EXPECT_NEAR(biased.taps[0], 1.0, 5e-3);
  for (std::size_t i = 1; i < 8; ++i) EXPECT_NEAR(biased.taps[i], 0.0, 5e-3);
  const FIRFilter gain = fir_inverse({2.5}, 1e-9, 8);
  EXPECT_NEAR(gain.taps[0], 0.4, 1e-6);
  for (std::size_t i = 1; i < 8; ++i) EXPECT_NEAR(gain.taps[i], 0.0, 1e-6);
}

// Stacked least squares [H; sqrt(alpha |h|^2) D] x = [delta; 0], solved by QR.
Eigen::VectorXd lstsq_inverse(const std::vector<double>& h, double alpha, int n) {
  const int m = static_cast<int>(h.size());
  const int rows = m + n - 1;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows + n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i) a(i + j, j) = h[i];
  double energy = 0.0;
  for (double v : h) energy += v * v;
  const double w = std::sqrt(alpha * energy);
  for (int j = 0; j < n; ++j) {
    a(rows + j, j) = -w;
    if (j + 1 < n) a(rows + j, j + 1) = w;
  }
  Eigen::VectorXd b = Eigen::VectorXd::Zero(rows + n);
  b(0) = 1.0;
  return a.colPivHouseholderQr().solve(b);
}

TEST(FirInverse, SmoothingKernelMatchesLeastSquares) {
  const std::vector<double> h{0.25, 0.5, 0.25};
  const FIRFilter f = fir_inverse(h, 1e-3, 32);
  const Eigen::VectorXd ref = lstsq_inverse(h, 1e-3, 32);
  for (int i = 0; i < 32; ++i) EXPECT_NEAR(f.taps[i], ref(i), 1e-8) << i;
}

TEST(FirInverse, SmoothingKernelResidualBoundedBelow) {
  // The double zero at Nyquist caps how close any 32-tap causal inverse gets
  // to a delta at lag 0; the regularised solution cannot beat the
  // unregularised optimum.
  const std::vector<double> h{0.25, 0.5, 0.25};
  const Eigen::VectorXd best = lstsq_inverse(h, 0.0, 32);
  const double floor = delta_error(h, std::vector<double>(best.data(), best.data() + 32));
  EXPECT_GT(floor, 0.3);
  const FIRFilter f = fir_inverse(h, 1e-3, 32);
  EXPECT_GE(delta_error(h, f.taps), floor - 1e-12);
}

TEST(FirInverse, SolvesTheNormalEquations) {
  // Perturbing the solution along any tap never lowers the objective.
  const std::vector<double> h{0.6, 0.3, -0.1, 0.05};
  const FIRFilter f = fir_inverse(h, 1e-2, 16);
  const double best = fir_objective(h, f.taps, 1e-2);
  for (std::size_t i = 0; i < 16; ++i)
    for (double eps : {1e-4, -1e-4}) {
      std::vector<double> t = f.taps;
      t[i] += eps;
      EXPECT_GE(fir_objective(h, t, 1e-2), best);
    }
}

TEST(FirInverse, ObjectiveNonIncreasingInTaps) {
  const std::vector<double> h{0.25, 0.5, 0.25};
  double last = INFINITY;
  for (std::size_t n : {1, 2, 4, 8, 16, 32, 64}) {
    const double obj = fir_objective(h, fir_inverse(h, 1e-3, n).taps, 1e-3);
    EXPECT_LE(obj, last + 1e-12) << n;
    last = obj;
  }
}

TEST(FirInverse, SingularWithoutRegularisation) {
  EXPECT_EQ(code_of([] { fir_inverse({0.0, 0.0}, 0.0, 4); }), ErrorCode::kSingularSystem);
}

TEST(Impulse, StepAndRamp) {
  const StepResponse s{unit_step(kTs, 20, 5), 5};
  const std::vector<double> h = impulse_from_step(s);
  ASSERT_EQ(h.size(), 20u);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_DOUBLE_EQ(h[i] * kTs, i == 5 ? 1.0 : 0.0);
  Waveform ramp{kTs, {}};
  for (int i = 0; i < 20; ++i) ramp.samples.push_back(0.5 * i);
  const std::vector<double> hr = impulse_from_step({ramp, 0});
  for (std::size_t i = 1; i < 20; ++i) EXPECT_NEAR(hr[i] * kTs, 0.5, 1e-15);
}

TEST(Impulse, MatchesAnalyticDerivative) {
  const double tau = 300e-9;
  const StepResponse s = exp_step(1.0, 0.2, tau, 2000, 10);
  const std::vector<double> h = impulse_from_step(s);
  EXPECT_NEAR(h[10] * kTs, 1.2, 1e-12);  // the jump A + B at the onset
  for (std::size_t i = 11; i < 2000; i += 37) {
    // Derivative at the midpoint of the difference interval.
    const double t = (static_cast<double>(i - 10) - 0.5) * kTs;
    const double analytic = -0.2 / tau * std::exp(-t / tau);
    EXPECT_NEAR(h[i] / analytic, 1.0, 0.02) << i;
  }
}

TEST(Line, PureGainIsIdentity) {
  std::mt19937_64 rng(4);
  const Waveform x = random_waveform(rng, 100);
  const Waveform y = simulate_line(LineModel{}, x);
  for (std::size_t i = 0; i < 100; ++i) EXPECT_NEAR(y.samples[i], x.samples[i], 1e-14);
}

TEST(Line, SingleExponentialStep) {
  LineModel m;
  m.exponentials.push_back({-0.3, 40e-9});
  const Waveform y = simulate_line(m, unit_step(kTs, 1000, 100));
  for (std::size_t i = 100; i < 1000; ++i) {
    const double t = static_cast<double>(i - 100) * kTs;
    EXPECT_NEAR(y.samples[i], 1.0 - 0.3 * std::exp(-t / 40e-9), 1e-6);
  }
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(y.samples[i], 0.0);
}

TEST(Line, LinearTimeInvariant) {
  std::mt19937_64 rng(5);
  const LineModel m = reference_line_model();
  const Waveform x = random_waveform(rng, 300), z = random_waveform(rng, 300);
  Waveform sum = x, scaled = x;
  for (std::size_t i = 0; i < 300; ++i) {
    sum.samples[i] += z.samples[i];
    scaled.samples[i] *= -3.7;
  }
  const Waveform yx = simulate_line(m, x), yz = simulate_line(m, z);
  const Waveform ys = simulate_line(m, sum), yk = simulate_line(m, scaled);
  for (std::size_t i = 0; i < 300; ++i) {
    EXPECT_NEAR(ys.samples[i], yx.samples[i] + yz.samples[i], 1e-10);
    EXPECT_NEAR(yk.samples[i], -3.7 * yx.samples[i], 1e-10);
  }
}

TEST(Filters, LinearOnRandomInputs) {
  std::mt19937_64 rng(6);
  const Filter filters[] = {iir_from_fit(1.1, -0.2, 50e-9, kTs),
                            FIRFilter{{0.9, 0.2, -0.15, 0.05}, 0.0, kTs}};
  for (const Filter& f : filters) {
    const Waveform x = random_waveform(rng, 256), z = random_waveform(rng, 256);
    Waveform sum = x, scaled = x;
    for (std::size_t i = 0; i < 256; ++i) {
      sum.samples[i] += z.samples[i];
      scaled.samples[i] *= 2.5;
    }
    const Waveform yx = apply_filter(f, x), yz = apply_filter(f, z);
    const Waveform ys = apply_filter(f, sum), yk = apply_filter(f, scaled);
    ASSERT_EQ(yx.size(), 256u);
    for (std::size_t i = 0; i < 256; ++i) {
      EXPECT_NEAR(ys.samples[i], yx.samples[i] + yz.samples[i], 1e-10);
      EXPECT_NEAR(yk.samples[i], 2.5 * yx.samples[i], 1e-10);
    }
  }
}

TEST(Training, IdealStepGivesIdentityChain) {
  const StepResponse r{unit_step(kTs, 2000, 100), 100};
  const TrainedChain tc = train_chain(r, 3, {});
  for (const auto& st : tc.stages) EXPECT_FALSE(st.fit.tau_constrained);
  for (std::size_t i = 100; i < 2000; ++i) EXPECT_NEAR(tc.corrected.waveform.samples[i], 1.0, 1e-12);
}

TEST(Training, RoundTripOnReferenceLine) {
  const LineModel m = reference_line_model();
  const Waveform step = unit_step(kTs, 4000, 100);
  const StepResponse r{simulate_line(m, step), 100};
  const TrainedChain tc = train_chain(r, 11, {FirStageSpec{}, FirStageSpec{}});
  EXPECT_EQ(tc.chain.iir_count(), 11u);
  EXPECT_EQ(tc.chain.fir_count(), 2u);
  for (const Filter& f : tc.chain.stages)
    if (const auto* iir = std::get_if<IIRFilter>(&f)) EXPECT_LT(std::abs(iir->a1), 1.0);

  const Waveform out = simulate_line(m, predistort_waveform(step, tc.chain));
  const StepMetrics sm = step_metrics(out, 100, 16, 1500);
  EXPECT_LT(sm.max_deviation, 2e-3);
  EXPECT_LT(sm.rise_10_90, 16e-9);
  // Numerically applying the chain to the measured response is the same thing.
  for (std::size_t i = 0; i < 4000; i += 13)
    EXPECT_NEAR(out.samples[i], tc.corrected.waveform.samples[i], 1e-9);
}

TEST(Training, RoundTripWithOneShortFir) {
  LineModel m;
  m.exponentials = {{0.12, 60e-9}, {-0.06, 500e-9}};
  const Waveform step = unit_step(kTs, 4000, 100);
  const TrainedChain tc = train_chain({simulate_line(m, step), 100}, 2, {FirStageSpec{1e-3, 32}});
  const StepMetrics sm =
      step_metrics(simulate_line(m, predistort_waveform(step, tc.chain)), 100, 16, 1500);
  EXPECT_LT(sm.max_deviation, 2e-3);
}

TEST(Training, PredistortionIsLinear) {
  const LineModel m = reference_line_model();
  const TrainedChain tc =
      train_chain({simulate_line(m, unit_step(kTs, 3000, 100)), 100}, 3, {FirStageSpec{}});
  std::mt19937_64 rng(8);
  const Waveform x = random_waveform(rng, 500);
  Waveform ax = x;
  for (double& v : ax.samples) v *= -0.37;
  const Waveform y = predistort_waveform(x, tc.chain), ay = predistort_waveform(ax, tc.chain);
  for (std::size_t i = 0; i < 500; ++i) EXPECT_NEAR(ay.samples[i], -0.37 * y.samples[i], 1e-10);
  EXPECT_EQ(predistort_waveform(x, FilterChain{}).samples, x.samples);
}

TEST(Formats, ChainRoundTripIsLossless) {
  const LineModel m = reference_line_model();
  const TrainedChain tc =
      train_chain({simulate_line(m, unit_step(kTs, 3000, 100)), 100}, 3, {FirStageSpec{}});
  const FilterChain back = parse_chain(serialize_chain(tc.chain));
  ASSERT_EQ(back.stages.size(), tc.chain.stages.size());
  EXPECT_EQ(back.ts, tc.chain.ts);
  for (std::size_t i = 0; i < back.stages.size(); ++i) {
    if (const auto* a = std::get_if<IIRFilter>(&tc.chain.stages[i])) {
      const auto& b = std::get<IIRFilter>(back.stages[i]);
      EXPECT_EQ(a->a1, b.a1);
      EXPECT_EQ(a->b0, b.b0);
      EXPECT_EQ(a->b1, b.b1);
      EXPECT_EQ(a->fit_tau, b.fit_tau);
    } else {
      EXPECT_EQ(std::get<FIRFilter>(tc.chain.stages[i]).taps, std::get<FIRFilter>(back.stages[i]).taps);
    }
  }
  EXPECT_EQ(code_of([] { parse_chain("not a chain\n"); }), ErrorCode::kConfig);
}

TEST(Formats, WaveformCsvRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "fluxcqed_wave_test.csv";
  Waveform w{2e-9, {0.0, 1.5, -2.25, 1e-17, 3.0}};
  write_waveform_csv(w, path);
  const Waveform back = read_waveform_csv(path);
  EXPECT_EQ(back.samples, w.samples);
  EXPECT_NEAR(back.ts, 2e-9, 1e-21);
  std::filesystem::remove(path);
  EXPECT_EQ(code_of([&] { read_waveform_csv(path); }), ErrorCode::kIo);
}

TEST(StepMetrics, IdealStepRisesWithinOneSample) {
  const StepMetrics sm = step_metrics(unit_step(kTs, 400, 100), 100, 0, 200);
  EXPECT_NEAR(sm.rise_10_90, 0.8 * kTs, 1e-15);
  EXPECT_EQ(sm.max_deviation, 0.0);
  EXPECT_EQ(sm.final_value, 1.0);
}

TEST(StepMetrics, LinearRampRise) {
  Waveform w{kTs, std::vector<double>(300, 1.0)};
  for (std::size_t i = 0; i < 100; ++i) w.samples[i] = i < 50 ? 0.0 : (i - 50) / 50.0;
  const StepMetrics sm = step_metrics(w, 50, 50, 100);
  EXPECT_NEAR(sm.rise_10_90, 40 * kTs, 1e-12);
}

}  // namespace
}  // namespace fluxcqed
