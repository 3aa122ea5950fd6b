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

#include "fluxcqed/experiments.hpp"

#include <cmath>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "fluxcqed/error.hpp"

namespace fluxcqed {
namespace {

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

double laguerre(int n, double x) {
  double prev = 1.0, cur = 1.0 - x;
  if (n == 0) return prev;
  for (int k = 1; k < n; ++k) {
    const double next = ((2 * k + 1 - x) * cur - k * prev) / (k + 1);
    prev = cur;
    cur = next;
  }
  return cur;
}

double fock_wigner(int n, cplx beta) {
  const double r2 = std::norm(beta);
  return 2.0 / kPi * (n % 2 == 0 ? 1.0 : -1.0) * laguerre(n, 4.0 * r2) * std::exp(-2.0 * r2);
}

Operator fock_rho(int n, int dim) {
  Operator r = Operator::Zero(dim, dim);
  r(n, n) = 1.0;
  return r;
}

Operator coherent_rho(cplx alpha, int dim) {
  CVector v(dim);
  cplx amp = std::exp(-0.5 * std::norm(alpha));
  for (int n = 0; n < dim; ++n) {
    v(n) = amp;
    amp *= alpha / std::sqrt(static_cast<double>(n + 1));
  }
  v /= v.norm();
  return v * v.adjoint();
}

TomographyGrid analytic_grid(const GridSpec& spec, GridKind kind,
                             const std::function<double(cplx)>& f) {
  TomographyGrid g;
  g.spec = spec;
  g.kind = kind;
  g.values.resize(static_cast<Eigen::Index>(spec.im.points),
                  static_cast<Eigen::Index>(spec.re.points));
  for (std::size_t i = 0; i < spec.im.points; ++i)
    for (std::size_t j = 0; j < spec.re.points; ++j)
      g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f(spec.point(i, j));
  return g;
}

double max_abs_diff(const TomographyGrid& a, const TomographyGrid& b) {
  return (a.values - b.values).cwiseAbs().maxCoeff();
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

// The four reference states on a 12-photon cavity.
std::vector<std::pair<const char*, Operator>> reference_states() {
  return {{"vacuum", fock_rho(0, 12)},
          {"fock1", fock_rho(1, 12)},
          {"fock2", fock_rho(2, 12)},
          {"coherent1", coherent_rho(1.0, 12)}};
}

QuantumState composite(const Operator& rho_cavity, const SpaceConfig& cfg) {
  Operator t = Operator::Zero(cfg.transmon_dim, cfg.transmon_dim);
  t(0, 0) = 1.0;
  return tensor(QuantumState::mixed(rho_cavity), QuantumState::mixed(t));
}

// ------------------------------------------------------------ fits

TEST(Fits, LorentzianRecovers) {
  const std::vector<double> x = linspace(-50e6, 50e6, 101);
  std::vector<double> y;
  for (double v : x) y.push_back(0.05 + 0.7 / (1.0 + std::pow((v - 3.3e6) / 8e6, 2)));
  const LorentzianFit f = fit_lorentzian(x, y);
  EXPECT_NEAR(f.center, 3.3e6, 1.0);
  EXPECT_NEAR(std::abs(f.half_width), 8e6, 1.0);
  EXPECT_NEAR(f.amplitude, 0.7, 1e-8);
  EXPECT_NEAR(f.offset, 0.05, 1e-8);
}

TEST(Fits, GaussianRecovers) {
  const std::vector<double> x = linspace(-3.0, 3.0, 61);
  std::vector<double> y;
  for (double v : x) y.push_back(-0.02 + 0.9 * std::exp(-v * v / (2 * 1.3 * 1.3)));
  const GaussianFit f = fit_gaussian(x, y);
  EXPECT_NEAR(f.sigma, 1.3, 1e-8);
  EXPECT_NEAR(f.amplitude, 0.9, 1e-8);
  EXPECT_NEAR(f.offset, -0.02, 1e-8);
}

TEST(Fits, DampedOscillationRecovers) {
  const std::vector<double> t = linspace(0.0, 2e-6, 401);
  std::vector<double> y;
  for (double v : t)
    y.push_back(0.5 + 0.4 * std::exp(-v / 0.9e-6) * std::cos(kTwoPi * 7.7e6 * v + 0.3));
  const OscillationFit f = fit_damped_oscillation(t, y);
  EXPECT_NEAR(f.freq_hz, 7.7e6, 1.0);
  EXPECT_NEAR(f.decay_time_s, 0.9e-6, 1e-12);
  EXPECT_NEAR(f.amplitude, 0.4, 1e-6);
}

// --------------------------------------------------------- pi-scope

PiScopeSpec scope_spec(const Waveform& flux, double f_center, std::vector<double> delays) {
  PiScopeSpec s;
  s.flux_ma = flux;
  s.delays_s = std::move(delays);
  for (int k = -30; k <= 30; ++k) s.probe_freqs_hz.push_back(f_center + k * 5e6);
  return s;
}

TEST(PiScope, ConstantFluxPeakIsStationary) {
  const FluxRelation rel;
  const double current = 4.0;
  const double f0 = freq_from_current(current, rel);
  const Waveform flux{1e-9, std::vector<double>(300, current)};
  const ExperimentResult r = pi_scope(scope_spec(flux, f0 + 1.7e6, {0, 50e-9, 120e-9, 250e-9}), rel);
  const double bin = 5e6;
  for (Eigen::Index i = 0; i < r.values.rows(); ++i) {
    Eigen::Index j = 0;
    r.values.row(i).maxCoeff(&j);
    EXPECT_LE(std::abs(r.cols[j] - f0), bin) << i;
  }
  const FrequencyTrack tr = extract_trajectory(r, rel);
  for (std::size_t i = 0; i < tr.freq_hz.size(); ++i) {
    ASSERT_TRUE(tr.valid[i]);
    EXPECT_NEAR(tr.freq_hz[i], tr.freq_hz[0], 1.0);
    EXPECT_NEAR(tr.freq_hz[i] / f0, 1.0, 1e-3);
    EXPECT_NEAR(freq_from_current(tr.current_ma[i], rel), tr.freq_hz[i], 1e3);
  }
}

TEST(PiScope, StepIsResolvedWithinTheProbeLength) {
  const FluxRelation rel;
  const double i1 = 4.0, i2 = 5.0;
  const double f1 = freq_from_current(i1, rel), f2 = freq_from_current(i2, rel);
  Waveform flux{1e-9, std::vector<double>(400, i1)};
  for (std::size_t k = 200; k < 400; ++k) flux.samples[k] = i2;
  std::vector<double> delays;
  for (int d = 0; d <= 360; d += 4) delays.push_back(d * 1e-9);
  PiScopeSpec s;
  s.flux_ma = flux;
  s.delays_s = delays;
  for (double f = f2 - 100e6; f <= f1 + 100e6; f += 5e6) s.probe_freqs_hz.push_back(f);
  const FrequencyTrack tr = extract_trajectory(pi_scope(s, rel), rel);
  double last_low = -1.0, first_high = -1.0;
  for (std::size_t i = 0; i < delays.size(); ++i) {
    if (!tr.valid[i]) continue;
    const double t = delays[i];
    if (t + s.probe_len_s <= 200e-9) EXPECT_NEAR(tr.freq_hz[i] / f1, 1.0, 1e-3) << t;
    if (t >= 200e-9) EXPECT_NEAR(tr.freq_hz[i] / f2, 1.0, 1e-3) << t;
    if (std::abs(tr.freq_hz[i] - f1) < 0.1 * std::abs(f1 - f2)) last_low = t;
    if (first_high < 0.0 && std::abs(tr.freq_hz[i] - f2) < 0.1 * std::abs(f1 - f2)) first_high = t;
  }
  ASSERT_GE(last_low, 0.0);
  ASSERT_GE(first_high, 0.0);
  EXPECT_LE(first_high - last_low, s.probe_len_s + 4e-9);
}

TEST(PiScope, RejectsBadGrids) {
  const FluxRelation rel;
  PiScopeSpec s = scope_spec(Waveform{1e-9, std::vector<double>(50, 4.0)}, 5e9, {});
  EXPECT_EQ(code_of([&] { pi_scope(s, rel); }), ErrorCode::kInvalidArgument);
  s.delays_s = {0.0};
  s.probe_len_s = 0.5e-9;
  EXPECT_EQ(code_of([&] { pi_scope(s, rel); }), ErrorCode::kInvalidArgument);
}

// ------------------------------------------------------ vacuum Rabi

double fitted_frequency(const ExperimentResult& r, Eigen::Index row) {
  std::vector<double> y(r.cols.size());
  for (std::size_t j = 0; j < y.size(); ++j) y[j] = r.values(row, static_cast<Eigen::Index>(j));
  return fit_damped_oscillation(r.cols, y).freq_hz;
}

TEST(Chevron, ResonantAndDetunedFrequencies) {
  SystemParams p;
  const std::vector<double> det{-20e6, -10e6, 0.0, 10e6, 20e6};
  const std::vector<double> times = linspace(0.0, 300e-9, 301);
  const ExperimentResult r = vacuum_rabi_chevron(det, times, p, {3, 2}, false);
  for (std::size_t i = 0; i < det.size(); ++i) {
    const double expected = std::hypot(det[i], 2.0 * p.g_hz);
    EXPECT_NEAR(fitted_frequency(r, static_cast<Eigen::Index>(i)) / expected, 1.0,
                det[i] == 0.0 ? 0.01 : 0.02)
        << det[i];
  }
  EXPECT_NEAR(fitted_frequency(r, 2), 13.3e6, 0.133e6);
}

TEST(Chevron, SymmetricInDetuning) {
  const std::vector<double> det{-15e6, -4e6, 4e6, 15e6};
  const ExperimentResult r =
      vacuum_rabi_chevron(det, linspace(0.0, 200e-9, 81), SystemParams{}, {3, 2}, false);
  EXPECT_LT((r.values.row(0) - r.values.row(3)).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((r.values.row(1) - r.values.row(2)).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_EQ(code_of([] { vacuum_rabi_chevron({}, {1e-9}, SystemParams{}, {3, 2}, false); }),
            ErrorCode::kInvalidArgument);
}

// --------------------------------------------------------- Fock

TEST(Fock, SwapTimes) {
  const SystemParams p;
  EXPECT_NEAR(swap_time(p, 1), 37.6e-9, 0.5e-9);
  EXPECT_NEAR(swap_time(p, 1), kPi / (2 * kTwoPi * p.g_hz), 1e-15);
  EXPECT_NEAR(swap_time(p, 2) * std::sqrt(2.0), swap_time(p, 1), 1e-15);
}

TEST(Fock, NoiselessInstantPreparation) {
  const SystemParams p;
  FockOptions o;
  o.photons = 1;
  EXPECT_GE(prepare_fock(o, p, {6, 3}).fidelity, 0.995);
  o.photons = 2;
  EXPECT_GE(prepare_fock(o, p, {6, 3}).fidelity, 0.99);
  o.photons = 3;
  EXPECT_EQ(code_of([&] { prepare_fock(o, p, {6, 3}); }), ErrorCode::kInvalidArgument);
}

// ------------------------------------------------------ tomography

TEST(Wigner, DirectMatchesLaguerreFormula) {
  const GridSpec spec = GridSpec::square(2.5, 21);
  for (int n = 0; n < 4; ++n) {
    const TomographyGrid w = wigner_direct(fock_rho(n, 8), spec);
    const TomographyGrid ref =
        analytic_grid(spec, GridKind::kWigner, [n](cplx b) { return fock_wigner(n, b); });
    EXPECT_LT(max_abs_diff(w, ref), 1e-6) << n;
    w.validate();
  }
  const GridSpec origin{{0.0, 0.0, 1}, {0.0, 0.0, 1}};
  EXPECT_NEAR(wigner_direct(fock_rho(0, 4), origin).values(0, 0), 2.0 / kPi, 1e-6);
  EXPECT_NEAR(wigner_direct(fock_rho(1, 4), origin).values(0, 0), -2.0 / kPi, 1e-6);
  const cplx a(0.8, -0.5);
  const TomographyGrid wc = wigner_direct(coherent_rho(a, 20), spec);
  const TomographyGrid refc = analytic_grid(
      spec, GridKind::kWigner, [a](cplx b) { return 2.0 / kPi * std::exp(-2.0 * std::norm(b - a)); });
  EXPECT_LT(max_abs_diff(wc, refc), 1e-6);
}

TEST(CharFunc, DirectMatchesClosedForms) {
  const GridSpec spec = GridSpec::square(3.0, 25);
  const auto vac = charfunc_direct(fock_rho(0, 4), spec, CharPart::kRe);
  EXPECT_LT(max_abs_diff(vac, analytic_grid(spec, GridKind::kCharRe,
                                            [](cplx v) { return std::exp(-0.5 * std::norm(v)); })),
            1e-6);
  const auto one = charfunc_direct(fock_rho(1, 4), spec, CharPart::kRe);
  EXPECT_LT(max_abs_diff(one, analytic_grid(spec, GridKind::kCharRe,
                                            [](cplx v) {
                                              const double r2 = std::norm(v);
                                              return (1.0 - r2) * std::exp(-0.5 * r2);
                                            })),
            1e-6);
  const cplx a(1.1, 0.4);
  const auto im = charfunc_direct(coherent_rho(a, 25), spec, CharPart::kIm);
  EXPECT_LT(max_abs_diff(im, analytic_grid(spec, GridKind::kCharIm,
                                           [a](cplx v) {
                                             return std::exp(-0.5 * std::norm(v)) *
                                                    std::sin(2.0 * (v * std::conj(a)).imag());
                                           })),
            1e-6);
  const GridSpec origin{{0.0, 0.0, 1}, {0.0, 0.0, 1}};
  for (const auto& [name, rho] : reference_states())
    EXPECT_NEAR(charfunc_direct(rho, origin, CharPart::kRe).values(0, 0), 1.0, 1e-12) << name;
}

class ProtocolVsDirect : public ::testing::TestWithParam<double> {};

TEST_P(ProtocolVsDirect, Wigner) {
  const SpaceConfig cfg{12, 2};
  const DispersiveParams dp{GetParam(), 0.0, 0.0};
  const GridSpec spec = GridSpec::square(2.5, 21);
  for (const auto& [name, rho] : reference_states()) {
    const TomographyGrid proto = wigner_protocol(composite(rho, cfg), cfg, spec, dp);
    EXPECT_LT(max_abs_diff(proto, wigner_direct(rho, spec)), 0.01) << name;
    proto.validate();
  }
}

TEST_P(ProtocolVsDirect, CharacteristicIdealEcd) {
  const SpaceConfig cfg{12, 2};
  const DispersiveParams dp{GetParam(), 0.0, 0.0};
  const GridSpec spec = GridSpec::square(2.5, 21);
  for (const auto& [name, rho] : reference_states())
    for (CharPart part : {CharPart::kRe, CharPart::kIm}) {
      const TomographyGrid proto = charfunc_protocol(composite(rho, cfg), cfg, spec, part, dp);
      EXPECT_LT(max_abs_diff(proto, charfunc_direct(rho, spec, part)), 0.01) << name;
      proto.validate();
    }
}

TEST_P(ProtocolVsDirect, CharacteristicDecomposedEcdWithoutKerr) {
  const SpaceConfig cfg{12, 2};
  const DispersiveParams dp{GetParam(), 0.0, 0.0};
  const GridSpec spec = GridSpec::square(2.0, 9);
  EcdOptions ecd;
  ecd.mode = EcdMode::kDecomposed;
  const Operator rho = coherent_rho(cplx(0.6, 0.3), 12);
  for (CharPart part : {CharPart::kRe, CharPart::kIm}) {
    const TomographyGrid proto =
        charfunc_protocol(composite(rho, cfg), cfg, spec, part, dp, {}, ecd);
    EXPECT_LT(max_abs_diff(proto, charfunc_direct(rho, spec, part)), 1e-6);
  }
}

INSTANTIATE_TEST_SUITE_P(BothChiSigns, ProtocolVsDirect, ::testing::Values(1e6, -1e6));

TEST(Protocol, ZeroChiIsRejected) {
  const SpaceConfig cfg{6, 2};
  const QuantumState s = composite(fock_rho(0, 6), cfg);
  EXPECT_EQ(code_of([&] { wigner_protocol(s, cfg, GridSpec::square(1.0, 3), {}); }),
            ErrorCode::kInvalidArgument);
}

TEST(Protocol, EcdOperatorActsConditionally) {
  const SpaceConfig cfg{30, 2};
  const cplx nu(1.2, -0.7);
  const Operator u = ecd_operator(nu, cfg);
  EXPECT_LT((u * u.adjoint() - Operator::Identity(60, 60)).cwiseAbs().maxCoeff(), 1e-8);
  CVector g0 = CVector::Zero(60);
  g0(cfg.index(0, 0)) = 1.0;
  const CVector out = u * g0;
  const Operator expect_rho = coherent_rho(0.5 * nu, 30);
  for (int n = 0; n < 8; ++n) {
    EXPECT_NEAR(std::abs(out(cfg.index(n, 0))), 0.0, 1e-14);
    EXPECT_NEAR(std::norm(out(cfg.index(n, 1))), expect_rho(n, n).real(), 1e-8) << n;
  }
}

// ----------------------------------------------------- calibration

TEST(Calibration, RecoversAffineDistortions) {
  const std::vector<double> nu = linspace(-3.0, 3.0, 41);
  std::vector<double> ideal, distorted;
  for (double v : nu) {
    ideal.push_back(std::exp(-0.5 * v * v));
    distorted.push_back(0.8 * ideal.back() + 0.1);
  }
  const Calibration c0 = calibrate_vacuum(nu, ideal);
  EXPECT_NEAR(c0.scale, 1.0, 1e-8);
  EXPECT_NEAR(c0.offset, 0.0, 1e-8);
  EXPECT_NEAR(c0.sigma, 1.0, 1e-8);
  const Calibration c = calibrate_vacuum(nu, distorted);
  EXPECT_NEAR(c.scale, 0.8, 0.008);
  EXPECT_NEAR(c.offset, 0.1, 0.001);
  EXPECT_NEAR(c.apply(distorted[20]), 1.0, 0.01);
  EXPECT_EQ(code_of([&] { calibrate_vacuum(nu, std::vector<double>(nu.size(), 0.3)); }),
            ErrorCode::kFitFailure);
}

TEST(Calibration, ReadoutInfidelityBecomesScale) {
  const SpaceConfig cfg{12, 2};
  const GridSpec cut{{-3.0, 3.0, 31}, {0.0, 0.0, 1}};
  ProtocolOptions o;
  o.readout = ReadoutModel::symmetric(0.879);
  const TomographyGrid raw = charfunc_protocol(composite(fock_rho(0, 12), cfg), cfg, cut,
                                               CharPart::kRe, {1e6, 0.0, 0.0}, o);
  std::vector<double> y(raw.values.data(), raw.values.data() + raw.values.size());
  const Calibration c = calibrate_vacuum(cut.re.values(), y);
  EXPECT_NEAR(c.scale, 2 * 0.879 - 1, 0.01 * 0.758);
  EXPECT_NEAR(c.sigma, 1.0, 0.01);
  o.calibration = c;
  const TomographyGrid fixed = charfunc_protocol(composite(fock_rho(0, 12), cfg), cfg, cut,
                                                 CharPart::kRe, {1e6, 0.0, 0.0}, o);
  EXPECT_LT(max_abs_diff(fixed, charfunc_direct(fock_rho(0, 12), cut, CharPart::kRe)), 0.01);
}

// --------------------------------------------------- fidelity estimate

TEST(Fidelity, SelfOverlapAndOrthogonality) {
  const GridSpec spec = GridSpec::square(3.0, 61);
  const TomographyGrid vac = analytic_grid(spec, GridKind::kWigner,
                                           [](cplx b) { return fock_wigner(0, b); });
  EXPECT_NEAR(estimate_fidelity(vac, fock_rho(0, 6)), 1.0, 0.01);
  EXPECT_NEAR(estimate_fidelity(vac, fock_rho(1, 6)), 0.0, 0.01);
  const GridSpec cspec = GridSpec::square(5.0, 61);
  const TomographyGrid cvac = analytic_grid(
      cspec, GridKind::kCharRe, [](cplx v) { return std::exp(-0.5 * std::norm(v)); });
  EXPECT_NEAR(estimate_fidelity(cvac, fock_rho(0, 6)), 1.0, 0.01);
  EXPECT_NEAR(estimate_fidelity(cvac, fock_rho(1, 6)), 0.0, 0.01);
}

TEST(Fidelity, InsufficientCoverage) {
  const GridSpec spec = GridSpec::square(0.5, 11);
  const TomographyGrid w = analytic_grid(spec, GridKind::kWigner,
                                         [](cplx b) { return fock_wigner(1, b); });
  EXPECT_EQ(code_of([&] { estimate_fidelity(w, fock_rho(1, 6)); }),
            ErrorCode::kInsufficientCoverage);
}

TEST(Fidelity, StableUnderGridRefinement) {
  // A mixture measured against Fock 1; beyond 41x41 the estimate settles.
  const Operator mixed = 0.9 * fock_rho(1, 6) + 0.1 * fock_rho(0, 6);
  double last = NAN;
  for (std::size_t n : {41, 61, 81}) {
    const GridSpec spec = GridSpec::square(2.5, n);
    const TomographyGrid w = wigner_direct(mixed, spec);
    const double f = estimate_fidelity(w, fock_rho(1, 6));
    if (!std::isnan(last)) EXPECT_LT(std::abs(f - last), 0.005) << n;
    EXPECT_NEAR(f, 0.9, 0.01);
    last = f;
  }
}

// ---------------------------------------------- Kerr and dephasing

TEST(Kerr, NoKerrNoDecayIsIdentity) {
  KerrOptions o;
  o.noise = false;
  o.grid = GridSpec::square(2.0, 11);
  const KerrResult r = kerr_evolution(o, {1e6, 0.0, 0.0}, SystemParams{}, {30, 2});
  EXPECT_NEAR(r.aligned.fidelity, 1.0, 1e-6);
  EXPECT_NEAR(r.aligned.phase, 0.0, 1e-3);
  EXPECT_LT(r.distortion, 1e-6);
}

TEST(Walk, ZeroChiKeepsTheCoherentState) {
  WalkOptions o;
  o.chi_hz = 0.0;
  o.noise = false;
  o.grid = GridSpec::square(2.0, 11);
  const WalkResult r = dephasing_random_walk(o, SystemParams{}, {30, 2});
  EXPECT_GT(overlap_fidelity(
                [] {
                  const Operator c = coherent_rho(2.5, 30);
                  Eigen::SelfAdjointEigenSolver<Operator> es(c);
                  return CVector(es.eigenvectors().col(29));
                }(),
                r.cavity),
            1.0 - 1e-6);
  EXPECT_NEAR(r.contrast, fringe_contrast(coherent_rho(2.5, 30)), 1e-6);
  EXPECT_DOUBLE_EQ(r.step_phase, 0.0);
}

TEST(Walk, StepPhaseArithmetic) {
  WalkOptions o;
  o.cycles = 1;
  o.grid = GridSpec::square(1.0, 3);
  const WalkResult r = dephasing_random_walk(o, SystemParams{}, {30, 2});
  EXPECT_NEAR(r.step_phase, kTwoPi * 0.94e6 * 400e-9, 1e-12);
  EXPECT_NEAR(r.step_phase, 2.36, 0.005);
  o.cycles = 0;
  EXPECT_EQ(code_of([&] { dephasing_random_walk(o, SystemParams{}, {30, 2}); }),
            ErrorCode::kInvalidArgument);
}

TEST(Walk, ContrastVanishesForPhaseRandomisedStates) {
  Operator dephased = coherent_rho(2.0, 25);
  dephased = Operator(dephased.diagonal().asDiagonal());
  EXPECT_LT(fringe_contrast(dephased), 1e-10);
  EXPECT_GT(fringe_contrast(coherent_rho(2.0, 25)), 0.1);
  EXPECT_LT(fringe_contrast(fock_rho(3, 6)), 1e-10);
}

// -------------------------------------------------------- helpers

TEST(Helpers, SeedsAndSampling) {
  EXPECT_EQ(point_seed(7, 3), point_seed(7, 3));
  EXPECT_NE(point_seed(7, 3), point_seed(7, 4));
  EXPECT_NE(point_seed(7, 3), point_seed(8, 3));
  const double f = sample_fraction(0.3, 10000, 11);
  EXPECT_EQ(f, sample_fraction(0.3, 10000, 11));
  EXPECT_NEAR(f, 0.3, 5 * std::sqrt(0.21 / 10000));
  EXPECT_EQ(sample_fraction(0.0, 100, 1), 0.0);
  EXPECT_EQ(sample_fraction(1.0, 100, 1), 1.0);
}

TEST(Helpers, ShotNoiseIsReproducible) {
  const SpaceConfig cfg{8, 2};
  ProtocolOptions o;
  o.shots = 200;
  o.seed = 5;
  const GridSpec spec = GridSpec::square(1.5, 5);
  const QuantumState s = composite(fock_rho(1, 8), cfg);
  const TomographyGrid a = wigner_protocol(s, cfg, spec, {1e6, 0.0, 0.0}, o);
  const TomographyGrid b = wigner_protocol(s, cfg, spec, {1e6, 0.0, 0.0}, o);
  EXPECT_EQ(a.values, b.values);
  EXPECT_LT(max_abs_diff(a, wigner_direct(fock_rho(1, 8), spec)), 0.3);
}

TEST(Helpers, PaddingKeepsTheState) {
  const SpaceConfig cfg{4, 2};
  const QuantumState s = composite(fock_rho(2, 4), cfg);
  const QuantumState big = pad_cavity(s, cfg, 9);
  EXPECT_EQ(big.dim(), 18);
  EXPECT_NEAR(big.density()(SpaceConfig{9, 2}.index(2, 0), SpaceConfig{9, 2}.index(2, 0)).real(),
              1.0, 1e-15);
  EXPECT_GE(tomography_dim(3, 2.5), 3);
  EXPECT_GE(tomography_dim(3, 2.5), tomography_dim(3, 1.0));
}

TEST(Results, CsvRoundTrip) {
  TomographyGrid g = wigner_direct(fock_rho(1, 4), GridSpec::square(1.0, 5));
  const ExperimentResult r = to_result(g, "wigner");
  const ExperimentResult back = result_from_csv(result_to_csv(r));
  EXPECT_EQ(back.protocol, "wigner");
  EXPECT_EQ(back.rows, r.rows);
  EXPECT_EQ(back.cols, r.cols);
  EXPECT_EQ(back.values, r.values);
}

}  // namespace
}  // namespace fluxcqed
