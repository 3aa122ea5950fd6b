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

#include "fluxcqed/system.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

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

// Closed-form inverse of the flux curve on the principal branch.
double current_closed_form(double f, const FluxRelation& rel) {
  const double a = rel.params.alpha_hz;
  const double ratio = (f + a) / (rel.params.omega_t_max_hz + a);
  return std::acos(ratio * ratio) / (kPi * rel.k_phi0_per_ma);
}

TEST(FluxCurve, ReferenceValues) {
  const FluxRelation rel;
  EXPECT_NEAR(freq_from_current(0.0, rel), 6.409e9, 1e-3);
  // sqrt|cos| near its zero turns the rounding of cos(pi/2) into ~50 Hz.
  EXPECT_NEAR(freq_from_current(0.5 / rel.k_phi0_per_ma, rel), -200e6, 1e-8 * 6.609e9);
  EXPECT_NEAR(0.5 / rel.k_phi0_per_ma, 12.82, 0.01);
  const double i_res = current_closed_form(5.740e9, rel);
  EXPECT_NEAR(i_res, 5.138, 0.01);
  EXPECT_NEAR(freq_from_current(i_res, rel), 5.740e9, 1e-3);
  EXPECT_NEAR(current_from_freq(5.740e9, rel), i_res, 1e-9);
  EXPECT_NEAR(current_from_freq(6.409e9, rel), 0.0, 1e-9);
}

TEST(FluxCurve, EvenAndPeriodic) {
  const FluxRelation rel;
  for (double i = -30.0; i <= 30.0; i += 0.37) {
    const double f = freq_from_current(i, rel);
    EXPECT_NEAR(freq_from_current(-i, rel), f, 1e-9 * std::abs(f) + 1e-6);
    EXPECT_NEAR(freq_from_current(i + rel.period_ma(), rel), f, 1e-9 * std::abs(f) + 1e-6);
  }
}

TEST(FluxCurve, RoundTrip) {
  const FluxRelation rel;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> freq(-200e6, 6.409e9);
  for (int k = 0; k < 100; ++k) {
    const double f = freq(rng);
    const double i = current_from_freq(f, rel);
    EXPECT_GE(i, 0.0);
    EXPECT_LE(i, 0.5 * rel.period_ma() + 1e-12);
    EXPECT_NEAR(freq_from_current(i, rel), f, 1e3);
  }
}

TEST(FluxCurve, OutOfRange) {
  const FluxRelation rel;
  EXPECT_EQ(code_of([&] { current_from_freq(6.5e9, rel); }), ErrorCode::kOutOfRange);
  EXPECT_EQ(code_of([&] { current_from_freq(-300e6, rel); }), ErrorCode::kOutOfRange);
}

TEST(Hamiltonian, ZeroCouplingZeroDetuning) {
  SystemParams p;
  p.g_hz = 0.0;
  p.alpha_hz = 0.0;
  EXPECT_EQ(max_abs(jc_hamiltonian(p, 0.0, SpaceConfig{4, 3})), 0.0);
}

TEST(Hamiltonian, ResonantGapIsTwoG) {
  const SystemParams p;
  const SpaceConfig cfg{3, 2};
  const Operator h = jc_hamiltonian(p, 0.0, cfg);
  // Single-excitation block {|1,g>, |0,e>}: [[0, g], [g, 0]] in rad/s.
  Eigen::Matrix2cd block;
  block << h(cfg.index(1, 0), cfg.index(1, 0)), h(cfg.index(1, 0), cfg.index(0, 1)),
      h(cfg.index(0, 1), cfg.index(1, 0)), h(cfg.index(0, 1), cfg.index(0, 1));
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(block);
  const double gap_hz = (es.eigenvalues()(1) - es.eigenvalues()(0)) / kTwoPi;
  EXPECT_NEAR(gap_hz, 2.0 * 6.65e6, 1e-3);
}

TEST(Hamiltonian, HermitianForRandomParameters) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 10; ++k) {
    SystemParams p;
    p.g_hz = 20e6 * u(rng);
    p.alpha_hz = 300e6 * u(rng);
    const Operator h = jc_hamiltonian(p, 400e6 * (u(rng) - 0.5), SpaceConfig{5, 4});
    EXPECT_TRUE(is_hermitian(h, 1e-12 * max_abs(h)));
  }
}

TEST(Hamiltonian, ConservesExcitationsWithoutAnharmonicity) {
  SystemParams p;
  p.alpha_hz = 0.0;
  const SpaceConfig cfg{5, 4};
  const Operator h = jc_hamiltonian(p, 37e6, cfg);
  const Operator n_tot = embed(number_op(5), Mode::kCavity, cfg) +
                         embed(number_op(4), Mode::kTransmon, cfg);
  EXPECT_LT(max_abs(h * n_tot - n_tot * h), 1e-10 * max_abs(h));
}

TEST(Dispersive, MatrixElements) {
  const SpaceConfig cfg{4, 2};
  EXPECT_EQ(max_abs(dispersive_hamiltonian({}, cfg)), 0.0);
  const Operator h = dispersive_hamiltonian({1.2e6, 3e3, 0.0}, cfg);
  EXPECT_NEAR(h(cfg.index(1, 1), cfg.index(1, 1)).real(), -kTwoPi * 1.2e6, 1e-6);
  EXPECT_NEAR(h(cfg.index(2, 0), cfg.index(2, 0)).real(), -kTwoPi * 3e3, 1e-9);
  EXPECT_TRUE(is_hermitian(h, 0.0));
}

TEST(Dispersive, ConditionalPhaseAdvance) {
  const SpaceConfig cfg{25, 2};
  const double chi = 0.94e6;
  const double t = 123e-9;
  const Operator u = unitary_propagator(dispersive_hamiltonian({chi, 0.0, 0.0}, cfg), t);
  const cplx alpha(1.5, 0.0);
  const QuantumState in = tensor(coherent_state(alpha, 25), fock_state(1, 2));
  const CVector out = u * in.ket();
  const cplx a = expectation(embed(annihilation_op(25), Mode::kCavity, cfg),
                             QuantumState::unchecked_pure(out));
  const double phase = std::arg(a / alpha);
  EXPECT_NEAR(std::remainder(phase - kTwoPi * chi * t, kTwoPi), 0.0, 1e-9);
  EXPECT_NEAR(std::abs(a), 1.5, 1e-9);
}

TEST(ChiKerr, TableValues) {
  const SystemParams p;
  const SpaceConfig cfg{30, 3};
  const DispersiveParams b = extract_chi_kerr(p, 63e6, cfg);
  EXPECT_GT(b.kerr_hz, 3e3);
  EXPECT_LT(b.kerr_hz, 12e3);
  const DispersiveParams a = extract_chi_kerr(p, 35e6, cfg);
  EXPECT_NEAR(a.chi_hz, 1.67e6, 0.5 * 1.67e6);
  EXPECT_GT(a.chi_hz, 0.0);
}

TEST(ChiKerr, DecoupledModes) {
  SystemParams p;
  p.g_hz = 0.0;
  const DispersiveParams dp = extract_chi_kerr(p, 63e6, SpaceConfig{6, 3});
  EXPECT_NEAR(dp.chi_hz, 0.0, 1.0);
  EXPECT_NEAR(dp.kerr_hz, 0.0, 1.0);
}

TEST(ChiKerr, PerturbativeLimit) {
  const SystemParams p;
  for (double det : {10 * p.g_hz, 15 * p.g_hz, 196e6, 596e6}) {
    const DispersiveParams dp = extract_chi_kerr(p, det, SpaceConfig{8, 4});
    const double oracle = 2.0 * p.g_hz * p.g_hz * p.alpha_hz / (det * (det + p.alpha_hz));
    EXPECT_NEAR(dp.chi_hz / oracle, 1.0, 0.10) << det;
    EXPECT_NEAR(perturbative_chi(p, det), oracle, 1e-9 * oracle);
  }
}

TEST(ChiKerr, MonotoneOverTable) {
  const SystemParams p;
  double last_chi = INFINITY, last_k = INFINITY;
  for (const FluxPoint& fp : reference_flux_points()) {
    const DispersiveParams dp = extract_chi_kerr(p, fp.detuning_hz, SpaceConfig{12, 3});
    EXPECT_LT(dp.chi_hz, last_chi) << fp.label;
    EXPECT_LT(dp.kerr_hz, last_k) << fp.label;
    last_chi = dp.chi_hz;
    last_k = dp.kerr_hz;
  }
}

TEST(ChiKerr, WarnsInsideResonance) {
  Warnings w;
  const SystemParams p;
  try {
    extract_chi_kerr(p, 5e6, SpaceConfig{6, 3}, &w);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateLabeling);
  }
  EXPECT_FALSE(w.empty());
}

TEST(ChiKerr, DegenerateLabelingAtResonance) {
  const SystemParams p;
  EXPECT_EQ(code_of([&] { extract_chi_kerr(p, 0.0, SpaceConfig{6, 3}); }),
            ErrorCode::kDegenerateLabeling);
}

TEST(Collapse, Rates) {
  SystemParams p;
  const SpaceConfig cfg{4, 3};
  EXPECT_NEAR(pure_dephasing_time(p), 2.142857e-6, 1e-11);
  LindbladModel m = collapse_operators(p, cfg);
  ASSERT_EQ(m.terms.size(), 3u);
  EXPECT_NEAR(m.terms[0].rate, 1.0 / 200e-6, 1e-9);
  EXPECT_NEAR(m.terms[1].rate, 1.0 / 15e-6, 1e-9);
  EXPECT_NEAR(m.terms[2].rate, 2.0 / 2.142857142857e-6, 1e-3);

  p.t2_transmon_s = 2.0 * p.t1_transmon_s;
  EXPECT_EQ(collapse_operators(p, cfg).terms.size(), 2u);
  EXPECT_TRUE(collapse_operators(p.without_noise(), cfg).empty());

  p.t2_transmon_s = 2.1 * p.t1_transmon_s;
  EXPECT_EQ(code_of([&] { collapse_operators(p, cfg); }), ErrorCode::kInvalidParameters);
}

TEST(Params, KeyRoundTrip) {
  SystemParams p;
  p.g_hz = 7.30e6;
  p.t2_transmon_s = 0.5e-6;
  const SystemParams q = params_from_keys(params_to_keys(p));
  EXPECT_EQ(q.g_hz, p.g_hz);
  EXPECT_EQ(q.t2_transmon_s, p.t2_transmon_s);
  EXPECT_EQ(q.omega_c_hz, p.omega_c_hz);
}

TEST(Params, InvalidValuesAreConfigErrors) {
  KeyValues kv;
  kv.set("g_hz", -1.0);
  EXPECT_EQ(code_of([&] { params_from_keys(kv); }), ErrorCode::kConfig);
  KeyValues bad = KeyValues::parse("alpha_hz = lots\n");
  EXPECT_EQ(code_of([&] { params_from_keys(bad); }), ErrorCode::kConfig);
}

TEST(FluxPoints, SixLabelledPoints) {
  const auto& pts = reference_flux_points();
  ASSERT_EQ(pts.size(), 6u);
  EXPECT_EQ(pts.front().label, 'A');
  EXPECT_EQ(flux_point('B').detuning_hz, 63e6);
  EXPECT_EQ(code_of([] { flux_point('Z'); }), ErrorCode::kConfig);
}

}  // namespace
}  // namespace fluxcqed
