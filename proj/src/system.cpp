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

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace fluxcqed {

void SystemParams::validate() const {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::kInvalidParameters, "SystemParams: " + msg);
  };
  if (!(omega_t_max_hz > omega_c_hz)) fail("omega_t_max_hz must exceed omega_c_hz");
  if (!(alpha_hz >= 0.0)) fail("alpha_hz must be non-negative");
  if (!(g_hz >= 0.0)) fail("g_hz must be non-negative");
  if (noiseless) return;
  if (!(t1_transmon_s > 0.0 && t2_transmon_s > 0.0 && t1_cavity_s > 0.0))
    fail("coherence times must be positive");
  // Small relative slack so that T2 = 2 T1 is accepted exactly.
  if (t2_transmon_s > 2.0 * t1_transmon_s * (1.0 + 1e-12))
    fail("t2_transmon_s exceeds 2 * t1_transmon_s");
}

void FluxRelation::validate() const {
  if (!(k_phi0_per_ma > 0.0)) {
    throw Error(ErrorCode::kInvalidParameters, "FluxRelation: k must be positive");
  }
}

double freq_from_current(double current_ma, const FluxRelation& rel) {
  const SystemParams& p = rel.params;
  const double c = std::abs(std::cos(kPi * rel.k_phi0_per_ma * current_ma));
  return (p.omega_t_max_hz + p.alpha_hz) * std::sqrt(c) - p.alpha_hz;
}

double current_from_freq(double freq_hz, const FluxRelation& rel) {
  rel.validate();
  const SystemParams& p = rel.params;
  if (!(freq_hz >= -p.alpha_hz && freq_hz <= p.omega_t_max_hz)) {
    throw Error(ErrorCode::kOutOfRange,
                "current_from_freq: " + format_double(freq_hz) +
                    " Hz outside [-alpha, omega_t_max]");
  }
  const double ratio = (freq_hz + p.alpha_hz) / (p.omega_t_max_hz + p.alpha_hz);
  const double c = std::clamp(ratio * ratio, 0.0, 1.0);
  return std::acos(c) / (kPi * rel.k_phi0_per_ma);
}

Operator jc_hamiltonian(const SystemParams& params, double detuning_hz,
                        const SpaceConfig& cfg) {
  cfg.validate();
  const Operator a = embed(annihilation_op(cfg.cavity_dim), Mode::kCavity, cfg);
  const Operator b = embed(annihilation_op(cfg.transmon_dim), Mode::kTransmon, cfg);
  const Operator bd = b.adjoint();
  const Operator nb = bd * b;
  Operator h = -kTwoPi * detuning_hz * nb;
  h += kTwoPi * params.g_hz * (a.adjoint() * b + a * bd);
  h -= 0.5 * kTwoPi * params.alpha_hz * (bd * bd * b * b);
  return h;
}

Operator dispersive_hamiltonian(const DispersiveParams& dp, const SpaceConfig& cfg) {
  cfg.validate();
  // Diagonal in the bare basis; fill it directly.
  const int d = cfg.total_dim();
  Operator h = Operator::Zero(d, d);
  for (int n = 0; n < cfg.cavity_dim; ++n)
    for (int q = 0; q < cfg.transmon_dim; ++q) {
      const double nn = n;
      const double e = -dp.chi_hz * nn * q - 0.5 * dp.kerr_hz * nn * (nn - 1.0);
      h(cfg.index(n, q), cfg.index(n, q)) = kTwoPi * e;
    }
  return h;
}

DressedLevels dressed_levels(const SystemParams& params, double detuning_hz,
                             const SpaceConfig& cfg, int max_photon, int max_level) {
  if (max_photon + 1 >= cfg.cavity_dim || max_level >= cfg.transmon_dim) {
    throw Error(ErrorCode::kInvalidDimension,
                "dressed_levels: truncation too small for requested labels");
  }
  const Operator h = jc_hamiltonian(params, detuning_hz, cfg);
  Eigen::SelfAdjointEigenSolver<Operator> es(h);
  const Eigen::VectorXd& e = es.eigenvalues();
  const Operator& v = es.eigenvectors();

  DressedLevels out;
  out.energy_hz.assign(max_photon + 1, std::vector<double>(max_level + 1, 0.0));
  out.overlap.assign(max_photon + 1, std::vector<double>(max_level + 1, 0.0));
  std::vector<int> owner(e.size(), -1);
  for (int n = 0; n <= max_photon; ++n)
    for (int q = 0; q <= max_level; ++q) {
      const int row = cfg.index(n, q);
      Eigen::Index best = 0;
      const double ov = v.row(row).cwiseAbs2().maxCoeff(&best);
      if (ov < 0.5 || owner[best] >= 0) {
        throw Error(ErrorCode::kDegenerateLabeling,
                    "dressed_levels: cannot label |" + std::to_string(n) + "," +
                        std::to_string(q) + "> at detuning " +
                        format_double(detuning_hz) + " Hz (max overlap " +
                        format_double(ov) + ")");
      }
      owner[best] = row;
      out.energy_hz[n][q] = e(best) / kTwoPi;
      out.overlap[n][q] = ov;
    }
  return out;
}

DispersiveParams extract_chi_kerr(const SystemParams& params, double detuning_hz,
                                  const SpaceConfig& cfg, Warnings* warnings) {
  if (std::abs(detuning_hz) <= 2.0 * params.g_hz) {
    warn(warnings, "extract_chi_kerr: |detuning| <= 2g, dispersive picture not valid");
  }
  const DressedLevels lv = dressed_levels(params, detuning_hz, cfg, 2, 1);
  DispersiveParams dp;
  dp.detuning_hz = detuning_hz;
  dp.chi_hz = (lv.energy(1, 0) - lv.energy(0, 0)) - (lv.energy(1, 1) - lv.energy(0, 1));
  dp.kerr_hz = -(lv.energy(2, 0) - 2.0 * lv.energy(1, 0) + lv.energy(0, 0));
  return dp;
}

double perturbative_chi(const SystemParams& params, double detuning_hz) {
  const double g = params.g_hz;
  return 2.0 * g * g * params.alpha_hz /
         (detuning_hz * (detuning_hz + params.alpha_hz));
}

double pure_dephasing_time(const SystemParams& params) {
  const double rate = 1.0 / params.t2_transmon_s - 0.5 / params.t1_transmon_s;
  if (rate <= 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / rate;
}

LindbladModel collapse_operators(const SystemParams& params, const SpaceConfig& cfg) {
  params.validate();
  cfg.validate();
  LindbladModel model;
  if (params.noiseless) return model;
  const Operator a = embed(annihilation_op(cfg.cavity_dim), Mode::kCavity, cfg);
  const Operator b = embed(annihilation_op(cfg.transmon_dim), Mode::kTransmon, cfg);
  model.terms.push_back({a, 1.0 / params.t1_cavity_s, "cavity_decay"});
  model.terms.push_back({b, 1.0 / params.t1_transmon_s, "transmon_decay"});
  const double t_phi = pure_dephasing_time(params);
  if (std::isfinite(t_phi)) {
    model.terms.push_back({b.adjoint() * b, 2.0 / t_phi, "transmon_dephasing"});
  }
  return model;
}

const std::array<FluxPoint, 6>& reference_flux_points() {
  static const std::array<FluxPoint, 6> points = {{
      {'A', 35e6, 1.67e6, 5.705e9, 5.696e9, 44e3},
      {'B', 63e6, 0.94e6, 5.677e9, 5.662e9, 6e3},
      {'C', 101e6, 0.57e6, 5.639e9, 5.635e9, 1.9e3},
      {'D', 146e6, 0.29e6, 5.594e9, 5.547e9, 0.19e3},
      {'E', 196e6, 0.18e6, 5.544e9, 5.492e9, 0.09e3},
      {'F', 596e6, 0.05e6, 5.144e9, 5.214e9, 0.005e3},
  }};
  return points;
}

const FluxPoint& flux_point(char label) {
  for (const auto& p : reference_flux_points())
    if (p.label == label) return p;
  throw Error(ErrorCode::kConfig,
              std::string("unknown flux point label '") + label + "' (expected A-F)");
}

SystemParams params_from_keys(const KeyValues& kv) {
  SystemParams p;
  p.omega_c_hz = kv.get_double("omega_c_hz", p.omega_c_hz);
  p.omega_t_max_hz = kv.get_double("omega_t_max_hz", p.omega_t_max_hz);
  p.alpha_hz = kv.get_double("alpha_hz", p.alpha_hz);
  p.g_hz = kv.get_double("g_hz", p.g_hz);
  p.t1_transmon_s = kv.get_double("t1_transmon_s", p.t1_transmon_s);
  p.t2_transmon_s = kv.get_double("t2_transmon_s", p.t2_transmon_s);
  p.t1_cavity_s = kv.get_double("t1_cavity_s", p.t1_cavity_s);
  p.noiseless = kv.get_bool("noiseless", p.noiseless);
  try {
    p.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  return p;
}

FluxRelation flux_relation_from_keys(const KeyValues& kv) {
  FluxRelation rel;
  rel.params = params_from_keys(kv);
  rel.k_phi0_per_ma = kv.get_double("k_phi0_per_ma", rel.k_phi0_per_ma);
  if (!(rel.k_phi0_per_ma > 0.0)) {
    throw Error(ErrorCode::kConfig, "key 'k_phi0_per_ma' must be positive");
  }
  return rel;
}

KeyValues params_to_keys(const SystemParams& p) {
  KeyValues kv;
  kv.set("omega_c_hz", p.omega_c_hz);
  kv.set("omega_t_max_hz", p.omega_t_max_hz);
  kv.set("alpha_hz", p.alpha_hz);
  kv.set("g_hz", p.g_hz);
  kv.set("t1_transmon_s", p.t1_transmon_s);
  kv.set("t2_transmon_s", p.t2_transmon_s);
  kv.set("t1_cavity_s", p.t1_cavity_s);
  kv.set("noiseless", p.noiseless ? "true" : "false");
  return kv;
}

}  // namespace fluxcqed
