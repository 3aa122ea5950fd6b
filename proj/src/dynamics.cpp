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

#include "fluxcqed/dynamics.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "fluxcqed/kvfile.hpp"

namespace fluxcqed {

namespace {

using SparseOp = Eigen::SparseMatrix<cplx>;

constexpr double kTraceDriftLimit = 1e-4;
constexpr double kGuardSamplesPerPeriod = 50.0;

SparseOp to_sparse(const Operator& m) {
  std::vector<Eigen::Triplet<cplx>> trip;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (m(i, j) != cplx(0.0)) trip.emplace_back(i, j, m(i, j));
  SparseOp s(m.rows(), m.cols());
  s.setFromTriplets(trip.begin(), trip.end());
  return s;
}

[[noreturn]] void integration_failure(const std::string& msg) {
  throw Error(ErrorCode::kIntegrationFailure, msg);
}

// Hamiltonian pieces for H(t) = H_static - 2 pi Delta b^dag b
//   + pi (Omega b^dag + h.c.) + pi (eps a^dag + h.c.).
struct HamiltonianParts {
  SparseOp coupling;  // g and anharmonic terms
  SparseOp nb, b, bd, a, ad;

  HamiltonianParts(const SystemParams& params, const SpaceConfig& cfg) {
    const Operator h0 = jc_hamiltonian(params, 0.0, cfg);
    const Operator bm = embed(annihilation_op(cfg.transmon_dim), Mode::kTransmon, cfg);
    const Operator am = embed(annihilation_op(cfg.cavity_dim), Mode::kCavity, cfg);
    coupling = to_sparse(h0);
    b = to_sparse(bm);
    bd = to_sparse(bm.adjoint());
    nb = to_sparse(bm.adjoint() * bm);
    a = to_sparse(am);
    ad = to_sparse(am.adjoint());
  }

  SparseOp at(double detuning_hz, cplx omega, cplx eps) const {
    SparseOp h = coupling - cplx(kTwoPi * detuning_hz) * nb;
    if (omega != cplx(0.0)) h += (kPi * omega) * bd + (kPi * std::conj(omega)) * b;
    if (eps != cplx(0.0)) h += (kPi * eps) * ad + (kPi * std::conj(eps)) * a;
    return h;
  }
};

// Lindblad right-hand side with effective non-Hermitian Hamiltonian.
class Liouvillian {
 public:
  explicit Liouvillian(const LindbladModel& model, Eigen::Index dim) {
    SparseOp gamma(dim, dim);
    for (const auto& t : model.terms) {
      if (t.rate < 0.0) {
        throw Error(ErrorCode::kInvalidParameters, "negative collapse rate");
      }
      if (t.rate == 0.0) continue;
      if (t.op.rows() != dim) {
        throw Error(ErrorCode::kDimensionMismatch, "collapse operator dimension mismatch");
      }
      SparseOp c = to_sparse(std::sqrt(t.rate) * t.op);
      jumps_.push_back(c);
      SparseOp cd = SparseOp(c.adjoint());
      gamma += cd * c;
    }
    half_gamma_ = cplx(0.0, 0.5) * gamma;
  }

  void set_hamiltonian(const SparseOp& h) { heff_ = h - half_gamma_; }

  // Sum of c rho c^dag only.
  Operator jumps(const Operator& rho) const {
    Operator out = Operator::Zero(rho.rows(), rho.cols());
    for (const auto& c : jumps_) {
      const Operator cr = c * rho;
      const Operator rcd = cr.adjoint();
      out.noalias() += c * rcd;
    }
    return out;
  }

  const SparseOp& heff() const { return heff_; }
  bool empty() const { return jumps_.empty(); }

 private:
  std::vector<SparseOp> jumps_;
  SparseOp half_gamma_;
  SparseOp heff_;
};

// x -> E x E^dag with E = exp(-i H_eff h/2); diagonal H_eff is applied
// elementwise.
class HalfStep {
 public:
  HalfStep(const SparseOp& heff, double h) {
    const Operator dense = Operator(heff);
    diagonal_ = dense.isDiagonal(0.0);
    if (diagonal_) {
      diag_ = (cplx(0.0, -0.5 * h) * dense.diagonal()).array().exp();
    } else {
      e_ = expm(cplx(0.0, -0.5 * h) * dense);
    }
  }

  Operator operator()(const Operator& x) const {
    if (diagonal_) return diag_.asDiagonal() * x * diag_.conjugate().asDiagonal();
    return e_ * x * e_.adjoint();
  }

 private:
  bool diagonal_ = false;
  CVector diag_;
  Operator e_;
};

// Integrating-factor RK4: the no-jump evolution is exact, RK4 only sees the
// jump terms.
void lawson_rk4(Operator& rho, const Liouvillian& rhs, const HalfStep& half, double h) {
  const Operator ya = half(rho);
  const Operator n1 = rhs.jumps(rho);
  const Operator n2 = rhs.jumps(ya + (0.5 * h) * half(n1));
  const Operator n3 = rhs.jumps(ya + (0.5 * h) * n2);
  const Operator n4 = rhs.jumps(half(ya) + h * half(n3));
  rho = half(half(rho + (h / 6.0) * n1) + (h / 3.0) * (n2 + n3)) + (h / 6.0) * n4;
}

// Upper bound on the spectral radius of a sparse Hermitian matrix.
double gershgorin_radius(const SparseOp& h) {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(h.rows());
  for (Eigen::Index j = 0; j < h.outerSize(); ++j)
    for (SparseOp::InnerIterator it(h, j); it; ++it) rows(it.row()) += std::abs(it.value());
  return rows.size() == 0 ? 0.0 : rows.maxCoeff();
}

void rk4_ket(CVector& psi, const SparseOp& h, double dt) {
  const cplx mi(0.0, -1.0);
  const CVector k1 = mi * (h * psi);
  const CVector k2 = mi * (h * (psi + (0.5 * dt) * k1));
  const CVector k3 = mi * (h * (psi + (0.5 * dt) * k2));
  const CVector k4 = mi * (h * (psi + dt * k3));
  psi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void check_density(const Operator& rho, double trace0, double t, bool full) {
  if (!rho.allFinite()) integration_failure("non-finite density matrix at t=" + format_double(t));
  const double tr = rho.trace().real();
  if (std::abs(tr - trace0) > kTraceDriftLimit) {
    integration_failure("trace drift " + format_double(tr - trace0) + " at t=" + format_double(t));
  }
  if (!full) return;
  if (!is_hermitian(rho, 1e-9)) integration_failure("density matrix lost Hermiticity");
  const double min_eig =
      Eigen::SelfAdjointEigenSolver<Operator>(rho, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  if (min_eig < -QuantumState::kPositivityTol) {
    integration_failure("density matrix eigenvalue " + format_double(min_eig) +
                        " below positivity tolerance at t=" + format_double(t));
  }
}

void check_ket(const CVector& psi, double t) {
  if (!psi.allFinite()) integration_failure("non-finite state vector at t=" + format_double(t));
  if (std::abs(psi.norm() - 1.0) > kTraceDriftLimit) {
    integration_failure("norm drift " + format_double(psi.norm() - 1.0) +
                        " at t=" + format_double(t));
  }
}

bool record_step(std::size_t step, std::size_t n, std::size_t stride) {
  if (step == n) return true;
  return stride != 0 && step % stride == 0;
}

cplx channel(const std::vector<cplx>& v, std::size_t k) { return v.empty() ? cplx(0.0) : v[k]; }

QuantumState run(const QuantumState& state, const PulseSchedule& sched,
                 const LindbladModel& model, const SystemParams& params,
                 const SpaceConfig& cfg, std::size_t stride, bool force_density,
                 const std::function<void(double, const QuantumState&, bool)>& sink) {
  sched.validate();
  sched.check_guard(params, cfg);
  cfg.validate();
  if (state.dim() != cfg.total_dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "initial state dimension " + std::to_string(state.dim()) +
                    " does not match the composite space " + std::to_string(cfg.total_dim()));
  }
  const HamiltonianParts parts(params, cfg);
  const std::size_t n = sched.size();
  const double dt = sched.dt_s;
  auto key_changed = [&](std::size_t k, std::size_t prev) {
    return sched.detuning_hz[k] != sched.detuning_hz[prev] ||
           channel(sched.transmon_drive_hz, k) != channel(sched.transmon_drive_hz, prev) ||
           channel(sched.cavity_drive_hz, k) != channel(sched.cavity_drive_hz, prev);
  };
  auto hamiltonian = [&](std::size_t k) {
    return parts.at(sched.detuning_hz[k], channel(sched.transmon_drive_hz, k),
                    channel(sched.cavity_drive_hz, k));
  };

  const bool density = force_density || !model.empty() || !state.is_pure();
  if (density) {
    Liouvillian rhs(model, cfg.total_dim());
    Operator rho = state.density();
    const double trace0 = rho.trace().real();
    if (stride != 0) sink(0.0, QuantumState::unchecked_mixed(rho), true);
    std::optional<HalfStep> half;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == 0 || key_changed(k, k - 1)) {
        rhs.set_hamiltonian(hamiltonian(k));
        half.emplace(rhs.heff(), dt);
      }
      lawson_rk4(rho, rhs, *half, dt);
      rho = 0.5 * (rho + rho.adjoint()).eval();
      const double t = static_cast<double>(k + 1) * dt;
      if (record_step(k + 1, n, stride)) {
        check_density(rho, trace0, t, true);
        sink(t, QuantumState::unchecked_mixed(rho), true);
      } else if ((k + 1) % 256 == 0) {
        check_density(rho, trace0, t, false);
      }
    }
    if (n == 0 && stride == 0) sink(0.0, QuantumState::unchecked_mixed(rho), true);
    return QuantumState::unchecked_mixed(rho);
  }

  CVector psi = state.ket();
  SparseOp h;
  int substeps = 1;
  if (stride != 0) sink(0.0, QuantumState::unchecked_pure(psi), true);
  for (std::size_t k = 0; k < n; ++k) {
    if (k == 0 || key_changed(k, k - 1)) {
      h = hamiltonian(k);
      // The guard only sees Delta, g and alpha; the step must also resolve
      // the largest eigenfrequency (Gershgorin bound) of the full H.
      const double fmax = gershgorin_radius(h) / kTwoPi;
      substeps = std::max(1, static_cast<int>(std::ceil(
                                 dt * kGuardSamplesPerPeriod * fmax * (1.0 - 1e-9))));
    }
    for (int j = 0; j < substeps; ++j) rk4_ket(psi, h, dt / substeps);
    const double t = static_cast<double>(k + 1) * dt;
    if (record_step(k + 1, n, stride)) {
      check_ket(psi, t);
      sink(t, QuantumState::unchecked_pure(psi), true);
    }
  }
  if (n == 0 && stride == 0) sink(0.0, QuantumState::unchecked_pure(psi), true);
  return QuantumState::unchecked_pure(psi);
}

}  // namespace

PulseSchedule PulseSchedule::constant(double detuning_hz, double duration_s, double dt_s) {
  if (!(dt_s > 0.0) || !(duration_s >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "PulseSchedule: dt must be positive, duration >= 0");
  }
  const auto n = static_cast<std::size_t>(std::llround(duration_s / dt_s));
  PulseSchedule s;
  s.dt_s = dt_s;
  s.detuning_hz.assign(n, detuning_hz);
  s.transmon_drive_hz.assign(n, cplx(0.0));
  s.cavity_drive_hz.assign(n, cplx(0.0));
  return s;
}

PulseSchedule& PulseSchedule::append(const PulseSchedule& other) {
  if (size() > 0 && other.size() > 0 && std::abs(other.dt_s - dt_s) > 1e-12 * dt_s) {
    throw Error(ErrorCode::kTimestepMismatch, "PulseSchedule::append: dt differs");
  }
  if (size() == 0) dt_s = other.dt_s;
  auto cat = [](auto& dst, const auto& src) { dst.insert(dst.end(), src.begin(), src.end()); };
  cat(detuning_hz, other.detuning_hz);
  cat(transmon_drive_hz, other.transmon_drive_hz);
  cat(cavity_drive_hz, other.cavity_drive_hz);
  return *this;
}

void PulseSchedule::validate() const {
  if (!(dt_s > 0.0) || !std::isfinite(dt_s)) {
    throw Error(ErrorCode::kInvalidArgument, "PulseSchedule: dt must be positive");
  }
  if (transmon_drive_hz.size() != size() || cavity_drive_hz.size() != size()) {
    throw Error(ErrorCode::kInvalidArgument, "PulseSchedule: channel lengths differ");
  }
  for (std::size_t k = 0; k < size(); ++k) {
    if (!std::isfinite(detuning_hz[k]) || !std::isfinite(std::abs(transmon_drive_hz[k])) ||
        !std::isfinite(std::abs(cavity_drive_hz[k]))) {
      throw Error(ErrorCode::kInvalidArgument,
                  "PulseSchedule: non-finite sample " + std::to_string(k));
    }
  }
}

void PulseSchedule::check_guard(const SystemParams& params, const SpaceConfig& cfg) const {
  double fmax = params.g_hz;
  if (cfg.transmon_dim > 2) fmax = std::max(fmax, params.alpha_hz);
  for (double d : detuning_hz) fmax = std::max(fmax, std::abs(d));
  if (fmax <= 0.0) return;
  const double limit = 1.0 / (kGuardSamplesPerPeriod * fmax);
  if (dt_s > limit * (1.0 + 1e-9)) {
    throw Error(ErrorCode::kInvalidArgument,
                "PulseSchedule: dt=" + format_double(dt_s) + " s exceeds the accuracy guard " +
                    format_double(limit) + " s");
  }
}

Trajectory evolve_master(const QuantumState& rho0, const PulseSchedule& sched,
                         const LindbladModel& model, const SystemParams& params,
                         const SpaceConfig& cfg, std::size_t stride) {
  Trajectory traj;
  run(rho0, sched, model, params, cfg, stride, true,
      [&](double t, const QuantumState& s, bool) {
        traj.times.push_back(t);
        traj.states.push_back(s);
      });
  return traj;
}

Trajectory evolve_unitary(const QuantumState& psi0, const PulseSchedule& sched,
                          const SystemParams& params, const SpaceConfig& cfg,
                          std::size_t stride) {
  if (!psi0.is_pure()) {
    throw Error(ErrorCode::kInvalidArgument, "evolve_unitary: initial state must be pure");
  }
  Trajectory traj;
  run(psi0, sched, LindbladModel{}, params, cfg, stride, false,
      [&](double t, const QuantumState& s, bool) {
        traj.times.push_back(t);
        traj.states.push_back(s);
      });
  return traj;
}

QuantumState evolve_observed(const QuantumState& state, const PulseSchedule& sched,
                             const LindbladModel& model, const SystemParams& params,
                             const SpaceConfig& cfg, std::size_t stride,
                             const Observer& observer) {
  return run(state, sched, model, params, cfg, stride == 0 ? 1 : stride, false,
             [&](double t, const QuantumState& s, bool) { observer(t, s); });
}

QuantumState evolve_static(const QuantumState& state, const Operator& h,
                           const LindbladModel& model, double duration_s, double max_dt_s) {
  if (!(duration_s >= 0.0) || !(max_dt_s > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "evolve_static: bad duration or step");
  }
  if (h.rows() != state.dim() || h.cols() != state.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "evolve_static: Hamiltonian dimension mismatch");
  }
  if (duration_s == 0.0) return state;
  Liouvillian rhs(model, h.rows());
  if (rhs.empty()) {
    const Operator u = unitary_propagator(h, duration_s);
    return apply_unitary(state, u);
  }
  // Jump terms oscillate at most at the spectral spread of H; bound it
  // (Gershgorin) together with the total decay rate.
  double lo = 0.0, hi = 0.0;
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    const double radius = h.row(i).cwiseAbs().sum() - std::abs(h(i, i));
    lo = std::min(lo, h(i, i).real() - radius);
    hi = std::max(hi, h(i, i).real() + radius);
  }
  double rate = 0.0;
  for (const auto& t : model.terms) rate += t.rate * max_abs(t.op.adjoint() * t.op);
  const double fmax = (hi - lo + rate) / kTwoPi;
  constexpr double kJumpSamplesPerPeriod = 10.0;
  const double steps = std::max(std::ceil(duration_s / max_dt_s),
                                std::ceil(duration_s * kJumpSamplesPerPeriod * fmax));
  const auto n = static_cast<std::size_t>(std::max(1.0, steps));
  const double dt = duration_s / static_cast<double>(n);
  rhs.set_hamiltonian(to_sparse(h));
  const HalfStep half(rhs.heff(), dt);
  Operator rho = state.density();
  const double trace0 = rho.trace().real();
  for (std::size_t k = 0; k < n; ++k) {
    lawson_rk4(rho, rhs, half, dt);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    if ((k + 1) % 256 == 0) check_density(rho, trace0, (k + 1) * dt, false);
  }
  check_density(rho, trace0, duration_s, true);
  return QuantumState::unchecked_mixed(rho);
}

Operator gate_operator(const Gate& gate, const SpaceConfig& cfg) {
  cfg.validate();
  if (const auto* d = std::get_if<Displacement>(&gate)) {
    return embed(displacement_op(d->beta, cfg.cavity_dim), Mode::kCavity, cfg);
  }
  Eigen::Matrix2cd u;
  std::visit(
      [&](const auto& g) {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, RotationY>) {
          const double c = std::cos(0.5 * g.theta), s = std::sin(0.5 * g.theta);
          u << c, -s, s, c;
        } else if constexpr (std::is_same_v<T, RotationX>) {
          const double c = std::cos(0.5 * g.theta), s = std::sin(0.5 * g.theta);
          u << c, cplx(0, -s), cplx(0, -s), c;
        } else if constexpr (std::is_same_v<T, RotationXY>) {
          const double c = std::cos(0.5 * g.theta), s = std::sin(0.5 * g.theta);
          u << c, cplx(0, -s) * std::exp(cplx(0, -g.phi)), cplx(0, -s) * std::exp(cplx(0, g.phi)),
              c;
        } else if constexpr (std::is_same_v<T, PhaseRotation>) {
          u << std::exp(cplx(0, -0.5 * g.phi)), 0.0, 0.0, std::exp(cplx(0, 0.5 * g.phi));
        }
      },
      gate);
  Operator t = identity_op(cfg.transmon_dim);
  t.topLeftCorner(2, 2) = u;
  return embed(t, Mode::kTransmon, cfg);
}

QuantumState apply_unitary(const QuantumState& state, const Operator& u) {
  if (u.rows() != state.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "apply_unitary: dimension mismatch");
  }
  if (state.is_pure()) return QuantumState::unchecked_pure(u * state.ket());
  return QuantumState::unchecked_mixed(u * state.density() * u.adjoint());
}

QuantumState apply_gate(const QuantumState& state, const Gate& gate, const SpaceConfig& cfg) {
  return apply_unitary(state, gate_operator(gate, cfg));
}

ReadoutModel ReadoutModel::symmetric(double fidelity) {
  ReadoutModel m{1.0 - fidelity, 1.0 - fidelity};
  m.validate();
  return m;
}

void ReadoutModel::validate() const {
  auto ok = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!ok(p_e_given_g) || !ok(p_g_given_e)) {
    throw Error(ErrorCode::kInvalidParameters, "ReadoutModel: probabilities must lie in [0, 1]");
  }
}

Operator ground_projector(const SpaceConfig& cfg) {
  Operator p = Operator::Zero(cfg.transmon_dim, cfg.transmon_dim);
  p(0, 0) = 1.0;
  return embed(p, Mode::kTransmon, cfg);
}

Measurement measure_transmon(const QuantumState& state, const ReadoutModel& readout,
                             const SpaceConfig& cfg) {
  readout.validate();
  if (state.dim() != cfg.total_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "measure_transmon: dimension mismatch");
  }
  const Operator pg = ground_projector(cfg);
  const Operator pe = identity_op(cfg.total_dim()) - pg;
  Measurement m;
  const double total = state.trace();
  m.p_g_ideal = std::clamp(expectation(pg, state).real() / total, 0.0, 1.0);
  m.p_e_ideal = 1.0 - m.p_g_ideal;
  m.p_g = (1.0 - readout.p_e_given_g) * m.p_g_ideal + readout.p_g_given_e * m.p_e_ideal;
  m.p_e = 1.0 - m.p_g;
  auto branch = [&](const Operator& p, double prob) -> std::optional<QuantumState> {
    if (prob < 1e-14) return std::nullopt;
    if (state.is_pure()) {
      CVector v = p * state.ket();
      return QuantumState::unchecked_pure(v / v.norm());
    }
    Operator r = p * state.density() * p;
    return QuantumState::unchecked_mixed(r / r.trace().real());
  };
  m.post_g = branch(pg, m.p_g_ideal);
  m.post_e = branch(pe, m.p_e_ideal);
  return m;
}

}  // namespace fluxcqed
