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

#include "fluxcqed/hilbert.hpp"

#include <cmath>
#include <string>

namespace fluxcqed {

namespace {

void require_dim(int dim, const char* where) {
  if (dim < 2) {
    throw Error(ErrorCode::kInvalidDimension,
                std::string(where) + ": dimension must be >= 2, got " +
                    std::to_string(dim));
  }
}

}  // namespace

void SpaceConfig::validate() const {
  if (cavity_dim < 2 || transmon_dim < 2) {
    throw Error(ErrorCode::kInvalidDimension,
                "SpaceConfig: cavity_dim and transmon_dim must be >= 2 (got " +
                    std::to_string(cavity_dim) + ", " +
                    std::to_string(transmon_dim) + ")");
  }
}

QuantumState QuantumState::pure(CVector psi) {
  QuantumState s(std::move(psi));
  s.validate();
  return s;
}

QuantumState QuantumState::mixed(Operator rho) {
  QuantumState s(std::move(rho));
  s.validate();
  return s;
}

QuantumState QuantumState::unchecked_pure(CVector psi) {
  return QuantumState(std::move(psi));
}

QuantumState QuantumState::unchecked_mixed(Operator rho) {
  return QuantumState(std::move(rho));
}

Eigen::Index QuantumState::dim() const {
  if (const auto* v = std::get_if<CVector>(&data_)) return v->size();
  return std::get<Operator>(data_).rows();
}

const CVector& QuantumState::ket() const {
  if (const auto* v = std::get_if<CVector>(&data_)) return *v;
  throw Error(ErrorCode::kInvalidArgument, "QuantumState: state is mixed");
}

Operator QuantumState::density() const {
  if (const auto* v = std::get_if<CVector>(&data_)) return (*v) * v->adjoint();
  return std::get<Operator>(data_);
}

double QuantumState::trace() const {
  if (const auto* v = std::get_if<CVector>(&data_)) return v->squaredNorm();
  return std::get<Operator>(data_).trace().real();
}

double QuantumState::min_eigenvalue() const {
  if (is_pure()) return 0.0;
  const Operator& rho = std::get<Operator>(data_);
  Eigen::SelfAdjointEigenSolver<Operator> es(rho, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void QuantumState::validate() const {
  if (const auto* v = std::get_if<CVector>(&data_)) {
    if (v->size() == 0 || !v->allFinite()) {
      throw Error(ErrorCode::kInvalidArgument, "pure state: empty or non-finite");
    }
    if (std::abs(v->norm() - 1.0) > kNormTol) {
      throw Error(ErrorCode::kInvalidArgument,
                  "pure state: norm deviates from 1 by " +
                      std::to_string(v->norm() - 1.0));
    }
    return;
  }
  const Operator& rho = std::get<Operator>(data_);
  if (rho.rows() == 0 || rho.rows() != rho.cols() || !rho.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument,
                "mixed state: empty, non-square or non-finite");
  }
  if (!is_hermitian(rho, kNormTol)) {
    throw Error(ErrorCode::kInvalidArgument, "mixed state: not Hermitian");
  }
  const cplx tr = rho.trace();
  if (std::abs(tr - 1.0) > kNormTol) {
    throw Error(ErrorCode::kInvalidArgument,
                "mixed state: trace deviates from 1 by " +
                    std::to_string(tr.real() - 1.0));
  }
  const double lmin = min_eigenvalue();
  if (lmin < -kPositivityTol) {
    throw Error(ErrorCode::kInvalidArgument,
                "mixed state: negative eigenvalue " + std::to_string(lmin));
  }
}

Operator identity_op(int dim) {
  require_dim(dim, "identity_op");
  return Operator::Identity(dim, dim);
}

Operator annihilation_op(int dim) {
  require_dim(dim, "annihilation_op");
  Operator a = Operator::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

Operator number_op(int dim) {
  require_dim(dim, "number_op");
  Operator m = Operator::Zero(dim, dim);
  for (int n = 0; n < dim; ++n) m(n, n) = static_cast<double>(n);
  return m;
}

Operator displacement_op(cplx amplitude, int dim) {
  require_dim(dim, "displacement_op");
  if (!std::isfinite(amplitude.real()) || !std::isfinite(amplitude.imag())) {
    throw Error(ErrorCode::kInvalidArgument, "displacement_op: non-finite amplitude");
  }
  if (amplitude == cplx(0.0)) return Operator::Identity(dim, dim);
  const Operator a = annihilation_op(dim);
  const Operator gen = amplitude * a.adjoint() - std::conj(amplitude) * a;
  return expm(gen);
}

Operator parity_op(int dim) {
  require_dim(dim, "parity_op");
  Operator p = Operator::Zero(dim, dim);
  for (int n = 0; n < dim; ++n) p(n, n) = (n % 2 == 0) ? 1.0 : -1.0;
  return p;
}

QuantumState fock_state(int n, int dim) {
  require_dim(dim, "fock_state");
  if (n < 0 || n >= dim) {
    throw Error(ErrorCode::kOutOfRange,
                "fock_state: n=" + std::to_string(n) + " outside [0, " +
                    std::to_string(dim) + ")");
  }
  CVector psi = CVector::Zero(dim);
  psi(n) = 1.0;
  return QuantumState::pure(std::move(psi));
}

bool exceeds_truncation_guard(cplx alpha, int dim) {
  return std::norm(alpha) > dim / 4.0;
}

QuantumState coherent_state(cplx alpha, int dim, Warnings* warnings) {
  require_dim(dim, "coherent_state");
  if (exceeds_truncation_guard(alpha, dim)) {
    warn(warnings, "coherent_state: |alpha|^2 = " + std::to_string(std::norm(alpha)) +
                       " exceeds dim/4 = " + std::to_string(dim / 4.0));
  }
  CVector vac = CVector::Zero(dim);
  vac(0) = 1.0;
  CVector psi = displacement_op(alpha, dim) * vac;
  // The truncated generator is anti-Hermitian, so D is unitary up to roundoff;
  // renormalise to absorb it.
  psi.normalize();
  return QuantumState::pure(std::move(psi));
}

Operator embed(const Operator& op, Mode which, const SpaceConfig& cfg) {
  cfg.validate();
  const int nc = cfg.cavity_dim;
  const int nt = cfg.transmon_dim;
  const int expected = which == Mode::kCavity ? nc : nt;
  if (op.rows() != expected || op.cols() != expected) {
    throw Error(ErrorCode::kDimensionMismatch,
                "embed: operator is " + std::to_string(op.rows()) + "x" +
                    std::to_string(op.cols()) + ", expected " +
                    std::to_string(expected));
  }
  const int d = cfg.total_dim();
  Operator out = Operator::Zero(d, d);
  if (which == Mode::kCavity) {
    for (int m = 0; m < nc; ++m)
      for (int n = 0; n < nc; ++n) {
        if (op(m, n) == cplx(0.0)) continue;
        for (int q = 0; q < nt; ++q) out(cfg.index(m, q), cfg.index(n, q)) = op(m, n);
      }
  } else {
    for (int n = 0; n < nc; ++n)
      out.block(n * nt, n * nt, nt, nt) = op;
  }
  return out;
}

QuantumState tensor(const QuantumState& cavity, const QuantumState& transmon) {
  if (cavity.is_pure() && transmon.is_pure()) {
    const CVector& c = cavity.ket();
    const CVector& t = transmon.ket();
    CVector out(c.size() * t.size());
    for (Eigen::Index n = 0; n < c.size(); ++n)
      out.segment(n * t.size(), t.size()) = c(n) * t;
    return QuantumState::unchecked_pure(std::move(out));
  }
  const Operator rc = cavity.density();
  const Operator rt = transmon.density();
  const Eigen::Index nc = rc.rows();
  const Eigen::Index nt = rt.rows();
  Operator out(nc * nt, nc * nt);
  for (Eigen::Index m = 0; m < nc; ++m)
    for (Eigen::Index n = 0; n < nc; ++n)
      out.block(m * nt, n * nt, nt, nt) = rc(m, n) * rt;
  return QuantumState::unchecked_mixed(std::move(out));
}

cplx expectation(const Operator& op, const QuantumState& state) {
  if (op.rows() != state.dim() || op.cols() != state.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "expectation: operator and state dimensions differ");
  }
  if (state.is_pure()) {
    const CVector& psi = state.ket();
    return psi.dot(op * psi);
  }
  return (op * state.density()).trace();
}

Operator cavity_marginal(const QuantumState& state, const SpaceConfig& cfg) {
  if (state.dim() != cfg.total_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "cavity_marginal: dimension mismatch");
  }
  const int nc = cfg.cavity_dim;
  const int nt = cfg.transmon_dim;
  Operator out = Operator::Zero(nc, nc);
  if (state.is_pure()) {
    const CVector& psi = state.ket();
    // psi reshaped as an nt x nc matrix (column n holds the transmon amplitudes
    // for photon number n).
    Eigen::Map<const Eigen::MatrixXcd> m(psi.data(), nt, nc);
    out = (m.adjoint() * m).transpose();
    return out;
  }
  const Operator rho = state.density();
  for (int m = 0; m < nc; ++m)
    for (int n = 0; n < nc; ++n) {
      cplx acc = 0.0;
      for (int q = 0; q < nt; ++q) acc += rho(cfg.index(m, q), cfg.index(n, q));
      out(m, n) = acc;
    }
  return out;
}

Operator transmon_marginal(const QuantumState& state, const SpaceConfig& cfg) {
  if (state.dim() != cfg.total_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "transmon_marginal: dimension mismatch");
  }
  const int nc = cfg.cavity_dim;
  const int nt = cfg.transmon_dim;
  const Operator rho = state.density();
  Operator out = Operator::Zero(nt, nt);
  for (int n = 0; n < nc; ++n) out += rho.block(n * nt, n * nt, nt, nt);
  return out;
}

double overlap_fidelity(const CVector& psi, const Operator& rho) {
  if (psi.size() != rho.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "overlap_fidelity: dimension mismatch");
  }
  return psi.dot(rho * psi).real();
}

Operator pad(const Operator& m, int new_dim) {
  if (new_dim < m.rows()) {
    throw Error(ErrorCode::kInvalidDimension, "pad: target smaller than source");
  }
  Operator out = Operator::Zero(new_dim, new_dim);
  out.topLeftCorner(m.rows(), m.cols()) = m;
  return out;
}

}  // namespace fluxcqed
