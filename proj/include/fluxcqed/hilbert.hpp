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

// Truncated Fock-space operators and states for a cavity coupled to a
// transmon. The composite space is always ordered cavity (x) transmon, so the
// basis index of |n, q> is n * transmon_dim + q.

#pragma once

#include <variant>

#include "fluxcqed/error.hpp"
#include "fluxcqed/linalg.hpp"

namespace fluxcqed {

enum class Mode { kCavity, kTransmon };

/// Tensor-product ordering used by every composite operator in the library.
inline constexpr Mode kTensorOrder[2] = {Mode::kCavity, Mode::kTransmon};

struct SpaceConfig {
  int cavity_dim = 30;
  int transmon_dim = 3;

  void validate() const;
  int total_dim() const { return cavity_dim * transmon_dim; }
  int index(int photon, int level) const { return photon * transmon_dim + level; }
};

/// Pure (ket) or mixed (density matrix) state. The checked factories enforce
/// normalisation, Hermiticity and positivity; `unchecked` exists for hot loops
/// in the integrators, which validate at snapshot boundaries instead.
class QuantumState {
 public:
  static constexpr double kNormTol = 1e-9;
  static constexpr double kPositivityTol = 1e-8;

  static QuantumState pure(CVector psi);
  static QuantumState mixed(Operator rho);
  static QuantumState unchecked_pure(CVector psi);
  static QuantumState unchecked_mixed(Operator rho);

  bool is_pure() const { return std::holds_alternative<CVector>(data_); }
  Eigen::Index dim() const;

  /// Throws if the state is mixed.
  const CVector& ket() const;
  /// Density matrix; built on the fly for pure states.
  Operator density() const;
  QuantumState to_mixed() const { return unchecked_mixed(density()); }

  /// Re-checks the invariants; throws kInvalidArgument with the failing one.
  void validate() const;

  double trace() const;
  double min_eigenvalue() const;

 private:
  explicit QuantumState(CVector psi) : data_(std::move(psi)) {}
  explicit QuantumState(Operator rho) : data_(std::move(rho)) {}

  std::variant<CVector, Operator> data_;
};

Operator identity_op(int dim);
Operator annihilation_op(int dim);
Operator number_op(int dim);
/// exp(amplitude a^dag - conj(amplitude) a) on the truncated space.
Operator displacement_op(cplx amplitude, int dim);
Operator parity_op(int dim);

QuantumState fock_state(int n, int dim);
/// D(alpha)|0>. Adds a warning when |alpha|^2 > dim / 4.
QuantumState coherent_state(cplx alpha, int dim, Warnings* warnings = nullptr);
bool exceeds_truncation_guard(cplx alpha, int dim);

/// op (x) I or I (x) op on the composite space.
Operator embed(const Operator& op, Mode which, const SpaceConfig& cfg);
QuantumState tensor(const QuantumState& cavity, const QuantumState& transmon);

cplx expectation(const Operator& op, const QuantumState& state);

/// Reduced density matrices of a composite state.
Operator cavity_marginal(const QuantumState& state, const SpaceConfig& cfg);
Operator transmon_marginal(const QuantumState& state, const SpaceConfig& cfg);

/// <psi| rho |psi> for a pure reference.
double overlap_fidelity(const CVector& psi, const Operator& rho);

/// Copies a cavity operator/density into a larger truncation (zero padded).
Operator pad(const Operator& m, int new_dim);

}  // namespace fluxcqed
