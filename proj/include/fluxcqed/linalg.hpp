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

#pragma once

#include <complex>

#include <Eigen/Dense>

namespace fluxcqed {

using cplx = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr cplx kI{0.0, 1.0};

/// Dense matrix exponential by scaling and squaring with a degree-13 Pade
/// approximant (Higham 2005). Accurate to roughly machine precision relative
/// to ||A|| for any square input.
Operator expm(const Operator& a);

/// exp(-i * h * t) for Hermitian `h`, via the eigendecomposition. Faster and
/// exactly unitary; used for time-independent segments.
Operator unitary_propagator(const Operator& h, double t);

bool is_hermitian(const Operator& m, double tol);

/// Max |m_ij|.
double max_abs(const Operator& m);

}  // namespace fluxcqed
