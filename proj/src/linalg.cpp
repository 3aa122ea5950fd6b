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

#include "fluxcqed/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "fluxcqed/error.hpp"

namespace fluxcqed {

namespace {

constexpr double kPade13[] = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0,  129060195264000.0,   10559470521600.0,
    670442572800.0,      33522128640.0,       1323241920.0,
    40840800.0,          960960.0,            16380.0,
    182.0,               1.0};

// Largest 1-norm for which the [13/13] approximant meets unit roundoff.
constexpr double kTheta13 = 5.371920351148152;

double norm1(const Operator& a) {
  return a.cwiseAbs().colwise().sum().maxCoeff();
}

}  // namespace

Operator expm(const Operator& a) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "expm: matrix is not square");
  }
  const Eigen::Index n = a.rows();
  if (n == 0) return a;
  if (!a.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "expm: non-finite entries");
  }

  const double nrm = norm1(a);
  int squarings = 0;
  if (nrm > kTheta13) {
    squarings = static_cast<int>(std::ceil(std::log2(nrm / kTheta13)));
  }
  const Operator as = a / std::ldexp(1.0, squarings);

  const Operator ident = Operator::Identity(n, n);
  const Operator a2 = as * as;
  const Operator a4 = a2 * a2;
  const Operator a6 = a4 * a2;
  const double* b = kPade13;

  const Operator u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) +
                           b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident;
  const Operator u = as * u_inner;
  const Operator v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 +
                     b[4] * a4 + b[2] * a2 + b[0] * ident;

  Operator r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < squarings; ++k) r = r * r;
  return r;
}

Operator unitary_propagator(const Operator& h, double t) {
  Eigen::SelfAdjointEigenSolver<Operator> es(h);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::kIntegrationFailure,
                "unitary_propagator: eigendecomposition failed");
  }
  const Eigen::VectorXd& e = es.eigenvalues();
  CVector phases(e.size());
  for (Eigen::Index k = 0; k < e.size(); ++k) {
    phases(k) = std::exp(-kI * e(k) * t);
  }
  const Operator& v = es.eigenvectors();
  return v * phases.asDiagonal() * v.adjoint();
}

bool is_hermitian(const Operator& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

double max_abs(const Operator& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidDimension: return "invalid-dimension";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kOutOfRange: return "out-of-range";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kInvalidParameters: return "invalid-parameters";
    case ErrorCode::kDegenerateLabeling: return "degenerate-labeling";
    case ErrorCode::kFitFailure: return "fit-failure";
    case ErrorCode::kInstability: return "instability";
    case ErrorCode::kSingularSystem: return "singular-system";
    case ErrorCode::kTimestepMismatch: return "timestep-mismatch";
    case ErrorCode::kIntegrationFailure: return "integration-failure";
    case ErrorCode::kInsufficientCoverage: return "insufficient-coverage";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

}  // namespace fluxcqed
