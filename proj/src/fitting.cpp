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

// Curve fits for the analysis routines. Linear coefficients are eliminated
// where that gives a robust starting point; the final polish is a
// Levenberg-Marquardt run over all parameters.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "fluxcqed/experiments.hpp"

namespace fluxcqed {

namespace {

using Residual = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct ResidualFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  int n = 0;
  int m = 0;
  Residual f;

  int inputs() const { return n; }
  int values() const { return m; }
  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& fvec) const {
    f(x, fvec);
    return 0;
  }
};

Eigen::VectorXd polish(Eigen::VectorXd p, int m, const Residual& f, const char* what) {
  ResidualFunctor functor{static_cast<int>(p.size()), m, f};
  Eigen::NumericalDiff<ResidualFunctor> diff(functor);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<ResidualFunctor>> lm(diff);
  lm.parameters.maxfev = 4000;
  lm.parameters.xtol = 1e-12;
  lm.parameters.ftol = 1e-14;
  const auto status = lm.minimize(p);
  if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters || !p.allFinite()) {
    throw Error(ErrorCode::kFitFailure, std::string(what) + ": least-squares fit failed");
  }
  return p;
}

double rms(const Eigen::VectorXd& r) { return std::sqrt(r.squaredNorm() / r.size()); }

void check_xy(const std::vector<double>& x, const std::vector<double>& y, std::size_t min_n,
              const char* what) {
  if (x.size() != y.size() || x.size() < min_n) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(what) + ": need matching x/y with at least " +
                    std::to_string(min_n) + " points");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw Error(ErrorCode::kInvalidArgument, std::string(what) + ": non-finite input");
    }
  }
}

}  // namespace

LorentzianFit fit_lorentzian(const std::vector<double>& x, const std::vector<double>& y) {
  check_xy(x, y, 4, "fit_lorentzian");
  const auto [xmin_it, xmax_it] = std::minmax_element(x.begin(), x.end());
  const double x0 = 0.5 * (*xmin_it + *xmax_it);
  const double xs = std::max(0.5 * (*xmax_it - *xmin_it), 1e-300);
  const std::size_t peak = std::max_element(y.begin(), y.end()) - y.begin();
  const double ymin = *std::min_element(y.begin(), y.end());
  const double height = y[peak] - ymin;
  const double ys = height > 0.0 ? height : 1.0;
  // Initial half width from the points above half maximum.
  double above = 0.0;
  for (double v : y)
    if (v - ymin >= 0.5 * height) above += 1.0;
  const double spacing = 2.0 * xs / static_cast<double>(x.size() - 1);
  const double hw0 = std::max(0.5 * above * spacing, spacing) / xs;

  const int m = static_cast<int>(x.size());
  auto model = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    for (int i = 0; i < m; ++i) {
      const double u = ((x[i] - x0) / xs - p(0)) / p(1);
      r(i) = p(3) + p(2) / (1.0 + u * u) - y[i] / ys;
    }
  };
  Eigen::VectorXd p(4);
  p << (x[peak] - x0) / xs, hw0, 1.0, ymin / ys;
  p = polish(p, m, model, "fit_lorentzian");
  Eigen::VectorXd r(m);
  model(p, r);
  LorentzianFit fit;
  fit.center = x0 + p(0) * xs;
  fit.half_width = std::abs(p(1)) * xs;
  fit.amplitude = p(2) * ys;
  fit.offset = p(3) * ys;
  fit.residual_rms = rms(r) * ys;
  return fit;
}

GaussianFit fit_gaussian(const std::vector<double>& x, const std::vector<double>& y) {
  check_xy(x, y, 4, "fit_gaussian");
  const std::size_t centre = std::min_element(x.begin(), x.end(),
                                              [](double a, double b) {
                                                return std::abs(a) < std::abs(b);
                                              }) -
                             x.begin();
  const std::size_t edge = std::max_element(x.begin(), x.end(),
                                            [](double a, double b) {
                                              return std::abs(a) < std::abs(b);
                                            }) -
                           x.begin();
  double amp0 = y[centre] - y[edge];
  if (amp0 == 0.0) amp0 = 1.0;
  // Width from the half-maximum crossing.
  double sigma0 = std::abs(x[edge]) / 2.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if ((y[i] - y[edge]) / amp0 < 0.5 && std::abs(x[i]) > 0.0) {
      sigma0 = std::min(sigma0, std::abs(x[i]) / std::sqrt(2.0 * std::log(2.0)));
    }
  }
  if (!(sigma0 > 0.0)) sigma0 = 1.0;
  const int m = static_cast<int>(x.size());
  auto model = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    for (int i = 0; i < m; ++i) {
      r(i) = p(1) + p(0) * std::exp(-x[i] * x[i] / (2.0 * p(2) * p(2))) - y[i];
    }
  };
  Eigen::VectorXd p(3);
  p << amp0, y[edge], sigma0;
  p = polish(p, m, model, "fit_gaussian");
  Eigen::VectorXd r(m);
  model(p, r);
  return {p(0), p(1), std::abs(p(2)), rms(r)};
}

OscillationFit fit_damped_oscillation(const std::vector<double>& t, const std::vector<double>& y) {
  check_xy(t, y, 8, "fit_damped_oscillation");
  const int m = static_cast<int>(t.size());
  const double t0 = t.front();
  const double span = t.back() - t0;
  if (!(span > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "fit_damped_oscillation: times must increase");
  }
  std::vector<double> u(m);
  for (int i = 0; i < m; ++i) u[i] = (t[i] - t0) / span;
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), m);

  // Linear coefficients (c0, c1, c2, A, B) for a given frequency and decay,
  // both in units of 1/span.
  auto project = [&](double f, double g, Eigen::VectorXd* coef) {
    Eigen::MatrixXd basis(m, 5);
    for (int i = 0; i < m; ++i) {
      const double env = std::exp(-g * u[i]);
      basis(i, 0) = 1.0;
      basis(i, 1) = u[i];
      basis(i, 2) = u[i] * u[i];
      basis(i, 3) = env * std::cos(kTwoPi * f * u[i]);
      basis(i, 4) = env * std::sin(kTwoPi * f * u[i]);
    }
    const Eigen::VectorXd c = basis.colPivHouseholderQr().solve(yv);
    if (coef) *coef = c;
    return (basis * c - yv).squaredNorm();
  };

  // Coarse frequency scan up to the Nyquist limit of the median spacing.
  std::vector<double> du(m - 1);
  for (int i = 0; i + 1 < m; ++i) du[i] = u[i + 1] - u[i];
  std::nth_element(du.begin(), du.begin() + du.size() / 2, du.end());
  const double nyquist = 0.5 / du[du.size() / 2];
  double best_f = 1.0, best = std::numeric_limits<double>::infinity();
  for (double f = 0.5; f <= nyquist; f += 0.05) {
    const double rss = project(f, 0.0, nullptr);
    if (rss < best) best = rss, best_f = f;
  }
  double best_g = 0.0;
  for (double g = 0.0; g <= 40.0; g += 0.1) {
    const double rss = project(best_f, g, nullptr);
    if (rss < best) best = rss, best_g = g;
  }
  Eigen::VectorXd coef;
  project(best_f, best_g, &coef);

  auto model = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    for (int i = 0; i < m; ++i) {
      const double env = std::exp(-p(6) * u[i]);
      const double ph = kTwoPi * p(5) * u[i];
      r(i) = p(0) + p(1) * u[i] + p(2) * u[i] * u[i] +
             env * (p(3) * std::cos(ph) + p(4) * std::sin(ph)) - y[i];
    }
  };
  Eigen::VectorXd p(7);
  p << coef(0), coef(1), coef(2), coef(3), coef(4), best_f, best_g;
  p = polish(p, m, model, "fit_damped_oscillation");
  Eigen::VectorXd r(m);
  model(p, r);

  OscillationFit fit;
  fit.freq_hz = std::abs(p(5)) / span;
  fit.decay_time_s = p(6) > 0.0 ? span / p(6) : std::numeric_limits<double>::infinity();
  fit.amplitude = std::hypot(p(3), p(4));
  fit.baseline = p(0);
  fit.residual_rms = rms(r);
  return fit;
}

}  // namespace fluxcqed
