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

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

namespace fluxcqed {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void invalid(const std::string& msg) {
  throw Error(ErrorCode::kInvalidArgument, msg);
}

// D(beta) on an n-level cavity from one eigendecomposition of i(a^dag - a):
// D(r e^{i phi}) = R(phi) exp(-i r H) R(phi)^dag with R(phi) = e^{i phi n}.
class Displacer {
 public:
  explicit Displacer(int dim) : dim_(dim) {
    const Operator a = annihilation_op(dim);
    const Operator h = kI * (a.adjoint() - a);
    Eigen::SelfAdjointEigenSolver<Operator> es(h);
    v_ = es.eigenvectors();
    lambda_ = es.eigenvalues();
  }

  int dim() const { return dim_; }

  template <class In>
  CVector apply(cplx beta, const In& x) const {
    const double r = std::abs(beta);
    const double phi = std::arg(beta);
    CVector w(dim_);
    for (int n = 0; n < dim_; ++n) w(n) = std::polar(1.0, -phi * n) * x(n);
    CVector z = v_.adjoint() * w;
    for (int k = 0; k < dim_; ++k) z(k) *= std::polar(1.0, -r * lambda_(k));
    w.noalias() = v_ * z;
    for (int n = 0; n < dim_; ++n) w(n) *= std::polar(1.0, phi * n);
    return w;
  }

  Operator matrix(cplx beta) const {
    const double r = std::abs(beta);
    const double phi = std::arg(beta);
    Operator left = v_;
    for (int n = 0; n < dim_; ++n) left.row(n) *= std::polar(1.0, phi * n);
    Operator right = v_.adjoint();
    for (int n = 0; n < dim_; ++n) right.col(n) *= std::polar(1.0, -phi * n);
    for (int k = 0; k < dim_; ++k) left.col(k) *= std::polar(1.0, -r * lambda_(k));
    return left * right;
  }

 private:
  int dim_;
  Operator v_;
  Eigen::VectorXd lambda_;
};

using Slice = Eigen::Map<CVector, 0, Eigen::InnerStride<>>;
using ConstSlice = Eigen::Map<const CVector, 0, Eigen::InnerStride<>>;

Slice level(CVector& psi, int q, const SpaceConfig& cfg) {
  return Slice(psi.data() + q, cfg.cavity_dim, Eigen::InnerStride<>(cfg.transmon_dim));
}
ConstSlice level(const CVector& psi, int q, const SpaceConfig& cfg) {
  return ConstSlice(psi.data() + q, cfg.cavity_dim, Eigen::InnerStride<>(cfg.transmon_dim));
}

void displace_ket(CVector& psi, cplx beta, const Displacer& d, const SpaceConfig& cfg) {
  for (int q = 0; q < cfg.transmon_dim; ++q) {
    Slice s = level(psi, q, cfg);
    s = d.apply(beta, s);
  }
}

void rotate_ket(CVector& psi, const Eigen::Matrix2cd& u, const SpaceConfig& cfg) {
  for (int n = 0; n < cfg.cavity_dim; ++n) {
    const int i0 = cfg.index(n, 0), i1 = cfg.index(n, 1);
    const cplx g = psi(i0), e = psi(i1);
    psi(i0) = u(0, 0) * g + u(0, 1) * e;
    psi(i1) = u(1, 0) * g + u(1, 1) * e;
  }
}

Eigen::Matrix2cd rotation_xy(double theta, double phi) {
  const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
  Eigen::Matrix2cd u;
  u << c, cplx(0, -s) * std::polar(1.0, -phi), cplx(0, -s) * std::polar(1.0, phi), c;
  return u;
}

constexpr double kPhaseY = 0.5 * kPi;  // Ry = RotationXY(theta, pi/2)

// Exact dispersive wait on a ket.
void dispersive_wait_ket(CVector& psi, const DispersiveParams& dp, double t,
                         const SpaceConfig& cfg) {
  for (int n = 0; n < cfg.cavity_dim; ++n)
    for (int q = 0; q < cfg.transmon_dim; ++q) {
      const double nn = n;
      const double e = -dp.chi_hz * nn * q - 0.5 * dp.kerr_hz * nn * (nn - 1.0);
      psi(cfg.index(n, q)) *= std::polar(1.0, -kTwoPi * e * t);
    }
}

double p_excited(const CVector& psi, const SpaceConfig& cfg) {
  return std::max(0.0, 1.0 - level(psi, 0, cfg).squaredNorm() / psi.squaredNorm());
}

// Pure components p_k |phi_k> of a state (one component for kets).
std::vector<std::pair<double, CVector>> components(const QuantumState& s) {
  std::vector<std::pair<double, CVector>> out;
  if (s.is_pure()) {
    out.emplace_back(1.0, s.ket());
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Operator> es(s.density());
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const double p = es.eigenvalues()(k);
    if (p > 1e-13) out.emplace_back(p, es.eigenvectors().col(k));
  }
  return out;
}

int effective_support(const Operator& rho_cavity) {
  int top = 0;
  for (int n = 0; n < rho_cavity.rows(); ++n)
    if (rho_cavity(n, n).real() > 1e-10) top = n;
  return top + 1;
}

double readout_pe(double pe, const ReadoutModel& m) {
  return m.p_e_given_g * (1.0 - pe) + (1.0 - m.p_g_given_e) * pe;
}

double recorded_pe(double pe, const ProtocolOptions& opt, std::uint64_t index) {
  const double p = readout_pe(std::clamp(pe, 0.0, 1.0), opt.readout);
  if (opt.shots == 0) return p;
  return sample_fraction(p, opt.shots, point_seed(opt.seed, index));
}

int pick_dim(int requested, int support, double radius) {
  return requested > 0 ? requested : tomography_dim(support, radius);
}

// Splits the composite ket path (noiseless) from the density path.
struct PreparedState {
  SpaceConfig cfg;
  QuantumState state;
};

PreparedState prepare_for_tomography(const QuantumState& composite, const SpaceConfig& cfg,
                                     double radius, int requested_dim) {
  if (composite.dim() != cfg.total_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "tomography: state does not match the space");
  }
  const Operator cav = cavity_marginal(composite, cfg);
  const int dim = std::max(cfg.cavity_dim, pick_dim(requested_dim, effective_support(cav), radius));
  SpaceConfig big{dim, cfg.transmon_dim};
  return {big, pad_cavity(composite, cfg, dim)};
}

}  // namespace

// ------------------------------------------------------------ helpers

QuantumState with_ground_transmon(const QuantumState& cavity, const SpaceConfig& cfg) {
  if (cavity.dim() != cfg.cavity_dim) {
    throw Error(ErrorCode::kDimensionMismatch, "with_ground_transmon: cavity dimension mismatch");
  }
  return tensor(cavity, fock_state(0, cfg.transmon_dim));
}

QuantumState pad_cavity(const QuantumState& state, const SpaceConfig& cfg, int cavity_dim) {
  if (cavity_dim < cfg.cavity_dim) invalid("pad_cavity: cannot shrink the cavity");
  if (cavity_dim == cfg.cavity_dim) return state;
  const SpaceConfig big{cavity_dim, cfg.transmon_dim};
  if (state.is_pure()) {
    CVector v = CVector::Zero(big.total_dim());
    v.head(cfg.total_dim()) = state.ket();  // index n*t+q is unchanged
    return QuantumState::unchecked_pure(v);
  }
  Operator r = Operator::Zero(big.total_dim(), big.total_dim());
  r.topLeftCorner(cfg.total_dim(), cfg.total_dim()) = state.density();
  return QuantumState::unchecked_mixed(r);
}

int tomography_dim(int support, double radius) {
  const double spread = std::sqrt(static_cast<double>(std::max(support, 1))) + radius;
  const double tail = spread * spread + 4.0 * spread + 5.0;
  return static_cast<int>(std::ceil(std::max(tail, 4.0 * radius * radius + 1.0)));
}

std::uint64_t point_seed(std::uint64_t root, std::uint64_t index) {
  // splitmix64 finaliser over the combined key.
  std::uint64_t z = root + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double sample_fraction(double p, std::size_t shots, std::uint64_t seed) {
  if (shots == 0) return p;
  std::mt19937_64 gen(seed);
  std::binomial_distribution<std::size_t> dist(shots, std::clamp(p, 0.0, 1.0));
  return static_cast<double>(dist(gen)) / static_cast<double>(shots);
}

// ------------------------------------------------------------ pi-scope

ExperimentResult pi_scope(const PiScopeSpec& spec, const FluxRelation& rel) {
  spec.flux_ma.validate();
  rel.validate();
  if (spec.delays_s.empty() || spec.probe_freqs_hz.empty()) {
    invalid("pi_scope: delay and frequency grids must be non-empty");
  }
  const double ts = spec.flux_ma.ts;
  if (!(spec.probe_len_s >= ts)) invalid("pi_scope: probe length shorter than one sample");
  const auto probe_steps = static_cast<std::size_t>(std::llround(spec.probe_len_s / ts));
  const std::size_t last = spec.flux_ma.size() - 1;

  std::vector<double> freq(spec.flux_ma.size());
  for (std::size_t k = 0; k <= last; ++k) freq[k] = freq_from_current(spec.flux_ma.samples[k], rel);

  ExperimentResult r;
  r.protocol = "pi-scope";
  r.row_axis = "delay_s";
  r.col_axis = "probe_freq_hz";
  r.value_name = "p_e";
  r.rows = spec.delays_s;
  r.cols = spec.probe_freqs_hz;
  r.values.resize(static_cast<Eigen::Index>(r.rows.size()), static_cast<Eigen::Index>(r.cols.size()));
  const double vx = kPi * spec.probe_rabi_hz;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    if (!(spec.delays_s[i] >= 0.0)) invalid("pi_scope: delays must be non-negative");
    const auto k0 = static_cast<std::size_t>(std::llround(spec.delays_s[i] / ts));
    for (std::size_t j = 0; j < r.cols.size(); ++j) {
      // Two-level transmon in the frame of the probe:
      // H = 2 pi (f_t - f_p) |e><e| + pi Omega sigma_x, exact per sample.
      cplx g = 1.0, e = 0.0;
      for (std::size_t s = 0; s < probe_steps; ++s) {
        const double delta = freq[std::min(k0 + s, last)] - spec.probe_freqs_hz[j];
        const double vz = -kPi * delta;
        const double c0 = kPi * delta;
        const double w = std::hypot(vx, vz);
        const double cw = std::cos(w * ts), sw = w > 0.0 ? std::sin(w * ts) / w : ts;
        const cplx ph = std::polar(1.0, -c0 * ts);
        const cplx u00 = ph * cplx(cw, -sw * vz), u11 = ph * cplx(cw, sw * vz);
        const cplx u01 = ph * cplx(0.0, -sw * vx);
        const cplx ng = u00 * g + u01 * e;
        const cplx ne = u01 * g + u11 * e;
        g = ng;
        e = ne;
      }
      r.values(i, j) = std::norm(e);
    }
  }
  r.metadata.set("probe_len_s", spec.probe_len_s);
  r.metadata.set("probe_rabi_hz", spec.probe_rabi_hz);
  r.metadata.set("flux_ts_s", ts);
  return r;
}

FrequencyTrack extract_trajectory(const ExperimentResult& scan, const FluxRelation& rel,
                                  double threshold) {
  scan.validate();
  FrequencyTrack track;
  const auto rows = scan.rows.size();
  double global = 0.0;
  for (std::size_t i = 0; i < rows; ++i)
    global = std::max(global, scan.values.row(i).maxCoeff() - scan.values.row(i).minCoeff());
  for (std::size_t i = 0; i < rows; ++i) {
    track.times_s.push_back(scan.rows[i]);
    double f = kNaN, current = kNaN;
    bool ok = false;
    const double height = scan.values.row(i).maxCoeff() - scan.values.row(i).minCoeff();
    if (global > 0.0 && height >= threshold * global) {
      std::vector<double> y(scan.cols.size());
      for (std::size_t j = 0; j < y.size(); ++j) y[j] = scan.values(i, j);
      try {
        const LorentzianFit fit = fit_lorentzian(scan.cols, y);
        const auto [lo, hi] = std::minmax_element(scan.cols.begin(), scan.cols.end());
        if (fit.center >= *lo && fit.center <= *hi) {
          f = fit.center;
          current = current_from_freq(f, rel);
          ok = true;
        }
      } catch (const Error&) {
        f = kNaN;
        current = kNaN;
      }
    }
    track.freq_hz.push_back(ok ? f : kNaN);
    track.current_ma.push_back(ok ? current : kNaN);
    track.valid.push_back(ok);
  }
  return track;
}

// ------------------------------------------------------ vacuum Rabi

ExperimentResult vacuum_rabi_chevron(const std::vector<double>& detunings_hz,
                                     const std::vector<double>& times_s,
                                     const SystemParams& params, const SpaceConfig& cfg,
                                     bool noise, double dt_s) {
  if (detunings_hz.empty() || times_s.empty()) invalid("vacuum_rabi_chevron: empty grid");
  cfg.validate();
  double tmax = 0.0;
  std::map<long long, std::vector<std::size_t>> wanted;
  for (std::size_t j = 0; j < times_s.size(); ++j) {
    if (!(times_s[j] >= 0.0)) invalid("vacuum_rabi_chevron: negative time");
    tmax = std::max(tmax, times_s[j]);
    wanted[std::llround(times_s[j] / dt_s)].push_back(j);
  }
  const LindbladModel model =
      noise ? collapse_operators(params, cfg) : LindbladModel{};
  CVector psi0 = CVector::Zero(cfg.total_dim());
  psi0(cfg.index(0, 1)) = 1.0;
  const QuantumState start = QuantumState::pure(psi0);
  const Operator pg = ground_projector(cfg);

  ExperimentResult r;
  r.protocol = "rabi";
  r.row_axis = "detuning_hz";
  r.col_axis = "time_s";
  r.value_name = "p_e";
  r.rows = detunings_hz;
  r.cols = times_s;
  r.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(r.rows.size()),
                                   static_cast<Eigen::Index>(r.cols.size()));
  for (std::size_t i = 0; i < detunings_hz.size(); ++i) {
    const PulseSchedule sched = PulseSchedule::constant(detunings_hz[i], tmax, dt_s);
    evolve_observed(start, sched, model, params, cfg, 1, [&](double t, const QuantumState& s) {
      auto it = wanted.find(std::llround(t / dt_s));
      if (it == wanted.end()) return;
      const double pe = 1.0 - expectation(pg, s).real() / s.trace();
      for (std::size_t j : it->second) r.values(i, j) = pe;
    });
  }
  r.metadata.set("dt_s", dt_s);
  r.metadata.set("noise", noise ? "true" : "false");
  return r;
}

// ---------------------------------------------------- Fock states

double swap_time(const SystemParams& params, int photons) {
  if (!(params.g_hz > 0.0) || photons < 1) invalid("swap_time: need g > 0 and photons >= 1");
  return 1.0 / (4.0 * params.g_hz * std::sqrt(static_cast<double>(photons)));
}

namespace {

// Hann-shaped pi pulse at `freq_offset_hz` (drive frequency minus the
// cavity frequency) while parked at `detuning_hz`.
PulseSchedule pi_pulse(double detuning_hz, double freq_offset_hz, double length_s, double dt_s) {
  PulseSchedule s = PulseSchedule::constant(detuning_hz, length_s, dt_s);
  const double peak = 1.0 / length_s;  // area of a Hann pulse is peak * T / 2
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double t = (static_cast<double>(k) + 0.5) * dt_s;
    const double env = std::pow(std::sin(kPi * t / length_s), 2);
    s.transmon_drive_hz[k] = peak * env * std::polar(1.0, -kTwoPi * freq_offset_hz * t);
  }
  return s;
}

}  // namespace

FockResult prepare_fock(const FockOptions& o, const SystemParams& params, const SpaceConfig& cfg) {
  if (o.photons != 1 && o.photons != 2) invalid("prepare_fock: photons must be 1 or 2");
  cfg.validate();
  if (cfg.cavity_dim <= o.photons + 1) {
    throw Error(ErrorCode::kInvalidDimension, "prepare_fock: cavity truncation too small");
  }
  const LindbladModel model = o.noise ? collapse_operators(params, cfg) : LindbladModel{};
  QuantumState state = with_ground_transmon(fock_state(0, cfg.cavity_dim), cfg);
  if (o.noise) state = state.to_mixed();

  auto evolve = [&](const PulseSchedule& sched) {
    return evolve_observed(state, sched, model, params, cfg, sched.size() + 1,
                           [](double, const QuantumState&) {});
  };

  for (int k = 1; k <= o.photons; ++k) {
    if (o.mode == PulseMode::kInstant) {
      state = apply_gate(state, RotationY{kPi}, cfg);
    } else {
      const DressedLevels lv = dressed_levels(params, o.park_detuning_hz, cfg, k, 1);
      const double f = lv.energy(k - 1, 1) - lv.energy(k - 1, 0);
      state = evolve(pi_pulse(o.park_detuning_hz, f, o.pi_pulse_s, o.dt_s));
    }
    state = evolve(PulseSchedule::constant(0.0, swap_time(params, k), o.dt_s));
  }

  CVector target = CVector::Zero(cfg.total_dim());
  target(cfg.index(o.photons, 0)) = 1.0;
  const Operator rho = state.density();
  FockResult out{state, overlap_fidelity(target, rho),
                 expectation(ground_projector(cfg), state).real()};
  return out;
}

// ------------------------------------------------------ tomography

TomographyGrid wigner_direct(const Operator& rho_cavity, const GridSpec& grid, int cavity_dim) {
  grid.validate();
  const QuantumState st = QuantumState::mixed(rho_cavity);
  const int dim = std::max<int>(rho_cavity.rows(),
                                pick_dim(cavity_dim, effective_support(rho_cavity), grid.max_radius()));
  const Displacer d(dim);
  std::vector<std::pair<double, CVector>> comps;
  for (auto& [p, v] : components(st)) {
    CVector big = CVector::Zero(dim);
    big.head(v.size()) = v;
    comps.emplace_back(p, big);
  }
  TomographyGrid out{grid, GridKind::kWigner,
                     Eigen::MatrixXd::Zero(grid.im.points, grid.re.points)};
  for (std::size_t i = 0; i < grid.im.points; ++i)
    for (std::size_t j = 0; j < grid.re.points; ++j) {
      double w = 0.0;
      for (const auto& [p, v] : comps) {
        const CVector x = d.apply(-grid.point(i, j), v);
        double parity = 0.0;
        for (int n = 0; n < dim; ++n) parity += (n % 2 == 0 ? 1.0 : -1.0) * std::norm(x(n));
        w += p * parity;
      }
      out.values(i, j) = 2.0 / kPi * w;
    }
  return out;
}

TomographyGrid charfunc_direct(const Operator& rho_cavity, const GridSpec& grid, CharPart part,
                               int cavity_dim, Warnings* warnings) {
  grid.validate();
  const QuantumState st = QuantumState::mixed(rho_cavity);
  const int dim = std::max<int>(rho_cavity.rows(),
                                pick_dim(cavity_dim, effective_support(rho_cavity), grid.max_radius()));
  if (exceeds_truncation_guard(grid.max_radius(), dim)) {
    warn(warnings, "charfunc_direct: displacements exceed the truncation guard");
  }
  const Displacer d(dim);
  std::vector<std::pair<double, CVector>> comps;
  for (auto& [p, v] : components(st)) {
    CVector big = CVector::Zero(dim);
    big.head(v.size()) = v;
    comps.emplace_back(p, big);
  }
  TomographyGrid out{grid, part == CharPart::kRe ? GridKind::kCharRe : GridKind::kCharIm,
                     Eigen::MatrixXd::Zero(grid.im.points, grid.re.points)};
  for (std::size_t i = 0; i < grid.im.points; ++i)
    for (std::size_t j = 0; j < grid.re.points; ++j) {
      cplx c = 0.0;
      for (const auto& [p, v] : comps) c += p * v.dot(d.apply(grid.point(i, j), v));
      out.values(i, j) = part == CharPart::kRe ? c.real() : c.imag();
    }
  return out;
}

Operator ecd_operator(cplx nu, const SpaceConfig& cfg) {
  cfg.validate();
  const Operator dp = displacement_op(0.5 * nu, cfg.cavity_dim);
  const Operator dm = displacement_op(-0.5 * nu, cfg.cavity_dim);
  Operator eg = Operator::Zero(cfg.transmon_dim, cfg.transmon_dim);
  Operator ge = eg, rest = eg;
  eg(1, 0) = 1.0;
  ge(0, 1) = 1.0;
  for (int q = 2; q < cfg.transmon_dim; ++q) rest(q, q) = 1.0;
  Operator out = tensor(QuantumState::unchecked_mixed(dp), QuantumState::unchecked_mixed(eg)).density();
  // tensor() of mixed states is the Kronecker product of the matrices.
  out += tensor(QuantumState::unchecked_mixed(dm), QuantumState::unchecked_mixed(ge)).density();
  if (cfg.transmon_dim > 2) {
    out += tensor(QuantumState::unchecked_mixed(identity_op(cfg.cavity_dim)),
                  QuantumState::unchecked_mixed(rest))
               .density();
  }
  return out;
}

namespace {

// Decomposed ECD: D(b1), wait, D(b2), pi, D(b3), wait, D(b4), virtual Z.
// The e branch acquires R(theta) = e^{i theta n} per wait, theta = 2 pi chi T.
struct EcdPlan {
  cplx beta[4];
  double correction = 0.0;  // PhaseRotation angle restoring zero branch phase
};

double ecd_wait(const DispersiveParams& dp, const EcdOptions& o) {
  if (o.wait_s > 0.0) return o.wait_s;
  if (dp.chi_hz == 0.0) invalid("decomposed ECD: chi = 0");
  return 1.0 / (2.0 * std::abs(dp.chi_hz));
}

EcdPlan plan_ecd(cplx nu, const DispersiveParams& dp, const EcdOptions& o) {
  const double theta = kTwoPi * dp.chi_hz * ecd_wait(dp, o);
  const cplx w = std::polar(1.0, theta);
  if (std::abs(w - 1.0) < 1e-9) invalid("decomposed ECD: chi * wait must not be a multiple of 1");
  const cplx c = 0.5 * nu;
  const cplx b1 = o.first_displacement;
  const cplx b2 = -b1 * (1.0 + w) / 2.0;
  // g branch: b1 + b2 + b3 + b4 / w = c; e branch: b1 w + b2 + b3 + b4 = -c w.
  const cplx b4 = (c - b1 - b2 - (-c * w - b1 * w - b2)) / (1.0 / w - 1.0);
  const cplx b3 = -c * w - b1 * w - b2 - b4;
  EcdPlan plan{{b1, b2, b3, b4}, 0.0};
  // Branch phases from D(x) D(y) = exp(i Im(x y*)) D(x + y).
  auto chain = [](std::initializer_list<cplx> xs) {
    cplx total = 0.0;
    double phase = 0.0;
    for (cplx x : xs) {
      phase += std::imag(x * std::conj(total));
      total += x;
    }
    return phase;
  };
  const double phase_g = chain({b1, b2, b3, b4 / w});
  const double phase_e = chain({b1 * w, b2, b3, b4});
  plan.correction = phase_e - phase_g;
  return plan;
}

void ecd_ket(CVector& psi, cplx nu, const DispersiveParams& dp, const EcdOptions& o,
             const Displacer& d, const SpaceConfig& cfg) {
  if (o.mode == EcdMode::kIdeal) {
    CVector g = level(psi, 0, cfg);
    CVector e = level(psi, 1, cfg);
    level(psi, 1, cfg) = d.apply(0.5 * nu, g);
    level(psi, 0, cfg) = d.apply(-0.5 * nu, e);
    return;
  }
  const EcdPlan plan = plan_ecd(nu, dp, o);
  displace_ket(psi, plan.beta[0], d, cfg);
  dispersive_wait_ket(psi, dp, ecd_wait(dp, o), cfg);
  displace_ket(psi, plan.beta[1], d, cfg);
  rotate_ket(psi, rotation_xy(kPi, 0.0), cfg);
  displace_ket(psi, plan.beta[2], d, cfg);
  dispersive_wait_ket(psi, dp, ecd_wait(dp, o), cfg);
  displace_ket(psi, plan.beta[3], d, cfg);
  Eigen::Matrix2cd z;
  z << std::polar(1.0, -0.5 * plan.correction), 0.0, 0.0, std::polar(1.0, 0.5 * plan.correction);
  rotate_ket(psi, z, cfg);
}

// Density-matrix versions used when a Lindblad model acts during waits.
QuantumState dispersive_wait_density(const QuantumState& s, const DispersiveParams& dp, double t,
                                     const LindbladModel& model, const SpaceConfig& cfg) {
  return evolve_static(s, dispersive_hamiltonian(dp, cfg), model, t);
}

double p_excited_density(const QuantumState& s, const SpaceConfig& cfg) {
  return 1.0 - expectation(ground_projector(cfg), s).real() / s.trace();
}

QuantumState ecd_density(const QuantumState& s, cplx nu, const DispersiveParams& dp,
                         const EcdOptions& o, const LindbladModel& model, const SpaceConfig& cfg) {
  if (o.mode == EcdMode::kIdeal) return apply_unitary(s, ecd_operator(nu, cfg));
  const EcdPlan plan = plan_ecd(nu, dp, o);
  QuantumState x = apply_gate(s, Displacement{plan.beta[0]}, cfg);
  x = dispersive_wait_density(x, dp, ecd_wait(dp, o), model, cfg);
  x = apply_gate(x, Displacement{plan.beta[1]}, cfg);
  x = apply_gate(x, RotationX{kPi}, cfg);
  x = apply_gate(x, Displacement{plan.beta[2]}, cfg);
  x = dispersive_wait_density(x, dp, ecd_wait(dp, o), model, cfg);
  x = apply_gate(x, Displacement{plan.beta[3]}, cfg);
  return apply_gate(x, PhaseRotation{plan.correction}, cfg);
}

}  // namespace

TomographyGrid wigner_protocol(const QuantumState& composite, const SpaceConfig& cfg,
                               const GridSpec& grid, const DispersiveParams& dp,
                               const ProtocolOptions& options) {
  grid.validate();
  options.readout.validate();
  if (dp.chi_hz == 0.0) invalid("wigner_protocol: chi = 0, the parity wait diverges");
  const double wait = 1.0 / (2.0 * std::abs(dp.chi_hz));
  PreparedState ps = prepare_for_tomography(composite, cfg, grid.max_radius(), options.cavity_dim);
  const SpaceConfig& big = ps.cfg;

  TomographyGrid out{grid, GridKind::kWigner,
                     Eigen::MatrixXd::Zero(grid.im.points, grid.re.points)};
  const Eigen::Matrix2cd half = rotation_xy(0.5 * kPi, kPhaseY);
  const Eigen::Matrix2cd half_plus = rotation_xy(0.5 * kPi, kPhaseY);
  const Eigen::Matrix2cd half_minus = rotation_xy(-0.5 * kPi, kPhaseY);
  const bool pure_path = options.model.empty();
  const auto comps = pure_path ? components(ps.state) : std::vector<std::pair<double, CVector>>{};
  const Displacer d(big.cavity_dim);

  for (std::size_t i = 0; i < grid.im.points; ++i)
    for (std::size_t j = 0; j < grid.re.points; ++j) {
      const cplx beta = grid.point(i, j);
      double pe_plus = 0.0, pe_minus = 0.0;
      if (pure_path) {
        for (const auto& [p, v] : comps) {
          CVector x = v;
          displace_ket(x, -beta, d, big);
          rotate_ket(x, half, big);
          dispersive_wait_ket(x, dp, wait, big);
          CVector y = x;
          rotate_ket(x, half_plus, big);
          rotate_ket(y, half_minus, big);
          pe_plus += p * p_excited(x, big);
          pe_minus += p * p_excited(y, big);
        }
      } else {
        QuantumState x = apply_gate(ps.state, Displacement{-beta}, big);
        x = apply_gate(x, RotationY{0.5 * kPi}, big);
        x = dispersive_wait_density(x, dp, wait, options.model, big);
        pe_plus = p_excited_density(apply_gate(x, RotationY{0.5 * kPi}, big), big);
        pe_minus = p_excited_density(apply_gate(x, RotationY{-0.5 * kPi}, big), big);
      }
      const std::uint64_t idx = 2 * (i * grid.re.points + j);
      const double diff =
          recorded_pe(pe_plus, options, idx) - recorded_pe(pe_minus, options, idx + 1);
      // Offsets cancel in the difference; only the contrast is corrected.
      out.values(i, j) = 2.0 / kPi * diff / options.calibration.scale;
    }
  return out;
}

TomographyGrid charfunc_protocol(const QuantumState& composite, const SpaceConfig& cfg,
                                 const GridSpec& grid, CharPart part,
                                 const DispersiveParams& dp, const ProtocolOptions& options,
                                 const EcdOptions& ecd, Warnings* warnings) {
  grid.validate();
  options.readout.validate();
  double reach = grid.max_radius();
  if (ecd.mode == EcdMode::kDecomposed) {
    // Largest amplitude any branch passes through, over the grid corners.
    for (double re : {grid.re.lo, grid.re.hi})
      for (double im : {grid.im.lo, grid.im.hi}) {
        const EcdPlan plan = plan_ecd({re, im}, dp, ecd);
        double sum = 0.0;
        for (cplx b : plan.beta) sum += std::abs(b);
        reach = std::max(reach, sum);
      }
  }
  PreparedState ps = prepare_for_tomography(composite, cfg, reach, options.cavity_dim);
  const SpaceConfig& big = ps.cfg;
  if (exceeds_truncation_guard(grid.max_radius(), big.cavity_dim)) {
    warn(warnings, "charfunc_protocol: displacements exceed the truncation guard");
  }
  // Second pulse: phase 0 deg reads Re C, 90 deg reads Im C.
  const double second_phase = part == CharPart::kRe ? kPhaseY : kPhaseY + 0.5 * kPi;
  const Eigen::Matrix2cd first = rotation_xy(0.5 * kPi, kPhaseY);
  const Eigen::Matrix2cd second = rotation_xy(0.5 * kPi, second_phase);
  const bool pure_path = options.model.empty();
  const auto comps = pure_path ? components(ps.state) : std::vector<std::pair<double, CVector>>{};
  const Displacer d(big.cavity_dim);

  TomographyGrid out{grid, part == CharPart::kRe ? GridKind::kCharRe : GridKind::kCharIm,
                     Eigen::MatrixXd::Zero(grid.im.points, grid.re.points)};
  for (std::size_t i = 0; i < grid.im.points; ++i)
    for (std::size_t j = 0; j < grid.re.points; ++j) {
      const cplx nu = grid.point(i, j);
      double pe = 0.0;
      if (pure_path) {
        for (const auto& [p, v] : comps) {
          CVector x = v;
          rotate_ket(x, first, big);
          ecd_ket(x, nu, dp, ecd, d, big);
          rotate_ket(x, second, big);
          pe += p * p_excited(x, big);
        }
      } else {
        QuantumState x = apply_gate(ps.state, RotationXY{0.5 * kPi, kPhaseY}, big);
        x = ecd_density(x, nu, dp, ecd, options.model, big);
        x = apply_gate(x, RotationXY{0.5 * kPi, second_phase}, big);
        pe = p_excited_density(x, big);
      }
      const double raw = 2.0 * recorded_pe(pe, options, i * grid.re.points + j) - 1.0;
      out.values(i, j) = options.calibration.apply(raw);
    }
  return out;
}

Calibration calibrate_vacuum(const std::vector<double>& nu, const std::vector<double>& measured) {
  const GaussianFit fit = fit_gaussian(nu, measured);
  if (!(std::abs(fit.amplitude) > 1e-6) || !std::isfinite(fit.sigma)) {
    throw Error(ErrorCode::kFitFailure, "calibrate_vacuum: no Gaussian found in the sweep");
  }
  return {fit.amplitude, fit.offset, fit.sigma};
}

double estimate_fidelity(const TomographyGrid& measured, const Operator& ideal_cavity) {
  measured.validate(std::numeric_limits<double>::infinity());
  const Operator& rho = ideal_cavity;
  TomographyGrid ideal =
      measured.kind == GridKind::kWigner
          ? wigner_direct(rho, measured.spec)
          : charfunc_direct(rho, measured.spec,
                            measured.kind == GridKind::kCharRe ? CharPart::kRe : CharPart::kIm);
  const double weight = measured.kind == GridKind::kWigner ? kPi : 1.0 / kPi;
  const double area = measured.spec.cell_area();
  const double purity = (rho * rho).trace().real();
  const double captured = weight * ideal.values.squaredNorm() * area / purity;
  if (captured < 0.99) {
    throw Error(ErrorCode::kInsufficientCoverage,
                "estimate_fidelity: grid captures only " + format_double(captured) +
                    " of the ideal state's norm (need 0.99)");
  }
  return weight * measured.values.cwiseProduct(ideal.values).sum() * area;
}

// ---------------------------------------------- Kerr and dephasing

double fringe_contrast(const Operator& rho_cavity, double max_radius, int cavity_dim) {
  const QuantumState st = QuantumState::mixed(rho_cavity);
  const int dim = std::max<int>(rho_cavity.rows(),
                                pick_dim(cavity_dim, effective_support(rho_cavity), max_radius));
  const Displacer d(dim);
  std::vector<std::pair<double, CVector>> comps;
  for (auto& [p, v] : components(st)) {
    CVector big = CVector::Zero(dim);
    big.head(v.size()) = v;
    comps.emplace_back(p, big);
  }
  constexpr int kRings = 40;
  constexpr int kAngles = 120;
  double best = 0.0;
  for (int k = 1; k <= kRings; ++k) {
    const double r = max_radius * k / kRings;
    cplx harmonic = 0.0;
    for (int a = 0; a < kAngles; ++a) {
      const double phi = kTwoPi * a / kAngles;
      const cplx nu = std::polar(r, phi);
      double c = 0.0;
      for (const auto& [p, v] : comps) c += p * v.dot(d.apply(nu, v)).real();
      harmonic += c * std::polar(1.0, -2.0 * phi);
    }
    best = std::max(best, 2.0 * std::abs(harmonic) / kAngles);
  }
  return best;
}

AlignedFidelity phase_aligned_fidelity(const Operator& rho_cavity, cplx reference) {
  const int dim = static_cast<int>(rho_cavity.rows());
  const CVector base = coherent_state(std::abs(reference), dim).ket();
  auto fid = [&](double phi) {
    CVector v = base;
    for (int n = 0; n < dim; ++n) v(n) *= std::polar(1.0, phi * n);
    return overlap_fidelity(v, rho_cavity);
  };
  constexpr int kCoarse = 360;
  double best_phi = 0.0, best = -1.0;
  for (int k = 0; k < kCoarse; ++k) {
    const double phi = kTwoPi * k / kCoarse;
    const double f = fid(phi);
    if (f > best) best = f, best_phi = phi;
  }
  double a = best_phi - kTwoPi / kCoarse, b = best_phi + kTwoPi / kCoarse;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 60; ++it) {
    const double c = b - gr * (b - a), d = a + gr * (b - a);
    if (fid(c) > fid(d))
      b = d;
    else
      a = c;
  }
  const double phi = 0.5 * (a + b);
  const double f = fid(phi);
  if (f > best) best = f, best_phi = phi;
  return {best, std::remainder(best_phi, kTwoPi)};
}

KerrResult kerr_evolution(const KerrOptions& o, const DispersiveParams& dp_evolve,
                          const SystemParams& params, const SpaceConfig& cfg) {
  Warnings w;
  const SpaceConfig small{cfg.cavity_dim, 2};  // transmon idles in g
  const QuantumState start = with_ground_transmon(coherent_state(o.alpha0, cfg.cavity_dim, &w), small);
  const LindbladModel model = o.noise ? collapse_operators(params, small) : LindbladModel{};
  const QuantumState end =
      evolve_static(start, dispersive_hamiltonian(dp_evolve, small), model, o.duration_s);
  const Operator cav = cavity_marginal(end, small);

  const double decay = o.noise ? std::exp(-o.duration_s / (2.0 * params.t1_cavity_s)) : 1.0;
  const double amp = std::abs(o.alpha0) * decay;
  const AlignedFidelity aligned = phase_aligned_fidelity(cav, amp);
  const cplx ref = std::polar(amp, aligned.phase);

  TomographyGrid grid = charfunc_direct(cav, o.grid, CharPart::kIm);
  TomographyGrid reference{o.grid, GridKind::kCharIm, Eigen::MatrixXd::Zero(o.grid.im.points, o.grid.re.points)};
  for (std::size_t i = 0; i < o.grid.im.points; ++i)
    for (std::size_t j = 0; j < o.grid.re.points; ++j) {
      const cplx nu = o.grid.point(i, j);
      // Coherent state: C(nu) = exp(-|nu|^2/2 + 2i Im(nu conj(alpha))).
      reference.values(i, j) =
          std::exp(-0.5 * std::norm(nu)) * std::sin(2.0 * std::imag(nu * std::conj(ref)));
    }
  const double distortion = (grid.values - reference.values).cwiseAbs().maxCoeff();
  return {grid, reference, distortion, aligned, cav};
}

WalkResult dephasing_random_walk(const WalkOptions& o, const SystemParams& params,
                                 const SpaceConfig& cfg) {
  if (o.cycles < 1) invalid("dephasing_random_walk: cycles must be >= 1");
  if (!(o.tau_s >= 0.0)) invalid("dephasing_random_walk: tau must be non-negative");
  const SpaceConfig small{cfg.cavity_dim, 2};
  QuantumState state =
      with_ground_transmon(coherent_state(o.alpha0, cfg.cavity_dim), small).to_mixed();
  const LindbladModel model = o.noise ? collapse_operators(params, small) : LindbladModel{};
  const Operator h = dispersive_hamiltonian({o.chi_hz, 0.0, 0.0}, small);
  const Operator pg = ground_projector(small);
  const Operator pe = identity_op(small.total_dim()) - pg;
  for (int c = 0; c < o.cycles; ++c) {
    state = apply_gate(state, RotationY{0.5 * kPi}, small);
    state = evolve_static(state, h, model, o.tau_s);
    if (o.variant == WalkVariant::kProject) {
      const Operator r = state.density();
      state = QuantumState::unchecked_mixed(pg * r * pg + pe * r * pe);
    }
  }
  WalkResult out{TomographyGrid{}, cavity_marginal(state, small),
                 expectation(pg, state).real(), 0.0, kTwoPi * o.chi_hz * o.tau_s};
  out.re_grid = charfunc_direct(out.cavity, o.grid, CharPart::kRe);
  out.contrast = fringe_contrast(out.cavity);
  return out;
}

}  // namespace fluxcqed
