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

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "fluxcqed/cli.hpp"
#include "fluxcqed/experiments.hpp"

namespace py = pybind11;
using namespace fluxcqed;

namespace {

GridSpec square(double half_width, std::size_t points) {
  return GridSpec::square(half_width, points);
}

CharPart part_from(const std::string& s) {
  if (s == "re") return CharPart::kRe;
  if (s == "im") return CharPart::kIm;
  throw Error(ErrorCode::kInvalidArgument, "part must be 're' or 'im'");
}

Waveform waveform(const std::vector<double>& samples, double ts) {
  Waveform w{ts, samples};
  w.validate();
  return w;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Flux-tunable transmon / cavity simulator and flux predistortion toolkit";

  static py::exception<Error> error(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(error.ptr(), (std::string(to_string(e.code())) + ": " + e.what()).c_str());
    }
  });

  py::class_<SystemParams>(m, "SystemParams")
      .def(py::init<>())
      .def_readwrite("omega_c_hz", &SystemParams::omega_c_hz)
      .def_readwrite("omega_t_max_hz", &SystemParams::omega_t_max_hz)
      .def_readwrite("alpha_hz", &SystemParams::alpha_hz)
      .def_readwrite("g_hz", &SystemParams::g_hz)
      .def_readwrite("t1_transmon_s", &SystemParams::t1_transmon_s)
      .def_readwrite("t2_transmon_s", &SystemParams::t2_transmon_s)
      .def_readwrite("t1_cavity_s", &SystemParams::t1_cavity_s)
      .def_readwrite("noiseless", &SystemParams::noiseless)
      .def("validate", &SystemParams::validate)
      .def("without_noise", &SystemParams::without_noise);

  py::class_<SpaceConfig>(m, "SpaceConfig")
      .def(py::init([](int cavity_dim, int transmon_dim) {
             SpaceConfig c{cavity_dim, transmon_dim};
             c.validate();
             return c;
           }),
           py::arg("cavity_dim") = 30, py::arg("transmon_dim") = 3)
      .def_readonly("cavity_dim", &SpaceConfig::cavity_dim)
      .def_readonly("transmon_dim", &SpaceConfig::transmon_dim);

  py::class_<DispersiveParams>(m, "DispersiveParams")
      .def(py::init([](double chi, double kerr, double det) { return DispersiveParams{chi, kerr, det}; }),
           py::arg("chi_hz"), py::arg("kerr_hz") = 0.0, py::arg("detuning_hz") = 0.0)
      .def_readwrite("chi_hz", &DispersiveParams::chi_hz)
      .def_readwrite("kerr_hz", &DispersiveParams::kerr_hz)
      .def_readwrite("detuning_hz", &DispersiveParams::detuning_hz);

  // system
  m.def("freq_from_current",
        [](double i_ma, double k, const SystemParams& p) {
          return freq_from_current(i_ma, FluxRelation{k, p});
        },
        py::arg("current_ma"), py::arg("k_phi0_per_ma") = 0.039, py::arg("params") = SystemParams{});
  m.def("current_from_freq",
        [](double f, double k, const SystemParams& p) {
          return current_from_freq(f, FluxRelation{k, p});
        },
        py::arg("freq_hz"), py::arg("k_phi0_per_ma") = 0.039, py::arg("params") = SystemParams{});
  m.def("extract_chi_kerr",
        [](const SystemParams& p, double det, const SpaceConfig& cfg) {
          return extract_chi_kerr(p, det, cfg);
        },
        py::arg("params"), py::arg("detuning_hz"), py::arg("cfg") = SpaceConfig{});
  m.def("chi_table", [](const SystemParams& p) {
    std::vector<std::tuple<std::string, double, double, double>> rows;
    for (const FluxPoint& fp : reference_flux_points()) {
      const DispersiveParams dp = extract_chi_kerr(p, fp.detuning_hz, SpaceConfig{});
      rows.emplace_back(std::string(1, fp.label), fp.detuning_hz, dp.chi_hz, dp.kerr_hz);
    }
    return rows;
  }, py::arg("params") = SystemParams{}, "(label, detuning_hz, chi_hz, kerr_hz) per reference flux point");

  // states
  m.def("fock_density", [](int n, int dim) { return Operator(fock_state(n, dim).density()); },
        py::arg("n"), py::arg("dim"));
  m.def("coherent_density",
        [](cplx alpha, int dim) { return Operator(coherent_state(alpha, dim).density()); },
        py::arg("alpha"), py::arg("dim"));

  // experiments
  m.def("vacuum_rabi_chevron",
        [](const std::vector<double>& det, const std::vector<double>& times,
           const SystemParams& p, const SpaceConfig& cfg, bool noise, double dt) {
          return vacuum_rabi_chevron(det, times, p, cfg, noise, dt).values;
        },
        py::arg("detunings_hz"), py::arg("times_s"), py::arg("params") = SystemParams{},
        py::arg("cfg") = SpaceConfig{3, 2}, py::arg("noise") = false, py::arg("dt_s") = 1e-10);

  m.def("prepare_fock",
        [](int photons, const std::string& mode, bool noise, const SystemParams& p,
           const SpaceConfig& cfg) {
          FockOptions o;
          o.photons = photons;
          if (mode != "instant" && mode != "finite") {
            throw Error(ErrorCode::kInvalidArgument, "mode must be 'instant' or 'finite'");
          }
          o.mode = mode == "instant" ? PulseMode::kInstant : PulseMode::kFinite;
          o.noise = noise;
          const FockResult r = prepare_fock(o, p, cfg);
          return py::make_tuple(r.fidelity, Operator(cavity_marginal(r.state, cfg)));
        },
        py::arg("photons") = 1, py::arg("mode") = "instant", py::arg("noise") = false,
        py::arg("params") = SystemParams{}, py::arg("cfg") = SpaceConfig{6, 3},
        "Returns (fidelity, cavity density matrix).");

  m.def("wigner_direct",
        [](const Operator& rho, double hw, std::size_t n) {
          return wigner_direct(rho, square(hw, n)).values;
        },
        py::arg("rho"), py::arg("half_width") = 2.5, py::arg("points") = 41);
  m.def("charfunc_direct",
        [](const Operator& rho, double hw, std::size_t n, const std::string& part) {
          return charfunc_direct(rho, square(hw, n), part_from(part)).values;
        },
        py::arg("rho"), py::arg("half_width") = 2.5, py::arg("points") = 41,
        py::arg("part") = "re");
  m.def("wigner_protocol",
        [](const Operator& rho, const DispersiveParams& dp, double hw, std::size_t n,
           double readout_fidelity) {
          const SpaceConfig cfg{static_cast<int>(rho.rows()), 2};
          ProtocolOptions o;
          o.readout = ReadoutModel::symmetric(readout_fidelity);
          const QuantumState comp = with_ground_transmon(QuantumState::mixed(rho), cfg);
          return wigner_protocol(comp, cfg, square(hw, n), dp, o).values;
        },
        py::arg("rho"), py::arg("dp"), py::arg("half_width") = 2.5, py::arg("points") = 21,
        py::arg("readout_fidelity") = 1.0);
  m.def("charfunc_protocol",
        [](const Operator& rho, const DispersiveParams& dp, double hw, std::size_t n,
           const std::string& part, bool decomposed, double readout_fidelity) {
          const SpaceConfig cfg{static_cast<int>(rho.rows()), 2};
          ProtocolOptions o;
          o.readout = ReadoutModel::symmetric(readout_fidelity);
          EcdOptions e;
          e.mode = decomposed ? EcdMode::kDecomposed : EcdMode::kIdeal;
          const QuantumState comp = with_ground_transmon(QuantumState::mixed(rho), cfg);
          return charfunc_protocol(comp, cfg, square(hw, n), part_from(part), dp, o, e).values;
        },
        py::arg("rho"), py::arg("dp"), py::arg("half_width") = 2.5, py::arg("points") = 21,
        py::arg("part") = "re", py::arg("decomposed") = false, py::arg("readout_fidelity") = 1.0);
  m.def("calibrate_vacuum",
        [](const std::vector<double>& nu, const std::vector<double>& y) {
          const Calibration c = calibrate_vacuum(nu, y);
          return py::dict(py::arg("scale") = c.scale, py::arg("offset") = c.offset,
                          py::arg("sigma") = c.sigma);
        },
        py::arg("nu"), py::arg("measured"));
  m.def("fringe_contrast",
        [](const Operator& rho, double r) { return fringe_contrast(rho, r); },
        py::arg("rho"), py::arg("max_radius") = 2.0);

  m.def("kerr_evolution",
        [](cplx alpha, double duration, const DispersiveParams& dp, const SystemParams& p,
           int cavity_dim, bool noise, std::size_t points) {
          KerrOptions o;
          o.alpha0 = alpha;
          o.duration_s = duration;
          o.noise = noise;
          o.grid = square(2.0, points);
          const KerrResult r = kerr_evolution(o, dp, p, SpaceConfig{cavity_dim, 2});
          return py::dict(py::arg("distortion") = r.distortion,
                          py::arg("fidelity") = r.aligned.fidelity,
                          py::arg("im_grid") = r.im_grid.values, py::arg("cavity") = r.cavity);
        },
        py::arg("alpha"), py::arg("duration_s"), py::arg("dp"), py::arg("params") = SystemParams{},
        py::arg("cavity_dim") = 30, py::arg("noise") = true, py::arg("points") = 41);

  m.def("dephasing_random_walk",
        [](cplx alpha, int cycles, double tau, double chi, const std::string& variant,
           const SystemParams& p, int cavity_dim, bool noise, std::size_t points) {
          WalkOptions o;
          o.alpha0 = alpha;
          o.cycles = cycles;
          o.tau_s = tau;
          o.chi_hz = chi;
          if (variant != "decohere" && variant != "project") {
            throw Error(ErrorCode::kInvalidArgument, "variant must be 'decohere' or 'project'");
          }
          o.variant = variant == "project" ? WalkVariant::kProject : WalkVariant::kDecohere;
          o.noise = noise;
          o.grid = square(2.0, points);
          const WalkResult r = dephasing_random_walk(o, p, SpaceConfig{cavity_dim, 2});
          return py::dict(py::arg("contrast") = r.contrast, py::arg("step_phase") = r.step_phase,
                          py::arg("p_ground") = r.p_ground, py::arg("re_grid") = r.re_grid.values,
                          py::arg("cavity") = r.cavity);
        },
        py::arg("alpha") = cplx(2.5, 0.0), py::arg("cycles") = 10, py::arg("tau_s") = 400e-9,
        py::arg("chi_hz") = 0.94e6, py::arg("variant") = "decohere",
        py::arg("params") = SystemParams{}, py::arg("cavity_dim") = 30, py::arg("noise") = true,
        py::arg("points") = 41);

  // predistortion
  m.def("reference_step",
        [](double ts, std::size_t n, std::size_t onset) {
          return simulate_line(reference_line_model(), unit_step(ts, n, onset)).samples;
        },
        py::arg("ts") = 1e-9, py::arg("n") = 4000, py::arg("onset") = 100,
        "Step response of the built-in synthetic flux line.");
  m.def("train_chain",
        [](const std::vector<double>& step, double ts, std::size_t onset, std::size_t n_iir,
           std::size_t n_fir, std::size_t taps, double alpha) {
          StepResponse r{waveform(step, ts), onset};
          FirStageSpec spec;
          spec.n_taps = taps;
          spec.alpha_reg = alpha;
          const TrainedChain tc = train_chain(r, n_iir, std::vector<FirStageSpec>(n_fir, spec));
          return py::make_tuple(serialize_chain(tc.chain), tc.corrected.waveform.samples);
        },
        py::arg("step"), py::arg("ts") = 1e-9, py::arg("onset") = 100, py::arg("n_iir") = 11,
        py::arg("n_fir") = 2, py::arg("fir_taps") = 64, py::arg("fir_alpha") = 1e-3,
        "Returns (chain text, corrected step response).");
  m.def("apply_chain",
        [](const std::string& chain, const std::vector<double>& samples, double ts) {
          return predistort_waveform(waveform(samples, ts), parse_chain(chain)).samples;
        },
        py::arg("chain"), py::arg("samples"), py::arg("ts") = 1e-9);
  m.def("fir_inverse",
        [](const std::vector<double>& h, double alpha, std::size_t n) {
          return fir_inverse(h, alpha, n).taps;
        },
        py::arg("h"), py::arg("alpha_reg"), py::arg("n_taps"));

  m.def("run_cli",
        [](const std::vector<std::string>& args) {
          std::vector<const char*> argv{"fluxcqed"};
          for (const auto& a : args) argv.push_back(a.c_str());
          std::ostringstream out, err;
          const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
          return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command line; returns (exit code, stdout, stderr).");
}
