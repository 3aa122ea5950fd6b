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

#include "fluxcqed/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "fluxcqed/experiments.hpp"

namespace fluxcqed {

namespace {

namespace fs = std::filesystem;

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::kConfig, msg); }

// ------------------------------------------------------------ context

struct Context {
  const KeyValues& kv;
  std::ostream& out;
  std::string experiment;
  fs::path dir;
  SystemParams params;
  FluxRelation rel;
  std::vector<fs::path> inputs;

  long int_key(const std::string& key, long fallback, long lo) const {
    const long v = kv.get_int(key, fallback);
    if (v < lo) config_error("key '" + key + "' must be >= " + std::to_string(lo));
    return v;
  }

  double positive(const std::string& key, double fallback) const {
    const double v = kv.get_double(key, fallback);
    if (!(v > 0.0)) config_error("key '" + key + "' must be positive");
    return v;
  }

  bool noise(bool fallback) const { return kv.get_bool("noise", fallback); }

  SpaceConfig space(int cavity, int transmon) const {
    SpaceConfig cfg{static_cast<int>(int_key("cavity_dim", cavity, 2)),
                    static_cast<int>(int_key("transmon_dim", transmon, 2))};
    return cfg;
  }

  GridSpec grid(double half_width, long points) const {
    return GridSpec::square(positive("half_width", half_width),
                            static_cast<std::size_t>(int_key("grid_points", points, 1)));
  }

  const FluxPoint& point(const std::string& fallback) const {
    const std::string label = kv.get_string("flux_point", fallback);
    if (label.size() != 1) config_error("key 'flux_point' must be one of A-F, got '" + label + "'");
    return flux_point(label[0]);
  }

  fs::path input(const std::string& key) {
    fs::path p = kv.require_string(key);
    if (!fs::exists(p)) throw Error(ErrorCode::kConfig, "key '" + key + "': file not found: " + p.string());
    inputs.push_back(p);
    return p;
  }

  fs::path output(const std::string& suffix) const {
    fs::path p = dir / (kv.get_string("output", experiment) + suffix);
    for (const auto& in : inputs) {
      std::error_code ec;
      if (fs::exists(p) && fs::equivalent(p, in, ec)) {
        config_error("output " + p.string() + " would overwrite input " + in.string());
      }
    }
    return p;
  }

  void stamp(ExperimentResult& r) const {
    r.metadata.set("experiment", experiment);
    r.metadata.set("seed", kv.get_string("seed", "1"));
    const KeyValues snapshot = params_to_keys(params);
    for (const auto& [k, v] : snapshot.entries()) r.metadata.set("param." + k, v);
  }

  fs::path write(ExperimentResult& r, const std::string& suffix = ".csv") const {
    stamp(r);
    const fs::path p = output(suffix);
    write_result(r, p);
    return p;
  }
};

std::vector<double> linspace(double lo, double hi, long n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) v[i] = n == 1 ? lo : lo + (hi - lo) * i / static_cast<double>(n - 1);
  return v;
}

std::string shape(const ExperimentResult& r) {
  return std::to_string(r.rows.size()) + "x" + std::to_string(r.cols.size());
}

// ---------------------------------------------------------- runners

void run_pi_scope(Context& c) {
  PiScopeSpec spec;
  if (c.kv.has("flux_csv")) {
    spec.flux_ma = read_waveform_csv(c.input("flux_csv"));
  } else {
    // Synthetic current step.
    const double ts = c.positive("flux_ts_s", 1e-9);
    const long n = c.int_key("flux_samples", 400, 2);
    const auto edge = static_cast<std::size_t>(c.int_key("step_sample", 100, 0));
    const double i0 = c.kv.get_double("current_start_ma", 0.0);
    const double i1 = c.kv.get_double("current_end_ma", 3.0);
    spec.flux_ma.ts = ts;
    spec.flux_ma.samples.assign(static_cast<std::size_t>(n), i0);
    for (std::size_t k = edge; k < spec.flux_ma.samples.size(); ++k) spec.flux_ma.samples[k] = i1;
  }
  spec.flux_ma.validate();
  spec.probe_len_s = c.positive("probe_len_s", 16e-9);
  spec.probe_rabi_hz = c.positive("probe_rabi_hz", 1e6);
  const double span = spec.flux_ma.ts * static_cast<double>(spec.flux_ma.size());
  spec.delays_s = linspace(c.kv.get_double("delay_start_s", 0.0),
                           c.kv.get_double("delay_stop_s", span - spec.probe_len_s),
                           c.int_key("delay_points", 76, 1));
  auto [lo_it, hi_it] = std::minmax_element(spec.flux_ma.samples.begin(), spec.flux_ma.samples.end());
  const double fa = freq_from_current(*lo_it, c.rel), fb = freq_from_current(*hi_it, c.rel);
  spec.probe_freqs_hz = linspace(c.kv.get_double("freq_start_hz", std::min(fa, fb) - 40e6),
                                 c.kv.get_double("freq_stop_hz", std::max(fa, fb) + 40e6),
                                 c.int_key("freq_points", 121, 2));
  ExperimentResult scan = pi_scope(spec, c.rel);
  const FrequencyTrack track =
      extract_trajectory(scan, c.rel, c.kv.get_double("threshold", 0.2));
  const fs::path p = c.write(scan);

  ExperimentResult tr;
  tr.protocol = "pi-scope-trajectory";
  tr.row_axis = "time_s";
  tr.col_axis = "quantity";
  tr.value_name = "freq_hz|current_ma|valid";
  tr.rows = track.times_s;
  tr.cols = {0.0, 1.0, 2.0};
  tr.values.resize(static_cast<Eigen::Index>(tr.rows.size()), 3);
  std::size_t gaps = 0;
  for (std::size_t i = 0; i < tr.rows.size(); ++i) {
    tr.values(i, 0) = track.freq_hz[i];
    tr.values(i, 1) = track.current_ma[i];
    tr.values(i, 2) = track.valid[i] ? 1.0 : 0.0;
    gaps += track.valid[i] ? 0 : 1;
  }
  const fs::path q = c.write(tr, ".trajectory.csv");
  c.out << "pi-scope: " << shape(scan) << " scan -> " << p.string() << "; trajectory with "
        << gaps << " gaps -> " << q.string() << '\n';
}

void run_rabi(Context& c) {
  const SpaceConfig cfg = c.space(3, 2);
  const auto det = linspace(c.kv.get_double("detuning_start_hz", -20e6),
                            c.kv.get_double("detuning_stop_hz", 20e6),
                            c.int_key("detuning_points", 41, 1));
  const auto times = linspace(c.kv.get_double("time_start_s", 0.0),
                              c.kv.get_double("time_stop_s", 300e-9),
                              c.int_key("time_points", 151, 1));
  ExperimentResult r =
      vacuum_rabi_chevron(det, times, c.params, cfg, c.noise(false), c.positive("dt_s", 1e-10));
  const fs::path p = c.write(r);
  c.out << "rabi: " << shape(r) << " chevron -> " << p.string() << '\n';
}

void run_fock(Context& c) {
  const SpaceConfig cfg = c.space(6, 3);
  FockOptions o;
  o.photons = static_cast<int>(c.int_key("photons", 1, 1));
  const std::string mode = c.kv.get_string("pulse_mode", "finite");
  if (mode != "finite" && mode != "instant") config_error("key 'pulse_mode' must be finite or instant");
  o.mode = mode == "finite" ? PulseMode::kFinite : PulseMode::kInstant;
  o.noise = c.noise(true);
  o.park_detuning_hz = c.kv.has("park_detuning_hz") ? c.kv.get_double("park_detuning_hz", 0.0)
                                                    : c.point("A").detuning_hz;
  o.pi_pulse_s = c.positive("pi_pulse_s", o.pi_pulse_s);
  o.dt_s = c.positive("dt_s", o.dt_s);
  const FockResult fr = prepare_fock(o, c.params, cfg);
  const GridSpec g = c.grid(2.5, 41);
  ExperimentResult r = to_result(wigner_direct(cavity_marginal(fr.state, cfg), g), "fock");
  r.metadata.set("photons", static_cast<double>(o.photons));
  r.metadata.set("fidelity", fr.fidelity);
  r.metadata.set("p_ground", fr.p_ground);
  const fs::path p = c.write(r);
  c.out << "fock: n=" << o.photons << " fidelity=" << format_double(fr.fidelity) << " -> "
        << p.string() << '\n';
}

QuantumState named_state(const Context& c, int dim) {
  const std::string s = c.kv.get_string("state", "vacuum");
  if (s == "vacuum") return fock_state(0, dim);
  if (s == "fock1") return fock_state(1, dim);
  if (s == "fock2") return fock_state(2, dim);
  if (s == "coherent") {
    return coherent_state({c.kv.get_double("alpha_re", 1.0), c.kv.get_double("alpha_im", 0.0)}, dim);
  }
  config_error("key 'state' must be vacuum, fock1, fock2 or coherent, got '" + s + "'");
}

ProtocolOptions protocol_options(const Context& c) {
  ProtocolOptions o;
  o.readout = ReadoutModel::symmetric(c.kv.get_double("readout_fidelity", 1.0));
  o.readout.validate();
  o.shots = static_cast<std::size_t>(c.int_key("shots", 0, 0));
  o.seed = static_cast<std::uint64_t>(c.int_key("seed", 1, 0));
  return o;
}

// Vacuum sweep of Re C along Im(nu) = 0 through the same readout.
Calibration vacuum_calibration(const SpaceConfig& cfg, const DispersiveParams& dp,
                               const ProtocolOptions& o) {
  GridSpec line{{-3.0, 3.0, 61}, {0.0, 0.0, 1}};
  const QuantumState vac = with_ground_transmon(fock_state(0, cfg.cavity_dim), cfg);
  const TomographyGrid g = charfunc_protocol(vac, cfg, line, CharPart::kRe, dp, o);
  std::vector<double> y(g.values.cols());
  for (Eigen::Index j = 0; j < g.values.cols(); ++j) y[j] = g.values(0, j);
  return calibrate_vacuum(line.re.values(), y);
}

void run_tomography(Context& c, bool wigner) {
  const SpaceConfig cfg = c.space(12, 3);
  const QuantumState cav = named_state(c, cfg.cavity_dim);
  const GridSpec g = c.grid(2.5, 41);
  const std::string mode = c.kv.get_string("mode", "direct");
  if (mode != "direct" && mode != "protocol") config_error("key 'mode' must be direct or protocol");
  CharPart part = CharPart::kRe;
  if (!wigner) {
    const std::string p = c.kv.get_string("part", "re");
    if (p != "re" && p != "im") config_error("key 'part' must be re or im");
    part = p == "re" ? CharPart::kRe : CharPart::kIm;
  }
  Warnings warnings;
  TomographyGrid grid;
  KeyValues extra;
  if (mode == "direct") {
    grid = wigner ? wigner_direct(cav.density(), g)
                  : charfunc_direct(cav.density(), g, part, 0, &warnings);
  } else {
    const FluxPoint& fp = c.point(wigner ? "A" : "D");
    const DispersiveParams dp = extract_chi_kerr(c.params, fp.detuning_hz, SpaceConfig{}, &warnings);
    ProtocolOptions o = protocol_options(c);
    if (c.noise(false)) o.model = collapse_operators(c.params, cfg);
    if (c.kv.get_bool("calibrate", o.readout.fidelity() < 1.0)) {
      o.calibration = vacuum_calibration(cfg, dp, o);
      extra.set("cal_scale", o.calibration.scale);
      extra.set("cal_offset", o.calibration.offset);
      extra.set("cal_sigma", o.calibration.sigma);
    }
    extra.set("chi_hz", dp.chi_hz);
    const QuantumState comp = with_ground_transmon(cav, cfg);
    if (wigner) {
      grid = wigner_protocol(comp, cfg, g, dp, o);
    } else {
      EcdOptions ecd;
      const std::string e = c.kv.get_string("ecd", "ideal");
      if (e != "ideal" && e != "decomposed") config_error("key 'ecd' must be ideal or decomposed");
      ecd.mode = e == "ideal" ? EcdMode::kIdeal : EcdMode::kDecomposed;
      ecd.wait_s = c.kv.get_double("ecd_wait_s", 0.0);  // 0 = automatic
      grid = charfunc_protocol(comp, cfg, g, part, dp, o, ecd, &warnings);
    }
  }
  ExperimentResult r = to_result(grid, c.experiment);
  r.metadata.merge(extra);
  r.metadata.set("state", c.kv.get_string("state", "vacuum"));
  r.metadata.set("mode", mode);
  for (const auto& w : warnings.messages) std::cerr << "warning: " << w << '\n';
  const fs::path p = c.write(r);
  c.out << c.experiment << ": " << shape(r) << ' ' << to_string(grid.kind) << " ("
        << mode << ") range [" << format_double(grid.values.minCoeff()) << ", "
        << format_double(grid.values.maxCoeff()) << "] -> " << p.string() << '\n';
}

void run_kerr(Context& c) {
  const SpaceConfig cfg = c.space(30, 2);
  KerrOptions o;
  o.alpha0 = {c.kv.get_double("alpha_re", 2.5), c.kv.get_double("alpha_im", 0.0)};
  o.duration_s = c.positive("duration_s", o.duration_s);
  o.grid = c.grid(2.0, 41);
  o.noise = c.noise(true);
  if (exceeds_truncation_guard(std::abs(o.alpha0), cfg.cavity_dim)) {
    config_error("key 'alpha_re'/'alpha_im': |alpha| too large for cavity_dim " +
                 std::to_string(cfg.cavity_dim));
  }
  const FluxPoint& fp = c.point("B");
  const DispersiveParams dp = extract_chi_kerr(c.params, fp.detuning_hz, SpaceConfig{});
  const KerrResult kr = kerr_evolution(o, dp, c.params, cfg);
  ExperimentResult r = to_result(kr.im_grid, "kerr");
  r.metadata.set("kerr_hz", dp.kerr_hz);
  r.metadata.set("distortion", kr.distortion);
  r.metadata.set("aligned_fidelity", kr.aligned.fidelity);
  const fs::path p = c.write(r);
  c.out << "kerr: K=" << format_double(dp.kerr_hz) << " Hz distortion="
        << format_double(kr.distortion) << " fidelity=" << format_double(kr.aligned.fidelity)
        << " -> " << p.string() << '\n';
}

void run_dephase(Context& c) {
  const SpaceConfig cfg = c.space(30, 2);
  WalkOptions o;
  o.alpha0 = {c.kv.get_double("alpha_re", 2.5), c.kv.get_double("alpha_im", 0.0)};
  o.cycles = static_cast<int>(c.int_key("cycles", 10, 1));
  o.tau_s = c.kv.get_double("tau_s", o.tau_s);
  o.chi_hz = c.kv.has("chi_hz") ? c.kv.get_double("chi_hz", 0.0) : c.point("B").chi_exp_hz;
  o.grid = c.grid(2.0, 41);
  o.noise = c.noise(true);
  const std::string v = c.kv.get_string("variant", "decohere");
  if (v != "decohere" && v != "project") config_error("key 'variant' must be decohere or project");
  o.variant = v == "decohere" ? WalkVariant::kDecohere : WalkVariant::kProject;
  const WalkResult wr = dephasing_random_walk(o, c.params, cfg);
  ExperimentResult r = to_result(wr.re_grid, "dephase");
  r.metadata.set("chi_hz", o.chi_hz);
  r.metadata.set("variant", v);
  r.metadata.set("contrast", wr.contrast);
  r.metadata.set("step_phase_rad", wr.step_phase);
  const fs::path p = c.write(r);
  c.out << "dephase: chi=" << format_double(o.chi_hz) << " Hz step=" << format_double(wr.step_phase)
        << " rad contrast=" << format_double(wr.contrast) << " -> " << p.string() << '\n';
}

std::size_t detect_onset(const Waveform& w) {
  const std::size_t n = w.size();
  const std::size_t tail = std::min<std::size_t>(64, n);
  double final_value = 0.0;
  for (std::size_t i = n - tail; i < n; ++i) final_value += w.samples[i] / tail;
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(w.samples[i]) > 0.01 * std::abs(final_value)) return i;
  config_error("step response has no edge");
}

void run_predistort_train(Context& c) {
  StepResponse resp;
  if (c.kv.has("step")) {
    resp.waveform = read_waveform_csv(c.input("step"));
    resp.onset = c.kv.has("onset") ? static_cast<std::size_t>(c.int_key("onset", 0, 0))
                                   : detect_onset(resp.waveform);
  } else {
    const double ts = c.positive("ts_s", 1e-9);
    const long n = c.int_key("samples", 4000, 64);
    resp.onset = static_cast<std::size_t>(c.int_key("onset", 100, 0));
    resp.waveform = simulate_line(reference_line_model(),
                                  unit_step(ts, static_cast<std::size_t>(n), resp.onset));
  }
  const auto n_iir = static_cast<std::size_t>(c.int_key("iir", 11, 0));
  const auto n_fir = static_cast<std::size_t>(c.int_key("fir", 2, 0));
  FirStageSpec fs_spec;
  fs_spec.n_taps = static_cast<std::size_t>(c.int_key("fir_taps", 64, 1));
  fs_spec.alpha_reg = c.kv.get_double("fir_alpha", fs_spec.alpha_reg);
  const TrainedChain tc = train_chain(resp, n_iir, std::vector<FirStageSpec>(n_fir, fs_spec));

  const fs::path chain_path = c.output(".chain");
  write_chain(tc.chain, chain_path);
  const fs::path report_path = c.output(".csv");
  std::ofstream rep(report_path, std::ios::binary);
  if (!rep) throw Error(ErrorCode::kIo, "cannot write file: " + report_path.string());
  rep << "stage,kind,window_start,amplitude,exp_amp,tau_s,max_deviation,rms_deviation\n";
  for (std::size_t i = 0; i < tc.stages.size(); ++i) {
    const StageReport& s = tc.stages[i];
    const bool iir = s.kind == "iir";
    rep << i + 1 << ',' << s.kind << ',' << (iir ? std::to_string(s.window_start) : "") << ','
        << (iir ? format_double(s.fit.amplitude) : "") << ','
        << (iir ? format_double(s.fit.exp_amp) : "") << ','
        << (iir ? format_double(s.fit.tau) : "") << ',' << format_double(s.max_deviation) << ','
        << format_double(s.rms_deviation) << '\n';
  }
  const double level =
      c.kv.has("step") ? 1.0 : reference_line_model().dc_gain;
  const StepMetrics m = step_metrics(tc.corrected.waveform, resp.onset, 16,
                                     std::min<std::size_t>(1500, resp.waveform.size() - resp.onset - 16),
                                     level);
  c.out << "predistort-train: " << tc.chain.iir_count() << " IIR + " << tc.chain.fir_count()
        << " FIR stages, max deviation " << format_double(m.max_deviation) << ", rise "
        << format_double(m.rise_10_90) << " s -> " << chain_path.string() << ", "
        << report_path.string() << '\n';
}

void run_predistort_apply(Context& c) {
  const FilterChain chain = read_chain(c.input("chain"));
  const Waveform in = read_waveform_csv(c.input("input"));
  const Waveform outw = predistort_waveform(in, chain);
  const fs::path p = c.output(".csv");
  write_waveform_csv(outw, p);
  c.out << "predistort-apply: " << outw.size() << " samples through " << chain.stages.size()
        << " stages -> " << p.string() << '\n';
}

void run_chi_table(Context& c) {
  const SpaceConfig cfg = c.space(30, 3);
  const fs::path p = c.output(".csv");
  std::ostringstream csv;
  csv << "label,detuning_hz,chi_sim_hz,kerr_sim_hz,chi_exp_hz\n";
  for (const FluxPoint& fp : reference_flux_points()) {
    const DispersiveParams dp = extract_chi_kerr(c.params, fp.detuning_hz, cfg);
    csv << fp.label << ',' << format_double(fp.detuning_hz) << ',' << format_double(dp.chi_hz)
        << ',' << format_double(dp.kerr_hz) << ',' << format_double(fp.chi_exp_hz) << '\n';
  }
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write file: " + p.string());
  out << csv.str();
  c.out << "chi-table: 6 flux points -> " << p.string() << '\n';
}

using Runner = std::function<void(Context&)>;

const std::map<std::string, Runner>& registry() {
  static const std::map<std::string, Runner> r = {
      {"pi-scope", run_pi_scope},
      {"rabi", run_rabi},
      {"fock", run_fock},
      {"wigner", [](Context& c) { run_tomography(c, true); }},
      {"charfunc", [](Context& c) { run_tomography(c, false); }},
      {"kerr", run_kerr},
      {"dephase", run_dephase},
      {"predistort-train", run_predistort_train},
      {"predistort-apply", run_predistort_apply},
      {"chi-table", run_chi_table},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [k, f] : registry()) v.push_back(k);
    return v;
  }();
  return names;
}

fs::path output_dir(const KeyValues& config) {
  if (config.has("out_dir")) return config.get_string("out_dir", ".");
  if (const char* env = std::getenv("FLUXCQED_OUT_DIR"); env && *env) return env;
  return ".";
}

void run_experiment(const KeyValues& config, std::ostream& out) {
  const std::string name = config.require_string("experiment");
  const auto it = registry().find(name);
  if (it == registry().end()) throw UsageError("unknown experiment '" + name + "'");

  KeyValues param_keys;
  std::vector<fs::path> inputs;
  if (config.has("params")) {
    const fs::path pp = config.get_string("params", "");
    param_keys = KeyValues::load(pp);
    inputs.push_back(pp);
  }
  param_keys.merge(config);  // config keys override the parameter file
  Context c{config, out, name, output_dir(config), params_from_keys(param_keys),
            flux_relation_from_keys(param_keys), inputs};
  std::error_code ec;
  fs::create_directories(c.dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create output directory " + c.dir.string());
  it->second(c);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"fluxcqed: flux-tunable transmon and cavity simulator"};
  app.require_subcommand(1);
  KeyValues flags;
  std::string config_path;

  // Flags shared by every subcommand.
  auto common = [&](CLI::App* sub) {
    sub->add_option_function<std::string>(
        "--params", [&](const std::string& v) { flags.set("params", v); }, "parameter file");
    sub->add_option_function<std::string>(
        "--out", [&](const std::string& v) { flags.set("out_dir", v); }, "output directory");
    sub->add_option_function<std::string>(
        "--seed", [&](const std::string& v) { flags.set("seed", v); }, "root seed");
    sub->add_option_function<std::string>(
        "--output", [&](const std::string& v) { flags.set("output", v); }, "output file stem");
    sub->add_flag_function(
        "--noise,!--no-noise",
        [&](std::int64_t n) { flags.set("noise", n > 0 ? "true" : "false"); },
        "toggle decoherence");
    sub->add_option_function<std::vector<std::string>>(
        "--set",
        [&](const std::vector<std::string>& kvs) {
          for (const auto& s : kvs) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw CLI::ValidationError("--set", "expected key=value");
            flags.set(s.substr(0, eq), s.substr(eq + 1));
          }
        },
        "extra configuration key=value");
    sub->add_option("--config", config_path, "configuration file merged under the flags");
  };
  auto keyed = [&](CLI::App* sub, const std::string& flag, const std::string& key,
                   const std::string& help) {
    sub->add_option_function<std::string>(
        flag, [&flags, key](const std::string& v) { flags.set(key, v); }, help);
  };

  std::string run_config;
  CLI::App* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("file", run_config, "configuration file")->required();
  common(run);

  std::map<std::string, CLI::App*> subs;
  const std::map<std::string, std::string> about = {
      {"pi-scope", "time-resolved transmon spectroscopy of a flux waveform"},
      {"rabi", "vacuum Rabi chevron"},
      {"fock", "Fock state preparation"},
      {"wigner", "Wigner tomography"},
      {"charfunc", "characteristic-function tomography"},
      {"kerr", "self-Kerr evolution of a coherent state"},
      {"dephase", "dephasing random walk"},
      {"predistort-train", "train an IIR/FIR predistortion chain from a step response"},
      {"predistort-apply", "predistort a waveform with a trained chain"},
      {"chi-table", "dispersive shift and self-Kerr at the reference flux points"},
  };
  for (const auto& name : experiment_names()) {
    CLI::App* sub = app.add_subcommand(name, about.at(name));
    common(sub);
    subs[name] = sub;
  }
  for (const auto& name : {"wigner", "charfunc", "fock"}) {
    keyed(subs[name], "--grid", "grid_points", "grid points per axis");
    keyed(subs[name], "--half-width", "half_width", "grid half width");
  }
  for (const auto& name : {"kerr", "dephase"}) {
    keyed(subs[name], "--grid", "grid_points", "grid points per axis");
    keyed(subs[name], "--alpha", "alpha_re", "initial coherent amplitude");
  }
  for (const auto& name : {"wigner", "charfunc"}) {
    keyed(subs[name], "--state", "state", "vacuum | fock1 | fock2 | coherent");
    keyed(subs[name], "--mode", "mode", "direct | protocol");
    keyed(subs[name], "--readout-fidelity", "readout_fidelity", "symmetric readout fidelity");
    keyed(subs[name], "--shots", "shots", "shots per point (0 = exact)");
    keyed(subs[name], "--flux-point", "flux_point", "tomography flux point A-F");
  }
  keyed(subs["charfunc"], "--part", "part", "re | im");
  keyed(subs["charfunc"], "--ecd", "ecd", "ideal | decomposed");
  keyed(subs["fock"], "--photons", "photons", "1 or 2");
  keyed(subs["fock"], "--pulse-mode", "pulse_mode", "finite | instant");
  keyed(subs["kerr"], "--flux-point", "flux_point", "evolution flux point A-F");
  keyed(subs["kerr"], "--duration", "duration_s", "evolution time, s");
  keyed(subs["dephase"], "--flux-point", "flux_point", "flux point A-F giving chi");
  keyed(subs["dephase"], "--chi", "chi_hz", "dispersive shift, Hz");
  keyed(subs["dephase"], "--cycles", "cycles", "number of pi/2 + wait cycles");
  keyed(subs["dephase"], "--tau", "tau_s", "wait per cycle, s");
  keyed(subs["dephase"], "--variant", "variant", "decohere | project");
  keyed(subs["pi-scope"], "--flux", "flux_csv", "flux current waveform CSV (mA)");
  keyed(subs["pi-scope"], "--probe-len", "probe_len_s", "probe length, s");
  keyed(subs["rabi"], "--dt", "dt_s", "integration step, s");
  keyed(subs["predistort-train"], "--step", "step", "measured step response CSV");
  keyed(subs["predistort-train"], "--iir", "iir", "number of IIR stages");
  keyed(subs["predistort-train"], "--fir", "fir", "number of FIR stages");
  keyed(subs["predistort-train"], "--fir-taps", "fir_taps", "taps per FIR stage");
  keyed(subs["predistort-train"], "--fir-alpha", "fir_alpha", "FIR regularisation");
  keyed(subs["predistort-apply"], "--chain", "chain", "trained chain file");
  keyed(subs["predistort-apply"], "--input", "input", "waveform CSV to predistort");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    KeyValues config;
    if (run->parsed()) {
      config = KeyValues::load(run_config);
    } else {
      if (!config_path.empty()) config = KeyValues::load(config_path);
      for (const auto& [name, sub] : subs)
        if (sub->parsed()) config.set("experiment", name);
    }
    config.merge(flags);
    run_experiment(config, out);
    return kExitOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return e.is_numerical() ? kExitNumerical : kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace fluxcqed
