// Copyright 2026 The morphsurf Authors.
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

// morphsurf command-line driver.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 numeric failure.

#include "morphsurf/config.hpp"
#include "morphsurf/control.hpp"
#include "morphsurf/crossbar.hpp"
#include "morphsurf/dataset.hpp"
#include "morphsurf/errors.hpp"
#include "morphsurf/kernels.hpp"
#include "morphsurf/mechanics.hpp"
#include "morphsurf/mlp.hpp"
#include "morphsurf/pointcloud.hpp"
#include "morphsurf/report.hpp"
#include "morphsurf/scanner.hpp"
#include "morphsurf/text_io.hpp"
#include "morphsurf/voltage_grid.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace morph;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

ExperimentConfig load(const Globals& g) {
  ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{} : load_config(g.config);
  if (g.seed) cfg.set_seed(*g.seed);
  return cfg;
}

std::string out_or(const Globals& g, const std::string& fallback) {
  return g.out.empty() ? fallback : g.out;
}

void write_into(const fs::path& dir, const std::string& name, const std::string& contents) {
  fs::create_directories(dir);
  text::write_file_atomic((dir / name).string(), contents);
}

void write_file(const std::string& path, const std::string& contents) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  text::write_file_atomic(path, contents);
}

std::string f6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Writes a flat vector as a grid: square lengths become n x n.
std::string format_vector(const std::vector<double>& v) {
  const std::size_t side = static_cast<std::size_t>(std::llround(std::sqrt(double(v.size()))));
  const std::size_t cols = side * side == v.size() ? side : v.size();
  return format_grid_csv(VoltageGrid::from_flat(v.size() / cols, cols, v));
}

std::vector<double> read_vector(const std::string& path) { return read_grid_csv(path).flatten(); }

// ---- scan -----------------------------------------------------------------

struct ScanArgs {
  std::string target;
  std::string protocol;
  std::string blockers;
  bool compensate = false;
  bool trace = false;
  std::optional<std::size_t> cycles;
};

int cmd_scan(const Globals& g, const ScanArgs& a) {
  ExperimentConfig cfg = load(g);
  CrossbarConfig xb = cfg.resolved_crossbar();
  // Blockers change only the leakage; the electrodes stay calibrated.
  if (a.blockers == "off") xb.blocker_factor = 1.0;
  ScanSettings st = cfg.scan;
  if (!a.protocol.empty()) st.protocol = a.protocol == "dpa" ? Protocol::kDpa : Protocol::kPs;
  if (a.cycles) st.cycles = *a.cycles;
  st.compensate = st.compensate || a.compensate;
  st.record_trace = a.trace;

  const VoltageGrid target = read_grid_csv(a.target);
  const CrossbarNetwork net = build_network(xb);
  ScanOutcome o;
  try {
    o = scan_target(net, cfg.dynamics, target, st);
  } catch (const Error& e) {
    if (e.code() == Errc::kNotRepresentable) {
      std::cerr << "DPA cannot reproduce this target: " << e.what() << '\n';
    }
    throw;
  }
  const fs::path dir = out_or(g, "scan_out");
  write_into(dir, "settled.csv", format_grid_csv(o.result.settled, std::string("settled pixel voltages, ") +
                                                                      protocol_name(st.protocol)));
  for (const ReportFile& f : render_report(o.result.settled, &target)) write_into(dir, f.name, f.contents);
  if (a.trace) {
    write_into(dir, "trace.csv", format_trace_csv(o.result.trace, xb.n_rows, xb.n_cols));
  }
  std::ostringstream s;
  s << "protocol: " << protocol_name(st.protocol) << '\n'
    << "blocker_factor: " << f6(xb.blocker_factor) << '\n'
    << "r_segment: " << f6(xb.r_segment) << '\n'
    << "cycles_run: " << o.result.after_cycle.size() << '\n'
    << "mean_abs_error_pct: " << f6(o.error.mean_abs_error_pct) << '\n'
    << "max_abs_error_pct: " << f6(o.error.max_abs_error_pct) << '\n';
  write_into(dir, "scan.txt", s.str());
  std::cout << s.str() << "outputs: " << dir.string() << '\n';
  return 0;
}

// ---- gen ------------------------------------------------------------------

int cmd_gen(const Globals& g, std::size_t n, const std::string& mode) {
  ExperimentConfig cfg = load(g);
  if (!mode.empty()) cfg.mode = parse_mode(mode);
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset ds = generate(n, cfg.dataset_seed, cfg.sim, cfg.mode, cfg.threads);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const std::string path = out_or(g, "dataset.csv");
  write_file(path, format_dataset(ds));
  std::cout << "samples: " << n << "\nmode: " << mode_name(cfg.mode) << "\nseed: " << cfg.dataset_seed
            << "\nfingerprint: " << ds.meta.fingerprint << "\nseconds: " << f6(secs)
            << "\nwritten: " << path << '\n';
  return 0;
}

// ---- train ----------------------------------------------------------------

int cmd_train(const Globals& g, const std::string& data, const std::string& direction,
              std::optional<std::size_t> max_epochs, bool quiet) {
  ExperimentConfig cfg = load(g);
  LoadResult lr = load_dataset(data, "");
  cfg.mode = lr.dataset.meta.mode;
  cfg.sim.sample_n = lr.dataset.meta.grid_n;
  const std::string expect = fingerprint(cfg.sim, cfg.mode);
  if (lr.dataset.meta.fingerprint != expect) {
    std::cerr << "warning: dataset fingerprint " << lr.dataset.meta.fingerprint
              << " does not match the current configuration (" << expect << ")\n";
  }
  for (const std::string& w : lr.warnings) std::cerr << "warning: " << w << '\n';

  const bool inverse = direction == "inverse";
  MlpSpec spec = inverse ? cfg.inverse_spec() : cfg.forward_spec();
  if (max_epochs) spec.max_epochs = *max_epochs;
  SampleMatrices m = to_matrices(lr.dataset);
  if (inverse) std::swap(m.x, m.y);
  spec.input_dim = static_cast<std::size_t>(m.x.cols());
  spec.output_dim = static_cast<std::size_t>(m.y.cols());

  MlpModel model = init(spec);
  TrainOptions opts;
  opts.fingerprint = lr.dataset.meta.fingerprint;
  if (!quiet) {
    opts.on_epoch = [](std::size_t e, double tl, double vl) {
      std::cout << "epoch " << e << " train " << f6(tl) << " val " << f6(vl) << '\n';
    };
  }
  const TrainReport rep = train(model, m.x, m.y, opts);
  const std::string path = out_or(g, inverse ? "inverse.model" : "forward.model");
  write_file(path, format_model(model));
  std::cout << "direction: " << (inverse ? "inverse" : "forward") << "\nparameters: "
            << model.parameter_count() << "\nn_train: " << rep.n_train << "\nn_val: " << rep.n_val
            << "\nepochs: " << rep.epochs << "\nbest_epoch: " << rep.best_epoch
            << "\nval_r2: " << f6(rep.r2) << "\nval_mse: " << f6(rep.mse)
            << "\nseconds: " << f6(rep.seconds) << "\nwritten: " << path << '\n';
  return 0;
}

// ---- predict --------------------------------------------------------------

int cmd_predict(const Globals& g, const std::string& model_path, const std::string& input) {
  const MlpModel model = load_model(model_path);
  const std::vector<double> x = read_vector(input);
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  std::vector<double> y = predict(model, x);
  const double first_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  // steady-state latency: median of repeated single-sample calls
  std::vector<double> ms;
  for (int r = 0; r < 21; ++r) {
    const auto t = clock::now();
    y = predict(model, x);
    ms.push_back(std::chrono::duration<double, std::milli>(clock::now() - t).count());
  }
  std::nth_element(ms.begin(), ms.begin() + 10, ms.end());
  const std::string path = out_or(g, "prediction.csv");
  write_file(path, format_vector(y));
  std::cout << "inputs: " << x.size() << "\noutputs: " << y.size() << "\nfirst_call_ms: " << f6(first_ms)
            << "\nlatency_ms: " << f6(ms[10]) << "\nisa: " << kernels::isa_name(kernels::active_isa())
            << "\nwritten: " << path << '\n';
  return 0;
}

// ---- invert ---------------------------------------------------------------

int cmd_invert(const Globals& g, const std::string& model_path, const std::string& surface,
               bool no_snap, bool resimulate) {
  ExperimentConfig cfg = load(g);
  const MlpModel model = load_model(model_path);
  const std::vector<double> target = read_vector(surface);
  const std::size_t rows = cfg.sim.plate.pixels_y, cols = cfg.sim.plate.pixels_x;
  const std::string path = out_or(g, "voltages.csv");
  if (!resimulate) {
    const VoltageGrid cmd = to_command(predict(model, target), rows, cols, !no_snap);
    write_file(path, format_grid_csv(cmd));
    std::cout << "written: " << path << '\n';
    return 0;
  }
  cfg.sim.sample_n = static_cast<std::size_t>(std::llround(std::sqrt(double(target.size()))));
  const PlateSolver solver(cfg.sim.plate);
  const ClosedLoopResult r = closed_loop(model, solver, cfg.sim, cfg.mode, target, !no_snap);
  write_file(path, format_grid_csv(r.command));
  write_file(path + ".achieved.csv", format_vector(r.achieved));
  write_file(path + ".error.txt", format_error_report(r.error));
  write_file(path + ".hist.csv", format_error_histogram_csv(r.error));
  std::cout << "closed_loop_r2: " << f6(r.r2) << "\nmean_abs: " << f6(r.error.mean_abs)
            << "\nmse_rm: " << f6(r.error.mse_rm) << "\nmax_abs: " << f6(r.error.max_abs)
            << "\nheight_range: " << f6(r.height_range) << "\nwritten: " << path << '\n';
  return 0;
}

// ---- report ---------------------------------------------------------------

int cmd_report(const Globals& g, const std::string& grid_path, const std::string& target_path,
               std::size_t scale) {
  const VoltageGrid grid = read_grid_csv(grid_path);
  std::optional<VoltageGrid> target;
  if (!target_path.empty()) target = read_grid_csv(target_path);
  const fs::path dir = out_or(g, "report");
  for (const ReportFile& f : render_report(grid, target ? &*target : nullptr, scale)) {
    write_into(dir, f.name, f.contents);
  }
  std::cout << text::read_file((dir / "summary.txt").string()) << "outputs: " << dir.string() << '\n';
  return 0;
}

// ---- calibrate ------------------------------------------------------------

struct CalibArgs {
  double retention_frac = 0.04;
  double retention_time = 180.0;
  double decay_frac = 0.853;
  double decay_time = 3.0;
};

int cmd_calibrate(const Globals& g, const CalibArgs& a) {
  ExperimentConfig cfg = load(g);
  cfg.crossbar = cfg.resolved_crossbar();
  cfg.auto_r_segment = false;
  cfg.dynamics = calibrate_dynamics(a.retention_frac, a.retention_time, a.decay_frac, a.decay_time,
                                    cfg.dynamics);
  const CrossbarNetwork net = build_network(cfg.crossbar);
  const RowMatrix att = attenuation_map(net);
  const AddressingCount ac = addressing_complexity(cfg.crossbar.n_rows);
  std::cout << "r_segment: " << text::format_exact(cfg.crossbar.r_segment) << '\n'
            << "far_corner_attenuation: " << f6(att(att.rows() - 1, att.cols() - 1)) << '\n'
            << "tau_float: " << text::format_exact(cfg.dynamics.tau_float) << '\n'
            << "tau_charge: " << text::format_exact(cfg.dynamics.tau_charge) << '\n'
            << "inputs_direct: " << ac.direct << "\ninputs_passive: " << ac.passive << '\n'
            << "attenuation_map:\n" << format_grid_csv(VoltageGrid(att));
  if (!g.out.empty()) {
    write_file(g.out, format_config(cfg));
    std::cout << "written: " << g.out << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"morphsurf: passively addressed morphing surface simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config, "Sectioned key=value configuration file")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Override every seed in the configuration");
  app.add_option("--out", g.out, "Output file or directory");

  ScanArgs sa;
  auto* scan = app.add_subcommand("scan", "Simulate addressing of a target voltage grid");
  scan->add_option("target", sa.target, "Target grid CSV")->required()->check(CLI::ExistingFile);
  scan->add_option("--protocol", sa.protocol)->check(CLI::IsMember({"ps", "dpa"}));
  scan->add_option("--blockers", sa.blockers, "on (config blocker_factor) or off (1.0)")
      ->check(CLI::IsMember({"on", "off"}));
  scan->add_flag("--compensate", sa.compensate, "Pre-scale the target by the attenuation map");
  scan->add_flag("--trace", sa.trace, "Write the per-step pixel trace");
  scan->add_option("--cycles", sa.cycles);

  std::size_t gen_n = 0;
  std::string gen_mode;
  auto* gen = app.add_subcommand("gen", "Generate a simulated dataset");
  gen->add_option("n", gen_n, "Number of samples")->required()->check(CLI::PositiveNumber);
  gen->add_option("--mode", gen_mode)->check(CLI::IsMember({"z", "total"}));

  std::string train_data, direction = "forward";
  std::optional<std::size_t> max_epochs;
  bool quiet = false;
  auto* trn = app.add_subcommand("train", "Train a forward or inverse network");
  trn->add_option("dataset", train_data)->required()->check(CLI::ExistingFile);
  trn->add_option("--direction", direction)->check(CLI::IsMember({"forward", "inverse"}));
  trn->add_option("--max-epochs", max_epochs);
  trn->add_flag("--quiet", quiet);

  std::string model_path, input_path;
  auto* pred = app.add_subcommand("predict", "Run a trained network on one input");
  pred->add_option("model", model_path)->required()->check(CLI::ExistingFile);
  pred->add_option("input", input_path, "Input values as CSV")->required()->check(CLI::ExistingFile);

  bool no_snap = false, resimulate = false;
  auto* inv = app.add_subcommand("invert", "Voltages for a target surface");
  inv->add_option("model", model_path, "Inverse model")->required()->check(CLI::ExistingFile);
  inv->add_option("surface", input_path, "Target surface CSV")->required()->check(CLI::ExistingFile);
  inv->add_flag("--no-snap", no_snap, "Skip rounding to the 0.05 V lattice");
  inv->add_flag("--resimulate", resimulate, "Simulate the command and report the surface error");

  std::string grid_path, target_path;
  std::size_t scale = 16;
  auto* rep = app.add_subcommand("report", "Heatmaps and summary for a grid");
  rep->add_option("grid", grid_path)->required()->check(CLI::ExistingFile);
  rep->add_option("--target", target_path)->check(CLI::ExistingFile);
  rep->add_option("--scale", scale)->check(CLI::Range(1, 256));

  CalibArgs ca;
  auto* cal = app.add_subcommand("calibrate", "Fit electrode resistance and time constants");
  cal->add_option("--retention-frac", ca.retention_frac);
  cal->add_option("--retention-time", ca.retention_time);
  cal->add_option("--decay-frac", ca.decay_frac);
  cal->add_option("--decay-time", ca.decay_time);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }
  if (*seed_opt) g.seed = seed;

  try {
    if (*scan) return cmd_scan(g, sa);
    if (*gen) return cmd_gen(g, gen_n, gen_mode);
    if (*trn) return cmd_train(g, train_data, direction, max_epochs, quiet);
    if (*pred) return cmd_predict(g, model_path, input_path);
    if (*inv) return cmd_invert(g, model_path, input_path, no_snap, resimulate);
    if (*rep) return cmd_report(g, grid_path, target_path, scale);
    if (*cal) return cmd_calibrate(g, ca);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.is_numeric() ? kExitNumeric : kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
