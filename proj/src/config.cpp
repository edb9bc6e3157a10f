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

#include "morphsurf/config.hpp"

#include "morphsurf/errors.hpp"
#include "morphsurf/text_io.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace morph {

void ExperimentConfig::set_seed(std::uint64_t seed) {
  dataset_seed = seed;
  forward.seed = seed;
  inverse.seed = seed + 1;
}

CrossbarConfig ExperimentConfig::resolved_crossbar() const {
  return auto_r_segment ? calibrate_r_segment(crossbar, far_fraction) : crossbar;
}

std::size_t ExperimentConfig::n_voltages() const { return sim.plate.pixels_x * sim.plate.pixels_y; }

std::size_t ExperimentConfig::n_displacements() const {
  return sim.sample_n * sim.sample_n;
}

MlpSpec ExperimentConfig::forward_spec() const {
  MlpSpec s = forward;
  s.input_dim = n_voltages();
  s.output_dim = n_displacements();
  return s;
}

MlpSpec ExperimentConfig::inverse_spec() const {
  MlpSpec s = inverse;
  s.input_dim = n_displacements();
  s.output_dim = n_voltages();
  return s;
}

namespace {

struct Field {
  std::function<void(std::string_view)> set;
  std::function<std::string()> get;
};

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return text::format_exact(v);
}

double to_double(std::string_view s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  double v;
  if (!text::parse_double(s, v)) throw std::invalid_argument("not a number");
  return v;
}

std::size_t to_count(std::string_view s) {
  const double v = to_double(s);
  if (!(v >= 0) || v != std::floor(v) || v > 1e15) throw std::invalid_argument("not a count");
  return static_cast<std::size_t>(v);
}

bool to_bool(std::string_view s) {
  if (s == "on" || s == "true" || s == "1" || s == "yes") return true;
  if (s == "off" || s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument("not a boolean");
}

std::vector<std::size_t> to_dims(std::string_view s) {
  std::vector<std::size_t> out;
  for (std::string_view t : text::split(s, ',')) out.push_back(to_count(text::trim(t)));
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

std::string dims_str(const std::vector<std::size_t>& d) {
  std::string s;
  for (std::size_t i = 0; i < d.size(); ++i) s += (i ? "," : "") + std::to_string(d[i]);
  return s;
}

using Table = std::map<std::string, std::map<std::string, Field>>;

Field dbl(double& v) {
  return {[&v](std::string_view s) { v = to_double(s); }, [&v] { return fmt(v); }};
}
Field cnt(std::size_t& v) {
  return {[&v](std::string_view s) { v = to_count(s); }, [&v] { return std::to_string(v); }};
}
Field u64(std::uint64_t& v) {
  return {[&v](std::string_view s) { v = std::stoull(std::string(s)); }, [&v] { return std::to_string(v); }};
}
Field flag(bool& v) {
  return {[&v](std::string_view s) { v = to_bool(s); }, [&v] { return std::string(v ? "on" : "off"); }};
}

// The plate is always square here; the field writes both pixel counts.
Table fields(ExperimentConfig& c) {
  Table t;
  auto& xb = t["crossbar"];
  xb["n_rows"] = cnt(c.crossbar.n_rows);
  xb["n_cols"] = cnt(c.crossbar.n_cols);
  xb["r_segment"] = {[&c](std::string_view s) {
                       if (s == "calibrate") {
                         c.auto_r_segment = true;
                       } else {
                         c.auto_r_segment = false;
                         c.crossbar.r_segment = to_double(s);
                       }
                     },
                     [&c] { return c.auto_r_segment ? std::string("calibrate") : fmt(c.crossbar.r_segment); }};
  xb["g_pixel"] = dbl(c.crossbar.g_pixel);
  xb["g_leak"] = dbl(c.crossbar.g_leak);
  xb["blocker_factor"] = dbl(c.crossbar.blocker_factor);
  xb["far_fraction"] = dbl(c.far_fraction);

  auto& dy = t["dynamics"];
  dy["tau_charge"] = dbl(c.dynamics.tau_charge);
  dy["tau_float"] = dbl(c.dynamics.tau_float);
  dy["tau_ground"] = dbl(c.dynamics.tau_ground);
  dy["residual_fraction"] = dbl(c.dynamics.residual_fraction);
  dy["tau_sneak"] = dbl(c.dynamics.tau_sneak);

  auto& sc = t["scan"];
  sc["protocol"] = {[&c](std::string_view s) {
                      if (s == "ps") c.scan.protocol = Protocol::kPs;
                      else if (s == "dpa") c.scan.protocol = Protocol::kDpa;
                      else throw std::invalid_argument("protocol must be ps or dpa");
                    },
                    [&c] { return std::string(protocol_name(c.scan.protocol)); }};
  sc["row_dwell"] = dbl(c.scan.row_dwell);
  sc["cycles"] = cnt(c.scan.cycles);
  sc["dt"] = dbl(c.scan.dt);
  sc["v_supply"] = dbl(c.scan.v_supply);
  sc["compensate"] = flag(c.scan.compensate);

  auto& pl = t["plate"];
  pl["pixels_per_side"] = {[&c](std::string_view s) { c.sim.plate.pixels_x = c.sim.plate.pixels_y = to_count(s); },
                           [&c] { return std::to_string(c.sim.plate.pixels_x); }};
  pl["pixel_pitch"] = dbl(c.sim.plate.pixel_pitch);
  pl["active_width"] = dbl(c.sim.plate.active_width);
  pl["grid_n"] = cnt(c.sim.plate.grid_n);
  pl["kappa_per_volt"] = dbl(c.sim.plate.kappa_per_volt);
  pl["nu"] = dbl(c.sim.plate.nu);

  auto& st = t["strip"];
  st["length"] = dbl(c.strip.length);
  st["beta"] = dbl(c.strip.beta);
  st["h_sub"] = dbl(c.strip.h_sub);
  st["h_ppy"] = dbl(c.strip.h_ppy);
  st["modulus_ratio"] = dbl(c.strip.modulus_ratio);

  auto& ds = t["dataset"];
  ds["seed"] = u64(c.dataset_seed);
  ds["adjacency_cap"] = {[&c](std::string_view s) {
                           if (s == "none") c.sim.adjacency_cap.reset();
                           else c.sim.adjacency_cap = to_double(s);
                         },
                         [&c] { return c.sim.adjacency_cap ? fmt(*c.sim.adjacency_cap) : std::string("none"); }};
  ds["sample_n"] = cnt(c.sim.sample_n);
  ds["mode"] = {[&c](std::string_view s) { c.mode = parse_mode(std::string(s)); },
                [&c] { return std::string(mode_name(c.mode)); }};
  ds["threads"] = cnt(c.threads);

  auto& ml = t["mlp"];
  ml["seed"] = {[&c](std::string_view s) {
                  const std::uint64_t v = std::stoull(std::string(s));
                  c.forward.seed = v;
                  c.inverse.seed = v + 1;
                },
                [&c] { return std::to_string(c.forward.seed); }};
  ml["forward_hidden"] = {[&c](std::string_view s) { c.forward.hidden_dims = to_dims(s); },
                          [&c] { return dims_str(c.forward.hidden_dims); }};
  ml["inverse_hidden"] = {[&c](std::string_view s) { c.inverse.hidden_dims = to_dims(s); },
                          [&c] { return dims_str(c.inverse.hidden_dims); }};
  // optimiser settings are shared by both networks
  auto both_d = [&c](double MlpSpec::*m) -> Field {
    return {[&c, m](std::string_view s) { c.forward.*m = c.inverse.*m = to_double(s); },
            [&c, m] { return fmt(c.forward.*m); }};
  };
  auto both_n = [&c](std::size_t MlpSpec::*m) -> Field {
    return {[&c, m](std::string_view s) { c.forward.*m = c.inverse.*m = to_count(s); },
            [&c, m] { return std::to_string(c.forward.*m); }};
  };
  ml["learning_rate"] = both_d(&MlpSpec::learning_rate);
  ml["lr_decay"] = both_d(&MlpSpec::lr_decay);
  ml["beta1"] = both_d(&MlpSpec::beta1);
  ml["beta2"] = both_d(&MlpSpec::beta2);
  ml["epsilon"] = both_d(&MlpSpec::epsilon);
  ml["batch_size"] = both_n(&MlpSpec::batch_size);
  ml["max_epochs"] = both_n(&MlpSpec::max_epochs);
  ml["patience"] = both_n(&MlpSpec::patience);
  ml["validation_fraction"] = both_d(&MlpSpec::validation_fraction);
  return t;
}

void validate_all(const ExperimentConfig& c) {
  c.crossbar.validate();
  c.dynamics.validate();
  c.sim.plate.validate();
  c.strip.validate();
  c.forward_spec().validate();
  c.inverse_spec().validate();
  if (c.sim.plate.pixels_x != c.crossbar.n_cols || c.sim.plate.pixels_y != c.crossbar.n_rows) {
    throw Error(Errc::kConfigError, "plate pixels must match the crossbar size");
  }
  if (!(c.far_fraction > 0.0 && c.far_fraction < 1.0)) {
    throw Error(Errc::kConfigError, "far_fraction must lie in (0, 1)");
  }
  if (c.scan.cycles < 1 || !(c.scan.dt > 0.0) || !(c.scan.row_dwell > 0.0) || !(c.scan.v_supply > 0.0)) {
    throw Error(Errc::kConfigError, "scan settings must be positive");
  }
  if (c.sim.sample_n < 2) throw Error(Errc::kConfigError, "sample_n must be >= 2");
  if (c.sim.adjacency_cap && !(*c.sim.adjacency_cap > 0.0)) {
    throw Error(Errc::kConfigError, "adjacency_cap must be > 0 or none");
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  Table table = fields(cfg);
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  std::string section;
  auto fail = [&](const std::string& what) {
    throw Error(Errc::kConfigError, "config line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(is, line)) {
    ++line_no;
    std::string_view s = line;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = text::trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail("unterminated section header");
      section = std::string(text::trim(s.substr(1, s.size() - 2)));
      if (!table.count(section)) fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) fail("expected key = value");
    if (section.empty()) fail("key outside of a section");
    const std::string key(text::trim(s.substr(0, eq)));
    const std::string_view value = text::trim(s.substr(eq + 1));
    auto& sec = table[section];
    const auto it = sec.find(key);
    if (it == sec.end()) fail("unknown key '" + key + "' in [" + section + "]");
    try {
      it->second.set(value);
    } catch (const Error& e) {
      fail(key + ": " + e.what());
    } catch (const std::exception&) {
      fail("bad value '" + std::string(value) + "' for " + key);
    }
  }
  try {
    validate_all(cfg);
  } catch (const Error& e) {
    if (e.code() == Errc::kConfigError) throw;
    throw Error(Errc::kConfigError, e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = text::read_file(path);
  } catch (const Error& e) {
    throw Error(Errc::kConfigError, e.what());
  }
  return parse_config(text);
}

std::string format_config(const ExperimentConfig& cfg) {
  ExperimentConfig copy = cfg;
  Table table = fields(copy);
  std::ostringstream os;
  for (const char* sec : {"crossbar", "dynamics", "scan", "plate", "strip", "dataset", "mlp"}) {
    os << '[' << sec << "]\n";
    for (const auto& [key, field] : table[sec]) os << key << " = " << field.get() << '\n';
    os << '\n';
  }
  return os.str();
}

}  // namespace morph
