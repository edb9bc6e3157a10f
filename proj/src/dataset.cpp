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

#include "morphsurf/dataset.hpp"

#include "morphsurf/errors.hpp"
#include "morphsurf/text_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace morph {

namespace {

constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
constexpr int kCentreLevel = 20;
constexpr int kMaxRepairRounds = 10000;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

double lattice_value(std::size_t level) {
  return (static_cast<double>(level) - kCentreLevel) / 20.0;
}

std::uint64_t splitmix64(std::uint64_t x) { return mix64(x + kGamma); }

std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) + index);
}

std::size_t LatticeRng::uniform(std::size_t n) {
  const auto m = static_cast<std::uint64_t>(n);
  const std::uint64_t threshold = (0 - m) % m;  // 2^64 mod m
  for (;;) {
    state_ += kGamma;
    const std::uint64_t x = mix64(state_);
    if (x >= threshold) return static_cast<std::size_t>(x % m);
  }
}

VoltageGrid random_voltage_grid(std::uint64_t seed, std::optional<double> cap,
                                std::size_t rows, std::size_t cols) {
  if (cap && !(*cap > 0.0)) throw Error(Errc::kInvalidArgument, "adjacency cap must be > 0");
  LatticeRng rng(seed);
  std::vector<int> level(rows * cols);
  for (int& l : level) l = static_cast<int>(rng.uniform(kLatticeLevels));
  if (cap) {
    // Adjacent levels may differ by at most this many steps.
    const double steps = *cap * 20.0;
    const int max_step = static_cast<int>(std::ceil(steps - 1e-9)) - 1;
    // Below one lattice step only constant grids qualify; repair would just
    // collapse the draw, so refuse instead.
    if (max_step < 1) {
      throw Error(Errc::kRepairFailure, "adjacency cap " + text::format_exact(*cap) +
                                            " V is not above the 0.05 V lattice step");
    }
    std::vector<char> bad(level.size());
    int round = 0;
    for (;; ++round) {
      std::fill(bad.begin(), bad.end(), 0);
      bool any = false;
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
          const std::size_t k = i * cols + j;
          auto check = [&](std::size_t q) {
            if (std::abs(level[k] - level[q]) > max_step) {
              // redraw one side of each violating pair
              bad[q] = 1;
              any = true;
            }
          };
          if (j + 1 < cols) check(k + 1);
          if (i + 1 < rows) check(k + cols);
        }
      }
      if (!any) break;
      if (round >= kMaxRepairRounds) {
        throw Error(Errc::kRepairFailure, "adjacency cap " + text::format_exact(*cap) +
                                              " V not met after " +
                                              std::to_string(kMaxRepairRounds) + " repair rounds");
      }
      for (std::size_t k = 0; k < level.size(); ++k)
        if (bad[k]) level[k] = static_cast<int>(rng.uniform(kLatticeLevels));
    }
  }
  VoltageGrid g(rows, cols);
  for (std::size_t k = 0; k < level.size(); ++k)
    g(k / cols, k % cols) = lattice_value(static_cast<std::size_t>(level[k]));
  return g;
}

const char* mode_name(DisplacementMode m) { return m == DisplacementMode::kZ ? "z" : "total"; }

DisplacementMode parse_mode(const std::string& s) {
  if (s == "z") return DisplacementMode::kZ;
  if (s == "total") return DisplacementMode::kTotal;
  throw Error(Errc::kInvalidArgument, "displacement mode must be 'z' or 'total', got '" + s + "'");
}

std::vector<double> vectorize_surface(const Heightfield& f, DisplacementMode mode) {
  if (mode == DisplacementMode::kZ) return f.z;
  if (!f.has_full()) {
    throw Error(Errc::kMissingComponents, "total displacement needs dx and dy");
  }
  std::vector<double> out(f.size());
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = std::sqrt(f.dx[k] * f.dx[k] + f.dy[k] * f.dy[k] + f.z[k] * f.z[k]);
  return out;
}

std::string canonical_text(const SimConfig& sim, DisplacementMode) {
  const PlateConfig& p = sim.plate;
  std::ostringstream os;
  os << "plate.pixels_x=" << p.pixels_x << '\n'
     << "plate.pixels_y=" << p.pixels_y << '\n'
     << "plate.pixel_pitch=" << text::format_exact(p.pixel_pitch) << '\n'
     << "plate.active_width=" << text::format_exact(p.active_width) << '\n'
     << "plate.grid_n=" << p.grid_n << '\n'
     << "plate.kappa_per_volt=" << text::format_exact(p.kappa_per_volt) << '\n'
     << "plate.nu=" << text::format_exact(p.nu) << '\n'
     << "dataset.adjacency_cap="
     << (sim.adjacency_cap ? text::format_exact(*sim.adjacency_cap) : std::string("none")) << '\n'
     << "dataset.sample_n=" << sim.sample_n << '\n';
  return os.str();
}

std::string fingerprint(const SimConfig& sim, DisplacementMode mode) {
  // FNV-1a, 64 bit
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_text(sim, mode)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return hex64(h);
}

std::vector<double> simulate_surface(const PlateSolver& solver, const SimConfig& sim,
                                     DisplacementMode mode, const VoltageGrid& v) {
  const Heightfield full = solver.solve(v, mode == DisplacementMode::kTotal);
  return vectorize_surface(sample_nodes(full, sim.sample_n), mode);
}

Sample simulate_sample(const PlateSolver& solver, const SimConfig& sim, DisplacementMode mode,
                       std::uint64_t seed) {
  const VoltageGrid v = random_voltage_grid(seed, sim.adjacency_cap, solver.config().pixels_y,
                                            solver.config().pixels_x);
  return {v.flatten(), simulate_surface(solver, sim, mode, v)};
}

Dataset generate(std::size_t n_samples, std::uint64_t seed, const SimConfig& sim,
                 DisplacementMode mode, std::size_t threads) {
  if (n_samples < 1) throw Error(Errc::kInvalidArgument, "n_samples must be >= 1");
  const PlateSolver solver(sim.plate);
  Dataset ds;
  ds.samples.resize(n_samples);
  ds.meta = {mode, n_samples, sim.sample_n, seed, fingerprint(sim, mode)};

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n_samples);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= n_samples) return;
      try {
        ds.samples[k] = simulate_sample(solver, sim, mode, sample_seed(seed, k));
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next.store(n_samples);
        return;
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return ds;
}

SampleMatrices to_matrices(const Dataset& ds, std::size_t begin, std::size_t end) {
  end = std::min(end, ds.samples.size());
  if (begin >= end) throw Error(Errc::kInvalidArgument, "empty sample range");
  const std::size_t nx = ds.samples[begin].voltages.size();
  const std::size_t ny = ds.samples[begin].displacement.size();
  SampleMatrices m{RowMatrix(end - begin, nx), RowMatrix(end - begin, ny)};
  for (std::size_t k = begin; k < end; ++k) {
    const Sample& s = ds.samples[k];
    if (s.voltages.size() != nx || s.displacement.size() != ny) {
      throw Error(Errc::kDimensionMismatch, "sample " + std::to_string(k) + " has a different size");
    }
    std::copy(s.voltages.begin(), s.voltages.end(), m.x.row(k - begin).data());
    std::copy(s.displacement.begin(), s.displacement.end(), m.y.row(k - begin).data());
  }
  return m;
}

std::string format_dataset(const Dataset& ds) {
  const std::size_t nv = ds.samples.empty() ? 0 : ds.samples.front().voltages.size();
  const std::size_t nd = ds.samples.empty() ? 0 : ds.samples.front().displacement.size();
  std::ostringstream os;
  os << "# mode=" << mode_name(ds.meta.mode) << '\n'
     << "# seed=" << ds.meta.seed << '\n'
     << "# fingerprint=" << ds.meta.fingerprint << '\n'
     << "# n_samples=" << ds.samples.size() << '\n'
     << "# grid_n=" << ds.meta.grid_n << '\n'
     << "# n_voltages=" << nv << '\n'
     << "# n_displacements=" << nd << '\n';
  for (const Sample& s : ds.samples) {
    if (s.voltages.size() != nv || s.displacement.size() != nd) {
      throw Error(Errc::kDimensionMismatch, "samples differ in length");
    }
    bool first = true;
    for (const auto* vec : {&s.voltages, &s.displacement}) {
      for (double v : *vec) {
        if (!first) os << ',';
        os << text::format_exact(v);
        first = false;
      }
    }
    os << '\n';
  }
  return os.str();
}

void save_dataset(const Dataset& ds, const std::string& path) {
  text::write_file_atomic(path, format_dataset(ds));
}

LoadResult parse_dataset(const std::string& text, const std::string& expected_fingerprint) {
  LoadResult out;
  std::map<std::string, std::string> header;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw Error(Errc::kFormatError, "line " + std::to_string(line_no) + ": " + what);
  };
  auto header_size = [&](const char* key) -> std::size_t {
    auto it = header.find(key);
    if (it == header.end()) fail(std::string("missing header '") + key + "'");
    double v;
    if (!text::parse_double(it->second, v) || v < 0 || v != std::floor(v)) {
      fail(std::string("bad value for '") + key + "'");
    }
    return static_cast<std::size_t>(v);
  };
  std::size_t nv = 0, nd = 0;
  bool in_body = false;
  Dataset& ds = out.dataset;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string_view s = text::trim(line);
    if (!in_body && !s.empty() && s.front() == '#') {
      const std::string_view kv = text::trim(s.substr(1));
      const auto eq = kv.find('=');
      if (eq == std::string_view::npos) continue;
      header[std::string(text::trim(kv.substr(0, eq)))] = std::string(text::trim(kv.substr(eq + 1)));
      continue;
    }
    if (s.empty()) continue;
    if (!in_body) {
      in_body = true;
      for (const char* key : {"mode", "seed", "fingerprint"})
        if (!header.count(key)) fail(std::string("missing header '") + key + "'");
      try {
        ds.meta.mode = parse_mode(header["mode"]);
      } catch (const Error&) {
        fail("unknown mode '" + header["mode"] + "'");
      }
      try {
        ds.meta.seed = std::stoull(header["seed"]);
      } catch (const std::exception&) {
        fail("bad seed '" + header["seed"] + "'");
      }
      ds.meta.fingerprint = header["fingerprint"];
      nv = header_size("n_voltages");
      nd = header_size("n_displacements");
      if (header.count("grid_n")) ds.meta.grid_n = header_size("grid_n");
    }
    const auto fields = text::split(s, ',');
    if (fields.size() != nv + nd) {
      fail("expected " + std::to_string(nv + nd) + " fields, got " + std::to_string(fields.size()));
    }
    Sample smp;
    smp.voltages.resize(nv);
    smp.displacement.resize(nd);
    for (std::size_t f = 0; f < fields.size(); ++f) {
      double v;
      if (!text::parse_double(text::trim(fields[f]), v)) {
        fail("field " + std::to_string(f + 1) + ": bad number '" + std::string(fields[f]) + "'");
      }
      (f < nv ? smp.voltages[f] : smp.displacement[f - nv]) = v;
    }
    ds.samples.push_back(std::move(smp));
  }
  if (!in_body) fail("no samples");
  if (header.count("n_samples") && header_size("n_samples") != ds.samples.size()) {
    fail("header promises " + header["n_samples"] + " samples, found " +
         std::to_string(ds.samples.size()));
  }
  ds.meta.n_samples = ds.samples.size();
  if (!expected_fingerprint.empty() && expected_fingerprint != ds.meta.fingerprint) {
    out.warnings.push_back("fingerprint mismatch: file " + ds.meta.fingerprint + ", expected " +
                           expected_fingerprint);
  }
  return out;
}

LoadResult load_dataset(const std::string& path, const std::string& expected_fingerprint) {
  return parse_dataset(text::read_file(path), expected_fingerprint);
}

}  // namespace morph
