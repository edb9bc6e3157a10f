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

#pragma once

#include "morphsurf/mechanics.hpp"
#include "morphsurf/voltage_grid.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace morph {

// Quantised voltage levels: -1.00, -0.95, ..., 1.00.
constexpr std::size_t kLatticeLevels = 41;
double lattice_value(std::size_t level);

std::uint64_t splitmix64(std::uint64_t x);
// Seed for sample `index` of a corpus seeded with `seed`.
std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index);

// Uniform integer in [0, n) from a 64-bit source, by rejection.
class LatticeRng {
 public:
  explicit LatticeRng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() { return splitmix64(state_++); }
  std::size_t uniform(std::size_t n);

 private:
  std::uint64_t state_;
};

// Every pixel drawn from the lattice. With a cap, pixels whose 4-neighbour
// difference is >= cap are redrawn until none remain (RepairFailure after
// 10^4 rounds).
VoltageGrid random_voltage_grid(std::uint64_t seed, std::optional<double> adjacency_cap,
                                std::size_t rows = 6, std::size_t cols = 6);

enum class DisplacementMode { kZ, kTotal };
const char* mode_name(DisplacementMode m);
DisplacementMode parse_mode(const std::string& s);

std::vector<double> vectorize_surface(const Heightfield& field, DisplacementMode mode);

struct SimConfig {
  PlateConfig plate;
  std::optional<double> adjacency_cap = 1.0;
  std::size_t sample_n = 20;
};

// Canonical text of everything that shapes a sample; hashed into the
// dataset fingerprint.
std::string canonical_text(const SimConfig& sim, DisplacementMode mode);
std::string fingerprint(const SimConfig& sim, DisplacementMode mode);

struct Sample {
  std::vector<double> voltages;
  std::vector<double> displacement;
};

struct DatasetMeta {
  DisplacementMode mode = DisplacementMode::kZ;
  std::size_t n_samples = 0;
  std::size_t grid_n = 20;
  std::uint64_t seed = 0;
  std::string fingerprint;
};

struct Dataset {
  std::vector<Sample> samples;
  DatasetMeta meta;
};

// One sample: random grid -> plate solve -> n x n resampling -> vector.
Sample simulate_sample(const PlateSolver& solver, const SimConfig& sim,
                       DisplacementMode mode, std::uint64_t seed);
std::vector<double> simulate_surface(const PlateSolver& solver, const SimConfig& sim,
                                     DisplacementMode mode, const VoltageGrid& v);

// Samples are independent; threads = 0 uses the hardware concurrency.
Dataset generate(std::size_t n_samples, std::uint64_t seed, const SimConfig& sim,
                 DisplacementMode mode, std::size_t threads = 0);

// Voltages (x) and displacements (y) of samples [begin, end) as row-per-sample
// matrices.
struct SampleMatrices {
  RowMatrix x;
  RowMatrix y;
};
SampleMatrices to_matrices(const Dataset& ds, std::size_t begin = 0,
                           std::size_t end = static_cast<std::size_t>(-1));

std::string format_dataset(const Dataset& ds);
void save_dataset(const Dataset& ds, const std::string& path);

struct LoadResult {
  Dataset dataset;
  std::vector<std::string> warnings;
};
// expected_fingerprint, when non-empty, is compared with the file header and
// a mismatch is reported as a warning.
LoadResult parse_dataset(const std::string& text, const std::string& expected_fingerprint = {});
LoadResult load_dataset(const std::string& path, const std::string& expected_fingerprint = {});

}  // namespace morph
