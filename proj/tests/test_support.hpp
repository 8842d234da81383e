// Copyright 2026 The tinyclf Authors.
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

// Shared fixtures for the unit and acceptance suites: random genotypes, a hand-built full adder,
// random encoded data and deterministic synthetic CSV datasets.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "tinyclf.hpp"

namespace tinyclf::testing {

inline FunctionSet xor_and_or() {
  return {{{"xor", 0b0110, 3.0}, {"and", gates::kAnd, 2.0}, {"or", gates::kOr, 3.0}}};
}

/// sum = a ^ b ^ c, carry = (a & b) | (c & (a ^ b)); outputs ordered (carry, sum) so the output
/// code read MSB-first is the integer a + b + c.
inline CircuitGraph full_adder() {
  CircuitGraph g;
  g.inputs = 3;
  const auto a = NodeRef::input(0), b = NodeRef::input(1), c = NodeRef::input(2);
  g.nodes = {
      {0, {a, b}},                            // f0 = a ^ b
      {0, {NodeRef::node(0), c}},             // f1 = f0 ^ c
      {1, {a, b}},                            // f2 = a & b
      {1, {c, NodeRef::node(0)}},             // f3 = c & f0
      {2, {NodeRef::node(2), NodeRef::node(3)}},  // f4 = f2 | f3
  };
  g.outputs = {NodeRef::node(4), NodeRef::node(1)};
  return g;
}

/// All 8 rows of a 3-input table; label = a + b + c, a 4-class problem with 2 output bits.
inline EncodedPartition full_adder_rows(const OutputCodec& codec) {
  std::vector<std::vector<std::uint8_t>> rows;
  std::vector<std::uint32_t> labels;
  for (unsigned m = 0; m < 8; ++m) {
    const std::uint8_t a = (m >> 2) & 1U, b = (m >> 1) & 1U, c = m & 1U;
    rows.push_back({a, b, c});
    labels.push_back(a + b + c);
  }
  return make_partition(rows, labels, codec, 3);
}

inline EncodedDataset full_adder_dataset() {
  EncodedDataset d;
  d.codec = make_output_codec(4);
  d.input_bits = 3;
  d.train = full_adder_rows(d.codec);
  d.validation = d.train;
  d.test = d.train;
  return d;
}

/// A valid graph with arbitrary (not only backward) references: random init, then mutations.
inline CircuitGraph random_graph(std::size_t inputs, std::size_t outputs, std::size_t n, const FunctionSet& fs,
                                 Rng& rng, std::size_t scramble_rounds = 20) {
  Hyperparameters hp;
  hp.n = n;
  hp.function_set = fs;
  hp.p = n == 0 ? 0.5 : std::min(1.0, 4.0 / static_cast<double>(n));
  CircuitGraph g = init_random(inputs, outputs, hp, rng);
  for (std::size_t r = 0; r < scramble_rounds; ++r) g = mutate(g, hp, rng);
  return g;
}

inline BitMatrix random_bits(std::size_t rows, std::size_t cols, Rng& rng) {
  BitMatrix m(rows, cols);
  std::bernoulli_distribution coin(0.5);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m.set(r, c, coin(rng));
  }
  return m;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("tinyclf_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string iris_path() { return std::string(TINYCLF_DATA_DIR) + "/iris.csv"; }

/// Blood-transfusion-like binary task: 748 rows, four numeric features, about a quarter positive.
inline std::string write_blood_like(const std::filesystem::path& dir) {
  const auto path = dir / "blood_like.csv";
  std::ofstream out(path);
  out << "recency,frequency,monetary,time,donated\n";
  Rng rng(20260418);
  std::uniform_int_distribution<int> recency(0, 40), freq(1, 30), extra(0, 60);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int r = 0; r < 748; ++r) {
    const int rec = recency(rng);
    const int f = freq(rng);
    const int t = std::min(98, f * 2 + extra(rng));
    const double z = -0.6 - 0.12 * rec + 0.09 * f - 0.01 * t;
    const bool pos = u(rng) < 1.0 / (1.0 + std::exp(-z));
    out << rec << "," << f << "," << f * 250 << "," << t << "," << (pos ? "yes" : "no") << "\n";
  }
  return path.string();
}

/// Four overlapping Gaussian blobs in four dimensions, 400 rows.
inline std::string write_four_class(const std::filesystem::path& dir) {
  const auto path = dir / "four_class.csv";
  std::ofstream out(path);
  out << "a,b,c,d,label\n";
  Rng rng(77001);
  std::normal_distribution<double> noise(0.0, 0.9);
  const double centres[4][4] = {{0, 0, 0, 0}, {2, 0, 1, 0}, {0, 2, 0, 1}, {2, 2, 1, 1}};
  for (int r = 0; r < 400; ++r) {
    const int k = r % 4;
    for (int d = 0; d < 4; ++d) out << centres[k][d] + noise(rng) << ",";
    out << "k" << k << "\n";
  }
  return path.string();
}

}  // namespace tinyclf::testing
