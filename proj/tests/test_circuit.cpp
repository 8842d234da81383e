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

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace tinyclf {
namespace {

using testing::full_adder;
using testing::random_bits;
using testing::random_graph;

CircuitGraph single_nand() {
  CircuitGraph g;
  g.inputs = 2;
  g.nodes = {{2, {NodeRef::input(0), NodeRef::input(1)}}};  // full set: index 2 = nand
  g.outputs = {NodeRef::node(0)};
  return g;
}

BitMatrix all_assignments(std::size_t inputs) {
  BitMatrix m(std::size_t{1} << inputs, inputs);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < inputs; ++c) m.set(r, c, (r >> (inputs - 1 - c)) & 1U);
  }
  return m;
}

TEST(Validate, SelfLoopIsACycle) {
  CircuitGraph g;
  g.inputs = 1;
  g.nodes = {{0, {NodeRef::node(0), NodeRef::input(0)}}};
  g.outputs = {NodeRef::node(0)};
  const auto err = validate(g, FunctionSet::full());
  ASSERT_TRUE(err);
  EXPECT_NE(err->find("cycle"), std::string::npos);
}

TEST(Validate, TwoCycleListsBothNodes) {
  CircuitGraph g;
  g.inputs = 1;
  g.nodes = {{0, {NodeRef::node(1), NodeRef::input(0)}}, {0, {NodeRef::node(0), NodeRef::input(0)}}};
  g.outputs = {NodeRef::node(0)};
  const auto err = validate(g, FunctionSet::full());
  ASSERT_TRUE(err);
  EXPECT_NE(err->find("{f0,f1}"), std::string::npos) << *err;
}

TEST(Validate, FreshInitIsValid) {
  Hyperparameters hp;
  hp.n = 40;
  for (std::uint64_t s = 0; s < 50; ++s) {
    Rng rng(s);
    EXPECT_FALSE(validate(init_random(5, 3, hp, rng), hp.function_set));
  }
}

TEST(Validate, DanglingReferences) {
  auto g = single_nand();
  g.nodes[0].args[1] = NodeRef::input(7);
  EXPECT_TRUE(validate(g, FunctionSet::full()));
  g = single_nand();
  g.outputs[0] = NodeRef::node(3);
  EXPECT_TRUE(validate(g, FunctionSet::full()));
  g = single_nand();
  g.nodes[0].gate = 9;
  EXPECT_TRUE(validate(g, FunctionSet::full()));
}

TEST(ActiveSet, OutputsWiredToInputs) {
  CircuitGraph g;
  g.inputs = 2;
  g.nodes = {{0, {NodeRef::input(0), NodeRef::input(1)}}};
  g.outputs = {NodeRef::input(1), NodeRef::input(0)};
  EXPECT_EQ(active_set(g).count, 0u);
}

TEST(ActiveSet, Chain) {
  CircuitGraph g;
  g.inputs = 2;
  g.nodes = {{0, {NodeRef::input(0), NodeRef::input(1)}},
             {1, {NodeRef::node(0), NodeRef::input(1)}},
             {2, {NodeRef::node(1), NodeRef::input(0)}}};
  g.outputs = {NodeRef::node(2)};
  EXPECT_EQ(active_set(g).count, 3u);
}

TEST(ActiveSet, TwoInputTwoOutputIndividual) {
  // f1 and f4 feed nothing that reaches an output; they are the grey material.
  CircuitGraph g;
  g.inputs = 2;
  const auto i0 = NodeRef::input(0), i1 = NodeRef::input(1);
  g.nodes = {{0, {i0, i1}},
             {1, {i0, NodeRef::node(0)}},
             {2, {NodeRef::node(0), i1}},
             {3, {NodeRef::node(2), i0}},
             {0, {NodeRef::node(1), NodeRef::node(3)}}};
  g.outputs = {NodeRef::node(3), NodeRef::node(2)};
  const auto a = active_set(g);
  EXPECT_EQ(a.mask, (std::vector<std::uint8_t>{1, 0, 1, 1, 0}));
  EXPECT_EQ(a.count, 3u);
}

TEST(Evaluate, NandTruthTable) {
  const auto g = single_nand();
  const auto fs = FunctionSet::full();
  EXPECT_EQ(evaluate(g, fs, std::vector<std::uint8_t>{1, 1}), (std::vector<std::uint8_t>{0}));
  EXPECT_EQ(evaluate(g, fs, std::vector<std::uint8_t>{1, 0}), (std::vector<std::uint8_t>{1}));
  EXPECT_EQ(evaluate(g, fs, std::vector<std::uint8_t>{0, 0}), (std::vector<std::uint8_t>{1}));
}

TEST(Evaluate, DirectWireIsIdentity) {
  CircuitGraph g;
  g.inputs = 1;
  g.outputs = {NodeRef::input(0)};
  for (std::uint8_t v : {0, 1}) EXPECT_EQ(evaluate(g, FunctionSet::full(), std::vector<std::uint8_t>{v})[0], v);
}

TEST(Evaluate, FullAdderMatchesArithmetic) {
  const auto g = full_adder();
  const auto fs = testing::xor_and_or();
  ASSERT_FALSE(validate(g, fs));
  for (unsigned m = 0; m < 8; ++m) {
    const std::uint8_t a = (m >> 2) & 1U, b = (m >> 1) & 1U, c = m & 1U;
    const unsigned sum = a + b + c;
    const auto out = evaluate(g, fs, std::vector<std::uint8_t>{a, b, c});
    EXPECT_EQ(out[0], (sum >> 1) & 1U) << "carry for " << m;
    EXPECT_EQ(out[1], sum & 1U) << "sum for " << m;
  }
}

TEST(EvaluateBatch, SingleRowEqualsScalar) {
  Rng rng(1);
  const auto fs = FunctionSet::full();
  for (int t = 0; t < 50; ++t) {
    const auto g = random_graph(6, 2, 20, fs, rng);
    const auto in = random_bits(1, 6, rng);
    EXPECT_EQ(evaluate_batch(g, fs, in).row(0), evaluate(g, fs, in.row(0)));
  }
}

TEST(EvaluateBatch, PackedMatchesScalarOnThousandRows) {
  Rng rng(2);
  const auto fs = FunctionSet::full();
  for (int t = 0; t < 10; ++t) {
    const auto g = random_graph(12, 3, 50, fs, rng);
    const auto in = random_bits(1000, 12, rng);
    const auto out = evaluate_batch(g, fs, in);
    for (std::size_t r = 0; r < in.rows(); ++r) ASSERT_EQ(out.row(r), evaluate(g, fs, in.row(r))) << "row " << r;
  }
}

TEST(EvaluateBatch, EmptyPartition) {
  Rng rng(3);
  const auto fs = FunctionSet::full();
  const auto out = evaluate_batch(random_graph(4, 2, 10, fs, rng), fs, BitMatrix(0, 4));
  EXPECT_EQ(out.rows(), 0u);
}

TEST(EvaluateBatch, WidthMismatchThrows) {
  const auto fs = FunctionSet::full();
  EXPECT_THROW(evaluate_batch(single_nand(), fs, BitMatrix(4, 3)), ConsistencyError);
}

// Rewriting inactive material never changes behaviour on any of the 2^I inputs.
TEST(CircuitProperty, InactivityIrrelevance) {
  Rng rng(4);
  const auto fs = FunctionSet::full();
  for (int t = 0; t < 100; ++t) {
    const std::size_t inputs = 2 + uniform_index(rng, 9);
    const auto g = random_graph(inputs, 2, 30, fs, rng);
    const auto rows = all_assignments(inputs);
    const auto reference = evaluate_batch(g, fs, rows);
    const auto active = active_set(g);
    auto h = g;
    for (std::uint32_t j = 0; j < h.nodes.size(); ++j) {
      if (active.contains(j)) continue;
      h.nodes[j].gate = static_cast<std::uint32_t>(uniform_index(rng, fs.size()));
      for (std::uint8_t slot = 0; slot < 2; ++slot) {
        const auto cands = edge_candidates(h, {false, j, slot});
        if (!cands.empty()) h.nodes[j].args[slot] = cands[uniform_index(rng, cands.size())];
      }
    }
    ASSERT_FALSE(validate(h, fs));
    EXPECT_EQ(evaluate_batch(h, fs, rows), reference);
  }
}

TEST(CircuitProperty, TopologicalOrderIndependence) {
  Rng rng(5);
  const auto fs = FunctionSet::full();
  for (int t = 0; t < 100; ++t) {
    const auto g = random_graph(8, 3, 60, fs, rng);
    const auto in = random_bits(200, 8, rng);
    const auto active = active_set(g);
    const auto dfs = topological_order(g, active, TopoStrategy::depth_first);
    const auto kahn = topological_order(g, active, TopoStrategy::kahn);
    EXPECT_EQ(dfs.size(), active.count);
    EXPECT_EQ(kahn.size(), active.count);
    EXPECT_EQ(evaluate_batch(g, fs, in, std::nullopt, TopoStrategy::depth_first),
              evaluate_batch(g, fs, in, std::nullopt, TopoStrategy::kahn));
    EXPECT_LE(count_active_gates(g), g.size());
  }
}

TEST(AreaCounts, Examples) {
  const auto fs = FunctionSet::full();
  CircuitGraph wires;
  wires.inputs = 2;
  wires.nodes = {{0, {NodeRef::input(0), NodeRef::input(1)}}};
  wires.outputs = {NodeRef::input(0)};
  EXPECT_EQ(count_active_gates(wires), 0u);
  EXPECT_DOUBLE_EQ(nand2_equivalent(wires, fs), 0.0);

  CircuitGraph nands;
  nands.inputs = 2;
  nands.nodes = {{2, {NodeRef::input(0), NodeRef::input(1)}},
                 {2, {NodeRef::node(0), NodeRef::input(1)}},
                 {2, {NodeRef::node(1), NodeRef::node(0)}}};
  nands.outputs = {NodeRef::node(2)};
  EXPECT_DOUBLE_EQ(nand2_equivalent(nands, fs), 3.0);

  auto mixed = nands;
  mixed.nodes[0].gate = 0;  // and
  mixed.nodes[1].gate = 0;  // and
  mixed.nodes[2].gate = 1;  // or
  EXPECT_EQ(count_active_gates(mixed), 3u);
  EXPECT_DOUBLE_EQ(nand2_equivalent(mixed, fs), 7.0);
}

TEST(CircuitJson, RoundTrip) {
  Rng rng(6);
  for (int t = 0; t < 100; ++t) {
    const auto fs = t % 3 == 0 ? FunctionSet::nand_only() : FunctionSet::full();
    const auto g = random_graph(1 + uniform_index(rng, 10), 1 + uniform_index(rng, 4), uniform_index(rng, 60), fs, rng);
    const auto loaded = deserialize(serialize(g, fs));
    EXPECT_EQ(loaded.graph, g);
    EXPECT_EQ(loaded.functions, fs);
  }
}

TEST(CircuitJson, SchemaFieldNames) {
  auto g = single_nand();
  g.nodes[0].gate = 0;
  const auto j = circuit_to_json(g, FunctionSet::nand_only());
  EXPECT_EQ(j.dump(), R"({"inputs":2,"outputs":1,"function_set":[{"name":"nand","table":[1,1,1,0],"nand2":1.0}],)"
                      R"("nodes":[{"fn":0,"args":[{"in":0},{"in":1}]}],"output_targets":[{"node":0}]})");
}

TEST(CircuitJson, OutOfRangeReferenceNamesTheNode) {
  const std::string text = R"({"inputs":1,"outputs":1,"nodes":[{"fn":0,"args":[{"in":0},{"in":4}]}],)"
                           R"("output_targets":[{"node":0}]})";
  try {
    deserialize(text);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("f0"), std::string::npos) << e.what();
  }
}

TEST(CircuitJson, MinimalIdentityCircuit) {
  const auto c = deserialize(R"({"inputs":1,"outputs":1,"nodes":[],"output_targets":[{"in":0}]})");
  EXPECT_EQ(c.graph.inputs, 1u);
  EXPECT_EQ(evaluate(c.graph, c.functions, std::vector<std::uint8_t>{1})[0], 1);
  EXPECT_EQ(evaluate(c.graph, c.functions, std::vector<std::uint8_t>{0})[0], 0);
}

TEST(CircuitJson, CycleInFileIsRejected) {
  const std::string text = R"({"inputs":1,"outputs":1,"nodes":[{"fn":0,"args":[{"node":1},{"in":0}]},)"
                           R"({"fn":0,"args":[{"node":0},{"in":0}]}],"output_targets":[{"node":0}]})";
  EXPECT_THROW(deserialize(text), InputError);
  EXPECT_THROW(deserialize("{not json"), InputError);
}

}  // namespace
}  // namespace tinyclf
