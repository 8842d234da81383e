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

#include <cmath>
#include <map>
#include <set>

#include "test_support.hpp"

namespace tinyclf {
namespace {

// Upper 0.999 quantile of chi-square with df degrees of freedom (Wilson-Hilferty).
double chi2_critical(double df) {
  const double z = 3.09;
  const double t = 1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df));
  return df * t * t * t;
}

double chi2_uniform(const std::vector<std::size_t>& counts) {
  double total = 0;
  for (auto c : counts) total += static_cast<double>(c);
  const double expected = total / static_cast<double>(counts.size());
  double s = 0;
  for (auto c : counts) s += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
  return s;
}

std::size_t flat_index(const NodeRef& r, std::size_t inputs) { return r.is_input() ? r.index : inputs + r.index; }

TEST(InitRandom, ValidAndForwardOnly) {
  Rng rng(1);
  Hyperparameters hp;
  hp.n = 60;
  for (int t = 0; t < 50; ++t) {
    const auto g = init_random(5, 3, hp, rng);
    ASSERT_FALSE(validate(g, hp.function_set).has_value());
    for (std::uint32_t j = 0; j < g.nodes.size(); ++j) {
      for (const auto& a : g.nodes[j].args) {
        if (a.is_node()) EXPECT_LT(a.index, j);
      }
    }
  }
  EXPECT_THROW(init_random(0, 1, hp, rng), InputError);
}

TEST(InitRandom, UniformSources) {
  // Node 10 of a 2-input genotype may read any of 12 sources.
  Rng rng(2);
  Hyperparameters hp;
  hp.n = 50;
  std::vector<std::size_t> counts(12, 0), gate_counts(4, 0), output_counts(52, 0);
  for (int t = 0; t < 12000; ++t) {
    const auto g = init_random(2, 1, hp, rng);
    ++counts[flat_index(g.nodes[10].args[0], 2)];
    ++gate_counts[g.nodes[10].gate];
    ++output_counts[flat_index(g.outputs[0], 2)];
  }
  EXPECT_LT(chi2_uniform(counts), chi2_critical(11));
  EXPECT_LT(chi2_uniform(gate_counts), chi2_critical(3));
  EXPECT_LT(chi2_uniform(output_counts), chi2_critical(51));
}

TEST(MutationCounts, Extremes) {
  Rng rng(3);
  const auto all = mutation_counts(40, 83, 1.0, rng);
  EXPECT_EQ(all.nodes, 40u);
  EXPECT_EQ(all.edges, 83u);
  const auto none = mutation_counts(0, 0, 0.5, rng);
  EXPECT_EQ(none.nodes, 0u);
  EXPECT_EQ(none.edges, 0u);
}

TEST(MutationCounts, BinomialMeans) {
  Rng rng(4);
  const std::size_t n = 300, edges = 2 * n + 3;
  const double p = 0.05;
  const int trials = 20000;
  double sum_n = 0, sum_e = 0;
  for (int t = 0; t < trials; ++t) {
    const auto m = mutation_counts(n, edges, p, rng);
    sum_n += static_cast<double>(m.nodes);
    sum_e += static_cast<double>(m.edges);
  }
  EXPECT_NEAR(sum_n / trials, n * p, 0.02 * n * p);
  EXPECT_NEAR(sum_e / trials, edges * p, 0.02 * edges * p);
}

TEST(MutateNode, AlwaysChangesGate) {
  Rng rng(5);
  const auto fs2 = FunctionSet::named("and,or");
  CircuitGraph g;
  g.inputs = 2;
  g.nodes = {{0, {NodeRef::input(0), NodeRef::input(1)}}};
  g.outputs = {NodeRef::node(0)};
  for (int t = 0; t < 10; ++t) {
    const auto before = g.nodes[0].gate;
    mutate_node(g, fs2, rng);
    EXPECT_EQ(g.nodes[0].gate, 1 - before);
  }
  std::vector<std::size_t> counts(3, 0);
  const auto fs4 = FunctionSet::full();
  for (int t = 0; t < 9000; ++t) {
    CircuitGraph h = g;
    h.nodes[0].gate = 3;
    mutate_node(h, fs4, rng);
    ASSERT_NE(h.nodes[0].gate, 3u);
    ++counts[h.nodes[0].gate];
  }
  EXPECT_LT(chi2_uniform(counts), chi2_critical(2));

  CircuitGraph one = g;
  mutate_node(one, FunctionSet::nand_only(), rng);
  EXPECT_EQ(one, g);
  CircuitGraph empty;
  empty.inputs = 1;
  empty.outputs = {NodeRef::input(0)};
  mutate_node(empty, fs4, rng);
  EXPECT_TRUE(empty.nodes.empty());
}

TEST(EdgeCandidates, ChainExample) {
  // i0, i1; f0 = g(i0, i1); f1 = g(f0, i1); out = f1. Slot f0.arg0 can go to i1 only:
  // f0 is the owner and f1 consumes it.
  CircuitGraph g;
  g.inputs = 2;
  g.nodes = {{0, {NodeRef::input(0), NodeRef::input(1)}}, {0, {NodeRef::node(0), NodeRef::input(1)}}};
  g.outputs = {NodeRef::node(1)};
  const auto c = edge_candidates(g, EdgeSlot{false, 0, 0});
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0], NodeRef::input(1));
  // An output edge may move to anything but its current target.
  const auto out = edge_candidates(g, EdgeSlot{true, 0, 0});
  EXPECT_EQ(out.size(), g.inputs + g.nodes.size() - 1);
  // One input, no nodes: the only output edge has nowhere to go.
  CircuitGraph tiny;
  tiny.inputs = 1;
  tiny.outputs = {NodeRef::input(0)};
  EXPECT_TRUE(edge_candidates(tiny, EdgeSlot{true, 0, 0}).empty());
  Rng rng(6);
  EXPECT_FALSE(mutate_edge(tiny, rng));
}

// Reachability oracle: does `from` reach node `to` by following argument edges?
bool reaches(const CircuitGraph& g, std::uint32_t from, std::uint32_t to) {
  std::vector<std::uint32_t> stack{from};
  std::set<std::uint32_t> seen;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    if (v == to) return true;
    if (!seen.insert(v).second) continue;
    for (const auto& a : g.nodes[v].args) {
      if (a.is_node()) stack.push_back(a.index);
    }
  }
  return false;
}

TEST(EdgeCandidatesProperty, ExactlyTheAcyclicAlternatives) {
  Rng rng(7);
  const auto fs = FunctionSet::full();
  for (int t = 0; t < 100; ++t) {
    const auto g = testing::random_graph(3, 2, 15, fs, rng);
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
      const auto slot = EdgeSlot::from_index(g, e);
      const auto cands = edge_candidates(g, slot);
      std::set<std::size_t> got;
      for (const auto& c : cands) got.insert(flat_index(c, g.inputs));
      std::set<std::size_t> want;
      for (std::uint32_t i = 0; i < g.inputs; ++i) {
        if (!(slot.target(g) == NodeRef::input(i))) want.insert(i);
      }
      for (std::uint32_t j = 0; j < g.nodes.size(); ++j) {
        if (slot.target(g) == NodeRef::node(j)) continue;
        if (!slot.output && reaches(g, j, slot.owner)) continue;
        want.insert(g.inputs + j);
      }
      EXPECT_EQ(got, want);
    }
  }
}

TEST(MutateEdge, UniformOverCandidates) {
  CircuitGraph g;
  g.inputs = 3;
  g.nodes = {{0, {NodeRef::input(0), NodeRef::input(1)}}, {0, {NodeRef::input(2), NodeRef::input(1)}}};
  g.outputs = {NodeRef::node(1)};
  // Only the output edge: pick it via a single-edge view by counting landing targets on outputs.
  Rng rng(8);
  std::map<std::size_t, std::size_t> hits;
  int output_moves = 0;
  for (int t = 0; t < 30000; ++t) {
    CircuitGraph h = g;
    ASSERT_TRUE(mutate_edge(h, rng));
    if (!(h.outputs[0] == g.outputs[0])) {
      ++hits[flat_index(h.outputs[0], 3)];
      ++output_moves;
    }
  }
  std::vector<std::size_t> counts;
  for (auto& [k, v] : hits) counts.push_back(v);
  ASSERT_EQ(counts.size(), 4u);
  EXPECT_LT(chi2_uniform(counts), chi2_critical(3));
  EXPECT_NEAR(output_moves / 30000.0, 1.0 / 5.0, 0.02);
}

TEST(MutateProperty, ChildrenStayValid) {
  Rng rng(9);
  Hyperparameters hp;
  for (std::size_t n : {1, 10, 50}) {
    hp.n = n;
    hp.p = 0.3;
    auto g = init_random(4, 2, hp, rng);
    for (int t = 0; t < 2000; ++t) {
      g = mutate(g, hp, rng);
      ASSERT_FALSE(validate(g, hp.function_set).has_value());
      ASSERT_EQ(g.nodes.size(), n);
    }
  }
}

TEST(SelectParent, GreaterOrEqualRule) {
  Rng rng(10);
  const std::vector<double> worse{0.4, 0.3};
  EXPECT_FALSE(select_parent(0.5, worse, rng).has_value());
  const std::vector<double> tie{0.4, 0.5, 0.2};
  EXPECT_EQ(select_parent(0.5, tie, rng), 1u);
  const std::vector<double> better{0.6, 0.5, 0.7};
  EXPECT_EQ(select_parent(0.5, better, rng), 2u);
  const std::vector<double> two{0.7, 0.1, 0.7};
  std::vector<std::size_t> counts(3, 0);
  for (int t = 0; t < 4000; ++t) ++counts[*select_parent(0.5, two, rng)];
  EXPECT_EQ(counts[1], 0u);
  EXPECT_NEAR(counts[0] / 4000.0, 0.5, 0.05);
}

struct ConstantEvaluator {
  double value = 0.5;
  bool validation = true;
  double train_fitness(const CircuitGraph&) const { return value; }
  double validation_fitness(const CircuitGraph&) const { return value; }
  bool has_validation() const { return validation; }
};

TEST(Run, StallsAfterExactlyKappa) {
  Hyperparameters hp;
  hp.n = 10;
  hp.lambda = 2;
  for (std::size_t kappa : {1, 7, 40}) {
    hp.kappa = kappa;
    const auto r = run(ConstantEvaluator{}, 3, 1, hp);
    EXPECT_EQ(r.termination, Termination::stalled);
    EXPECT_EQ(r.generations_run, kappa);
    EXPECT_EQ(r.trace.size(), kappa + 1);
  }
}

TEST(Run, CapsAtMaxGenerations) {
  Hyperparameters hp;
  hp.n = 10;
  hp.gamma = 0.0;
  hp.kappa = 5;
  hp.max_generations = 37;
  const auto r = run(ConstantEvaluator{}, 3, 1, hp);
  EXPECT_EQ(r.termination, Termination::max_generations);
  EXPECT_EQ(r.generations_run, 37u);
  // Constant fitness means every generation is a neutral acceptance.
  EXPECT_EQ(r.improving_replacements, 0u);
  for (std::size_t g = 1; g < r.trace.size(); ++g) EXPECT_EQ(r.trace[g].accepted, Acceptance::neutral);
}

TEST(Run, EmptyValidationWarns) {
  Hyperparameters hp;
  hp.n = 5;
  hp.kappa = 3;
  const auto r = run(ConstantEvaluator{0.5, false}, 2, 1, hp);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("validation"), std::string::npos);
}

TEST(Run, SolvesFullAdder) {
  const auto d = testing::full_adder_dataset();
  Hyperparameters hp;
  hp.n = 50;
  hp.gamma = 0.0;
  hp.max_generations = 20000;
  hp.seed = 3;
  const auto r = evolve(d, hp);
  EXPECT_DOUBLE_EQ(r.best_validation_fitness, 1.0);
  ASSERT_FALSE(r.metrics.empty());
  EXPECT_DOUBLE_EQ(r.metrics[0].balanced_accuracy, 1.0);
}

TEST(RunProperty, ParentFitnessNeverDecreases) {
  const auto d = testing::full_adder_dataset();
  Hyperparameters hp;
  hp.n = 30;
  hp.max_generations = 500;
  hp.kappa = 1000;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    hp.seed = seed;
    const auto r = evolve(d, hp);
    for (std::size_t g = 1; g < r.trace.size(); ++g) {
      EXPECT_GE(r.trace[g].parent_train_fitness, r.trace[g - 1].parent_train_fitness);
      EXPECT_GE(r.trace[g].best_validation_fitness, r.trace[g - 1].best_validation_fitness);
    }
  }
}

TEST(RunProperty, IndependentOfWorkerCount) {
  const auto d = testing::full_adder_dataset();
  Hyperparameters hp;
  hp.n = 40;
  hp.max_generations = 300;
  hp.seed = 11;
  const auto a = evolve(d, hp);
  hp.workers = 8;
  const auto b = evolve(d, hp);
  EXPECT_EQ(a.best, b.best);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t g = 0; g < a.trace.size(); ++g) {
    EXPECT_EQ(a.trace[g].parent_train_fitness, b.trace[g].parent_train_fitness);
    EXPECT_EQ(a.trace[g].active_gates, b.trace[g].active_gates);
  }
}

TEST(Hyperparameters, Checks) {
  Hyperparameters hp;
  EXPECT_DOUBLE_EQ(hp.mutation_rate(), 1.0 / 300.0);
  hp.lambda = 0;
  EXPECT_THROW(hp.check(), InputError);
  hp = {};
  hp.p = 1.5;
  EXPECT_THROW(hp.check(), InputError);
  hp = {};
  hp.reg_weight = -0.1;
  EXPECT_THROW(hp.check(), InputError);
}

}  // namespace
}  // namespace tinyclf
