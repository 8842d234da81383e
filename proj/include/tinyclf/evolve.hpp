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

/// @file evolve.hpp
/// @brief 1+lambda evolution over circuit graphs with neutral drift.
///
/// Each generation mutates the parent into lambda children. The fittest child replaces the parent
/// whenever its training fitness is >= the parent's, so equal-fitness children drift the genotype
/// across plateaus. Validation fitness picks the returned circuit and drives termination: the run
/// stops once the best validation fitness has not improved by gamma for kappa generations, or at
/// generation G.

#include <algorithm>
#include <atomic>
#include <concepts>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "tinyclf/circuit.hpp"
#include "tinyclf/common.hpp"
#include "tinyclf/encoding.hpp"
#include "tinyclf/fitness.hpp"

namespace tinyclf {

struct Hyperparameters {
  std::size_t lambda = 4;
  std::size_t n = 300;
  /// Mutation rate; unset means 1/n, recomputed whenever n changes.
  std::optional<double> p;
  FunctionSet function_set = FunctionSet::full();
  std::string function_set_name = "full";
  double gamma = 0.01;
  std::size_t kappa = 300;
  std::size_t max_generations = 8000;
  double reg_weight = 1.0;
  Secondary secondary = Secondary::none;
  std::uint64_t seed = 1;
  /// Threads used to build and score children. Never changes results.
  std::size_t workers = 1;

  double mutation_rate() const { return p.value_or(1.0 / static_cast<double>(std::max<std::size_t>(n, 1))); }

  FitnessOptions fitness_options() const {
    FitnessOptions o;
    o.reg_weight = reg_weight;
    o.secondary = secondary;
    o.budget = n;
    return o;
  }

  void check() const {
    if (lambda < 1) throw InputError("lambda must be >= 1");
    const double rate = mutation_rate();
    if (!(rate > 0.0 && rate <= 1.0)) throw InputError("mutation rate p must lie in (0, 1]");
    if (function_set.gates.empty()) throw InputError("function set is empty");
    if (gamma < 0.0) throw InputError("gamma must be >= 0");
    if (kappa < 1) throw InputError("kappa must be >= 1");
    if (max_generations < 1) throw InputError("max_generations must be >= 1");
    if (!(reg_weight >= 0.0 && reg_weight <= 1.0)) throw InputError("reg_weight must lie in [0, 1]");
    if (workers < 1) throw InputError("workers must be >= 1");
  }
};

/// Random genotype whose references only point backwards, so it is acyclic by construction.
inline CircuitGraph init_random(std::size_t n_inputs, std::size_t n_outputs, const Hyperparameters& hp, Rng& rng) {
  if (n_inputs < 1 || n_outputs < 1) throw InputError("a circuit needs at least one input and one output");
  CircuitGraph g;
  g.inputs = n_inputs;
  g.nodes.resize(hp.n);
  auto pick = [&](std::size_t available) {
    const std::size_t k = uniform_index(rng, available);
    return k < n_inputs ? NodeRef::input(static_cast<std::uint32_t>(k))
                        : NodeRef::node(static_cast<std::uint32_t>(k - n_inputs));
  };
  for (std::size_t j = 0; j < hp.n; ++j) {
    g.nodes[j].gate = static_cast<std::uint32_t>(uniform_index(rng, hp.function_set.size()));
    for (auto& a : g.nodes[j].args) a = pick(n_inputs + j);
  }
  g.outputs.resize(n_outputs);
  for (auto& o : g.outputs) o = pick(n_inputs + hp.n);
  return g;
}

struct MutationCounts {
  std::size_t nodes = 0;
  std::size_t edges = 0;
};

/// Independent draws m_n ~ B(n, p) and m_e ~ B(|E|, p).
inline MutationCounts mutation_counts(std::size_t n, std::size_t edges, double p, Rng& rng) {
  MutationCounts m;
  m.nodes = n == 0 ? 0 : std::binomial_distribution<std::size_t>(n, p)(rng);
  m.edges = edges == 0 ? 0 : std::binomial_distribution<std::size_t>(edges, p)(rng);
  return m;
}

/// Swaps one random node's gate for a different gate. No-op when n = 0 or |F| = 1.
inline void mutate_node(CircuitGraph& g, const FunctionSet& fs, Rng& rng) {
  if (g.nodes.empty() || fs.size() < 2) return;
  auto& node = g.nodes[uniform_index(rng, g.nodes.size())];
  auto next = static_cast<std::uint32_t>(uniform_index(rng, fs.size() - 1));
  if (next >= node.gate) ++next;
  node.gate = next;
}

/// Edge slot e in [0, 2n) is argument e % 2 of node e / 2; slot 2n + k is output k.
struct EdgeSlot {
  bool output = false;
  std::uint32_t owner = 0;
  std::uint8_t arg = 0;

  static EdgeSlot from_index(const CircuitGraph& g, std::size_t e) {
    if (e < 2 * g.nodes.size()) return {false, static_cast<std::uint32_t>(e / 2), static_cast<std::uint8_t>(e % 2)};
    return {true, static_cast<std::uint32_t>(e - 2 * g.nodes.size()), 0};
  }

  NodeRef target(const CircuitGraph& g) const { return output ? g.outputs[owner] : g.nodes[owner].args[arg]; }
  NodeRef& target(CircuitGraph& g) const { return output ? g.outputs[owner] : g.nodes[owner].args[arg]; }
};

/// Legal new targets for an edge: every input or function node except the current target and any
/// node that already reaches the edge's owner (which would close a cycle). Inputs come first,
/// then function nodes, each in index order.
inline std::vector<NodeRef> edge_candidates(const CircuitGraph& g, EdgeSlot edge) {
  const NodeRef current = edge.target(g);
  std::vector<std::uint8_t> excluded(g.nodes.size(), 0);
  if (!edge.output) {
    // Nodes with a path to the owner are its transitive consumers, plus the owner itself.
    std::vector<std::vector<std::uint32_t>> consumers(g.nodes.size());
    for (std::uint32_t j = 0; j < g.nodes.size(); ++j) {
      for (const auto& a : g.nodes[j].args) {
        if (a.is_node()) consumers[a.index].push_back(j);
      }
    }
    std::vector<std::uint32_t> stack{edge.owner};
    excluded[edge.owner] = 1;
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      for (auto c : consumers[v]) {
        if (!excluded[c]) {
          excluded[c] = 1;
          stack.push_back(c);
        }
      }
    }
  }
  std::vector<NodeRef> out;
  out.reserve(g.inputs + g.nodes.size());
  for (std::uint32_t i = 0; i < g.inputs; ++i) {
    if (!(current == NodeRef::input(i))) out.push_back(NodeRef::input(i));
  }
  for (std::uint32_t j = 0; j < g.nodes.size(); ++j) {
    if (!excluded[j] && !(current == NodeRef::node(j))) out.push_back(NodeRef::node(j));
  }
  return out;
}

/// Redirects one uniformly chosen edge to a uniformly chosen legal target. Returns false when the
/// mutation was abandoned because no legal target exists.
inline bool mutate_edge(CircuitGraph& g, Rng& rng) {
  const std::size_t edges = g.edge_count();
  if (edges == 0) return false;
  const EdgeSlot slot = EdgeSlot::from_index(g, uniform_index(rng, edges));
  const auto candidates = edge_candidates(g, slot);
  if (candidates.empty()) return false;
  slot.target(g) = candidates[uniform_index(rng, candidates.size())];
  return true;
}

/// Applies B(n,p) node and B(|E|,p) edge point mutations in a shuffled order.
inline CircuitGraph mutate(const CircuitGraph& parent, const Hyperparameters& hp, Rng& rng) {
  CircuitGraph child = parent;
  const auto counts = mutation_counts(child.nodes.size(), child.edge_count(), hp.mutation_rate(), rng);
  std::vector<std::uint8_t> tokens(counts.nodes, 1);
  tokens.resize(counts.nodes + counts.edges, 0);
  std::shuffle(tokens.begin(), tokens.end(), rng);
  for (auto is_node : tokens) {
    if (is_node) {
      mutate_node(child, hp.function_set, rng);
    } else {
      mutate_edge(child, rng);
    }
  }
  return child;
}

/// The >= selection rule: index of the child that replaces the parent, or nullopt when every
/// child is strictly worse. Ties among the fittest children are broken uniformly at random.
inline std::optional<std::size_t> select_parent(double parent_fitness, std::span<const double> children, Rng& rng) {
  if (children.empty()) return std::nullopt;
  const double best = *std::max_element(children.begin(), children.end());
  if (best < parent_fitness) return std::nullopt;
  std::vector<std::size_t> tied;
  for (std::size_t i = 0; i < children.size(); ++i) {
    if (children[i] == best) tied.push_back(i);
  }
  return tied.size() == 1 ? tied.front() : tied[uniform_index(rng, tied.size())];
}

template <class E>
concept FitnessEvaluator = requires(const E& e, const CircuitGraph& g) {
  { e.train_fitness(g) } -> std::convertible_to<double>;
  { e.validation_fitness(g) } -> std::convertible_to<double>;
  { e.has_validation() } -> std::convertible_to<bool>;
};

/// Scores circuits by regularised fitness on the train and validation partitions.
class DatasetEvaluator {
 public:
  DatasetEvaluator(const EncodedDataset& data, const Hyperparameters& hp)
      : data_(&data), functions_(hp.function_set), options_(hp.fitness_options()) {}

  double train_fitness(const CircuitGraph& g) const {
    return evaluate_fitness(g, functions_, data_->train, data_->codec, options_).regularized;
  }
  double validation_fitness(const CircuitGraph& g) const {
    return evaluate_fitness(g, functions_, data_->validation, data_->codec, options_).regularized;
  }
  bool has_validation() const { return !data_->validation.empty(); }

 private:
  const EncodedDataset* data_;
  FunctionSet functions_;
  FitnessOptions options_;
};

/// Fixed set of threads that run index-parallel jobs. The calling thread takes part, so a pool of
/// size 1 runs everything inline.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t workers) {
    for (std::size_t i = 1; i < workers; ++i) threads_.emplace_back([this] { loop(); });
  }
  ~WorkerPool() {
    {
      std::lock_guard lock(mutex_);
      stop_ = true;
    }
    start_.notify_all();
    for (auto& t : threads_) t.join();
  }
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  void run(std::size_t tasks, const std::function<void(std::size_t)>& fn) {
    if (threads_.empty() || tasks <= 1) {
      for (std::size_t i = 0; i < tasks; ++i) fn(i);
      return;
    }
    {
      std::lock_guard lock(mutex_);
      job_ = &fn;
      tasks_ = tasks;
      next_ = 0;
      busy_ = threads_.size();
      error_ = nullptr;
      ++epoch_;
    }
    start_.notify_all();
    drain();
    std::unique_lock lock(mutex_);
    done_.wait(lock, [this] { return busy_ == 0; });
    job_ = nullptr;
    if (error_) std::rethrow_exception(error_);
  }

 private:
  void drain() {
    for (std::size_t i = next_.fetch_add(1); i < tasks_; i = next_.fetch_add(1)) {
      try {
        (*job_)(i);
      } catch (...) {
        std::lock_guard lock(mutex_);
        if (!error_) error_ = std::current_exception();
      }
    }
  }

  void loop() {
    std::uint64_t seen = 0;
    for (;;) {
      {
        std::unique_lock lock(mutex_);
        start_.wait(lock, [&] { return stop_ || epoch_ != seen; });
        if (stop_) return;
        seen = epoch_;
      }
      drain();
      std::lock_guard lock(mutex_);
      if (--busy_ == 0) done_.notify_one();
    }
  }

  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable start_;
  std::condition_variable done_;
  const std::function<void(std::size_t)>* job_ = nullptr;
  std::size_t tasks_ = 0;
  std::atomic<std::size_t> next_{0};
  std::size_t busy_ = 0;
  std::uint64_t epoch_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
};

enum class Termination { stalled, max_generations };

inline std::string to_string(Termination t) { return t == Termination::stalled ? "stalled" : "max_generations"; }

enum class Acceptance : std::uint8_t { none, improved, neutral };

struct TraceEntry {
  std::size_t generation = 0;
  double parent_train_fitness = 0.0;
  double best_validation_fitness = 0.0;
  std::size_t active_gates = 0;
  Acceptance accepted = Acceptance::none;
  bool genotype_changed = false;
};

struct PartitionMetrics {
  std::string partition;
  std::size_t rows = 0;
  double balanced_accuracy = 0.0;
  double accuracy = 0.0;
};

struct RunReport {
  Termination termination = Termination::max_generations;
  std::size_t generations_run = 0;
  std::vector<TraceEntry> trace;  // generation 0 included
  CircuitGraph best;
  double best_validation_fitness = 0.0;
  std::size_t best_active_gates = 0;
  double best_nand2 = 0.0;
  std::size_t improving_replacements = 0;
  /// Equal-fitness children that replaced the parent with a different genotype.
  std::size_t neutral_replacements = 0;
  std::vector<PartitionMetrics> metrics;
  std::vector<std::string> warnings;
  Hyperparameters hp;
};

/// Runs the evolutionary loop for an I-input, O-output circuit.
template <FitnessEvaluator Evaluator>
RunReport run(const Evaluator& eval, std::size_t n_inputs, std::size_t n_outputs, const Hyperparameters& hp) {
  hp.check();
  RunReport report;
  report.hp = hp;
  const bool use_validation = eval.has_validation();
  if (!use_validation) {
    report.warnings.push_back("validation partition is empty; best-tracking and termination use training fitness");
  }

  Rng init_rng = derive_stream(hp.seed, 0, 0);
  CircuitGraph parent = init_random(n_inputs, n_outputs, hp, init_rng);
  double parent_fitness = eval.train_fitness(parent);
  double parent_validation = use_validation ? eval.validation_fitness(parent) : parent_fitness;

  report.best = parent;
  report.best_validation_fitness = parent_validation;
  double baseline = parent_validation;
  std::size_t stall = 0;
  report.trace.push_back({0, parent_fitness, parent_validation, count_active_gates(parent), Acceptance::none});

  WorkerPool pool(hp.workers);
  std::vector<CircuitGraph> children(hp.lambda);
  std::vector<double> fitness(hp.lambda, 0.0);
  std::vector<double> validation(hp.lambda, 0.0);

  for (std::size_t gen = 1;; ++gen) {
    pool.run(hp.lambda, [&](std::size_t i) {
      Rng rng = derive_stream(hp.seed, gen, i + 1);
      children[i] = mutate(parent, hp, rng);
      fitness[i] = eval.train_fitness(children[i]);
      validation[i] = use_validation ? eval.validation_fitness(children[i]) : fitness[i];
    });

    // Every child competes for best-on-validation, whether or not it becomes the parent.
    for (std::size_t i = 0; i < hp.lambda; ++i) {
      if (validation[i] > report.best_validation_fitness) {
        report.best = children[i];
        report.best_validation_fitness = validation[i];
      }
    }

    Rng tie_rng = derive_stream(hp.seed, gen, 0);
    Acceptance accepted = Acceptance::none;
    bool changed = false;
    if (auto pick = select_parent(parent_fitness, fitness, tie_rng)) {
      if (fitness[*pick] > parent_fitness) {
        accepted = Acceptance::improved;
        ++report.improving_replacements;
      } else {
        accepted = Acceptance::neutral;
        if (!(children[*pick] == parent)) ++report.neutral_replacements;
      }
      changed = !(children[*pick] == parent);
      parent = std::move(children[*pick]);
      parent_fitness = fitness[*pick];
    }

    // Baseline-and-window stall rule; the epsilon absorbs rounding in sums of recalls.
    if (report.best_validation_fitness >= baseline + hp.gamma - 1e-12) {
      baseline = report.best_validation_fitness;
      stall = 0;
    } else {
      ++stall;
    }
    report.trace.push_back(
        {gen, parent_fitness, report.best_validation_fitness, count_active_gates(parent), accepted, changed});

    if (stall >= hp.kappa) {
      report.termination = Termination::stalled;
      report.generations_run = gen;
      break;
    }
    if (gen >= hp.max_generations) {
      report.termination = Termination::max_generations;
      report.generations_run = gen;
      break;
    }
  }
  report.best_active_gates = count_active_gates(report.best);
  report.best_nand2 = nand2_equivalent(report.best, hp.function_set);
  return report;
}

/// Evolves a classifier for an encoded dataset and fills per-partition metrics.
inline RunReport evolve(const EncodedDataset& data, const Hyperparameters& hp) {
  if (data.train.empty()) throw InputError("training partition is empty");
  DatasetEvaluator eval(data, hp);
  RunReport report = run(eval, data.input_bits, data.codec.bits, hp);
  for (const auto& [name, part] : {std::pair<const char*, const EncodedPartition*>{"train", &data.train},
                                   {"validation", &data.validation},
                                   {"test", &data.test}}) {
    if (part->empty()) continue;
    const auto cm = confusion_matrix(predict_classes(report.best, hp.function_set, *part, data.codec), part->labels,
                                     data.codec.n_classes);
    report.metrics.push_back({name, part->size(), cm.balanced_accuracy(), cm.accuracy()});
  }
  return report;
}

}  // namespace tinyclf
