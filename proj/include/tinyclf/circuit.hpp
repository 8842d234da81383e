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

/// @file circuit.hpp
/// @brief The graph genotype: input nodes, two-input function nodes and output targets.
///
/// Edges are stored consumer -> producer: each function node lists the nodes it reads, and each
/// output names the node it exposes. A function node is active when some output reaches it by
/// following those references; only active nodes contribute to semantics or area.

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tinyclf/common.hpp"
#include "tinyclf/encoding.hpp"

namespace tinyclf {

/// Two-input Boolean gate. Bit (2*in0 + in1) of `table` is the output for (in0, in1).
struct GateFunction {
  std::string name;
  std::uint8_t table = 0;
  double nand2_weight = 1.0;

  bool apply(bool a, bool b) const { return (table >> ((a ? 2 : 0) + (b ? 1 : 0))) & 1U; }

  std::uint64_t apply(std::uint64_t a, std::uint64_t b) const {
    const auto expand = [this](unsigned bit) { return ((table >> bit) & 1U) ? ~std::uint64_t{0} : 0; };
    return (expand(0) & ~a & ~b) | (expand(1) & ~a & b) | (expand(2) & a & ~b) | (expand(3) & a & b);
  }

  bool symmetric() const { return ((table >> 1) & 1U) == ((table >> 2) & 1U); }
};

namespace gates {
inline constexpr std::uint8_t kAnd = 0b1000;
inline constexpr std::uint8_t kOr = 0b1110;
inline constexpr std::uint8_t kNand = 0b0111;
inline constexpr std::uint8_t kNor = 0b0001;
}  // namespace gates

struct FunctionSet {
  std::vector<GateFunction> gates;

  std::size_t size() const { return gates.size(); }
  const GateFunction& operator[](std::size_t i) const { return gates[i]; }

  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t i = 0; i < gates.size(); ++i) {
      if (gates[i].name == name) return i;
    }
    return std::nullopt;
  }

  double max_weight() const {
    double w = 0.0;
    for (const auto& g : gates) w = std::max(w, g.nand2_weight);
    return w;
  }

  /// {and, or, nand, nor} with conventional CMOS NAND2-equivalent weights.
  static FunctionSet full() {
    return {{{"and", gates::kAnd, 2.0}, {"or", gates::kOr, 3.0}, {"nand", gates::kNand, 1.0}, {"nor", gates::kNor, 1.0}}};
  }
  static FunctionSet nand_only() { return {{{"nand", gates::kNand, 1.0}}}; }

  /// "full", "nand", or a comma-separated list drawn from {and, or, nand, nor}.
  static FunctionSet named(std::string_view spec) {
    if (spec == "full") return full();
    if (spec == "nand") return nand_only();
    const FunctionSet all = full();
    FunctionSet out;
    std::size_t pos = 0;
    while (pos <= spec.size()) {
      const std::size_t comma = std::min(spec.find(',', pos), spec.size());
      const auto name = spec.substr(pos, comma - pos);
      auto idx = all.find(name);
      if (!idx) throw InputError("unknown gate '" + std::string(name) + "' in function set");
      if (!out.find(name)) out.gates.push_back(all[*idx]);
      pos = comma + 1;
    }
    if (out.gates.empty()) throw InputError("function set is empty");
    return out;
  }

  bool operator==(const FunctionSet& o) const {
    if (gates.size() != o.gates.size()) return false;
    for (std::size_t i = 0; i < gates.size(); ++i) {
      if (gates[i].name != o.gates[i].name || gates[i].table != o.gates[i].table ||
          gates[i].nand2_weight != o.gates[i].nand2_weight) {
        return false;
      }
    }
    return true;
  }
};

struct NodeRef {
  enum class Kind : std::uint8_t { input, node };
  Kind kind = Kind::input;
  std::uint32_t index = 0;

  static NodeRef input(std::uint32_t i) { return {Kind::input, i}; }
  static NodeRef node(std::uint32_t j) { return {Kind::node, j}; }
  bool is_input() const { return kind == Kind::input; }
  bool is_node() const { return kind == Kind::node; }

  std::string str() const { return (is_input() ? "i" : "f") + std::to_string(index); }
  bool operator==(const NodeRef&) const = default;
};

struct FunctionNode {
  std::uint32_t gate = 0;
  std::array<NodeRef, 2> args;
  bool operator==(const FunctionNode&) const = default;
};

struct CircuitGraph {
  std::size_t inputs = 0;
  std::vector<FunctionNode> nodes;
  std::vector<NodeRef> outputs;

  std::size_t size() const { return nodes.size(); }
  std::size_t edge_count() const { return 2 * nodes.size() + outputs.size(); }
  bool operator==(const CircuitGraph&) const = default;
};

/// Returns a description of the first violation, or nullopt for a valid acyclic graph.
inline std::optional<std::string> validate(const CircuitGraph& g, const FunctionSet& fs) {
  if (fs.gates.empty()) return "function set is empty";
  for (std::size_t a = 0; a < fs.gates.size(); ++a) {
    for (std::size_t b = 0; b < a; ++b) {
      if (fs.gates[a].name == fs.gates[b].name) return "duplicate gate name '" + fs.gates[a].name + "'";
    }
  }
  if (g.outputs.empty()) return "circuit has no outputs";
  auto in_range = [&](const NodeRef& r) {
    return r.is_input() ? r.index < g.inputs : r.index < g.nodes.size();
  };
  for (std::size_t j = 0; j < g.nodes.size(); ++j) {
    if (g.nodes[j].gate >= fs.size()) {
      return "node f" + std::to_string(j) + " uses gate " + std::to_string(g.nodes[j].gate) + " outside the function set";
    }
    for (const auto& a : g.nodes[j].args) {
      if (!in_range(a)) return "node f" + std::to_string(j) + " references missing node " + a.str();
    }
  }
  for (std::size_t k = 0; k < g.outputs.size(); ++k) {
    if (!in_range(g.outputs[k])) return "output o" + std::to_string(k) + " references missing node " + g.outputs[k].str();
  }

  // Three-colour DFS over consumer -> producer arcs.
  enum : std::uint8_t { white, grey, black };
  std::vector<std::uint8_t> colour(g.nodes.size(), white);
  std::vector<std::pair<std::uint32_t, std::uint8_t>> stack;
  for (std::uint32_t root = 0; root < g.nodes.size(); ++root) {
    if (colour[root] != white) continue;
    stack.push_back({root, 0});
    colour[root] = grey;
    while (!stack.empty()) {
      auto& [v, slot] = stack.back();
      if (slot == 2) {
        colour[v] = black;
        stack.pop_back();
        continue;
      }
      const NodeRef a = g.nodes[v].args[slot++];
      if (!a.is_node()) continue;
      if (colour[a.index] == grey) {
        std::string cycle;
        auto it = std::find_if(stack.begin(), stack.end(), [&](const auto& e) { return e.first == a.index; });
        for (; it != stack.end(); ++it) cycle += (cycle.empty() ? "" : ",") + ("f" + std::to_string(it->first));
        return "cycle through {" + cycle + "}";
      }
      if (colour[a.index] == white) {
        colour[a.index] = grey;
        stack.push_back({a.index, 0});
      }
    }
  }
  return std::nullopt;
}

struct ActiveSet {
  std::vector<std::uint8_t> mask;  // per function node
  std::size_t count = 0;

  bool contains(std::size_t j) const { return mask[j] != 0; }
};

inline ActiveSet active_set(const CircuitGraph& g) {
  ActiveSet a;
  a.mask.assign(g.nodes.size(), 0);
  std::vector<std::uint32_t> stack;
  for (const auto& o : g.outputs) {
    if (o.is_node() && !a.mask[o.index]) {
      a.mask[o.index] = 1;
      stack.push_back(o.index);
    }
  }
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    ++a.count;
    for (const auto& arg : g.nodes[v].args) {
      if (arg.is_node() && !a.mask[arg.index]) {
        a.mask[arg.index] = 1;
        stack.push_back(arg.index);
      }
    }
  }
  return a;
}

enum class TopoStrategy {
  depth_first,  // post-order DFS from the outputs, slot order
  kahn,         // producers-first queue, lowest node index first
};

/// Active function nodes ordered so that every node follows the nodes it reads.
inline std::vector<std::uint32_t> topological_order(const CircuitGraph& g, const ActiveSet& active,
                                                    TopoStrategy strategy = TopoStrategy::depth_first) {
  std::vector<std::uint32_t> order;
  order.reserve(active.count);
  if (strategy == TopoStrategy::depth_first) {
    std::vector<std::uint8_t> done(g.nodes.size(), 0);
    std::vector<std::pair<std::uint32_t, std::uint8_t>> stack;
    for (const auto& o : g.outputs) {
      if (!o.is_node() || done[o.index]) continue;
      stack.push_back({o.index, 0});
      done[o.index] = 1;
      while (!stack.empty()) {
        auto& [v, slot] = stack.back();
        if (slot == 2) {
          order.push_back(v);
          stack.pop_back();
          continue;
        }
        const NodeRef a = g.nodes[v].args[slot++];
        if (a.is_node() && !done[a.index]) {
          done[a.index] = 1;
          stack.push_back({a.index, 0});
        }
      }
    }
    return order;
  }

  std::vector<std::uint32_t> pending(g.nodes.size(), 0);
  std::vector<std::vector<std::uint32_t>> consumers(g.nodes.size());
  for (std::uint32_t j = 0; j < g.nodes.size(); ++j) {
    if (!active.contains(j)) continue;
    for (const auto& a : g.nodes[j].args) {
      if (a.is_node()) {
        ++pending[j];
        consumers[a.index].push_back(j);
      }
    }
  }
  std::priority_queue<std::uint32_t, std::vector<std::uint32_t>, std::greater<>> ready;
  for (std::uint32_t j = 0; j < g.nodes.size(); ++j) {
    if (active.contains(j) && pending[j] == 0) ready.push(j);
  }
  while (!ready.empty()) {
    const auto v = ready.top();
    ready.pop();
    order.push_back(v);
    for (auto c : consumers[v]) {
      if (--pending[c] == 0) ready.push(c);
    }
  }
  return order;
}

/// Scalar evaluation of one input row. Uses memoised recursion rather than the batch path's
/// explicit ordering, so the two serve as independent checks on each other.
inline std::vector<std::uint8_t> evaluate(const CircuitGraph& g, const FunctionSet& fs,
                                          std::span<const std::uint8_t> input_bits) {
  std::vector<std::int8_t> memo(g.nodes.size(), -1);
  std::vector<std::uint32_t> stack;
  auto value_of = [&](const NodeRef& r) -> std::int8_t {
    return r.is_input() ? static_cast<std::int8_t>(input_bits[r.index] & 1U) : memo[r.index];
  };
  std::vector<std::uint8_t> out;
  out.reserve(g.outputs.size());
  for (const auto& o : g.outputs) {
    if (o.is_node() && memo[o.index] < 0) {
      stack.push_back(o.index);
      while (!stack.empty()) {
        const auto v = stack.back();
        const auto& node = g.nodes[v];
        const auto a = value_of(node.args[0]);
        const auto b = value_of(node.args[1]);
        if (a < 0) {
          stack.push_back(node.args[0].index);
          continue;
        }
        if (b < 0) {
          stack.push_back(node.args[1].index);
          continue;
        }
        memo[v] = fs[node.gate].apply(a != 0, b != 0) ? 1 : 0;
        stack.pop_back();
      }
    }
    out.push_back(static_cast<std::uint8_t>(value_of(o)));
  }
  return out;
}

/// Single stuck-at fault on a function node's output.
struct StuckAtFault {
  std::uint32_t node = 0;
  bool value = false;
};

/// Bit-parallel evaluation over every row of `inputs`, 64 rows per word. Returns rows x O.
/// With a fault, the named node's value is forced before any consumer reads it.
inline BitMatrix evaluate_batch(const CircuitGraph& g, const FunctionSet& fs, const BitMatrix& inputs,
                                std::optional<StuckAtFault> fault = std::nullopt,
                                TopoStrategy strategy = TopoStrategy::depth_first) {
  if (inputs.cols() != g.inputs) {
    throw ConsistencyError("data has " + std::to_string(inputs.cols()) + " input bits, circuit expects " +
                           std::to_string(g.inputs));
  }
  const std::size_t words = inputs.words_per_column();
  BitMatrix out(inputs.rows(), g.outputs.size());
  if (inputs.rows() == 0) return out;

  const ActiveSet active = active_set(g);
  const auto order = topological_order(g, active, strategy);
  std::vector<std::uint64_t> values(g.nodes.size() * words, 0);
  auto column_of = [&](const NodeRef& r) -> const std::uint64_t* {
    return r.is_input() ? inputs.column(r.index).data() : values.data() + r.index * words;
  };
  for (const auto v : order) {
    const auto& node = g.nodes[v];
    std::uint64_t* dst = values.data() + v * words;
    if (fault && fault->node == v) {
      std::fill(dst, dst + words, fault->value ? ~std::uint64_t{0} : 0);
      continue;
    }
    const auto& gate = fs[node.gate];
    const std::uint64_t* a = column_of(node.args[0]);
    const std::uint64_t* b = column_of(node.args[1]);
    for (std::size_t w = 0; w < words; ++w) dst[w] = gate.apply(a[w], b[w]);
  }
  const std::uint64_t tail = inputs.tail_mask();
  for (std::size_t k = 0; k < g.outputs.size(); ++k) {
    const std::uint64_t* src = column_of(g.outputs[k]);
    auto dst = out.column(k);
    std::copy(src, src + words, dst.begin());
    dst[words - 1] &= tail;
  }
  return out;
}

inline std::size_t count_active_gates(const CircuitGraph& g) { return active_set(g).count; }

inline double nand2_equivalent(const CircuitGraph& g, const FunctionSet& fs) {
  const ActiveSet active = active_set(g);
  double total = 0.0;
  for (std::size_t j = 0; j < g.nodes.size(); ++j) {
    if (active.contains(j)) total += fs[g.nodes[j].gate].nand2_weight;
  }
  return total;
}

// ---------------------------------------------------------------------------------------------
// JSON

namespace detail {

inline nlohmann::ordered_json ref_to_json(const NodeRef& r) {
  nlohmann::ordered_json j;
  j[r.is_input() ? "in" : "node"] = r.index;
  return j;
}

inline NodeRef ref_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object() || j.size() != 1) throw InputError(where + ": reference must be {\"in\": i} or {\"node\": j}");
  if (j.contains("in")) return NodeRef::input(j.at("in").get<std::uint32_t>());
  if (j.contains("node")) return NodeRef::node(j.at("node").get<std::uint32_t>());
  throw InputError(where + ": reference must be {\"in\": i} or {\"node\": j}");
}

}  // namespace detail

inline nlohmann::ordered_json circuit_to_json(const CircuitGraph& g, const FunctionSet& fs) {
  nlohmann::ordered_json j;
  j["inputs"] = g.inputs;
  j["outputs"] = g.outputs.size();
  auto fset = nlohmann::ordered_json::array();
  for (const auto& gate : fs.gates) {
    nlohmann::ordered_json e;
    e["name"] = gate.name;
    e["table"] = {(gate.table >> 0) & 1, (gate.table >> 1) & 1, (gate.table >> 2) & 1, (gate.table >> 3) & 1};
    e["nand2"] = gate.nand2_weight;
    fset.push_back(std::move(e));
  }
  j["function_set"] = std::move(fset);
  auto nodes = nlohmann::ordered_json::array();
  for (const auto& n : g.nodes) {
    nlohmann::ordered_json e;
    e["fn"] = n.gate;
    e["args"] = {detail::ref_to_json(n.args[0]), detail::ref_to_json(n.args[1])};
    nodes.push_back(std::move(e));
  }
  j["nodes"] = std::move(nodes);
  auto targets = nlohmann::ordered_json::array();
  for (const auto& o : g.outputs) targets.push_back(detail::ref_to_json(o));
  j["output_targets"] = std::move(targets);
  return j;
}

inline std::string serialize(const CircuitGraph& g, const FunctionSet& fs) {
  return circuit_to_json(g, fs).dump(2) + "\n";
}

struct LoadedCircuit {
  CircuitGraph graph;
  FunctionSet functions;
};

/// Parses circuit JSON and re-validates it. Throws InputError naming the offending node.
inline LoadedCircuit deserialize(std::string_view text) {
  LoadedCircuit out;
  try {
    const auto j = nlohmann::json::parse(text);
    auto& g = out.graph;
    g.inputs = j.at("inputs").get<std::size_t>();
    const auto n_out = j.at("outputs").get<std::size_t>();
    if (j.contains("function_set")) {
      for (const auto& e : j.at("function_set")) {
        GateFunction gate;
        gate.name = e.at("name").get<std::string>();
        const auto table = e.at("table").get<std::vector<int>>();
        if (table.size() != 4) throw InputError("gate '" + gate.name + "' table must have 4 entries");
        for (unsigned b = 0; b < 4; ++b) {
          if (table[b] != 0 && table[b] != 1) throw InputError("gate '" + gate.name + "' table entries must be 0/1");
          gate.table |= static_cast<std::uint8_t>(table[b] << b);
        }
        gate.nand2_weight = e.at("nand2").get<double>();
        if (gate.nand2_weight < 0) throw InputError("gate '" + gate.name + "' has negative nand2 weight");
        out.functions.gates.push_back(std::move(gate));
      }
    } else {
      out.functions = FunctionSet::full();
    }
    const auto& nodes = j.at("nodes");
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const std::string where = "node " + std::to_string(k);
      FunctionNode n;
      n.gate = nodes[k].at("fn").get<std::uint32_t>();
      const auto& args = nodes[k].at("args");
      if (!args.is_array() || args.size() != 2) throw InputError(where + ": args must hold exactly 2 references");
      n.args = {detail::ref_from_json(args[0], where), detail::ref_from_json(args[1], where)};
      g.nodes.push_back(n);
    }
    for (const auto& t : j.at("output_targets")) g.outputs.push_back(detail::ref_from_json(t, "output target"));
    if (g.outputs.size() != n_out) {
      throw InputError("\"outputs\" is " + std::to_string(n_out) + " but " + std::to_string(g.outputs.size()) +
                       " output_targets are listed");
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed circuit JSON: ") + e.what());
  }
  if (auto err = validate(out.graph, out.functions)) throw InputError("invalid circuit: " + *err);
  return out;
}

}  // namespace tinyclf
