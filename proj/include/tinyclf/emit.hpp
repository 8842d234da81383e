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

/// @file emit.hpp
/// @brief Verilog netlist emission (and a reader for exactly that subset), DOT rendering and the
/// plain-text run summary.

#include <cctype>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "tinyclf/circuit.hpp"
#include "tinyclf/common.hpp"
#include "tinyclf/evolve.hpp"

namespace tinyclf {

struct VerilogOptions {
  std::string module_name = "tiny_classifier";
  bool include_port_comments = false;
  /// Optional provenance for each input bit, e.g. "petal_length[1]"; used with port comments.
  std::vector<std::string> input_labels;
  /// Extra `//` lines placed above the module.
  std::vector<std::string> header_comments;
};

namespace detail {

inline std::string gate_expression(std::uint8_t table, const std::string& a, const std::string& b) {
  switch (table) {
    case gates::kAnd: return a + " & " + b;
    case gates::kOr: return a + " | " + b;
    case gates::kNand: return "~(" + a + " & " + b + ")";
    case gates::kNor: return "~(" + a + " | " + b + ")";
    case 0b0000: return "1'b0";
    case 0b1111: return "1'b1";
    default: break;
  }
  std::string expr;
  for (unsigned m = 0; m < 4; ++m) {
    if (!((table >> m) & 1U)) continue;
    const std::string la = (m & 2U) ? a : "~" + a;
    const std::string lb = (m & 1U) ? b : "~" + b;
    expr += (expr.empty() ? "" : " | ") + ("(" + la + " & " + lb + ")");
  }
  return expr;
}

inline std::string verilog_ref(const NodeRef& r) {
  return r.is_input() ? "x[" + std::to_string(r.index) + "]" : "n" + std::to_string(r.index);
}

}  // namespace detail

/// One `wire`/`assign` pair per active node in dependency order, then one assign per output bit.
inline std::string emit_verilog(const CircuitGraph& g, const FunctionSet& fs, const VerilogOptions& opts = {}) {
  if (!is_identifier(opts.module_name)) throw InputError("invalid Verilog module name '" + opts.module_name + "'");
  std::ostringstream os;
  for (const auto& line : opts.header_comments) os << "// " << line << "\n";
  os << "// x[i]: encoded input bit i (features in column order, MSB first within a feature)\n";
  os << "// y[k]: class-code bit k, MSB first\n";
  if (opts.include_port_comments) {
    for (std::size_t i = 0; i < g.inputs; ++i) {
      os << "//   x[" << i << "]";
      if (i < opts.input_labels.size()) os << " = " << opts.input_labels[i];
      os << "\n";
    }
  }
  os << "module " << opts.module_name << "(input wire [" << (g.inputs == 0 ? 0 : g.inputs - 1)
     << ":0] x, output wire [" << g.outputs.size() - 1 << ":0] y);\n";
  const auto order = topological_order(g, active_set(g));
  for (const auto j : order) {
    const auto& node = g.nodes[j];
    os << "  wire n" << j << ";\n";
    os << "  assign n" << j << " = "
       << detail::gate_expression(fs[node.gate].table, detail::verilog_ref(node.args[0]),
                                  detail::verilog_ref(node.args[1]))
       << ";\n";
  }
  for (std::size_t k = 0; k < g.outputs.size(); ++k) {
    os << "  assign y[" << k << "] = " << detail::verilog_ref(g.outputs[k]) << ";\n";
  }
  os << "endmodule\n";
  return os.str();
}

namespace detail {

struct VToken {
  enum Kind { ident, number, sized_const, punct, end } kind = end;
  std::string text;
  std::size_t line = 1;
  std::size_t col = 1;
};

class VLexer {
 public:
  explicit VLexer(std::string_view src) : src_(src) {}

  std::vector<VToken> tokens() {
    std::vector<VToken> out;
    for (;;) {
      skip_space_and_comments();
      VToken t;
      t.line = line_;
      t.col = col_;
      if (pos_ >= src_.size()) {
        out.push_back(t);
        return out;
      }
      const char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = VToken::ident;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
          t.text.push_back(advance());
        }
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        t.kind = VToken::number;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) t.text.push_back(advance());
        if (t.text == "1" && src_.substr(pos_, 3) == "'b0") {
          t.kind = VToken::sized_const;
          t.text = "1'b0";
          advance(), advance(), advance();
        } else if (t.text == "1" && src_.substr(pos_, 3) == "'b1") {
          t.kind = VToken::sized_const;
          t.text = "1'b1";
          advance(), advance(), advance();
        }
      } else {
        t.kind = VToken::punct;
        t.text.push_back(advance());
      }
      out.push_back(std::move(t));
    }
  }

 private:
  char advance() {
    const char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_space_and_comments() {
    while (pos_ < src_.size()) {
      if (std::isspace(static_cast<unsigned char>(src_[pos_]))) {
        advance();
      } else if (src_.substr(pos_, 2) == "//") {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else {
        return;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

/// Expression tree over at most two distinct signals.
struct VExpr {
  enum Op { leaf, constant, inv, conj, disj } op = leaf;
  std::string signal;  // leaf: "x[3]" or a wire name
  bool value = false;  // constant
  std::unique_ptr<VExpr> lhs, rhs;

  bool eval(const std::map<std::string, bool>& env) const {
    switch (op) {
      case leaf: return env.at(signal);
      case constant: return value;
      case inv: return !lhs->eval(env);
      case conj: return lhs->eval(env) && rhs->eval(env);
      case disj: return lhs->eval(env) || rhs->eval(env);
    }
    return false;
  }

  void signals(std::vector<std::string>& out) const {
    if (op == leaf) {
      if (std::find(out.begin(), out.end(), signal) == out.end()) out.push_back(signal);
      return;
    }
    if (lhs) lhs->signals(out);
    if (rhs) rhs->signals(out);
  }
};

class VParser {
 public:
  explicit VParser(std::vector<VToken> tokens) : toks_(std::move(tokens)) {}

  LoadedCircuit parse() {
    expect_ident("module");
    const auto name = next();
    if (name.kind != VToken::ident) fail(name, "expected module name");
    expect_punct("(");
    expect_ident("input");
    expect_ident("wire");
    const std::size_t in_width = parse_range() + 1;
    expect_ident("x");
    expect_punct(",");
    expect_ident("output");
    expect_ident("wire");
    const std::size_t out_width = parse_range() + 1;
    expect_ident("y");
    expect_punct(")");
    expect_punct(";");

    struct PendingNode {
      std::string name;
      std::unique_ptr<VExpr> expr;
      VToken at;
    };
    std::vector<PendingNode> pending;
    std::map<std::string, std::size_t> declared;  // wire -> pending index (SIZE_MAX until assigned)
    std::vector<std::optional<std::string>> out_refs(out_width);
    std::vector<VToken> out_at(out_width);

    for (;;) {
      const auto t = next();
      if (t.kind == VToken::ident && t.text == "endmodule") break;
      if (t.kind == VToken::ident && t.text == "wire") {
        const auto w = next();
        if (w.kind != VToken::ident || w.text == "x" || w.text == "y") fail(w, "expected wire name");
        if (declared.count(w.text)) fail(w, "wire '" + w.text + "' declared twice");
        declared[w.text] = SIZE_MAX;
        expect_punct(";");
      } else if (t.kind == VToken::ident && t.text == "assign") {
        const auto lhs = next();
        if (lhs.kind != VToken::ident) fail(lhs, "expected assignment target");
        if (lhs.text == "y") {
          expect_punct("[");
          const std::size_t k = parse_number();
          expect_punct("]");
          if (k >= out_width) fail(lhs, "output bit y[" + std::to_string(k) + "] out of range");
          if (out_refs[k]) fail(lhs, "y[" + std::to_string(k) + "] assigned twice");
          expect_punct("=");
          out_at[k] = peek();
          out_refs[k] = parse_signal(in_width);
          expect_punct(";");
        } else {
          auto it = declared.find(lhs.text);
          if (it == declared.end()) fail(lhs, "assignment to undeclared wire '" + lhs.text + "'");
          if (it->second != SIZE_MAX) fail(lhs, "wire '" + lhs.text + "' assigned twice");
          expect_punct("=");
          it->second = pending.size();
          pending.push_back({lhs.text, parse_expr(in_width), lhs});
          expect_punct(";");
        }
      } else {
        fail(t, "unsupported construct '" + t.text + "'");
      }
    }
    const auto tail = next();
    if (tail.kind != VToken::end) fail(tail, "unexpected '" + tail.text + "' after endmodule");

    LoadedCircuit out;
    auto& g = out.graph;
    g.inputs = in_width;
    auto resolve = [&](const std::string& sig, const VToken& at) -> NodeRef {
      if (sig.rfind("x[", 0) == 0) return NodeRef::input(static_cast<std::uint32_t>(std::stoul(sig.substr(2))));
      auto it = declared.find(sig);
      if (it == declared.end() || it->second == SIZE_MAX) fail(at, "reference to unassigned wire '" + sig + "'");
      return NodeRef::node(static_cast<std::uint32_t>(it->second));
    };
    for (const auto& p : pending) {
      std::vector<std::string> sigs;
      p.expr->signals(sigs);
      if (sigs.size() > 2) fail(p.at, "expression for '" + p.name + "' reads more than two signals");
      while (sigs.size() < 2) sigs.push_back(sigs.empty() ? "x[0]" : sigs.front());
      std::uint8_t table = 0;
      for (unsigned m = 0; m < 4; ++m) {
        std::map<std::string, bool> env{{sigs[0], (m & 2U) != 0}};
        env[sigs[1]] = sigs[1] == sigs[0] ? (m & 2U) != 0 : (m & 1U) != 0;
        if (p.expr->eval(env)) table |= static_cast<std::uint8_t>(1U << m);
      }
      // With one distinct signal both slots carry it, so only table entries 0 and 3 are ever read.
      FunctionNode node;
      node.gate = static_cast<std::uint32_t>(gate_index(out.functions, table));
      node.args = {resolve(sigs[0], p.at), resolve(sigs[1], p.at)};
      g.nodes.push_back(node);
    }
    for (std::size_t k = 0; k < out_width; ++k) {
      if (!out_refs[k]) fail(toks_.back(), "output bit y[" + std::to_string(k) + "] is never assigned");
      g.outputs.push_back(resolve(*out_refs[k], out_at[k]));
    }
    if (out.functions.gates.empty()) out.functions = FunctionSet::full();
    if (auto err = validate(g, out.functions)) throw InputError("netlist: " + *err);
    return out;
  }

 private:
  static std::size_t gate_index(FunctionSet& fs, std::uint8_t table) {
    for (std::size_t i = 0; i < fs.size(); ++i) {
      if (fs[i].table == table) return i;
    }
    const FunctionSet known = FunctionSet::full();
    GateFunction gate{"tt" + std::to_string(table), table, 1.0};
    for (const auto& k : known.gates) {
      if (k.table == table) gate = k;
    }
    fs.gates.push_back(gate);
    return fs.size() - 1;
  }

  [[noreturn]] void fail(const VToken& t, const std::string& msg) const {
    throw InputError("netlist " + std::to_string(t.line) + ":" + std::to_string(t.col) + ": " + msg);
  }

  const VToken& peek() const { return toks_[pos_]; }
  VToken next() {
    const VToken& t = toks_[pos_];
    if (t.kind != VToken::end) ++pos_;
    return t;
  }

  void expect_ident(const char* word) {
    const auto t = next();
    if (t.kind != VToken::ident || t.text != word) fail(t, std::string("expected '") + word + "', found '" + t.text + "'");
  }
  void expect_punct(const char* p) {
    const auto t = next();
    if (t.kind != VToken::punct || t.text != p) fail(t, std::string("expected '") + p + "', found '" + t.text + "'");
  }

  std::size_t parse_number() {
    const auto t = next();
    if (t.kind != VToken::number) fail(t, "expected a number, found '" + t.text + "'");
    return std::stoul(t.text);
  }

  std::size_t parse_range() {
    expect_punct("[");
    const std::size_t hi = parse_number();
    expect_punct(":");
    if (parse_number() != 0) fail(peek(), "vector ranges must end at 0");
    expect_punct("]");
    return hi;
  }

  std::string parse_signal(std::size_t in_width) {
    const auto t = next();
    if (t.kind != VToken::ident || t.text == "y") fail(t, "expected a signal, found '" + t.text + "'");
    if (t.text == "x") {
      expect_punct("[");
      const std::size_t i = parse_number();
      expect_punct("]");
      if (i >= in_width) fail(t, "input bit x[" + std::to_string(i) + "] out of range");
      return "x[" + std::to_string(i) + "]";
    }
    return t.text;
  }

  std::unique_ptr<VExpr> parse_expr(std::size_t in_width) {
    auto lhs = parse_and(in_width);
    while (peek().kind == VToken::punct && peek().text == "|") {
      next();
      auto e = std::make_unique<VExpr>();
      e->op = VExpr::disj;
      e->lhs = std::move(lhs);
      e->rhs = parse_and(in_width);
      lhs = std::move(e);
    }
    return lhs;
  }

  std::unique_ptr<VExpr> parse_and(std::size_t in_width) {
    auto lhs = parse_unary(in_width);
    while (peek().kind == VToken::punct && peek().text == "&") {
      next();
      auto e = std::make_unique<VExpr>();
      e->op = VExpr::conj;
      e->lhs = std::move(lhs);
      e->rhs = parse_unary(in_width);
      lhs = std::move(e);
    }
    return lhs;
  }

  std::unique_ptr<VExpr> parse_unary(std::size_t in_width) {
    const auto& t = peek();
    auto e = std::make_unique<VExpr>();
    if (t.kind == VToken::punct && t.text == "~") {
      next();
      e->op = VExpr::inv;
      e->lhs = parse_unary(in_width);
      return e;
    }
    if (t.kind == VToken::punct && t.text == "(") {
      next();
      auto inner = parse_expr(in_width);
      expect_punct(")");
      return inner;
    }
    if (t.kind == VToken::sized_const) {
      e->op = VExpr::constant;
      e->value = next().text == "1'b1";
      return e;
    }
    e->op = VExpr::leaf;
    e->signal = parse_signal(in_width);
    return e;
  }

  std::vector<VToken> toks_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Reads back the netlist subset produced by emit_verilog. Errors carry line:column.
inline LoadedCircuit parse_verilog_subset(std::string_view text) {
  detail::VLexer lexer(text);
  return detail::VParser(lexer.tokens()).parse();
}

/// Graphviz rendering; inactive nodes and their arcs are drawn grey.
inline std::string emit_dot(const CircuitGraph& g, const FunctionSet& fs) {
  const ActiveSet active = active_set(g);
  std::ostringstream os;
  os << "digraph circuit {\n  rankdir=LR;\n";
  for (std::size_t i = 0; i < g.inputs; ++i) os << "  i" << i << " [label=\"x[" << i << "]\", shape=box];\n";
  for (std::size_t j = 0; j < g.nodes.size(); ++j) {
    os << "  f" << j << " [label=\"" << fs[g.nodes[j].gate].name << "\"";
    if (!active.contains(j)) os << ", style=filled, fillcolor=grey, color=grey";
    os << "];\n";
  }
  for (std::size_t k = 0; k < g.outputs.size(); ++k) os << "  o" << k << " [label=\"y[" << k << "]\", shape=box];\n";
  for (std::size_t j = 0; j < g.nodes.size(); ++j) {
    for (const auto& a : g.nodes[j].args) {
      os << "  " << a.str() << " -> f" << j;
      if (!active.contains(j)) os << " [color=grey]";
      os << ";\n";
    }
  }
  for (std::size_t k = 0; k < g.outputs.size(); ++k) os << "  " << g.outputs[k].str() << " -> o" << k << ";\n";
  os << "}\n";
  return os.str();
}

struct ReportContext {
  std::string dataset;
  std::string encoding;  // e.g. "quantiles/2"
  std::size_t input_bits = 0;
  std::size_t output_bits = 0;
  std::vector<std::string> class_names;
  std::vector<std::string> config_lines;  // resolved config echo
};

inline std::string emit_report(const RunReport& rr, const ReportContext& ctx) {
  std::ostringstream os;
  os << "tinyclf run report\n";
  os << "==================\n";
  if (!ctx.dataset.empty()) os << "dataset:            " << ctx.dataset << "\n";
  if (!ctx.encoding.empty()) os << "encoding:           " << ctx.encoding << "\n";
  os << "input bits:         " << ctx.input_bits << "\n";
  os << "output bits:        " << ctx.output_bits << "\n";
  if (!ctx.class_names.empty()) {
    os << "classes:           ";
    for (std::size_t c = 0; c < ctx.class_names.size(); ++c) os << " " << c << "=" << ctx.class_names[c];
    os << "\n";
  }
  os << "seed:               " << rr.hp.seed << "\n";
  os << "termination:        " << to_string(rr.termination) << " after " << rr.generations_run << " generations\n";
  os << "active gates:       " << rr.best_active_gates << " of " << rr.hp.n << "\n";
  os << "NAND2 equivalents:  " << format_fixed(rr.best_nand2, 1) << "\n";
  os << "best validation R:  " << format_fixed(rr.best_validation_fitness, 4) << "\n";
  os << "replacements:       " << rr.improving_replacements << " improving, " << rr.neutral_replacements
     << " neutral\n\n";
  os << "partition   rows  balanced_acc  accuracy\n";
  for (const auto& m : rr.metrics) {
    std::string name = m.partition;
    name.resize(10, ' ');
    std::string rows = std::to_string(m.rows);
    rows.insert(0, rows.size() < 5 ? 5 - rows.size() : 0, ' ');
    os << name << " " << rows << "  " << format_fixed(m.balanced_accuracy, 4) << "        "
       << format_fixed(m.accuracy, 4) << "\n";
  }
  os << "\nhyperparameters\n";
  os << "  lambda=" << rr.hp.lambda << " n=" << rr.hp.n << " p=" << format_double(rr.hp.mutation_rate())
     << " F=" << rr.hp.function_set_name << " gamma=" << format_double(rr.hp.gamma) << " kappa=" << rr.hp.kappa
     << " G=" << rr.hp.max_generations << " a=" << format_double(rr.hp.reg_weight)
     << " secondary=" << to_string(rr.hp.secondary) << "\n";
  for (const auto& w : rr.warnings) os << "warning: " << w << "\n";
  if (!ctx.config_lines.empty()) {
    os << "\nresolved config\n";
    for (const auto& l : ctx.config_lines) os << "  " << l << "\n";
  }
  return os.str();
}

}  // namespace tinyclf
