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

/// @file fitness.hpp
/// @brief Classification metrics, the regularised fitness R = a*rho - (1-a)*X and the secondary
/// objectives (gate count, NAND2 area, stuck-at vulnerability).

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tinyclf/circuit.hpp"
#include "tinyclf/common.hpp"
#include "tinyclf/encoding.hpp"

namespace tinyclf {

enum class AbsentClassPolicy {
  exclude,     // classes with no support drop out of the mean
  zero_recall  // they count as recall 0
};

enum class Secondary { none, gate_count, nand2, stuck_at };

inline std::string to_string(Secondary s) {
  switch (s) {
    case Secondary::none: return "none";
    case Secondary::gate_count: return "gate_count";
    case Secondary::nand2: return "nand2";
    case Secondary::stuck_at: return "stuck_at";
  }
  return "?";
}

inline Secondary parse_secondary(std::string_view s) {
  if (s == "none") return Secondary::none;
  if (s == "gate_count") return Secondary::gate_count;
  if (s == "nand2") return Secondary::nand2;
  if (s == "stuck_at") return Secondary::stuck_at;
  throw InputError("unknown secondary objective '" + std::string(s) + "'");
}

struct ConfusionMatrix {
  std::size_t n_classes = 0;
  std::vector<std::size_t> counts;     // truth-major: counts[t * n + p]
  std::vector<std::size_t> unmatched;  // per truth class, predictions rejected by the decoder

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t n) : n_classes(n), counts(n * n, 0), unmatched(n, 0) {}

  std::size_t at(std::size_t truth, std::size_t pred) const { return counts[truth * n_classes + pred]; }

  std::size_t support(std::size_t truth) const {
    std::size_t s = unmatched[truth];
    for (std::size_t p = 0; p < n_classes; ++p) s += at(truth, p);
    return s;
  }

  std::size_t total() const {
    std::size_t s = 0;
    for (std::size_t t = 0; t < n_classes; ++t) s += support(t);
    return s;
  }

  double accuracy() const {
    const std::size_t n = total();
    if (n == 0) return 0.0;
    std::size_t correct = 0;
    for (std::size_t t = 0; t < n_classes; ++t) correct += at(t, t);
    return static_cast<double>(correct) / static_cast<double>(n);
  }

  double balanced_accuracy(AbsentClassPolicy policy = AbsentClassPolicy::exclude) const {
    double sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t t = 0; t < n_classes; ++t) {
      const std::size_t s = support(t);
      if (s == 0) {
        if (policy == AbsentClassPolicy::zero_recall) ++counted;
        continue;
      }
      sum += static_cast<double>(at(t, t)) / static_cast<double>(s);
      ++counted;
    }
    return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
  }
};

/// Predicted classes >= n_classes are treated as rejected outputs.
inline ConfusionMatrix confusion_matrix(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth,
                                        std::size_t n_classes) {
  if (predicted.size() != truth.size()) throw InputError("prediction and truth lengths differ");
  ConfusionMatrix cm(n_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= n_classes) throw InputError("truth label out of range");
    if (predicted[i] >= n_classes) {
      ++cm.unmatched[truth[i]];
    } else {
      ++cm.counts[truth[i] * n_classes + predicted[i]];
    }
  }
  return cm;
}

/// Mean per-class recall over the classes present in `truth`.
inline double balanced_accuracy(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth,
                                std::size_t n_classes, AbsentClassPolicy policy = AbsentClassPolicy::exclude) {
  if (truth.empty()) throw InputError("balanced accuracy of an empty prediction list");
  return confusion_matrix(predicted, truth, n_classes).balanced_accuracy(policy);
}

inline double regularized_fitness(double rho, double secondary, double a) { return a * rho - (1.0 - a) * secondary; }

/// Decodes each row's output bits to a class index.
inline std::vector<std::uint32_t> decode_rows(const BitMatrix& outputs, const OutputCodec& codec,
                                              DecodePolicy policy = DecodePolicy::nearest) {
  const auto table = codec.decode_table(policy);
  std::vector<std::uint32_t> codes(outputs.rows(), 0);
  for (std::size_t k = 0; k < outputs.cols(); ++k) {
    const auto col = outputs.column(k);
    for (std::size_t r = 0; r < outputs.rows(); ++r) {
      codes[r] = (codes[r] << 1) | static_cast<std::uint32_t>((col[r / 64] >> (r % 64)) & 1U);
    }
  }
  for (auto& c : codes) c = table[c];
  return codes;
}

inline std::vector<std::uint32_t> predict_classes(const CircuitGraph& g, const FunctionSet& fs,
                                                  const EncodedPartition& data, const OutputCodec& codec,
                                                  std::optional<StuckAtFault> fault = std::nullopt,
                                                  DecodePolicy policy = DecodePolicy::nearest) {
  return decode_rows(evaluate_batch(g, fs, data.inputs, fault), codec, policy);
}

/// Active gates over the genotype budget n.
inline double secondary_gate_count(const CircuitGraph& g, std::size_t n) {
  if (n == 0) return 0.0;
  return std::min(1.0, static_cast<double>(count_active_gates(g)) / static_cast<double>(n));
}

/// NAND2-equivalent area over the largest possible area (n gates of the heaviest type).
inline double secondary_nand2(const CircuitGraph& g, const FunctionSet& fs, std::size_t n) {
  const double denom = static_cast<double>(n) * fs.max_weight();
  if (denom <= 0.0) return 0.0;
  return std::clamp(nand2_equivalent(g, fs) / denom, 0.0, 1.0);
}

struct FaultOutcome {
  StuckAtFault fault;
  double baseline_rho = 0.0;
  double faulty_rho = 0.0;
  double delta() const { return baseline_rho - faulty_rho; }
};

struct FitnessOptions {
  double reg_weight = 1.0;  // a
  Secondary secondary = Secondary::none;
  std::size_t budget = 0;   // genotype size n used to normalise area objectives
  DecodePolicy decode = DecodePolicy::nearest;
  AbsentClassPolicy absent = AbsentClassPolicy::exclude;
};

/// Every single stuck-at fault on an active node, in node order, stuck-at-0 before stuck-at-1.
inline std::vector<FaultOutcome> fault_table(const CircuitGraph& g, const FunctionSet& fs, const EncodedPartition& data,
                                             const OutputCodec& codec, const FitnessOptions& opts = {}) {
  if (data.empty()) throw InputError("fault simulation needs a non-empty partition");
  const double base =
      confusion_matrix(predict_classes(g, fs, data, codec, std::nullopt, opts.decode), data.labels, codec.n_classes)
          .balanced_accuracy(opts.absent);
  const ActiveSet active = active_set(g);
  std::vector<FaultOutcome> out;
  out.reserve(2 * active.count);
  for (std::uint32_t j = 0; j < g.nodes.size(); ++j) {
    if (!active.contains(j)) continue;
    for (bool v : {false, true}) {
      const StuckAtFault f{j, v};
      const auto pred = predict_classes(g, fs, data, codec, f, opts.decode);
      out.push_back({f, base, confusion_matrix(pred, data.labels, codec.n_classes).balanced_accuracy(opts.absent)});
    }
  }
  return out;
}

/// Mean relative balanced-accuracy drop over all single stuck-at faults on active nodes.
inline double stuck_at_vulnerability(const CircuitGraph& g, const FunctionSet& fs, const EncodedPartition& data,
                                     const OutputCodec& codec, const FitnessOptions& opts = {}) {
  const auto faults = fault_table(g, fs, data, codec, opts);
  if (faults.empty()) return 0.0;
  const double base = faults.front().baseline_rho;
  if (base <= 0.0) return 0.0;
  double sum = 0.0;
  for (const auto& f : faults) sum += std::max(0.0, f.delta()) / base;
  return std::clamp(sum / static_cast<double>(faults.size()), 0.0, 1.0);
}

struct FitnessReport {
  double rho = 0.0;
  double accuracy = 0.0;
  double secondary = 0.0;
  double regularized = 0.0;
  ConfusionMatrix confusion;
};

inline FitnessReport evaluate_fitness(const CircuitGraph& g, const FunctionSet& fs, const EncodedPartition& data,
                                      const OutputCodec& codec, const FitnessOptions& opts = {}) {
  FitnessReport r;
  if (data.empty()) throw InputError("cannot evaluate fitness on an empty partition");
  r.confusion = confusion_matrix(predict_classes(g, fs, data, codec, std::nullopt, opts.decode), data.labels,
                                 codec.n_classes);
  r.rho = r.confusion.balanced_accuracy(opts.absent);
  r.accuracy = r.confusion.accuracy();
  switch (opts.secondary) {
    case Secondary::none: break;
    case Secondary::gate_count: r.secondary = secondary_gate_count(g, opts.budget); break;
    case Secondary::nand2: r.secondary = secondary_nand2(g, fs, opts.budget); break;
    case Secondary::stuck_at: r.secondary = stuck_at_vulnerability(g, fs, data, codec, opts); break;
  }
  r.regularized = regularized_fitness(r.rho, r.secondary, opts.reg_weight);
  return r;
}

}  // namespace tinyclf
