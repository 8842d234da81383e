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

/// @file pipeline.hpp
/// @brief Run configuration and the command implementations behind the `tinyclf` CLI:
/// dataset -> encoding -> evolution -> emission, plus design-space sweeps.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tinyclf/circuit.hpp"
#include "tinyclf/common.hpp"
#include "tinyclf/dataset.hpp"
#include "tinyclf/emit.hpp"
#include "tinyclf/encoding.hpp"
#include "tinyclf/evolve.hpp"
#include "tinyclf/fitness.hpp"

namespace tinyclf {

enum ExitCode : int { kOk = 0, kInternal = 1, kInputError = 2, kConsistencyError = 3 };

/// Flat run configuration. Every key is also a `--key value` flag.
struct RunConfig {
  std::string dataset;
  std::string label_column;
  std::string delimiter = ",";
  bool header = true;

  std::string strategy = "quantiles";
  unsigned bits_per_input = 2;
  unsigned bits_per_output = 0;  // 0 = ceil(log2(classes))
  bool auto_encode = false;
  std::string decode = "nearest";

  double train_fraction = 0.8;
  double validation_fraction = 0.5;
  bool stratified = true;

  std::size_t n = 300;
  std::size_t lambda = 4;
  double p = 0.0;  // 0 = 1/n
  std::string function_set = "full";
  double gamma = 0.01;
  std::size_t kappa = 300;
  std::size_t max_generations = 8000;
  double reg_weight = 1.0;
  std::string secondary = "none";
  std::uint64_t seed = 1;
  std::size_t workers = 1;

  std::string out_dir = "out";
  std::string name = "tiny_classifier";
  bool emit_verilog = true;
  bool emit_dot = true;

  enum class Type { text, flag, count, real };
  struct Field {
    const char* key;
    Type type;
  };
  static const std::vector<Field>& fields() {
    static const std::vector<Field> f = {
        {"dataset", Type::text},          {"label_column", Type::text},    {"delimiter", Type::text},
        {"header", Type::flag},           {"strategy", Type::text},        {"bits_per_input", Type::count},
        {"bits_per_output", Type::count}, {"auto_encode", Type::flag},     {"decode", Type::text},
        {"train_fraction", Type::real},   {"validation_fraction", Type::real}, {"stratified", Type::flag},
        {"n", Type::count},               {"lambda", Type::count},         {"p", Type::real},
        {"function_set", Type::text},     {"gamma", Type::real},           {"kappa", Type::count},
        {"max_generations", Type::count}, {"reg_weight", Type::real},      {"secondary", Type::text},
        {"seed", Type::count},            {"workers", Type::count},        {"out_dir", Type::text},
        {"name", Type::text},             {"emit_verilog", Type::flag},    {"emit_dot", Type::flag},
    };
    return f;
  }

  /// Resolved config. `workers` is left out because it never changes any artifact.
  nlohmann::ordered_json to_json(bool include_workers = false) const {
    nlohmann::ordered_json j;
    j["dataset"] = dataset;
    j["label_column"] = label_column;
    j["delimiter"] = delimiter;
    j["header"] = header;
    j["strategy"] = strategy;
    j["bits_per_input"] = bits_per_input;
    j["bits_per_output"] = bits_per_output;
    j["auto_encode"] = auto_encode;
    j["decode"] = decode;
    j["train_fraction"] = train_fraction;
    j["validation_fraction"] = validation_fraction;
    j["stratified"] = stratified;
    j["n"] = n;
    j["lambda"] = lambda;
    j["p"] = p;
    j["function_set"] = function_set;
    j["gamma"] = gamma;
    j["kappa"] = kappa;
    j["max_generations"] = max_generations;
    j["reg_weight"] = reg_weight;
    j["secondary"] = secondary;
    j["seed"] = seed;
    if (include_workers) j["workers"] = workers;
    j["out_dir"] = out_dir;
    j["name"] = name;
    j["emit_verilog"] = emit_verilog;
    j["emit_dot"] = emit_dot;
    return j;
  }

  /// Overlays `j` onto the defaults; unknown keys and ill-typed values are rejected.
  static RunConfig from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InputError("config must be a JSON object");
    std::set<std::string> known;
    for (const auto& f : fields()) known.insert(f.key);
    for (const auto& [key, _] : j.items()) {
      if (!known.count(key)) throw InputError("unknown config key '" + key + "'");
    }
    RunConfig c;
    try {
      auto get = [&](const char* key, auto& dst) {
        if (j.contains(key)) dst = j.at(key).get<std::decay_t<decltype(dst)>>();
      };
      get("dataset", c.dataset);
      get("label_column", c.label_column);
      get("delimiter", c.delimiter);
      get("header", c.header);
      get("strategy", c.strategy);
      get("bits_per_input", c.bits_per_input);
      get("bits_per_output", c.bits_per_output);
      get("auto_encode", c.auto_encode);
      get("decode", c.decode);
      get("train_fraction", c.train_fraction);
      get("validation_fraction", c.validation_fraction);
      get("stratified", c.stratified);
      get("n", c.n);
      get("lambda", c.lambda);
      get("p", c.p);
      get("function_set", c.function_set);
      get("gamma", c.gamma);
      get("kappa", c.kappa);
      get("max_generations", c.max_generations);
      get("reg_weight", c.reg_weight);
      get("secondary", c.secondary);
      get("seed", c.seed);
      get("workers", c.workers);
      get("out_dir", c.out_dir);
      get("name", c.name);
      get("emit_verilog", c.emit_verilog);
      get("emit_dot", c.emit_dot);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("bad config value: ") + e.what());
    }
    c.check();
    return c;
  }

  /// Converts a flag's text to the JSON type of its key.
  static nlohmann::json flag_value(const std::string& key, const std::string& text) {
    for (const auto& f : fields()) {
      if (key != f.key) continue;
      switch (f.type) {
        case Type::text: return text;
        case Type::flag:
          if (text == "true" || text == "1" || text == "yes") return true;
          if (text == "false" || text == "0" || text == "no") return false;
          throw InputError("--" + key + " expects true/false, got '" + text + "'");
        case Type::count: {
          std::uint64_t v = 0;
          auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
          if (ec != std::errc{} || ptr != text.data() + text.size()) {
            throw InputError("--" + key + " expects a non-negative integer, got '" + text + "'");
          }
          return v;
        }
        case Type::real: {
          double v = 0;
          if (!parse_double(text, v)) throw InputError("--" + key + " expects a number, got '" + text + "'");
          return v;
        }
      }
    }
    throw InputError("unknown option --" + key);
  }

  void check() const {
    if (delimiter.size() != 1) throw InputError("delimiter must be a single character");
    parse_strategy(strategy);
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InputError("train_fraction must lie in (0, 1)");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
      throw InputError("validation_fraction must lie in [0, 1)");
    }
    if (bits_per_input < 1 || bits_per_input > 16) throw InputError("bits_per_input must lie in [1, 16]");
    if (decode != "nearest" && decode != "reject") throw InputError("decode must be 'nearest' or 'reject'");
    parse_secondary(secondary);
    FunctionSet::named(function_set);
    if (!is_identifier(name)) throw InputError("name must be a valid identifier, got '" + name + "'");
    hyperparameters().check();
  }

  Hyperparameters hyperparameters() const {
    Hyperparameters hp;
    hp.lambda = lambda;
    hp.n = n;
    if (p > 0.0) hp.p = p;
    hp.function_set = FunctionSet::named(function_set);
    hp.function_set_name = function_set;
    hp.gamma = gamma;
    hp.kappa = kappa;
    hp.max_generations = max_generations;
    hp.reg_weight = reg_weight;
    hp.secondary = parse_secondary(secondary);
    hp.seed = seed;
    hp.workers = workers;
    return hp;
  }

  CsvOptions csv_options() const { return {delimiter.front(), header, label_column}; }
  SplitFractions fractions() const { return {train_fraction, validation_fraction}; }
};

inline RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path);
  try {
    return RunConfig::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw InputError("config " + path + ": " + e.what());
  }
}

/// Runs `body`, mapping exceptions to exit codes and messages on `err`.
template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const ConsistencyError& e) {
    err << "error: " << e.what() << "\n";
    return kConsistencyError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("failed writing " + path.string());
}

/// Everything an evolve run produces, before it is written to disk.
struct EvolveResult {
  RunConfig config;  // with the encoding actually used
  RawDataset raw;
  SplitDataset split;
  FittedEncoder encoder;
  EncodedDataset data;
  RunReport report;
};

/// The eight (strategy, bits) pairs tried by auto-encoding.
inline std::vector<EncoderSpec> auto_encode_specs() {
  std::vector<EncoderSpec> out;
  for (auto s : {Strategy::quantization, Strategy::quantiles, Strategy::one_hot, Strategy::gray}) {
    for (unsigned b : {2U, 4U}) out.push_back({s, b});
  }
  return out;
}

inline std::optional<unsigned> output_bits_option(const RunConfig& c) {
  return c.bits_per_output == 0 ? std::nullopt : std::optional<unsigned>(c.bits_per_output);
}

/// Loads, splits, encodes and evolves. With auto_encode, every preset encoding is evolved and the
/// one with the best validation fitness is kept (earliest preset on ties).
inline EvolveResult evolve_pipeline(const RunConfig& config) {
  config.check();
  if (config.dataset.empty()) throw InputError("no dataset given (--dataset)");
  EvolveResult best;
  bool have = false;
  RawDataset raw = load_csv(config.dataset, config.csv_options());
  const SplitDataset sp = split(raw, config.fractions(), config.seed, config.stratified);
  const OutputCodec codec = make_output_codec(raw.n_classes(), output_bits_option(config));
  const Hyperparameters hp = config.hyperparameters();

  std::vector<EncoderSpec> specs;
  if (config.auto_encode) {
    specs = auto_encode_specs();
  } else {
    specs.push_back({parse_strategy(config.strategy), config.bits_per_input});
  }
  for (const auto& spec : specs) {
    FittedEncoder enc = fit_encoder(raw, sp.train, spec);
    EncodedDataset data = encode_dataset(enc, raw, sp, codec);
    RunReport rr = evolve(data, hp);
    for (const auto& w : enc.warnings) rr.warnings.push_back(w);
    if (!have || rr.best_validation_fitness > best.report.best_validation_fitness) {
      best.config = config;
      best.config.strategy = to_string(spec.strategy);
      best.config.bits_per_input = spec.bits_per_input;
      best.config.auto_encode = false;
      best.encoder = std::move(enc);
      best.data = std::move(data);
      best.report = std::move(rr);
      have = true;
    }
  }
  best.raw = std::move(raw);
  best.split = sp;
  return best;
}

inline std::vector<std::string> input_bit_labels(const FittedEncoder& enc) {
  std::vector<std::string> out;
  for (const auto& f : enc.features) {
    for (unsigned b = 0; b < enc.spec.bits_per_input; ++b) out.push_back(f.name + "[" + std::to_string(b) + "]");
  }
  return out;
}

inline std::string trace_csv(const RunReport& rr) {
  std::ostringstream os;
  os << "generation,parent_train_fitness,best_val_fitness,active_gates\n";
  for (const auto& t : rr.trace) {
    os << t.generation << "," << format_double(t.parent_train_fitness) << ","
       << format_double(t.best_validation_fitness) << "," << t.active_gates << "\n";
  }
  return os.str();
}

inline nlohmann::ordered_json run_report_json(const EvolveResult& r) {
  const auto& rr = r.report;
  nlohmann::ordered_json j;
  j["termination_reason"] = to_string(rr.termination);
  j["generations_run"] = rr.generations_run;
  j["best_validation_fitness"] = rr.best_validation_fitness;
  j["active_gates"] = rr.best_active_gates;
  j["nand2_equivalent"] = rr.best_nand2;
  j["improving_replacements"] = rr.improving_replacements;
  j["neutral_replacements"] = rr.neutral_replacements;
  j["input_bits"] = r.data.input_bits;
  j["output_bits"] = r.data.codec.bits;
  j["class_names"] = r.raw.class_names;
  auto metrics = nlohmann::ordered_json::array();
  for (const auto& m : rr.metrics) {
    metrics.push_back({{"partition", m.partition},
                       {"rows", m.rows},
                       {"balanced_accuracy", m.balanced_accuracy},
                       {"accuracy", m.accuracy}});
  }
  j["metrics"] = std::move(metrics);
  j["warnings"] = rr.warnings;
  j["seed"] = rr.hp.seed;
  j["hyperparameters"] = {{"lambda", rr.hp.lambda},   {"n", rr.hp.n},
                          {"p", rr.hp.mutation_rate()}, {"function_set", rr.hp.function_set_name},
                          {"gamma", rr.hp.gamma},     {"kappa", rr.hp.kappa},
                          {"max_generations", rr.hp.max_generations}, {"reg_weight", rr.hp.reg_weight},
                          {"secondary", to_string(rr.hp.secondary)}};
  j["config"] = r.config.to_json();
  return j;
}

inline std::vector<std::string> config_lines(const RunConfig& c) {
  std::vector<std::string> out;
  const auto j = c.to_json();
  for (const auto& [k, v] : j.items()) out.push_back(k + " = " + v.dump());
  return out;
}

/// Writes every artifact of an evolve run into config.out_dir.
inline void write_artifacts(const EvolveResult& r) {
  namespace fs = std::filesystem;
  const fs::path dir(r.config.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
  const std::string& name = r.config.name;
  const auto& fset = r.report.hp.function_set;

  write_file(dir / (name + ".circuit.json"), serialize(r.report.best, fset));
  write_file(dir / (name + ".encoder.json"),
             encoder_to_json(r.encoder, r.data.codec, r.raw.class_names).dump(2) + "\n");
  write_file(dir / (name + ".trace.csv"), trace_csv(r.report));
  write_file(dir / (name + ".config.json"), r.config.to_json().dump(2) + "\n");
  write_file(dir / (name + ".run.json"), run_report_json(r).dump(2) + "\n");
  if (r.config.emit_verilog) {
    VerilogOptions vo;
    vo.module_name = name;
    vo.include_port_comments = true;
    vo.input_labels = input_bit_labels(r.encoder);
    vo.header_comments = {"tinyclf classifier, seed " + std::to_string(r.config.seed) + ", encoding " +
                          r.config.strategy + "/" + std::to_string(r.config.bits_per_input)};
    write_file(dir / (name + ".v"), emit_verilog(r.report.best, fset, vo));
  }
  if (r.config.emit_dot) write_file(dir / (name + ".dot"), emit_dot(r.report.best, fset));
  ReportContext ctx;
  ctx.dataset = r.config.dataset;
  ctx.encoding = r.config.strategy + "/" + std::to_string(r.config.bits_per_input);
  ctx.input_bits = r.data.input_bits;
  ctx.output_bits = r.data.codec.bits;
  ctx.class_names = r.raw.class_names;
  ctx.config_lines = config_lines(r.config);
  write_file(dir / (name + ".report.txt"), emit_report(r.report, ctx));
}

inline double test_balanced_accuracy(const RunReport& rr) {
  for (const auto& m : rr.metrics) {
    if (m.partition == "test") return m.balanced_accuracy;
  }
  return 0.0;
}

inline int cmd_evolve(const RunConfig& config, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    const EvolveResult r = evolve_pipeline(config);
    write_artifacts(r);
    for (const auto& w : r.report.warnings) err << "warning: " << w << "\n";
    out << "encoding " << r.config.strategy << "/" << r.config.bits_per_input << ", " << r.report.best_active_gates
        << " active gates, " << to_string(r.report.termination) << " after " << r.report.generations_run
        << " generations\n";
    out << "test balanced accuracy: " << format_fixed(test_balanced_accuracy(r.report), 4) << "\n";
    return int{kOk};
  });
}

// ---------------------------------------------------------------------------------------------
// Design-space sweeps

struct ExploreGrid {
  std::vector<std::size_t> n;
  std::vector<std::string> function_set;
  std::vector<std::size_t> kappa;
  std::vector<std::size_t> max_generations;
  std::vector<std::string> strategy;
  std::vector<unsigned> bits;
  std::size_t seeds = 5;

  /// Missing axes fall back to the base config's single value.
  void fill_from(const RunConfig& c, bool auto_encode) {
    if (n.empty()) n = {c.n};
    if (function_set.empty()) function_set = {c.function_set};
    if (kappa.empty()) kappa = {c.kappa};
    if (max_generations.empty()) max_generations = {c.max_generations};
    if (auto_encode) {
      strategy = {"quantization", "quantiles", "one_hot", "gray"};
      bits = {2, 4};
    }
    if (strategy.empty()) strategy = {c.strategy};
    if (bits.empty()) bits = {c.bits_per_input};
  }

  std::size_t cells() const {
    return n.size() * function_set.size() * kappa.size() * max_generations.size() * strategy.size() * bits.size() *
           seeds;
  }
};

inline constexpr const char* kExploreHeader =
    "dataset,n,F,kappa,G,strategy,bits,seed,test_balanced_accuracy,active_gates,generations,status";

/// Runs the Cartesian product of the grid, appending one CSV row per cell. Cells already present
/// in the CSV are skipped, so an interrupted sweep can be resumed.
inline int cmd_explore(const RunConfig& base, ExploreGrid grid, const std::string& csv_path,
                       std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    base.check();
    if (base.dataset.empty()) throw InputError("no dataset given (--dataset)");
    grid.fill_from(base, base.auto_encode);
    if (grid.cells() == 0) throw InputError("explore grid is empty");

    std::set<std::string> done;
    bool need_header = true;
    if (std::filesystem::exists(csv_path)) {
      std::ifstream in(csv_path);
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line == kExploreHeader) {
          need_header = false;
          continue;
        }
        // Key = the first eight columns.
        std::size_t pos = 0;
        for (int k = 0; k < 8 && pos != std::string::npos; ++k) pos = line.find(',', pos + 1);
        if (pos != std::string::npos) done.insert(line.substr(0, pos));
      }
    }
    std::ofstream csv(csv_path, std::ios::app);
    if (!csv) throw InputError("cannot open " + csv_path);
    if (need_header) csv << kExploreHeader << "\n";

    const RawDataset raw = load_csv(base.dataset, base.csv_options());
    const std::string dataset_name = std::filesystem::path(base.dataset).stem().string();
    const OutputCodec codec = make_output_codec(raw.n_classes(), output_bits_option(base));
    std::size_t ran = 0;
    std::size_t skipped = 0;
    for (auto n : grid.n)
      for (const auto& fset : grid.function_set)
        for (auto kappa : grid.kappa)
          for (auto gmax : grid.max_generations)
            for (const auto& strategy : grid.strategy)
              for (auto bits : grid.bits)
                for (std::size_t s = 0; s < grid.seeds; ++s) {
                  const std::uint64_t seed = base.seed + s;
                  std::ostringstream key;
                  key << dataset_name << "," << n << "," << fset << "," << kappa << "," << gmax << "," << strategy
                      << "," << bits << "," << seed;
                  if (done.count(key.str())) {
                    ++skipped;
                    continue;
                  }
                  std::string row;
                  try {
                    RunConfig c = base;
                    c.n = n;
                    c.function_set = fset;
                    c.kappa = kappa;
                    c.max_generations = gmax;
                    c.strategy = strategy;
                    c.bits_per_input = bits;
                    c.seed = seed;
                    c.check();
                    const SplitDataset sp = split(raw, c.fractions(), seed, c.stratified);
                    const FittedEncoder enc = fit_encoder(raw, sp.train, {parse_strategy(strategy), bits});
                    const EncodedDataset data = encode_dataset(enc, raw, sp, codec);
                    const RunReport rr = evolve(data, c.hyperparameters());
                    row = key.str() + "," + format_double(test_balanced_accuracy(rr)) + "," +
                          std::to_string(rr.best_active_gates) + "," + std::to_string(rr.generations_run) + ",ok";
                  } catch (const std::exception& e) {
                    std::string msg = e.what();
                    std::replace(msg.begin(), msg.end(), ',', ';');
                    std::replace(msg.begin(), msg.end(), '\n', ' ');
                    row = key.str() + ",,,,error: " + msg;
                  }
                  csv << row << "\n";
                  csv.flush();
                  done.insert(key.str());
                  ++ran;
                }
    out << "explore: " << ran << " cells run, " << skipped << " already present in " << csv_path << "\n";
    return int{kOk};
  });
}

// ---------------------------------------------------------------------------------------------
// Saved-artifact commands

/// Maps dataset labels onto the encoder's class order; labels the encoder never saw are an error.
inline void remap_labels(RawDataset& raw, const std::vector<std::string>& class_names) {
  if (class_names.empty()) return;
  std::vector<std::uint32_t> map(raw.class_names.size());
  for (std::size_t c = 0; c < raw.class_names.size(); ++c) {
    auto it = std::find(class_names.begin(), class_names.end(), raw.class_names[c]);
    if (it == class_names.end()) throw ConsistencyError("label '" + raw.class_names[c] + "' unknown to the encoder");
    map[c] = static_cast<std::uint32_t>(it - class_names.begin());
  }
  for (auto& l : raw.labels) l = map[l];
  raw.class_names = class_names;
}

struct LoadedArtifacts {
  LoadedCircuit circuit;
  LoadedEncoder encoder;
  RawDataset raw;
  SplitDataset split;
  EncodedDataset data;
};

inline void check_widths(const CircuitGraph& g, const LoadedEncoder& enc) {
  const std::size_t in_bits = enc.encoder.total_bits();
  if (g.inputs != in_bits || g.outputs.size() != enc.codec.bits) {
    throw ConsistencyError("circuit is " + std::to_string(g.inputs) + " -> " + std::to_string(g.outputs.size()) +
                           " bits but encoder is " + std::to_string(in_bits) + " -> " +
                           std::to_string(enc.codec.bits) + " bits");
  }
}

inline LoadedArtifacts load_artifacts(const std::string& circuit_path, const std::string& encoder_path,
                                      const RunConfig& config) {
  LoadedArtifacts a;
  a.circuit = deserialize(read_file(circuit_path));
  try {
    a.encoder = encoder_from_json(nlohmann::json::parse(read_file(encoder_path)));
  } catch (const nlohmann::json::exception& e) {
    throw InputError("encoder " + encoder_path + ": " + e.what());
  }
  check_widths(a.circuit.graph, a.encoder);
  if (config.dataset.empty()) throw InputError("no dataset given (--dataset)");
  a.raw = load_csv(config.dataset, config.csv_options());
  remap_labels(a.raw, a.encoder.class_names);
  a.split = split(a.raw, config.fractions(), config.seed, config.stratified);
  a.data = encode_dataset(a.encoder.encoder, a.raw, a.split, a.encoder.codec);
  return a;
}

inline const EncodedPartition& partition_by_name(const EncodedDataset& d, const std::string& name) {
  if (name == "train") return d.train;
  if (name == "validation") return d.validation;
  if (name == "test") return d.test;
  throw InputError("unknown partition '" + name + "' (train, validation, test)");
}

inline int cmd_evaluate(const std::string& circuit_path, const std::string& encoder_path, const RunConfig& config,
                        std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    const auto a = load_artifacts(circuit_path, encoder_path, config);
    FitnessOptions opts = config.hyperparameters().fitness_options();
    opts.budget = a.circuit.graph.size();
    opts.decode = config.decode == "reject" ? DecodePolicy::reject : DecodePolicy::nearest;
    for (const char* name : {"train", "validation", "test"}) {
      const auto& part = partition_by_name(a.data, name);
      if (part.empty()) continue;
      const auto rep = evaluate_fitness(a.circuit.graph, a.circuit.functions, part, a.encoder.codec, opts);
      out << name << ": rows=" << part.size() << " balanced_accuracy=" << format_fixed(rep.rho, 4)
          << " accuracy=" << format_fixed(rep.accuracy, 4) << " secondary=" << format_fixed(rep.secondary, 4)
          << " R=" << format_fixed(rep.regularized, 4) << "\n";
      out << "  confusion (rows = truth):\n";
      for (std::size_t t = 0; t < rep.confusion.n_classes; ++t) {
        out << "   ";
        for (std::size_t p = 0; p < rep.confusion.n_classes; ++p) out << " " << rep.confusion.at(t, p);
        if (rep.confusion.unmatched[t]) out << "  (+" << rep.confusion.unmatched[t] << " rejected)";
        out << "\n";
      }
    }
    out << "active gates: " << count_active_gates(a.circuit.graph)
        << ", NAND2 equivalents: " << format_fixed(nand2_equivalent(a.circuit.graph, a.circuit.functions), 1) << "\n";
    return int{kOk};
  });
}

/// format: verilog | dot | json. Empty out_path writes to `out`.
inline int cmd_emit(const std::string& circuit_path, const std::string& format, const std::string& out_path,
                    const std::string& module_name, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    const auto c = deserialize(read_file(circuit_path));
    std::string text;
    if (format == "verilog" || format == "v") {
      VerilogOptions vo;
      vo.module_name = module_name;
      text = emit_verilog(c.graph, c.functions, vo);
    } else if (format == "dot") {
      text = emit_dot(c.graph, c.functions);
    } else if (format == "json") {
      text = serialize(c.graph, c.functions);
    } else {
      throw InputError("unknown emit format '" + format + "' (verilog, dot, json)");
    }
    if (out_path.empty()) {
      out << text;
    } else {
      write_file(out_path, text);
    }
    return int{kOk};
  });
}

inline std::string fault_csv(const std::vector<FaultOutcome>& faults) {
  std::ostringstream os;
  os << "node_id,stuck_value,baseline_rho,faulty_rho,delta\n";
  for (const auto& f : faults) {
    os << f.fault.node << "," << (f.fault.value ? 1 : 0) << "," << format_double(f.baseline_rho) << ","
       << format_double(f.faulty_rho) << "," << format_double(f.delta()) << "\n";
  }
  return os.str();
}

inline int cmd_faults(const std::string& circuit_path, const std::string& encoder_path, const RunConfig& config,
                      const std::string& partition, const std::string& out_path, std::ostream& out = std::cout,
                      std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    const auto a = load_artifacts(circuit_path, encoder_path, config);
    const auto& part = partition_by_name(a.data, partition);
    const auto faults = fault_table(a.circuit.graph, a.circuit.functions, part, a.encoder.codec);
    const std::string text = fault_csv(faults);
    if (out_path.empty()) {
      out << text;
    } else {
      write_file(out_path, text);
    }
    return int{kOk};
  });
}

inline int cmd_encode_stats(const RunConfig& config, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    config.check();
    if (config.dataset.empty()) throw InputError("no dataset given (--dataset)");
    const RawDataset raw = load_csv(config.dataset, config.csv_options());
    const SplitDataset sp = split(raw, config.fractions(), config.seed, config.stratified);
    const FittedEncoder enc = fit_encoder(raw, sp.train, {parse_strategy(config.strategy), config.bits_per_input});
    const OutputCodec codec = make_output_codec(raw.n_classes(), output_bits_option(config));
    out << "rows=" << raw.n_rows() << " classes=" << raw.n_classes() << " features=" << raw.n_features()
        << " (train " << sp.train.size() << ", validation " << sp.validation.size() << ", test " << sp.test.size()
        << ")\n";
    out << "encoding " << config.strategy << "/" << config.bits_per_input << ": input bits=" << enc.total_bits()
        << ", output bits=" << codec.bits << "\n";
    const std::size_t buckets = enc.spec.bucket_count();
    for (std::size_t f = 0; f < enc.features.size(); ++f) {
      const auto& fe = enc.features[f];
      std::vector<std::size_t> occupancy(buckets, 0);
      for (auto r : sp.train) {
        const auto& col = raw.columns[f];
        if (fe.degenerate) {
          ++occupancy[0];
        } else if (fe.numeric) {
          ++occupancy[fe.numeric_bucket(col.missing[r] ? fe.impute_value : col.values[r])];
        } else {
          ++occupancy[fe.category_bucket(col.missing[r] ? fe.impute_category : col.tokens[r])];
        }
      }
      out << "  " << fe.name << " (" << (fe.numeric ? "numeric" : "categorical") << ")";
      if (fe.degenerate) out << " constant";
      if (fe.numeric && !fe.degenerate) {
        out << " thresholds:";
        for (double t : fe.thresholds) out << " " << format_double(t);
      }
      out << " train occupancy:";
      for (auto o : occupancy) out << " " << o;
      out << "\n";
    }
    for (const auto& w : enc.warnings) out << "warning: " << w << "\n";
    return int{kOk};
  });
}

}  // namespace tinyclf
