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

// Command-line front end. Subcommands: evolve, explore, evaluate, emit, faults, encode-stats.

#include <algorithm>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tinyclf.hpp"

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t comma = std::min(s.find(',', pos), s.size());
    if (comma > pos) out.push_back(s.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return out;
}

template <class T>
std::vector<T> parse_counts(const std::string& s, const char* flag) {
  std::vector<T> out;
  for (const auto& item : split_list(s)) {
    const auto v = tinyclf::RunConfig::flag_value("seed", item);
    if (!v.is_number_unsigned()) throw tinyclf::InputError(std::string(flag) + " expects integers");
    out.push_back(static_cast<T>(v.get<std::uint64_t>()));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tinyclf: evolve tiny logic-circuit classifiers from tabular data"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::map<std::string, std::string> overrides;
  app.add_option("--config", config_path, "JSON run config; flags override its keys");
  for (const auto& f : tinyclf::RunConfig::fields()) {
    std::string key = f.key;
    std::string names = "--" + key;
    std::string dashed = key;
    std::replace(dashed.begin(), dashed.end(), '_', '-');
    if (dashed != key) names += ",--" + dashed;
    app.add_option_function<std::string>(
        names, [key = std::string(f.key), &overrides](const std::string& v) { overrides[key] = v; },
        std::string("override config key '") + f.key + "'");
  }

  auto* evolve = app.add_subcommand("evolve", "evolve a classifier and write all artifacts");

  auto* explore = app.add_subcommand("explore", "sweep a hyperparameter grid into a long-form CSV");
  std::string grid_n, grid_f, grid_kappa, grid_g, grid_strategy, grid_bits, csv_path = "explore.csv";
  std::size_t seeds = 5;
  explore->add_option("--grid-n", grid_n, "comma-separated gate budgets");
  explore->add_option("--grid-F", grid_f, "comma-separated function sets (full, nand)");
  explore->add_option("--grid-kappa", grid_kappa, "comma-separated stall windows");
  explore->add_option("--grid-G", grid_g, "comma-separated generation caps");
  explore->add_option("--grid-strategy", grid_strategy, "comma-separated encoding strategies");
  explore->add_option("--grid-bits", grid_bits, "comma-separated bits per input");
  explore->add_option("--seeds", seeds, "seeds per cell (seed, seed+1, ...)");
  explore->add_option("--csv", csv_path, "output CSV (appended, resumable)");

  std::string circuit_path, encoder_path, partition = "train", format = "verilog", out_path, module = "tiny_classifier";
  auto* evaluate = app.add_subcommand("evaluate", "score a saved circuit on a dataset");
  evaluate->add_option("--circuit", circuit_path)->required();
  evaluate->add_option("--encoder", encoder_path)->required();

  auto* emit = app.add_subcommand("emit", "render a saved circuit as verilog, dot or json");
  emit->add_option("--circuit", circuit_path)->required();
  emit->add_option("--format", format, "verilog | dot | json");
  emit->add_option("-o,--output", out_path, "output file (default stdout)");
  emit->add_option("--module", module, "Verilog module name");

  auto* faults = app.add_subcommand("faults", "single stuck-at fault table as CSV");
  faults->add_option("--circuit", circuit_path)->required();
  faults->add_option("--encoder", encoder_path)->required();
  faults->add_option("--partition", partition, "train | validation | test");
  faults->add_option("-o,--output", out_path, "output file (default stdout)");

  auto* stats = app.add_subcommand("encode-stats", "show fitted encoder thresholds and bucket occupancy");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : tinyclf::kInputError;
  }

  tinyclf::RunConfig config;
  const int loaded = tinyclf::guarded(std::cerr, [&] {
    nlohmann::json j = config_path.empty() ? nlohmann::json::object()
                                           : nlohmann::json::parse(tinyclf::read_file(config_path), nullptr, false);
    if (j.is_discarded()) throw tinyclf::InputError("config " + config_path + " is not valid JSON");
    for (const auto& [key, value] : overrides) j[key] = tinyclf::RunConfig::flag_value(key, value);
    config = tinyclf::RunConfig::from_json(j);
    return 0;
  });
  if (loaded != 0) return loaded;

  if (*evolve) return tinyclf::cmd_evolve(config);
  if (*explore) {
    tinyclf::ExploreGrid grid;
    const int parsed = tinyclf::guarded(std::cerr, [&] {
      grid.n = parse_counts<std::size_t>(grid_n, "--grid-n");
      grid.function_set = split_list(grid_f);
      grid.kappa = parse_counts<std::size_t>(grid_kappa, "--grid-kappa");
      grid.max_generations = parse_counts<std::size_t>(grid_g, "--grid-G");
      grid.strategy = split_list(grid_strategy);
      grid.bits = parse_counts<unsigned>(grid_bits, "--grid-bits");
      grid.seeds = seeds;
      return 0;
    });
    if (parsed != 0) return parsed;
    return tinyclf::cmd_explore(config, grid, csv_path);
  }
  if (*evaluate) return tinyclf::cmd_evaluate(circuit_path, encoder_path, config);
  if (*emit) return tinyclf::cmd_emit(circuit_path, format, out_path, module);
  if (*faults) return tinyclf::cmd_faults(circuit_path, encoder_path, config, partition, out_path);
  if (*stats) return tinyclf::cmd_encode_stats(config);
  return tinyclf::kInternal;
}
