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

/// @file dataset.hpp
/// @brief CSV loading for tabular classification data and seeded train/validation/test splits.
///
/// Class tokens are indexed in order of first appearance in the file. Missing feature cells
/// (empty strings) are flagged and left for the encoder to impute; a missing label is an error.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "tinyclf/common.hpp"

namespace tinyclf {

struct FeatureColumn {
  std::string name;
  bool numeric = true;
  std::vector<double> values;        // valid when numeric
  std::vector<std::string> tokens;   // valid when categorical
  std::vector<std::uint8_t> missing;
};

struct RawDataset {
  std::vector<FeatureColumn> columns;
  std::vector<std::uint32_t> labels;
  std::vector<std::string> class_names;  // index -> token
  std::string label_name;

  std::size_t n_rows() const { return labels.size(); }
  std::size_t n_classes() const { return class_names.size(); }
  std::size_t n_features() const { return columns.size(); }
};

struct CsvOptions {
  char delimiter = ',';
  bool header = true;
  /// Column name, or a (possibly negative) integer index. Empty selects the last column.
  std::string label_column;
};

namespace detail {

inline std::vector<std::vector<std::string>> parse_csv_records(std::string_view text, char delim) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // Blank lines are skipped rather than treated as one-field records.
    if (!(record.size() == 1 && record.front().empty())) records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == delim) {
      end_field();
    } else if (c == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') continue;
      end_record();
      ++line;
    } else if (c == '\n') {
      end_record();
      ++line;
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) throw InputError("unterminated quoted field near line " + std::to_string(line));
  if (!field.empty() || !record.empty()) end_record();
  return records;
}

inline std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return c == ' ' || c == '\t'; };
  while (!s.empty() && ws(s.back())) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && ws(s[b])) ++b;
  return s.substr(b);
}

}  // namespace detail

/// Parses CSV text already in memory. See load_csv.
inline RawDataset parse_csv(std::string_view text, const CsvOptions& opts = {}) {
  auto records = detail::parse_csv_records(text, opts.delimiter);
  if (records.empty()) throw InputError("CSV contains no records");

  std::vector<std::string> names;
  std::size_t first_data = 0;
  const std::size_t width = records.front().size();
  if (opts.header) {
    for (auto& n : records.front()) names.push_back(detail::trim(n));
    first_data = 1;
  } else {
    for (std::size_t c = 0; c < width; ++c) names.push_back("f" + std::to_string(c));
  }
  if (width < 2) throw InputError("CSV needs at least one feature column and a label column");
  for (std::size_t r = first_data; r < records.size(); ++r) {
    if (records[r].size() != width) {
      throw InputError("ragged row " + std::to_string(r + 1) + ": expected " + std::to_string(width) +
                       " fields, got " + std::to_string(records[r].size()));
    }
  }
  if (records.size() == first_data) throw InputError("CSV has a header but no data rows");

  std::size_t label_idx = width - 1;
  if (!opts.label_column.empty()) {
    auto it = std::find(names.begin(), names.end(), opts.label_column);
    if (it != names.end()) {
      label_idx = static_cast<std::size_t>(it - names.begin());
    } else {
      long idx = 0;
      auto [ptr, ec] = std::from_chars(opts.label_column.data(),
                                       opts.label_column.data() + opts.label_column.size(), idx);
      if (ec != std::errc{} || ptr != opts.label_column.data() + opts.label_column.size()) {
        throw InputError("label column '" + opts.label_column + "' not found");
      }
      if (idx < 0) idx += static_cast<long>(width);
      if (idx < 0 || idx >= static_cast<long>(width)) {
        throw InputError("label column index " + opts.label_column + " out of range");
      }
      label_idx = static_cast<std::size_t>(idx);
    }
  }

  RawDataset ds;
  ds.label_name = names[label_idx];
  const std::size_t n_rows = records.size() - first_data;
  std::unordered_map<std::string, std::uint32_t> class_index;
  ds.labels.reserve(n_rows);
  for (std::size_t r = first_data; r < records.size(); ++r) {
    std::string tok = detail::trim(records[r][label_idx]);
    if (tok.empty()) throw InputError("missing label in row " + std::to_string(r + 1));
    auto [it, inserted] = class_index.try_emplace(tok, static_cast<std::uint32_t>(ds.class_names.size()));
    if (inserted) ds.class_names.push_back(tok);
    ds.labels.push_back(it->second);
  }
  if (ds.class_names.size() < 2) {
    throw InputError("label column '" + ds.label_name + "' has fewer than 2 distinct classes");
  }

  for (std::size_t c = 0; c < width; ++c) {
    if (c == label_idx) continue;
    FeatureColumn col;
    col.name = names[c];
    col.missing.resize(n_rows, 0);
    col.tokens.resize(n_rows);
    col.values.resize(n_rows, 0.0);
    bool numeric = true;
    for (std::size_t r = 0; r < n_rows; ++r) {
      std::string cell = detail::trim(records[r + first_data][c]);
      if (cell.empty()) {
        col.missing[r] = 1;
        continue;
      }
      if (numeric && !parse_double(cell, col.values[r])) numeric = false;
      col.tokens[r] = std::move(cell);
    }
    col.numeric = numeric;
    if (numeric) {
      col.tokens.clear();
    } else {
      col.values.clear();
    }
    ds.columns.push_back(std::move(col));
  }
  return ds;
}

/// Loads an RFC-4180 style CSV file. Columns are numeric when every non-missing cell parses as a
/// number, categorical otherwise.
inline RawDataset load_csv(const std::string& path, const CsvOptions& opts = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open dataset file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw InputError("failed reading dataset file: " + path);
  return parse_csv(buf.str(), opts);
}

struct SplitFractions {
  double train = 0.8;       // share of all rows kept out of the test partition
  double validation = 0.5;  // share of the non-test rows held out for validation
};

struct SplitDataset {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
  SplitFractions fractions;
  bool stratified = true;
};

namespace detail {

// Tolerant rounding so that e.g. (1 - 0.8) * 10 counts as exactly 2.
inline std::size_t ceil_count(double x) { return static_cast<std::size_t>(std::ceil(x - 1e-9)); }
inline std::size_t floor_count(double x) { return static_cast<std::size_t>(std::floor(x + 1e-9)); }

/// Largest-remainder apportionment of `total` items over groups proportional to `sizes`, each
/// group capped at caps[g]. Ties go to the lower group index.
inline std::vector<std::size_t> apportion(std::size_t total, const std::vector<std::size_t>& sizes,
                                          const std::vector<std::size_t>& caps) {
  const double n = static_cast<double>(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}));
  std::vector<std::size_t> out(sizes.size(), 0);
  std::vector<double> remainder(sizes.size(), 0.0);
  std::size_t assigned = 0;
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    double exact = n > 0 ? static_cast<double>(total) * static_cast<double>(sizes[g]) / n : 0.0;
    out[g] = std::min(floor_count(exact), caps[g]);
    remainder[g] = exact - static_cast<double>(out[g]);
    assigned += out[g];
  }
  std::vector<std::size_t> order(sizes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  while (assigned < total) {
    bool progressed = false;
    for (std::size_t g : order) {
      if (assigned == total) break;
      if (out[g] < caps[g]) {
        ++out[g];
        ++assigned;
        progressed = true;
      }
    }
    if (!progressed) break;
  }
  return out;
}

}  // namespace detail

/// Deterministic three-way split. The test partition receives ceil((1 - f_train) * n) rows; of
/// the remainder, validation receives floor(f_val * remainder). Stratified splits apportion each
/// partition's size over classes by largest remainder against the global class proportions.
inline SplitDataset split(const RawDataset& raw, SplitFractions fractions, std::uint64_t seed,
                          bool stratified = true) {
  if (!(fractions.train > 0.0 && fractions.train < 1.0)) {
    throw InputError("train fraction must lie in (0, 1)");
  }
  if (!(fractions.validation >= 0.0 && fractions.validation < 1.0)) {
    throw InputError("validation fraction must lie in [0, 1)");
  }
  const std::size_t n = raw.n_rows();
  const std::size_t n_test = std::min(n, detail::ceil_count((1.0 - fractions.train) * static_cast<double>(n)));
  const std::size_t n_val = detail::floor_count(fractions.validation * static_cast<double>(n - n_test));

  SplitDataset out;
  out.seed = seed;
  out.fractions = fractions;
  out.stratified = stratified;
  Rng rng = derive_stream(seed, 0, 0x5b17);

  if (!stratified) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    out.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
    out.validation.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test),
                          perm.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
    out.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), perm.end());
  } else {
    const std::size_t k = raw.n_classes();
    std::vector<std::vector<std::size_t>> by_class(k);
    for (std::size_t r = 0; r < n; ++r) by_class[raw.labels[r]].push_back(r);
    std::vector<std::size_t> sizes(k);
    for (std::size_t c = 0; c < k; ++c) {
      std::shuffle(by_class[c].begin(), by_class[c].end(), rng);
      sizes[c] = by_class[c].size();
    }
    auto test_counts = detail::apportion(n_test, sizes, sizes);
    std::vector<std::size_t> rest(k);
    for (std::size_t c = 0; c < k; ++c) rest[c] = sizes[c] - test_counts[c];
    auto val_counts = detail::apportion(n_val, sizes, rest);
    for (std::size_t c = 0; c < k; ++c) {
      const auto& rows = by_class[c];
      std::size_t t = test_counts[c];
      std::size_t v = val_counts[c];
      out.test.insert(out.test.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(t));
      out.validation.insert(out.validation.end(), rows.begin() + static_cast<std::ptrdiff_t>(t),
                            rows.begin() + static_cast<std::ptrdiff_t>(t + v));
      out.train.insert(out.train.end(), rows.begin() + static_cast<std::ptrdiff_t>(t + v), rows.end());
      if (t + v == rows.size() && rows.size() >= 3) {
        throw InputError("stratified split leaves class '" + raw.class_names[c] +
                         "' with no training rows");
      }
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.validation.begin(), out.validation.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

}  // namespace tinyclf
