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

/// @file encoding.hpp
/// @brief Per-feature binarizers, the class output codec and the bit-packed encoded dataset.
///
/// Every strategy is a (bucketer, codec) pair:
///
///   quantization -> equal-width buckets, binary code, 2^b buckets
///   quantiles    -> equal-frequency buckets, binary code, 2^b buckets
///   gray         -> equal-width buckets, reflected Gray code, 2^b buckets
///   one_hot      -> equal-width buckets, one-hot code, b buckets
///
/// Bits are laid out most-significant first within each feature, features in column order.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "tinyclf/common.hpp"
#include "tinyclf/dataset.hpp"

namespace tinyclf {

enum class Strategy { quantization, quantiles, one_hot, gray };

inline std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::quantization: return "quantization";
    case Strategy::quantiles: return "quantiles";
    case Strategy::one_hot: return "one_hot";
    case Strategy::gray: return "gray";
  }
  return "?";
}

inline Strategy parse_strategy(std::string_view s) {
  if (s == "quantization") return Strategy::quantization;
  if (s == "quantiles") return Strategy::quantiles;
  if (s == "one_hot" || s == "one-hot" || s == "onehot") return Strategy::one_hot;
  if (s == "gray") return Strategy::gray;
  throw InputError("unknown encoding strategy '" + std::string(s) + "'");
}

struct EncoderSpec {
  Strategy strategy = Strategy::quantiles;
  unsigned bits_per_input = 2;

  std::size_t bucket_count() const {
    return strategy == Strategy::one_hot ? bits_per_input : (std::size_t{1} << bits_per_input);
  }
};

/// Writes the code of bucket k into out[0..b), most significant bit first.
inline void encode_bucket(std::size_t k, Strategy strategy, unsigned b, std::span<std::uint8_t> out) {
  if (strategy == Strategy::one_hot) {
    for (unsigned i = 0; i < b; ++i) out[i] = (i == k) ? 1 : 0;
    return;
  }
  std::size_t code = strategy == Strategy::gray ? (k ^ (k >> 1)) : k;
  for (unsigned i = 0; i < b; ++i) out[i] = static_cast<std::uint8_t>((code >> (b - 1 - i)) & 1U);
}

/// Empirical quantile of sorted data by linear interpolation between order statistics.
inline double empirical_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct FeatureEncoder {
  std::string name;
  bool numeric = true;
  /// Ascending thresholds; bucket(v) = number of thresholds strictly below v.
  std::vector<double> thresholds;
  /// Categories in training-frequency rank order with their bucket.
  std::vector<std::pair<std::string, std::uint32_t>> category_map;
  double impute_value = 0.0;
  std::string impute_category;
  /// Constant (or all-missing) numeric feature: every value encodes as all zeros.
  bool degenerate = false;

  std::size_t numeric_bucket(double v) const {
    return static_cast<std::size_t>(std::lower_bound(thresholds.begin(), thresholds.end(), v) - thresholds.begin());
  }

  std::size_t category_bucket(const std::string& token) const {
    for (const auto& [cat, bucket] : category_map) {
      if (cat == token) return bucket;
    }
    for (const auto& [cat, bucket] : category_map) {
      if (cat == impute_category) return bucket;
    }
    return 0;
  }
};

struct FittedEncoder {
  EncoderSpec spec;
  std::vector<FeatureEncoder> features;
  std::vector<std::string> warnings;

  std::size_t bits_per_feature() const { return spec.bits_per_input; }
  std::size_t total_bits() const { return features.size() * spec.bits_per_input; }

  /// Encodes one row given as text cells (empty cell = missing), one per feature.
  std::vector<std::uint8_t> encode_row(std::span<const std::string> cells) const {
    if (cells.size() != features.size()) {
      throw InputError("row has " + std::to_string(cells.size()) + " cells, encoder expects " +
                       std::to_string(features.size()));
    }
    std::vector<std::uint8_t> bits(total_bits(), 0);
    for (std::size_t f = 0; f < features.size(); ++f) {
      const auto& fe = features[f];
      std::span<std::uint8_t> slot(bits.data() + f * spec.bits_per_input, spec.bits_per_input);
      if (fe.degenerate) continue;
      std::size_t bucket = 0;
      if (fe.numeric) {
        double v = fe.impute_value;
        if (!cells[f].empty() && !parse_double(cells[f], v)) v = fe.impute_value;
        bucket = fe.numeric_bucket(v);
      } else {
        bucket = fe.category_bucket(cells[f].empty() ? fe.impute_category : cells[f]);
      }
      encode_bucket(bucket, spec.strategy, spec.bits_per_input, slot);
    }
    return bits;
  }

  /// Encodes row r of a dataset whose feature columns match this encoder.
  std::vector<std::uint8_t> encode_row(const RawDataset& raw, std::size_t r) const {
    std::vector<std::string> cells(features.size());
    for (std::size_t f = 0; f < features.size(); ++f) {
      const auto& col = raw.columns[f];
      if (col.missing[r]) continue;
      cells[f] = col.numeric ? format_double(col.values[r]) : col.tokens[r];
    }
    return encode_row(cells);
  }
};

/// Fits binarizers on the given training rows only.
inline FittedEncoder fit_encoder(const RawDataset& raw, std::span<const std::size_t> train_rows,
                                 EncoderSpec spec) {
  if (train_rows.empty()) throw InputError("cannot fit encoder on an empty training slice");
  if (spec.bits_per_input < 1 || spec.bits_per_input > 16) {
    throw InputError("bits_per_input must lie in [1, 16]");
  }
  FittedEncoder enc;
  enc.spec = spec;
  const std::size_t buckets = spec.bucket_count();
  for (const auto& col : raw.columns) {
    FeatureEncoder fe;
    fe.name = col.name;
    fe.numeric = col.numeric;
    if (col.numeric) {
      std::vector<double> vals;
      vals.reserve(train_rows.size());
      for (std::size_t r : train_rows) {
        if (!col.missing[r]) vals.push_back(col.values[r]);
      }
      std::sort(vals.begin(), vals.end());
      if (vals.empty() || vals.front() == vals.back()) {
        fe.degenerate = true;
        fe.impute_value = vals.empty() ? 0.0 : vals.front();
        enc.warnings.push_back("feature '" + col.name + "' is constant on the training rows; encoded as all zeros");
        enc.features.push_back(std::move(fe));
        continue;
      }
      fe.impute_value = empirical_quantile(vals, 0.5);
      const double lo = vals.front();
      const double hi = vals.back();
      for (std::size_t k = 1; k < buckets; ++k) {
        const double q = static_cast<double>(k) / static_cast<double>(buckets);
        double t = spec.strategy == Strategy::quantiles ? empirical_quantile(vals, q) : lo + q * (hi - lo);
        // Duplicate quantiles are nudged upward so thresholds stay strictly ascending; the bucket
        // between them is empty, exactly as with a repeated threshold.
        if (!fe.thresholds.empty() && t <= fe.thresholds.back()) {
          t = std::nextafter(fe.thresholds.back(), std::numeric_limits<double>::infinity());
        }
        fe.thresholds.push_back(t);
      }
    } else {
      std::vector<std::string> order;
      std::unordered_map<std::string, std::size_t> counts;
      for (std::size_t r : train_rows) {
        if (col.missing[r]) continue;
        auto [it, inserted] = counts.try_emplace(col.tokens[r], 0);
        if (inserted) order.push_back(col.tokens[r]);
        ++it->second;
      }
      std::stable_sort(order.begin(), order.end(),
                       [&](const std::string& a, const std::string& b) { return counts[a] > counts[b]; });
      for (std::size_t rank = 0; rank < order.size(); ++rank) {
        fe.category_map.emplace_back(order[rank], static_cast<std::uint32_t>(rank % buckets));
      }
      if (!order.empty()) fe.impute_category = order.front();
    }
    enc.features.push_back(std::move(fe));
  }
  return enc;
}

enum class DecodePolicy {
  nearest,  // invalid codes decode to the Hamming-nearest class, lowest index on ties
  reject,   // invalid codes never match any class
};

struct OutputCodec {
  std::size_t n_classes = 2;
  unsigned bits = 1;
  std::vector<std::uint32_t> codes;  // class -> code, MSB-first over `bits`

  /// Class for an integer code, or n_classes when rejected.
  std::uint32_t decode_code(std::uint32_t code, DecodePolicy policy = DecodePolicy::nearest) const {
    std::uint32_t best = static_cast<std::uint32_t>(n_classes);
    int best_dist = std::numeric_limits<int>::max();
    for (std::size_t c = 0; c < n_classes; ++c) {
      int d = std::popcount(code ^ codes[c]);
      if (d == 0) return static_cast<std::uint32_t>(c);
      if (d < best_dist) {
        best_dist = d;
        best = static_cast<std::uint32_t>(c);
      }
    }
    return policy == DecodePolicy::nearest ? best : static_cast<std::uint32_t>(n_classes);
  }

  /// Lookup table over all 2^bits codes.
  std::vector<std::uint32_t> decode_table(DecodePolicy policy = DecodePolicy::nearest) const {
    std::vector<std::uint32_t> table(std::size_t{1} << bits);
    for (std::size_t code = 0; code < table.size(); ++code) {
      table[code] = decode_code(static_cast<std::uint32_t>(code), policy);
    }
    return table;
  }

  std::vector<std::uint8_t> code_bits(std::uint32_t cls) const {
    std::vector<std::uint8_t> out(bits);
    for (unsigned i = 0; i < bits; ++i) out[i] = (codes[cls] >> (bits - 1 - i)) & 1U;
    return out;
  }
};

inline OutputCodec make_output_codec(std::size_t n_classes, std::optional<unsigned> bits_per_output = {}) {
  if (n_classes < 1) throw InputError("output codec needs at least one class");
  const unsigned min_bits = std::max(1U, ceil_log2(n_classes));
  if (bits_per_output && *bits_per_output < min_bits) {
    throw InputError("bits_per_output " + std::to_string(*bits_per_output) + " cannot encode " +
                     std::to_string(n_classes) + " classes (need " + std::to_string(min_bits) + ")");
  }
  OutputCodec codec;
  codec.n_classes = n_classes;
  codec.bits = bits_per_output.value_or(min_bits);
  if (codec.bits > 24) throw InputError("bits_per_output must not exceed 24");
  for (std::size_t c = 0; c < n_classes; ++c) codec.codes.push_back(static_cast<std::uint32_t>(c));
  return codec;
}

/// Decodes an output bit vector (MSB first) to a class index.
inline std::uint32_t decode_prediction(std::span<const std::uint8_t> bits, const OutputCodec& codec,
                                       DecodePolicy policy = DecodePolicy::nearest) {
  std::uint32_t code = 0;
  for (auto b : bits) code = (code << 1) | (b & 1U);
  return codec.decode_code(code, policy);
}

/// Column-major bit matrix, each column packed 64 rows per word.
class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), words_((rows + 63) / 64), data_(cols * words_, 0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t words_per_column() const { return words_; }

  bool get(std::size_t r, std::size_t c) const { return (data_[c * words_ + r / 64] >> (r % 64)) & 1U; }
  void set(std::size_t r, std::size_t c, bool v) {
    auto& w = data_[c * words_ + r / 64];
    const std::uint64_t m = std::uint64_t{1} << (r % 64);
    w = v ? (w | m) : (w & ~m);
  }

  std::span<const std::uint64_t> column(std::size_t c) const { return {data_.data() + c * words_, words_}; }
  std::span<std::uint64_t> column(std::size_t c) { return {data_.data() + c * words_, words_}; }

  std::vector<std::uint8_t> row(std::size_t r) const {
    std::vector<std::uint8_t> out(cols_);
    for (std::size_t c = 0; c < cols_; ++c) out[c] = get(r, c);
    return out;
  }

  /// Mask of valid row bits in the last word of each column.
  std::uint64_t tail_mask() const {
    const std::size_t rem = rows_ % 64;
    return rem == 0 ? ~std::uint64_t{0} : ((std::uint64_t{1} << rem) - 1);
  }

  bool operator==(const BitMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> data_;
};

struct EncodedPartition {
  BitMatrix inputs;                     // rows x input bits
  std::vector<std::uint32_t> labels;    // class index per row
  BitMatrix targets;                    // rows x output bits (class codes)

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
};

struct EncodedDataset {
  EncodedPartition train;
  EncodedPartition validation;
  EncodedPartition test;
  std::size_t input_bits = 0;
  OutputCodec codec;
};

/// Builds an encoded partition from explicit bit rows (MSB-first per row) and labels.
inline EncodedPartition make_partition(const std::vector<std::vector<std::uint8_t>>& rows,
                                       std::span<const std::uint32_t> labels, const OutputCodec& codec,
                                       std::size_t input_bits) {
  EncodedPartition p;
  p.inputs = BitMatrix(rows.size(), input_bits);
  p.targets = BitMatrix(rows.size(), codec.bits);
  p.labels.assign(labels.begin(), labels.end());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < input_bits; ++c) {
      if (rows[r][c]) p.inputs.set(r, c, true);
    }
    auto code = codec.code_bits(labels[r]);
    for (unsigned b = 0; b < codec.bits; ++b) p.targets.set(r, b, code[b] != 0);
  }
  return p;
}

namespace detail {

inline EncodedPartition encode_rows(const FittedEncoder& enc, const RawDataset& raw,
                                    std::span<const std::size_t> rows, const OutputCodec& codec) {
  const unsigned b = enc.spec.bits_per_input;
  EncodedPartition p;
  p.inputs = BitMatrix(rows.size(), enc.total_bits());
  p.targets = BitMatrix(rows.size(), codec.bits);
  p.labels.reserve(rows.size());
  std::vector<std::uint8_t> code(b);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t r = rows[i];
    for (std::size_t f = 0; f < enc.features.size(); ++f) {
      const auto& fe = enc.features[f];
      const auto& col = raw.columns[f];
      if (fe.degenerate) continue;
      std::size_t bucket = 0;
      if (fe.numeric) {
        bucket = fe.numeric_bucket(col.missing[r] ? fe.impute_value : col.values[r]);
      } else {
        bucket = fe.category_bucket(col.missing[r] ? fe.impute_category : col.tokens[r]);
      }
      encode_bucket(bucket, enc.spec.strategy, b, code);
      for (unsigned k = 0; k < b; ++k) {
        if (code[k]) p.inputs.set(i, f * b + k, true);
      }
    }
    p.labels.push_back(raw.labels[r]);
    auto target = codec.code_bits(raw.labels[r]);
    for (unsigned k = 0; k < codec.bits; ++k) p.targets.set(i, k, target[k] != 0);
  }
  return p;
}

}  // namespace detail

inline EncodedDataset encode_dataset(const FittedEncoder& enc, const RawDataset& raw, const SplitDataset& split,
                                     const OutputCodec& codec) {
  if (raw.n_features() != enc.features.size()) {
    throw ConsistencyError("dataset has " + std::to_string(raw.n_features()) + " features, encoder expects " +
                           std::to_string(enc.features.size()));
  }
  for (std::size_t f = 0; f < raw.n_features(); ++f) {
    if (raw.columns[f].numeric != enc.features[f].numeric && !raw.columns[f].numeric) {
      throw ConsistencyError("feature '" + raw.columns[f].name + "' is categorical but the encoder expects numbers");
    }
  }
  if (raw.n_classes() > codec.n_classes) {
    throw ConsistencyError("dataset has " + std::to_string(raw.n_classes()) + " classes, codec encodes " +
                           std::to_string(codec.n_classes));
  }
  EncodedDataset ds;
  ds.input_bits = enc.total_bits();
  ds.codec = codec;
  ds.train = detail::encode_rows(enc, raw, split.train, codec);
  ds.validation = detail::encode_rows(enc, raw, split.validation, codec);
  ds.test = detail::encode_rows(enc, raw, split.test, codec);
  return ds;
}

// ---------------------------------------------------------------------------------------------
// JSON persistence

inline nlohmann::ordered_json codec_to_json(const OutputCodec& codec, const std::vector<std::string>& class_names = {}) {
  nlohmann::ordered_json j;
  j["n_classes"] = codec.n_classes;
  j["bits"] = codec.bits;
  j["codes"] = codec.codes;
  if (!class_names.empty()) j["class_names"] = class_names;
  return j;
}

inline nlohmann::ordered_json encoder_to_json(const FittedEncoder& enc, const OutputCodec& codec,
                                              const std::vector<std::string>& class_names = {}) {
  nlohmann::ordered_json j;
  j["strategy"] = to_string(enc.spec.strategy);
  j["bits_per_input"] = enc.spec.bits_per_input;
  auto features = nlohmann::ordered_json::array();
  for (const auto& fe : enc.features) {
    nlohmann::ordered_json f;
    f["name"] = fe.name;
    f["kind"] = fe.numeric ? "numeric" : "categorical";
    if (fe.numeric) {
      f["thresholds"] = fe.thresholds;
      f["impute"] = fe.impute_value;
      if (fe.degenerate) f["degenerate"] = true;
    } else {
      auto cm = nlohmann::ordered_json::array();
      for (const auto& [cat, bucket] : fe.category_map) cm.push_back({cat, bucket});
      f["category_map"] = cm;
      f["impute"] = fe.impute_category;
    }
    features.push_back(std::move(f));
  }
  j["features"] = std::move(features);
  j["output_codec"] = codec_to_json(codec, class_names);
  return j;
}

struct LoadedEncoder {
  FittedEncoder encoder;
  OutputCodec codec;
  std::vector<std::string> class_names;
};

inline LoadedEncoder encoder_from_json(const nlohmann::json& j) {
  try {
    LoadedEncoder out;
    out.encoder.spec.strategy = parse_strategy(j.at("strategy").get<std::string>());
    out.encoder.spec.bits_per_input = j.at("bits_per_input").get<unsigned>();
    if (out.encoder.spec.bits_per_input < 1) throw InputError("encoder bits_per_input must be >= 1");
    const std::size_t buckets = out.encoder.spec.bucket_count();
    for (const auto& f : j.at("features")) {
      FeatureEncoder fe;
      fe.name = f.at("name").get<std::string>();
      const auto kind = f.at("kind").get<std::string>();
      if (kind == "numeric") {
        fe.numeric = true;
        fe.thresholds = f.at("thresholds").get<std::vector<double>>();
        fe.impute_value = f.at("impute").get<double>();
        fe.degenerate = f.value("degenerate", false);
        if (!fe.degenerate && fe.thresholds.size() + 1 != buckets) {
          throw InputError("feature '" + fe.name + "' has " + std::to_string(fe.thresholds.size()) +
                           " thresholds, expected " + std::to_string(buckets - 1));
        }
        if (!std::is_sorted(fe.thresholds.begin(), fe.thresholds.end()) ||
            std::adjacent_find(fe.thresholds.begin(), fe.thresholds.end()) != fe.thresholds.end()) {
          throw InputError("feature '" + fe.name + "' thresholds are not strictly ascending");
        }
      } else if (kind == "categorical") {
        fe.numeric = false;
        for (const auto& entry : f.at("category_map")) {
          auto bucket = entry.at(1).get<std::uint32_t>();
          if (bucket >= buckets) throw InputError("feature '" + fe.name + "' maps a category out of range");
          fe.category_map.emplace_back(entry.at(0).get<std::string>(), bucket);
        }
        fe.impute_category = f.at("impute").get<std::string>();
      } else {
        throw InputError("unknown feature kind '" + kind + "'");
      }
      out.encoder.features.push_back(std::move(fe));
    }
    const auto& oc = j.at("output_codec");
    out.codec.n_classes = oc.at("n_classes").get<std::size_t>();
    out.codec.bits = oc.at("bits").get<unsigned>();
    out.codec.codes = oc.at("codes").get<std::vector<std::uint32_t>>();
    if (out.codec.codes.size() != out.codec.n_classes || out.codec.bits < 1 || out.codec.bits > 24) {
      throw InputError("malformed output_codec");
    }
    for (std::size_t c = 0; c < out.codec.codes.size(); ++c) {
      if (out.codec.codes[c] >> out.codec.bits) throw InputError("output code wider than codec bits");
      for (std::size_t d = 0; d < c; ++d) {
        if (out.codec.codes[c] == out.codec.codes[d]) throw InputError("duplicate output codes");
      }
    }
    if (oc.contains("class_names")) out.class_names = oc.at("class_names").get<std::vector<std::string>>();
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed encoder JSON: ") + e.what());
  }
}

}  // namespace tinyclf
