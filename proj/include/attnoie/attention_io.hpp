/*
 * Copyright 2026 The attnoie Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// ATN1 attention container.
//
//   header : "ATN1" | u32 version | u32 record_count
//   record : u32 id_len | id bytes (UTF-8) | u32 L | u32 H | u32 S
//            | L*H*S*S float32, row-major (layer, head, query, key)
//
// Everything is little-endian regardless of host byte order.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "attnoie/core.hpp"

namespace attnoie {

inline constexpr std::array<char, 4> kAtnMagic = {'A', 'T', 'N', '1'};
inline constexpr std::uint32_t kAtnVersion = 1;

/// Raw per-sentence tensor of shape layers x heads x subwords x subwords.
struct AttentionTensor {
  std::uint32_t layers = 0;
  std::uint32_t heads = 0;
  std::uint32_t subwords = 0;
  std::vector<float> values;

  std::size_t expected_size() const noexcept {
    return static_cast<std::size_t>(layers) * heads * subwords * subwords;
  }
  float at(std::size_t l, std::size_t h, std::size_t q, std::size_t k) const {
    return values[((l * heads + h) * subwords + q) * subwords + k];
  }
  friend bool operator==(const AttentionTensor&, const AttentionTensor&) = default;
};

struct AttentionRecord {
  std::string sentence_id;
  AttentionTensor tensor;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

inline void put_f32(std::string& out, float f) {
  put_u32(out, std::bit_cast<std::uint32_t>(f));
}

inline float get_f32(const char* p) { return std::bit_cast<float>(get_u32(p)); }

inline std::string encode_record(const AttentionRecord& record) {
  const AttentionTensor& t = record.tensor;
  if (t.values.size() != t.expected_size())
    throw Error(ErrorCode::kInvalidArgument,
                "record '" + record.sentence_id + "' payload size mismatch");
  std::string out;
  out.reserve(16 + record.sentence_id.size() + 4 * t.values.size());
  put_u32(out, static_cast<std::uint32_t>(record.sentence_id.size()));
  out += record.sentence_id;
  put_u32(out, t.layers);
  put_u32(out, t.heads);
  put_u32(out, t.subwords);
  for (float v : t.values) {
    if (!std::isfinite(v))
      throw Error(ErrorCode::kInvalidArgument,
                  "record '" + record.sentence_id + "' has non-finite values");
    put_f32(out, v);
  }
  return out;
}

}  // namespace detail

/// Streams records into an ATN1 file; the record count in the header is
/// patched by finish(). Destruction without finish() finalizes silently.
class AttentionWriter {
 public:
  explicit AttentionWriter(const std::filesystem::path& path)
      : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_)
      throw Error(ErrorCode::kInvalidArgument,
                  "cannot open '" + path.string() + "' for writing");
    std::string header(kAtnMagic.begin(), kAtnMagic.end());
    detail::put_u32(header, kAtnVersion);
    detail::put_u32(header, 0);
    out_.write(header.data(), static_cast<std::streamsize>(header.size()));
  }
  AttentionWriter(const AttentionWriter&) = delete;
  AttentionWriter& operator=(const AttentionWriter&) = delete;
  ~AttentionWriter() {
    try {
      finish();
    } catch (...) {
    }
  }

  void add(const AttentionRecord& record) {
    const std::string bytes = detail::encode_record(record);
    out_.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    ++count_;
  }

  void finish() {
    if (finished_) return;
    finished_ = true;
    std::string count;
    detail::put_u32(count, count_);
    out_.seekp(8);
    out_.write(count.data(), 4);
    out_.close();
    if (out_.fail()) throw Error(ErrorCode::kFormat, "failed to write ATN1 file");
  }

 private:
  std::ofstream out_;
  std::uint32_t count_ = 0;
  bool finished_ = false;
};

inline void write_attention_file(const std::filesystem::path& path,
                                 std::span<const AttentionRecord> records) {
  AttentionWriter writer(path);
  for (const auto& r : records) writer.add(r);
  writer.finish();
}

/// Indexes an ATN1 file on construction; lookups afterwards are const and
/// open their own stream, so one reader may serve many threads.
class AttentionReader {
 public:
  explicit AttentionReader(std::filesystem::path path) : path_(std::move(path)) {
    std::ifstream in(path_, std::ios::binary);
    if (!in)
      throw Error(ErrorCode::kInvalidArgument,
                  "cannot open attention file '" + path_.string() + "'");
    in.seekg(0, std::ios::end);
    const std::uint64_t file_size = static_cast<std::uint64_t>(in.tellg());
    in.seekg(0);

    char header[12];
    if (file_size < 4 || !in.read(header, 4) ||
        std::memcmp(header, kAtnMagic.data(), 4) != 0)
      throw Error(ErrorCode::kBadMagic, "'" + path_.string() + "' is not an ATN1 file");
    if (file_size < 12 || !in.read(header + 4, 8))
      throw Error(ErrorCode::kTruncatedRecord, "ATN1 header is truncated");
    const std::uint32_t version = detail::get_u32(header + 4);
    if (version != kAtnVersion)
      throw Error(ErrorCode::kVersionMismatch,
                  "ATN1 version " + std::to_string(version) + ", expected " +
                      std::to_string(kAtnVersion));
    declared_count_ = detail::get_u32(header + 8);

    std::uint64_t pos = 12;
    for (std::uint32_t r = 0; r < declared_count_; ++r) {
      char buf[4];
      if (pos + 4 > file_size) break;
      in.seekg(static_cast<std::streamoff>(pos));
      in.read(buf, 4);
      const std::uint32_t id_len = detail::get_u32(buf);
      if (pos + 4 + id_len + 12 > file_size) break;
      std::string id(id_len, '\0');
      in.read(id.data(), id_len);
      char dims[12];
      in.read(dims, 12);
      Entry e;
      e.layers = detail::get_u32(dims);
      e.heads = detail::get_u32(dims + 4);
      e.subwords = detail::get_u32(dims + 8);
      e.payload_offset = pos + 4 + id_len + 12;
      const std::uint64_t payload =
          4ull * e.layers * e.heads * e.subwords * e.subwords;
      if (e.payload_offset + payload > file_size) break;
      index_.emplace(std::move(id), e);
      pos = e.payload_offset + payload;
    }
    truncated_ = index_.size() < declared_count_;
  }

  const std::filesystem::path& path() const noexcept { return path_; }
  std::size_t record_count() const noexcept { return index_.size(); }
  bool truncated() const noexcept { return truncated_; }
  bool contains(const std::string& id) const { return index_.contains(id); }

  std::vector<std::string> sentence_ids() const {
    std::vector<std::string> ids;
    ids.reserve(index_.size());
    for (const auto& [id, e] : index_) ids.push_back(id);
    return ids;
  }

  AttentionTensor read_record(const std::string& sentence_id) const {
    auto it = index_.find(sentence_id);
    if (it == index_.end()) {
      if (truncated_)
        throw Error(ErrorCode::kTruncatedRecord,
                    "record '" + sentence_id + "' not readable: '" +
                        path_.string() + "' is truncated");
      throw Error(ErrorCode::kMissingRecord,
                  "no attention record for sentence '" + sentence_id + "'");
    }
    const Entry& e = it->second;
    AttentionTensor t;
    t.layers = e.layers;
    t.heads = e.heads;
    t.subwords = e.subwords;
    const std::size_t count = t.expected_size();
    std::string raw(4 * count, '\0');
    std::ifstream in(path_, std::ios::binary);
    in.seekg(static_cast<std::streamoff>(e.payload_offset));
    if (!in.read(raw.data(), static_cast<std::streamsize>(raw.size())))
      throw Error(ErrorCode::kTruncatedRecord,
                  "record '" + sentence_id + "' payload is truncated");
    t.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      t.values[i] = detail::get_f32(raw.data() + 4 * i);
      if (!std::isfinite(t.values[i]))
        throw Error(ErrorCode::kFormat,
                    "record '" + sentence_id + "' has non-finite values");
    }
    return t;
  }

 private:
  struct Entry {
    std::uint32_t layers = 0;
    std::uint32_t heads = 0;
    std::uint32_t subwords = 0;
    std::uint64_t payload_offset = 0;
  };

  std::filesystem::path path_;
  std::uint32_t declared_count_ = 0;
  std::map<std::string, Entry> index_;
  bool truncated_ = false;
};

inline AttentionTensor read_record(const std::filesystem::path& path,
                                   const std::string& sentence_id) {
  return AttentionReader(path).read_record(sentence_id);
}

/// Collapses layers and heads to one S x S matrix. kLast uses only the final
/// stored layer; kMeanAll averages layers first and needs more than one.
inline SubwordMatrix reduce_heads(const AttentionTensor& tensor,
                                  LayerSelection layers, HeadReduction heads) {
  if (tensor.layers == 0 || tensor.heads == 0)
    throw Error(ErrorCode::kEmptyTensor, "tensor has no layers or heads");
  if (tensor.values.size() != tensor.expected_size())
    throw Error(ErrorCode::kInvalidArgument, "tensor payload size mismatch");
  if (layers == LayerSelection::kMeanAll && tensor.layers < 2)
    throw Error(ErrorCode::kLayerUnavailable,
                "mean over layers needs an export with all layers; record has " +
                    std::to_string(tensor.layers));

  const std::size_t s = tensor.subwords;
  const std::size_t first_layer =
      layers == LayerSelection::kLast ? tensor.layers - 1 : 0;
  const double layer_count = static_cast<double>(tensor.layers - first_layer);

  // per_head[h][q][k] after layer selection
  std::vector<double> per_head(tensor.heads * s * s, 0.0);
  for (std::size_t l = first_layer; l < tensor.layers; ++l)
    for (std::size_t h = 0; h < tensor.heads; ++h)
      for (std::size_t q = 0; q < s; ++q)
        for (std::size_t k = 0; k < s; ++k)
          per_head[(h * s + q) * s + k] += tensor.at(l, h, q, k);
  if (layer_count > 1)
    for (double& v : per_head) v /= layer_count;

  std::vector<double> out(s * s, 0.0);
  for (std::size_t q = 0; q < s; ++q)
    for (std::size_t k = 0; k < s; ++k) {
      double acc = heads == HeadReduction::kMean ? 0.0 : per_head[q * s + k];
      for (std::size_t h = 0; h < tensor.heads; ++h) {
        const double v = per_head[(h * s + q) * s + k];
        acc = heads == HeadReduction::kMean ? acc + v : std::max(acc, v);
      }
      if (heads == HeadReduction::kMean) acc /= static_cast<double>(tensor.heads);
      out[q * s + k] = acc;
    }
  return SubwordMatrix(s, std::move(out));
}

/// Folds subword attention to words: attention *to* a word sums its key
/// columns, attention *from* a word averages its query rows.
inline WordAttentionMatrix merge_subwords(const SubwordMatrix& matrix,
                                          std::span<const SubwordSpan> subword_map) {
  const std::size_t s = matrix.size();
  const std::size_t n = subword_map.size();
  if (n == 0 && s > 0)
    throw Error(ErrorCode::kMapGap, "empty subword map for " +
                                        std::to_string(s) + " subwords");

  std::vector<int> owner(s, -1);
  std::vector<bool> word_seen(n, false);
  for (const SubwordSpan& span : subword_map) {
    if (span.word_index >= n || word_seen[span.word_index])
      throw Error(ErrorCode::kMapOverlap,
                  "word " + std::to_string(span.word_index) +
                      " is duplicated or out of range in subword map");
    word_seen[span.word_index] = true;
    if (span.subword_count == 0)
      throw Error(ErrorCode::kMapGap,
                  "word " + std::to_string(span.word_index) + " has no subwords");
    if (span.subword_start + span.subword_count > s)
      throw Error(ErrorCode::kMapOverlap,
                  "word " + std::to_string(span.word_index) +
                      " maps past subword " + std::to_string(s));
    for (std::size_t i = span.subword_start;
         i < span.subword_start + span.subword_count; ++i) {
      if (owner[i] != -1)
        throw Error(ErrorCode::kMapOverlap,
                    "subword " + std::to_string(i) + " is claimed twice");
      owner[i] = static_cast<int>(span.word_index);
    }
  }
  for (std::size_t i = 0; i < s; ++i)
    if (owner[i] == -1)
      throw Error(ErrorCode::kMapGap,
                  "subword " + std::to_string(i) + " is not covered");

  // column sums: s x n
  std::vector<double> cols(s * n, 0.0);
  for (std::size_t q = 0; q < s; ++q)
    for (std::size_t k = 0; k < s; ++k)
      cols[q * n + static_cast<std::size_t>(owner[k])] += matrix(q, k);

  WordAttentionMatrix out(n);
  for (const SubwordSpan& span : subword_map) {
    for (std::size_t v = 0; v < n; ++v) {
      double acc = 0.0;
      for (std::size_t q = span.subword_start;
           q < span.subword_start + span.subword_count; ++q)
        acc += cols[q * n + v];
      out(span.word_index, v) = acc / static_cast<double>(span.subword_count);
    }
  }
  return out;
}

/// reduce_heads followed by merge_subwords for one bundle.
inline WordAttentionMatrix word_attention(const AttentionTensor& tensor,
                                          const SentenceBundle& bundle,
                                          const ExtractionConfig& config) {
  SubwordMatrix reduced =
      reduce_heads(tensor, config.layer_selection, config.head_reduction);
  WordAttentionMatrix words = merge_subwords(reduced, bundle.subword_map);
  if (words.size() != bundle.words.size())
    throw Error(ErrorCode::kMapGap, "subword map of '" + bundle.sentence_id +
                                        "' does not cover every word");
  return words;
}

}  // namespace attnoie
