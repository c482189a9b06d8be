// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#include "wikiprf/index.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>
#include <queue>

#include "wikiprf/codec.hpp"
#include "wikiprf/error.hpp"

namespace wikiprf::index {

namespace {

constexpr char k_magic[8] = {'P', 'R', 'F', 'I', 'D', 'X', '1', '\0'};

void check_k(std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
}

}  // namespace

VectorIndex VectorIndex::build(std::span<const Entry> entries) {
  if (entries.empty()) throw Error(ErrorCode::Empty, "cannot build an index from no vectors");
  VectorIndex index;
  index.dimension_ = entries.front().second.dimension();
  if (index.dimension_ == 0) throw Error(ErrorCode::DimensionMismatch, "zero-dimension embedding");
  index.ids_.reserve(entries.size());
  index.rows_.reserve(entries.size() * index.dimension_);
  for (const auto& [id, embedding] : entries) {
    if (embedding.dimension() != index.dimension_) {
      throw Error(ErrorCode::DimensionMismatch, "entry '" + id + "' has dimension " +
                                                    std::to_string(embedding.dimension()));
    }
    index.ids_.push_back(id);
    index.rows_.insert(index.rows_.end(), embedding.values().begin(), embedding.values().end());
  }
  index.by_id_.resize(index.ids_.size());
  std::iota(index.by_id_.begin(), index.by_id_.end(), std::size_t{0});
  std::sort(index.by_id_.begin(), index.by_id_.end(),
            [&](std::size_t a, std::size_t b) { return index.ids_[a] < index.ids_[b]; });
  for (std::size_t i = 1; i < index.by_id_.size(); ++i) {
    if (index.ids_[index.by_id_[i]] == index.ids_[index.by_id_[i - 1]]) {
      throw Error(ErrorCode::DuplicateId, index.ids_[index.by_id_[i]]);
    }
  }
  return index;
}

std::size_t VectorIndex::position(const std::string& id) const {
  const auto it = std::lower_bound(by_id_.begin(), by_id_.end(), id,
                                   [&](std::size_t row, const std::string& key) { return ids_[row] < key; });
  if (it == by_id_.end() || ids_[*it] != id) throw Error(ErrorCode::NotFound, id);
  return *it;
}

std::vector<SearchHit> VectorIndex::search(const Embedding& query, std::size_t k) const {
  std::vector<std::size_t> all(size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return search_rows(query, all, k);
}

std::vector<SearchHit> VectorIndex::search_rows(const Embedding& query, std::span<const std::size_t> rows,
                                                std::size_t k) const {
  check_k(k);
  if (query.dimension() != dimension_) {
    throw Error(ErrorCode::DimensionMismatch, "query dimension " + std::to_string(query.dimension()) +
                                                  " vs index " + std::to_string(dimension_));
  }
  // Bounded heap whose top is the worst hit kept so far.
  const auto worse = [](const SearchHit& a, const SearchHit& b) { return hit_before(a, b); };
  std::priority_queue<SearchHit, std::vector<SearchHit>, decltype(worse)> heap(worse);
  for (const std::size_t r : rows) {
    SearchHit hit{ids_[r], dot(query.values(), row(r))};
    if (heap.size() < k) {
      heap.push(std::move(hit));
    } else if (hit_before(hit, heap.top())) {
      heap.pop();
      heap.push(std::move(hit));
    }
  }
  std::vector<SearchHit> out(heap.size());
  for (auto i = out.size(); i > 0; --i) {
    out[i - 1] = heap.top();
    heap.pop();
  }
  return out;
}

std::vector<SearchHit> brute_force_search(std::span<const Entry> entries, const Embedding& query, std::size_t k) {
  check_k(k);
  std::vector<SearchHit> all;
  all.reserve(entries.size());
  for (const auto& [id, embedding] : entries) {
    if (embedding.dimension() != query.dimension()) throw Error(ErrorCode::DimensionMismatch, id);
    all.push_back({id, dot(query.values(), embedding.values())});
  }
  std::sort(all.begin(), all.end(), hit_before);
  if (all.size() > k) all.resize(k);
  return all;
}

std::vector<std::uint8_t> VectorIndex::serialize() const {
  codec::Bytes out(std::begin(k_magic), std::end(k_magic));
  codec::put_u32(out, k_format_version);
  codec::put_u32(out, static_cast<std::uint32_t>(dimension_));
  codec::put_u64(out, ids_.size());
  for (const auto& id : ids_) {
    codec::put_u32(out, static_cast<std::uint32_t>(id.size()));
    out.insert(out.end(), id.begin(), id.end());
  }
  for (float v : rows_) codec::put_f32(out, v);
  codec::put_u64(out, codec::fnv1a64(out));
  return out;
}

VectorIndex VectorIndex::deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(k_magic) || std::memcmp(bytes.data(), k_magic, sizeof(k_magic)) != 0) {
    throw Error(ErrorCode::BadMagic, "not a PRFIDX1 file");
  }
  constexpr std::size_t header = sizeof(k_magic) + 4 + 4 + 8;
  if (bytes.size() < header + 8) throw Error(ErrorCode::ChecksumMismatch, "file truncated");
  const auto body = bytes.first(bytes.size() - 8);
  if (codec::fnv1a64(body) != codec::get_u64(bytes, bytes.size() - 8)) {
    throw Error(ErrorCode::ChecksumMismatch, "index checksum does not match contents");
  }
  const auto version = codec::get_u32(bytes, 8);
  if (version != k_format_version) throw Error(ErrorCode::VersionMismatch, "version " + std::to_string(version));
  const std::size_t d = codec::get_u32(bytes, 12);
  const std::uint64_t n = codec::get_u64(bytes, 16);

  std::size_t pos = header;
  const auto need = [&](std::size_t count) {
    if (count > body.size() || pos > body.size() - count) throw Error(ErrorCode::BadHeader, "header overruns file");
  };
  std::vector<Entry> entries;
  std::vector<std::string> ids;
  for (std::uint64_t i = 0; i < n; ++i) {
    need(4);
    const std::size_t len = codec::get_u32(bytes, pos);
    pos += 4;
    need(len);
    ids.emplace_back(reinterpret_cast<const char*>(bytes.data() + pos), len);
    pos += len;
  }
  if (d == 0 || n == 0) throw Error(ErrorCode::BadHeader, "empty index");
  need(static_cast<std::size_t>(n) * d * 4);
  for (std::uint64_t i = 0; i < n; ++i) {
    std::vector<float> values(d);
    for (std::size_t c = 0; c < d; ++c, pos += 4) values[c] = codec::get_f32(bytes, pos);
    entries.emplace_back(std::move(ids[i]), Embedding::from_unit(std::move(values)));
  }
  if (pos != body.size()) throw Error(ErrorCode::BadHeader, "trailing bytes after rows");
  return build(entries);
}

void save(const VectorIndex& index, const std::string& path) { codec::write_file(path, index.serialize()); }

VectorIndex load(const std::string& path) { return VectorIndex::deserialize(codec::read_file(path)); }

}  // namespace wikiprf::index
