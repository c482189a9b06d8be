// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

/** \file index.hpp
 *  \brief Exact cosine top-k search over unit-norm rows.
 *
 * Rows are stored as 32-bit floats and scored with 64-bit accumulation.
 * Results are ordered by score descending, ties by ascending id, so every
 * query has one total, reproducible answer.
 *
 * On-disk layout (all integers little-endian):
 *
 *     "PRFIDX1\0"  u32 version  u32 d  u64 n
 *     n x { u32 byte length, UTF-8 id }
 *     n*d float32, row-major
 *     u64 FNV-1a of every preceding byte
 */

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wikiprf/embedder.hpp"

namespace wikiprf::index {

inline constexpr std::uint32_t k_format_version = 1;

struct SearchHit {
  std::string id;
  double score = 0.0;
  bool operator==(const SearchHit&) const = default;
};

/// Strict weak order used by every search path.
inline bool hit_before(const SearchHit& a, const SearchHit& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

using Entry = std::pair<std::string, Embedding>;

class VectorIndex {
 public:
  /// Errors: Empty, DimensionMismatch, DuplicateId.
  static VectorIndex build(std::span<const Entry> entries);

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(rows_).subspan(i * dimension_, dimension_);
  }
  /// Row position for an id; throws Error(NotFound).
  std::size_t position(const std::string& id) const;

  /// Top-k over all rows. k must be >= 1.
  std::vector<SearchHit> search(const Embedding& query, std::size_t k) const;

  /// Top-k restricted to the given row positions.
  std::vector<SearchHit> search_rows(const Embedding& query, std::span<const std::size_t> rows,
                                     std::size_t k) const;

  bool operator==(const VectorIndex&) const = default;

  std::vector<std::uint8_t> serialize() const;
  /// Errors: BadMagic, ChecksumMismatch, VersionMismatch, BadHeader.
  static VectorIndex deserialize(std::span<const std::uint8_t> bytes);

 private:
  std::size_t dimension_ = 0;
  std::vector<std::string> ids_;
  std::vector<float> rows_;
  std::vector<std::size_t> by_id_;  // row positions sorted by id
};

/// Literal scan: all n scores, full sort, first k. The normative semantics
/// of VectorIndex::search.
std::vector<SearchHit> brute_force_search(std::span<const Entry> entries, const Embedding& query, std::size_t k);

void save(const VectorIndex& index, const std::string& path);
/// Errors: Io plus everything deserialize raises.
VectorIndex load(const std::string& path);

}  // namespace wikiprf::index
