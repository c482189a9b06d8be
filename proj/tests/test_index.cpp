// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cstring>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "wikiprf/codec.hpp"
#include "wikiprf/error.hpp"
#include "wikiprf/index.hpp"

namespace wikiprf::index {
namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::InvalidArgument;
}

Embedding unit(std::initializer_list<float> v) { return Embedding::normalized(std::vector<float>(v)); }

// O(n*k) selection oracle: k passes, each picking the best remaining row
// under (score desc, id asc). Independent of both sort-based code paths.
std::vector<SearchHit> selection_oracle(const std::vector<Entry>& entries, const Embedding& q, std::size_t k) {
  std::vector<double> scores;
  for (const auto& [id, e] : entries) {
    double s = 0;
    for (std::size_t i = 0; i < q.dimension(); ++i) s += static_cast<double>(q.values()[i]) * e.values()[i];
    scores.push_back(s);
  }
  std::vector<bool> taken(entries.size(), false);
  std::vector<SearchHit> out;
  for (std::size_t round = 0; round < std::min(k, entries.size()); ++round) {
    std::size_t best = entries.size();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (taken[i]) continue;
      if (best == entries.size() || scores[i] > scores[best] ||
          (scores[i] == scores[best] && entries[i].first < entries[best].first)) {
        best = i;
      }
    }
    taken[best] = true;
    out.push_back({entries[best].first, scores[best]});
  }
  return out;
}

std::vector<Entry> random_entries(std::mt19937_64& rng, std::size_t n, std::size_t d) {
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < n; ++i) {
    entries.emplace_back("v" + std::to_string(rng() % (n * 50)) + "_" + std::to_string(i),
                         Embedding::from_unit(fixtures::random_unit(rng, d)));
  }
  std::shuffle(entries.begin(), entries.end(), rng);
  return entries;
}

TEST(VectorIndex, BuildErrors) {
  const std::vector<Entry> three{{"a", unit({1, 0})}, {"b", unit({0, 1})}, {"c", unit({1, 1})}};
  EXPECT_EQ(VectorIndex::build(three).size(), 3u);
  const std::vector<Entry> dup{{"a", unit({1, 0})}, {"a", unit({0, 1})}};
  EXPECT_EQ(code_of([&] { VectorIndex::build(dup); }), ErrorCode::DuplicateId);
  EXPECT_EQ(code_of([] { VectorIndex::build({}); }), ErrorCode::Empty);
  const std::vector<Entry> mixed{{"a", unit({1, 0})}, {"b", unit({0, 1, 0})}};
  EXPECT_EQ(code_of([&] { VectorIndex::build(mixed); }), ErrorCode::DimensionMismatch);
}

TEST(VectorIndex, SearchExamples) {
  const std::vector<Entry> ab{{"a", unit({1, 0})}, {"b", unit({0, 1})}};
  const auto idx = VectorIndex::build(ab);
  EXPECT_EQ(idx.search(unit({1, 0}), 2), (std::vector<SearchHit>{{"a", 1.0}, {"b", 0.0}}));
  EXPECT_EQ(brute_force_search(ab, unit({1, 0}), 2), (std::vector<SearchHit>{{"a", 1.0}, {"b", 0.0}}));
  EXPECT_EQ(idx.search(unit({0, 1}), 5).size(), 2u);
  EXPECT_EQ(code_of([&] { idx.search(unit({1, 0, 0}), 1); }), ErrorCode::DimensionMismatch);
  EXPECT_EQ(code_of([&] { idx.search(unit({1, 0}), 0); }), ErrorCode::InvalidArgument);
}

TEST(VectorIndex, TiesBreakByAscendingId) {
  const std::vector<Entry> tied{{"zeta", unit({1, 0})}, {"alpha", unit({1, 0})}, {"mid", unit({1, 0})}};
  const auto hits = VectorIndex::build(tied).search(unit({1, 0}), 3);
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].id, "alpha");
  EXPECT_EQ(hits[1].id, "mid");
  EXPECT_EQ(hits[2].id, "zeta");
}

TEST(VectorIndex, SelfMatchFirst) {
  std::mt19937_64 rng(4);
  const auto entries = random_entries(rng, 200, 64);
  const auto idx = VectorIndex::build(entries);
  for (int i = 0; i < 20; ++i) {
    const auto& [id, e] = entries[rng() % entries.size()];
    const auto hits = idx.search(e, 3);
    EXPECT_EQ(hits[0].id, id);
    EXPECT_NEAR(hits[0].score, 1.0, 1e-6);
  }
}

TEST(VectorIndex, MatchesOraclesProperty) {
  std::mt19937_64 rng(123);
  for (int instance = 0; instance < 5; ++instance) {
    const std::size_t n = 1 + rng() % 300, d = 1 + rng() % 40;
    auto entries = random_entries(rng, n, d);
    // Plant exact duplicates so the tie rule is exercised.
    for (int dupe = 0; dupe < 5 && n > 1; ++dupe) {
      entries.emplace_back("dup" + std::to_string(dupe), entries[rng() % n].second);
    }
    const auto idx = VectorIndex::build(entries);
    for (int q = 0; q < 30; ++q) {
      const auto query = rng() % 3 == 0 ? entries[rng() % entries.size()].second
                                        : Embedding::from_unit(fixtures::random_unit(rng, d));
      const std::size_t k = 1 + rng() % 12;
      const auto got = idx.search(query, k);
      const auto brute = brute_force_search(entries, query, k);
      const auto oracle = selection_oracle(entries, query, k);
      ASSERT_EQ(got.size(), oracle.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        ASSERT_EQ(got[i].id, oracle[i].id);
        ASSERT_EQ(brute[i].id, oracle[i].id);
        ASSERT_NEAR(got[i].score, oracle[i].score, 1e-6);
        ASSERT_LE(std::abs(got[i].score), 1.0 + 1e-6);
        if (i > 0) ASSERT_GE(got[i - 1].score, got[i].score);
      }
    }
  }
}

TEST(VectorIndex, SearchRowsRestrictsCandidates) {
  const std::vector<Entry> e{{"a", unit({1, 0})}, {"b", unit({0.9f, 0.1f})}, {"c", unit({0, 1})}};
  const auto idx = VectorIndex::build(e);
  const std::vector<std::size_t> rows{idx.position("b"), idx.position("c")};
  const auto hits = idx.search_rows(unit({1, 0}), rows, 5);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].id, "b");
  EXPECT_EQ(code_of([&] { idx.position("nope"); }), ErrorCode::NotFound);
}

TEST(IndexFile, HandAssembledGolden) {
  const std::vector<Entry> one{{"abc", Embedding::from_unit({0.6f, 0.8f})}};
  const auto bytes = VectorIndex::build(one).serialize();

  std::vector<std::uint8_t> want{'P', 'R', 'F', 'I', 'D', 'X', '1', 0};
  const auto le = [&](std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) want.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  le(1, 4);  // version
  le(2, 4);  // d
  le(1, 8);  // n
  le(3, 4);  // id length
  want.insert(want.end(), {'a', 'b', 'c'});
  for (float f : {0.6f, 0.8f}) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    le(u, 4);
  }
  std::uint64_t h = 14695981039346656037ull;
  for (auto b : want) h = (h ^ b) * 1099511628211ull;
  le(h, 8);
  EXPECT_EQ(bytes, want);
  EXPECT_EQ(VectorIndex::deserialize(want), VectorIndex::build(one));
}

TEST(IndexFile, SaveLoadRoundTrip) {
  std::mt19937_64 rng(8);
  const auto entries = random_entries(rng, 50, 16);
  const auto idx = VectorIndex::build(entries);
  fixtures::TempDir dir("index");
  save(idx, dir.str("a.idx"));
  const auto back = load(dir.str("a.idx"));
  EXPECT_EQ(back, idx);
  for (int q = 0; q < 10; ++q) {
    const auto query = Embedding::from_unit(fixtures::random_unit(rng, 16));
    EXPECT_EQ(back.search(query, 5), idx.search(query, 5));
  }
  EXPECT_EQ(code_of([&] { load(dir.str("missing.idx")); }), ErrorCode::Io);
}

TEST(IndexFile, CorruptionDetected) {
  std::mt19937_64 rng(10);
  const auto bytes = VectorIndex::build(random_entries(rng, 3, 4)).serialize();
  auto truncated = bytes;
  truncated.resize(truncated.size() - 5);
  EXPECT_EQ(code_of([&] { VectorIndex::deserialize(truncated); }), ErrorCode::ChecksumMismatch);
  for (std::size_t at : {8ul, 20ul, bytes.size() / 2, bytes.size() - 9}) {
    auto flipped = bytes;
    flipped[at] ^= 0x10;
    EXPECT_EQ(code_of([&] { VectorIndex::deserialize(flipped); }), ErrorCode::ChecksumMismatch) << at;
  }
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_EQ(code_of([&] { VectorIndex::deserialize(magic); }), ErrorCode::BadMagic);

  // A well-formed file of another version, checksum recomputed.
  auto version = bytes;
  version.resize(version.size() - 8);
  version[8] = 2;
  codec::put_u64(version, codec::fnv1a64(version));
  EXPECT_EQ(code_of([&] { VectorIndex::deserialize(version); }), ErrorCode::VersionMismatch);
}

}  // namespace
}  // namespace wikiprf::index
