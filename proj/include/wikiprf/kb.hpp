// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

/** \file kb.hpp
 *  \brief Knowledge base of articles paired with image embeddings.
 *
 * Articles are split into sections whose embeddings cover the body only
 * (headings are kept as metadata). A sealed KnowledgeBase is immutable and
 * may be read from any number of threads.
 *
 * Record format, one JSON object per line:
 *
 *     {"article_id": "...", "title": "...",
 *      "text": "raw text" | "sections": [{"heading": "...", "body": "..."}],
 *      "image_ppm_base64": "..." | "image_embedding": [d numbers]}
 *
 * A record holding only article_id and an image, for an id already seen,
 * adds an extra image entry pointing at that article.
 */

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "wikiprf/embedder.hpp"
#include "wikiprf/error.hpp"
#include "wikiprf/index.hpp"

namespace wikiprf::kb {

inline constexpr int k_kb_format_version = 1;

struct HeadingRule {
  std::vector<std::string> prefixes{"==", "#"};
};

struct SplitSection {
  std::string heading;
  std::string body;
  bool operator==(const SplitSection&) const = default;
};

/// Text before the first heading is section 0 with an empty heading;
/// sections with blank bodies are dropped.
std::vector<SplitSection> split_sections(std::string_view raw, const HeadingRule& rule = {});

struct Section {
  std::string article_id;
  std::size_t section_index = 0;
  std::string heading;
  std::string body;
  Embedding embedding;
  bool operator==(const Section&) const = default;
};

struct Article {
  std::string article_id;
  std::string title;
  std::vector<Section> sections;
  Embedding image_embedding;
  std::vector<std::pair<std::string, Embedding>> extra_images;  // (index entry id, embedding)

  bool empty() const noexcept { return sections.empty(); }
  bool operator==(const Article&) const = default;
};

struct ArticleHit {
  std::string article_id;
  double score = 0.0;
  bool operator==(const ArticleHit&) const = default;
};

struct SectionHit {
  std::string article_id;
  std::size_t section_index = 0;
  double score = 0.0;
  bool operator==(const SectionHit&) const = default;
};

std::string section_entry_id(std::string_view article_id, std::size_t section_index);

class KnowledgeBase {
 public:
  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t article_count() const noexcept { return articles_.size(); }
  std::size_t section_count() const noexcept { return section_count_; }
  std::size_t image_entry_count() const noexcept { return image_index_ ? image_index_->size() : 0; }
  const std::vector<Article>& articles() const noexcept { return articles_; }

  /// Errors: NotFound.
  const Article& get_article(std::string_view id) const;
  const Section& get_section(std::string_view id, std::size_t section_index) const;
  bool contains(std::string_view id) const;

  const index::VectorIndex& image_index() const;
  const std::optional<index::VectorIndex>& section_index() const noexcept { return section_index_; }

  /// Top-k distinct articles by image-entry cosine.
  std::vector<ArticleHit> search_articles(const Embedding& query, std::size_t k) const;

  /// Top-k sections restricted to the given articles. Empty articles
  /// contribute nothing.
  std::vector<SectionHit> search_sections(const Embedding& query, std::span<const std::string> article_ids,
                                          std::size_t k) const;

  void save(const std::string& directory) const;
  /// Errors: Io, BadRecord, VersionMismatch, DimensionMismatch and the
  /// index loader's errors.
  static KnowledgeBase load(const std::string& directory);

  bool operator==(const KnowledgeBase& other) const;

 private:
  friend class KnowledgeBaseBuilder;
  void seal();

  std::size_t dimension_ = 0;
  std::size_t section_count_ = 0;
  std::vector<Article> articles_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::optional<index::VectorIndex> image_index_;
  std::vector<std::size_t> image_entry_article_;  // image row -> article position
  std::optional<index::VectorIndex> section_index_;
  std::vector<std::vector<std::size_t>> section_rows_;  // article position -> section rows
  std::vector<std::pair<std::size_t, std::size_t>> section_owner_;  // section row -> (article, j)
};

struct IngestFailure {
  std::size_t line = 0;  // 1-based
  ErrorCode code = ErrorCode::BadRecord;
  std::string message;
};

struct IngestReport {
  std::size_t articles = 0;
  std::size_t sections = 0;
  std::size_t image_entries = 0;
  std::size_t empty_articles = 0;
  std::vector<IngestFailure> failures;
};

/// Single-writer accumulation of records; seal() produces the immutable KB.
class KnowledgeBaseBuilder {
 public:
  KnowledgeBaseBuilder(const Embedder& embedder, HeadingRule rule = {});

  /// Parses and adds one record. Throws Error(DuplicateId | BadRecord |
  /// DimensionMismatch); the builder is unchanged on failure.
  void add_record(std::string_view json_line);

  KnowledgeBase seal() &&;

 private:
  const Embedder& embedder_;
  HeadingRule rule_;
  KnowledgeBase kb_;
};

struct IngestResult {
  KnowledgeBase kb;
  IngestReport report;
};

/// Reads line-delimited records; failures are reported per line and never
/// stop ingestion. Blank lines are skipped.
IngestResult ingest(std::istream& records, const Embedder& embedder, const HeadingRule& rule = {});

}  // namespace wikiprf::kb
