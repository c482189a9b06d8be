// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#include "wikiprf/kb.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "wikiprf/codec.hpp"
#include "wikiprf/imaging.hpp"

namespace wikiprf::kb {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool is_heading(std::string_view line, const HeadingRule& rule) {
  const std::string t = codec::trim(line);
  return std::any_of(rule.prefixes.begin(), rule.prefixes.end(),
                     [&](const std::string& p) { return !p.empty() && t.starts_with(p); });
}

// Strips leading and trailing runs of any character used by the rule's prefixes.
std::string heading_text(std::string_view line, const HeadingRule& rule) {
  std::string t = codec::trim(line);
  const auto marker = [&](char c) {
    return std::any_of(rule.prefixes.begin(), rule.prefixes.end(),
                       [c](const std::string& p) { return p.find(c) != std::string::npos; });
  };
  std::size_t b = 0, e = t.size();
  while (b < e && marker(t[b])) ++b;
  while (e > b && marker(t[e - 1])) --e;
  return codec::trim(std::string_view(t).substr(b, e - b));
}

std::vector<float> numbers(const json& j, const char* field) {
  if (!j.is_array()) throw Error(ErrorCode::BadRecord, std::string(field) + " must be an array");
  std::vector<float> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw Error(ErrorCode::BadRecord, std::string(field) + " must hold numbers");
    out.push_back(v.get<float>());
  }
  return out;
}

const std::string& string_field(const json& j, const char* field) {
  const auto it = j.find(field);
  if (it == j.end() || !it->is_string()) throw Error(ErrorCode::BadRecord, std::string("missing string field ") + field);
  return it->get_ref<const std::string&>();
}

}  // namespace

std::vector<SplitSection> split_sections(std::string_view raw, const HeadingRule& rule) {
  std::vector<SplitSection> out;
  SplitSection current;
  std::string body;
  const auto flush = [&] {
    current.body = codec::trim(body);
    if (!current.body.empty()) out.push_back(current);
    body.clear();
  };
  std::size_t start = 0;
  while (start <= raw.size()) {
    auto nl = raw.find('\n', start);
    if (nl == std::string_view::npos) nl = raw.size();
    const auto line = raw.substr(start, nl - start);
    if (is_heading(line, rule)) {
      flush();
      current.heading = heading_text(line, rule);
    } else {
      if (!body.empty()) body.push_back('\n');
      body.append(line);
    }
    start = nl + 1;
  }
  flush();
  return out;
}

std::string section_entry_id(std::string_view article_id, std::size_t section_index) {
  return std::string(article_id) + "#" + std::to_string(section_index);
}

const Article& KnowledgeBase::get_article(std::string_view id) const {
  const auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) throw Error(ErrorCode::NotFound, "article " + std::string(id));
  return articles_[it->second];
}

const Section& KnowledgeBase::get_section(std::string_view id, std::size_t section_index) const {
  const auto& article = get_article(id);
  if (section_index >= article.sections.size()) {
    throw Error(ErrorCode::NotFound, "section " + std::to_string(section_index) + " of " + std::string(id));
  }
  return article.sections[section_index];
}

bool KnowledgeBase::contains(std::string_view id) const { return by_id_.contains(std::string(id)); }

const index::VectorIndex& KnowledgeBase::image_index() const {
  if (!image_index_) throw Error(ErrorCode::Empty, "knowledge base has no articles");
  return *image_index_;
}

std::vector<ArticleHit> KnowledgeBase::search_articles(const Embedding& query, std::size_t k) const {
  const auto& idx = image_index();
  // Extra image entries can repeat an article; over-fetch by their count.
  const std::size_t extras = idx.size() - articles_.size();
  const auto rows = idx.search(query, k + extras);
  std::vector<ArticleHit> out;
  std::set<std::size_t> seen;
  for (const auto& hit : rows) {
    const std::size_t article = image_entry_article_[idx.position(hit.id)];
    if (!seen.insert(article).second) continue;
    out.push_back({articles_[article].article_id, hit.score});
    if (out.size() == k) break;
  }
  return out;
}

std::vector<SectionHit> KnowledgeBase::search_sections(const Embedding& query, std::span<const std::string> article_ids,
                                                       std::size_t k) const {
  if (!section_index_) return {};
  std::vector<std::size_t> rows;
  std::set<std::size_t> seen;
  for (const auto& id : article_ids) {
    const auto it = by_id_.find(id);
    if (it == by_id_.end()) throw Error(ErrorCode::NotFound, "article " + id);
    if (!seen.insert(it->second).second) continue;
    const auto& r = section_rows_[it->second];
    rows.insert(rows.end(), r.begin(), r.end());
  }
  if (rows.empty()) return {};
  std::vector<SectionHit> out;
  for (const auto& hit : section_index_->search_rows(query, rows, k)) {
    const auto [article, j] = section_owner_[section_index_->position(hit.id)];
    out.push_back({articles_[article].article_id, j, hit.score});
  }
  return out;
}

void KnowledgeBase::seal() {
  by_id_.clear();
  section_count_ = 0;
  std::vector<index::Entry> images;
  std::vector<index::Entry> sections;
  image_entry_article_.clear();
  section_rows_.assign(articles_.size(), {});
  section_owner_.clear();
  for (std::size_t a = 0; a < articles_.size(); ++a) {
    const auto& article = articles_[a];
    by_id_.emplace(article.article_id, a);
    images.emplace_back(article.article_id, article.image_embedding);
    image_entry_article_.push_back(a);
    for (const auto& [entry_id, embedding] : article.extra_images) {
      images.emplace_back(entry_id, embedding);
      image_entry_article_.push_back(a);
    }
    for (const auto& section : article.sections) {
      section_rows_[a].push_back(sections.size());
      section_owner_.emplace_back(a, section.section_index);
      sections.emplace_back(section_entry_id(article.article_id, section.section_index), section.embedding);
    }
    section_count_ += article.sections.size();
  }
  image_index_.reset();
  section_index_.reset();
  if (!images.empty()) image_index_ = index::VectorIndex::build(images);
  if (!sections.empty()) section_index_ = index::VectorIndex::build(sections);
}

bool KnowledgeBase::operator==(const KnowledgeBase& other) const {
  return dimension_ == other.dimension_ && articles_ == other.articles_;
}

void KnowledgeBase::save(const std::string& directory) const {
  fs::create_directories(directory);
  const fs::path dir(directory);
  const json manifest = {{"format", "wikiprf-kb"},
                         {"format_version", k_kb_format_version},
                         {"dimension", dimension_},
                         {"articles", articles_.size()},
                         {"sections", section_count_},
                         {"image_entries", image_entry_count()}};
  const std::string manifest_text = manifest.dump(2) + "\n";
  codec::write_file((dir / "manifest.json").string(), codec::as_bytes(manifest_text));

  std::string store;
  for (const auto& article : articles_) {
    json sections = json::array();
    for (const auto& s : article.sections) sections.push_back({{"heading", s.heading}, {"body", s.body}});
    json extras = json::array();
    for (const auto& e : article.extra_images) extras.push_back(e.first);
    store += json{{"article_id", article.article_id},
                  {"title", article.title},
                  {"sections", std::move(sections)},
                  {"extra_images", std::move(extras)}}
                 .dump() +
             "\n";
  }
  codec::write_file((dir / "articles.jsonl").string(), codec::as_bytes(store));
  std::error_code ignored;
  fs::remove(dir / "sections.idx", ignored);
  fs::remove(dir / "images.idx", ignored);
  if (image_index_) index::save(*image_index_, (dir / "images.idx").string());
  if (section_index_) index::save(*section_index_, (dir / "sections.idx").string());
}

KnowledgeBase KnowledgeBase::load(const std::string& directory) {
  const fs::path dir(directory);
  const auto manifest_bytes = codec::read_file((dir / "manifest.json").string());
  const auto manifest = json::parse(manifest_bytes.begin(), manifest_bytes.end(), nullptr, false);
  if (manifest.is_discarded() || !manifest.is_object()) throw Error(ErrorCode::BadRecord, "manifest is not JSON");
  if (manifest.value("format_version", -1) != k_kb_format_version) {
    throw Error(ErrorCode::VersionMismatch, "unsupported KB format version");
  }
  KnowledgeBase kb;
  kb.dimension_ = manifest.value("dimension", std::size_t{0});

  std::optional<index::VectorIndex> images, sections;
  if (fs::exists(dir / "images.idx")) images = index::load((dir / "images.idx").string());
  if (fs::exists(dir / "sections.idx")) sections = index::load((dir / "sections.idx").string());
  for (const auto* idx : {&images, &sections}) {
    if (*idx && (*idx)->dimension() != kb.dimension_) {
      throw Error(ErrorCode::DimensionMismatch, "index dimension disagrees with manifest");
    }
  }
  const auto embedding_at = [](const std::optional<index::VectorIndex>& idx, const std::string& id) {
    if (!idx) throw Error(ErrorCode::NotFound, "index missing for entry " + id);
    const auto row = idx->row(idx->position(id));
    return Embedding::from_unit(std::vector<float>(row.begin(), row.end()));
  };

  std::ifstream store(dir / "articles.jsonl");
  if (!store) throw Error(ErrorCode::Io, "cannot open article store");
  std::string line;
  while (std::getline(store, line)) {
    if (codec::trim(line).empty()) continue;
    const auto rec = json::parse(line, nullptr, false);
    if (rec.is_discarded()) throw Error(ErrorCode::BadRecord, "article store line is not JSON");
    Article article;
    article.article_id = rec.at("article_id").get<std::string>();
    article.title = rec.at("title").get<std::string>();
    article.image_embedding = embedding_at(images, article.article_id);
    std::size_t j = 0;
    for (const auto& s : rec.at("sections")) {
      Section section{article.article_id, j, s.at("heading").get<std::string>(), s.at("body").get<std::string>(),
                      embedding_at(sections, section_entry_id(article.article_id, j))};
      article.sections.push_back(std::move(section));
      ++j;
    }
    for (const auto& e : rec.at("extra_images")) {
      const auto id = e.get<std::string>();
      article.extra_images.emplace_back(id, embedding_at(images, id));
    }
    kb.articles_.push_back(std::move(article));
  }
  kb.seal();
  if (kb.articles_.size() != manifest.value("articles", std::size_t{0}) ||
      kb.section_count_ != manifest.value("sections", std::size_t{0})) {
    throw Error(ErrorCode::BadRecord, "manifest counts disagree with article store");
  }
  return kb;
}

KnowledgeBaseBuilder::KnowledgeBaseBuilder(const Embedder& embedder, HeadingRule rule)
    : embedder_(embedder), rule_(std::move(rule)) {
  kb_.dimension_ = embedder.dimension();
}

void KnowledgeBaseBuilder::add_record(std::string_view json_line) {
  const auto rec = json::parse(json_line, nullptr, false);
  if (rec.is_discarded() || !rec.is_object()) throw Error(ErrorCode::BadRecord, "record is not a JSON object");
  const std::string id = string_field(rec, "article_id");
  if (codec::trim(id).empty()) throw Error(ErrorCode::BadRecord, "empty article_id");

  const bool has_ppm = rec.contains("image_ppm_base64");
  const bool has_vec = rec.contains("image_embedding");
  if (has_ppm == has_vec) {
    throw Error(ErrorCode::BadRecord, "exactly one of image_ppm_base64 or image_embedding is required");
  }
  const auto image_embedding = [&] {
    if (has_ppm) {
      const auto bytes = codec::base64_decode(string_field(rec, "image_ppm_base64"));
      return embedder_.embed_image(imaging::decode_ppm(bytes));
    }
    auto values = numbers(rec["image_embedding"], "image_embedding");
    if (values.size() != kb_.dimension_) {
      throw Error(ErrorCode::DimensionMismatch, "image_embedding has " + std::to_string(values.size()) +
                                                    " components, KB dimension is " + std::to_string(kb_.dimension_));
    }
    try {
      return Embedding::normalized(std::move(values));
    } catch (const Error& e) {
      throw Error(ErrorCode::BadRecord, e.what());
    }
  };

  const bool has_text = rec.contains("text");
  const bool has_sections = rec.contains("sections");
  const bool image_only = !has_text && !has_sections && !rec.contains("title");
  const auto existing = kb_.by_id_.find(id);
  if (image_only) {
    if (existing == kb_.by_id_.end()) throw Error(ErrorCode::BadRecord, "extra image for unknown article " + id);
    auto embedding = image_embedding();
    auto& target = kb_.articles_[existing->second];
    target.extra_images.emplace_back(id + "#img" + std::to_string(target.extra_images.size() + 1),
                                     std::move(embedding));
    return;
  }
  if (existing != kb_.by_id_.end()) throw Error(ErrorCode::DuplicateId, id);
  if (has_text == has_sections) throw Error(ErrorCode::BadRecord, "exactly one of text or sections is required");

  std::vector<SplitSection> parts;
  if (has_text) {
    parts = split_sections(string_field(rec, "text"), rule_);
  } else {
    if (!rec["sections"].is_array()) throw Error(ErrorCode::BadRecord, "sections must be an array");
    for (const auto& s : rec["sections"]) {
      if (!s.is_object()) throw Error(ErrorCode::BadRecord, "section must be an object");
      SplitSection part{codec::trim(s.value("heading", std::string())), codec::trim(s.value("body", std::string()))};
      if (!part.body.empty()) parts.push_back(std::move(part));
    }
  }

  Article article;
  article.article_id = id;
  article.title = rec.contains("title") ? string_field(rec, "title") : std::string();
  article.image_embedding = image_embedding();
  for (auto& part : parts) {
    auto embedding = embedder_.embed_text(part.body);
    article.sections.push_back({id, article.sections.size(), std::move(part.heading), std::move(part.body),
                                std::move(embedding)});
  }
  kb_.by_id_.emplace(id, kb_.articles_.size());
  kb_.articles_.push_back(std::move(article));
}

KnowledgeBase KnowledgeBaseBuilder::seal() && {
  kb_.seal();
  return std::move(kb_);
}

IngestResult ingest(std::istream& records, const Embedder& embedder, const HeadingRule& rule) {
  KnowledgeBaseBuilder builder(embedder, rule);
  IngestReport report;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(records, line)) {
    ++line_no;
    if (codec::trim(line).empty()) continue;
    try {
      builder.add_record(line);
    } catch (const Error& e) {
      const bool keep = e.code() == ErrorCode::DuplicateId || e.code() == ErrorCode::DimensionMismatch;
      report.failures.push_back({line_no, keep ? e.code() : ErrorCode::BadRecord, e.what()});
    } catch (const nlohmann::json::exception& e) {
      report.failures.push_back({line_no, ErrorCode::BadRecord, e.what()});
    }
  }
  auto kb = std::move(builder).seal();
  report.articles = kb.article_count();
  report.sections = kb.section_count();
  report.image_entries = kb.image_entry_count();
  report.empty_articles = static_cast<std::size_t>(
      std::count_if(kb.articles().begin(), kb.articles().end(), [](const Article& a) { return a.empty(); }));
  return {std::move(kb), std::move(report)};
}

}  // namespace wikiprf::kb
