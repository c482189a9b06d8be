// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

/** \file pipeline.hpp
 *  \brief Three-stage orchestration: processing, retrieval, filtering, then
 *  answering.
 *
 * Processing asks the policy model for a tool plan and executes it in the
 * listed order. Caption turns the seed caption into a text query through the
 * tool worker; Grounding asks the tool worker for a box and crops the
 * current image (the mirrored one once a Flip has run); Flip mirrors the
 * reference image. Tool failures are recorded and skipped.
 *
 * Retrieval has two parts. Direct retrieval embeds the reference image and
 * keeps the top k_direct_articles whole articles as D. Tool search embeds
 * every tool query, retrieves k_tool_articles articles from the image index,
 * scores their sections (against the caption embedding for caption queries,
 * against the question embedding for image queries), keeps k_sections per
 * query and unions the results in first-seen order into S_search.
 *
 * Every backend and store is shared read-only, so samples may run on
 * several workers at once.
 */

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wikiprf/embedder.hpp"
#include "wikiprf/imaging.hpp"
#include "wikiprf/kb.hpp"
#include "wikiprf/model.hpp"
#include "wikiprf/protocol.hpp"
#include "wikiprf/trace.hpp"

namespace wikiprf::pipeline {

struct RetrievalConfig {
  std::size_t k_direct_articles = 1;
  std::size_t k_tool_articles = 5;
  std::size_t k_sections = 3;
  bool dedup = true;

  /// Throws Error(InvalidArgument) when any k is zero.
  void validate() const;
};

enum class TimingMode { Wall, Zero };

struct PipelineOptions {
  RetrievalConfig retrieval;
  bool use_tools = true;
  bool use_filter = true;
  TimingMode timing = TimingMode::Wall;
  model::DecodeSettings decode;
};

struct Sample {
  std::string id;
  std::string question;
  std::optional<imaging::Image> image;
  std::string load_error;  // set when the image could not be read
  std::vector<std::string> gt_answers;
  std::optional<std::string> gt_article_id;
};

/// One retrieval query produced by a tool, in plan order.
struct RetrievalQuery {
  int invocation_index = 0;
  protocol::Tool tool = protocol::Tool::Caption;
  std::string text;                    // Caption
  std::optional<imaging::Image> image;  // Grounding, Flip
};

struct QueryBundle {
  std::vector<RetrievalQuery> queries;
  std::vector<std::string> init_captions;

  std::vector<std::string> caption_queries() const;
  std::vector<imaging::Image> grounded_images() const;
  std::optional<imaging::Image> flipped_image() const;
  bool empty() const noexcept { return queries.empty(); }
};

struct ProcessingResult {
  protocol::ToolPlan plan;
  QueryBundle bundle;
};

/// Title then section bodies, blank-line separated; articles likewise.
std::string document_text(std::span<const kb::Article* const> articles);

class Pipeline {
 public:
  Pipeline(const kb::KnowledgeBase& kb, const Embedder& embedder, const model::ModelBackend& policy,
           const model::ModelBackend& tool_worker, PipelineOptions options = {});

  const PipelineOptions& options() const noexcept { return options_; }

  ProcessingResult run_processing(const imaging::Image& image, const std::string& question,
                                  PipelineTrace& trace) const;

  std::vector<const kb::Article*> run_direct_retrieval(const imaging::Image& image, PipelineTrace& trace) const;

  std::vector<SectionRef> run_tool_search(const QueryBundle& bundle, const std::string& question,
                                          PipelineTrace& trace) const;

  /// Returns F. Falls back to the S_search text (degraded) if the policy fails.
  std::string run_filtering(std::span<const kb::Article* const> direct, std::span<const SectionRef> search,
                            const std::string& question, const imaging::Image& image, PipelineTrace& trace) const;

  /// Returns A, trimmed. Empty (degraded) if the tool worker fails.
  std::string answer(const std::string& knowledge, const std::string& question, const imaging::Image& image,
                     PipelineTrace& trace) const;

  /// Never throws; failures are recorded in the trace.
  PipelineTrace run(const Sample& sample) const;

  /// Samples run on up to `workers` threads; output order matches input.
  std::vector<PipelineTrace> run_batch(std::span<const Sample> samples, int workers) const;

 private:
  model::ModelResponse call(model::Role role, model::Stage stage, std::string prompt,
                            std::vector<imaging::Image> images, PipelineTrace& trace) const;
  double elapsed_since(double start) const;
  double now() const;

  const kb::KnowledgeBase& kb_;
  const Embedder& embedder_;
  const model::ModelBackend& policy_;
  const model::ModelBackend& tool_worker_;
  PipelineOptions options_;
};

/// Parses one sample record. Image problems are captured in load_error;
/// structural problems throw Error(BadRecord).
Sample parse_sample(std::string_view json_line, const std::string& base_dir);

/// Reads a line-delimited sample file. A malformed line becomes a sample
/// with id "line-<N>" and a load_error, so one bad record never stops a batch.
std::vector<Sample> load_samples(const std::string& path);

}  // namespace wikiprf::pipeline
