// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wikiprf/imaging.hpp"
#include "wikiprf/kb.hpp"
#include "wikiprf/model.hpp"
#include "wikiprf/protocol.hpp"

namespace wikiprf {

inline constexpr int k_trace_schema_version = 1;

struct ToolRun {
  int index = 0;
  protocol::Tool tool = protocol::Tool::Caption;
  std::string argument;
  bool ok = false;
  std::string diagnostic;
  std::string caption_query;          // Caption: C_query
  std::optional<imaging::BBox> bbox;  // Grounding
  int image_width = 0;                // size of the produced query image
  int image_height = 0;
  double seconds = 0.0;
};

struct ModelCall {
  model::Stage stage = model::Stage::ToolPlan;
  model::Role role = model::Role::Policy;
  std::string prompt;
  std::string response;
  bool failed = false;
  std::string error;
  double seconds = 0.0;
};

/// Retrieval performed for one tool-produced query.
struct QueryHits {
  int invocation_index = 0;
  protocol::Tool tool = protocol::Tool::Caption;
  std::string section_scorer;  // "caption" or "question"
  std::vector<kb::ArticleHit> articles;
  std::vector<kb::SectionHit> sections;
  std::string error;
};

struct SectionRef {
  std::string article_id;
  std::size_t section_index = 0;
  bool operator==(const SectionRef&) const = default;
};

struct StageLatency {
  double processing = 0.0;
  double retrieval = 0.0;
  double filtering = 0.0;
  double answering = 0.0;
};

/// Complete record of one sample's run.
struct PipelineTrace {
  std::string sample_id;
  std::string question;
  std::vector<std::string> gt_answers;
  std::optional<std::string> gt_article_id;

  bool tools_enabled = true;
  bool filter_enabled = true;

  protocol::ToolPlan plan;
  bool plan_has_tool_block = false;
  std::vector<std::string> plan_diagnostics;
  std::vector<ToolRun> tool_runs;
  std::vector<ModelCall> model_calls;

  std::vector<kb::ArticleHit> direct_hits;
  std::vector<QueryHits> tool_hits;
  std::vector<SectionRef> search_sections;
  std::string document;     // D, concatenated
  std::string search_text;  // S_search, concatenated

  std::string filter_think;
  std::string knowledge;  // F
  bool filter_degraded = false;

  std::string answer;  // A
  bool answer_degraded = false;

  StageLatency latency;
  bool failed = false;
  std::vector<std::string> errors;
};

nlohmann::json to_json(const PipelineTrace& trace);
/// Errors: BadRecord, VersionMismatch.
PipelineTrace trace_from_json(const nlohmann::json& j);

/// Serialized form written to disk: pretty JSON plus trailing newline.
std::string serialize_trace(const PipelineTrace& trace);

/// Model responses recorded in call order, for ReplayModel.
std::vector<model::RecordedCall> recorded_calls(const PipelineTrace& trace);

}  // namespace wikiprf
