// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "wikiprf/pipeline.hpp"
#include "wikiprf/trace.hpp"

namespace wikiprf::eval {

/// Percent of samples whose gt article is in the top-k of the direct list
/// or of any tool query's article list. Errors: MissingGroundTruth, Empty.
double recall_at_k(std::span<const PipelineTrace> traces, std::size_t k);

/// 100 x mean exact-match reward. Errors: MissingGroundTruth, Empty.
double vqa_accuracy(std::span<const PipelineTrace> traces);

/// Token-level F1 after answer normalization.
double token_f1(std::string_view prediction, std::string_view ground_truth);

struct ToolStat {
  double mean = 0.0;
  double variance = 0.0;  // population
};

struct ToolUsageStats {
  std::size_t samples = 0;
  std::array<ToolStat, 3> per_tool{};  // indexed by protocol::Tool
  std::size_t combinations = 0;        // distinct ordered tool sequences

  const ToolStat& of(protocol::Tool tool) const { return per_tool[static_cast<std::size_t>(tool)]; }
};

ToolUsageStats tool_usage_stats(std::span<const PipelineTrace> traces);

struct EvalReport {
  std::size_t n_samples = 0;
  std::map<std::size_t, double> recall_at_k;
  double vqa_accuracy = 0.0;
  double token_f1 = 0.0;
  ToolUsageStats tool_stats;
  StageLatency stage_latency;  // means, seconds
  std::size_t failed_samples = 0;
};

StageLatency mean_latency(std::span<const PipelineTrace> traces);

EvalReport evaluate(std::span<const PipelineTrace> traces, std::span<const std::size_t> ks);

nlohmann::json to_json(const EvalReport& report);

/// Fixed-width tables: retrieval recall, tool usage (mean / variance) and
/// per-stage latency.
std::string render_recall_table(const EvalReport& report, std::string_view model, std::string_view setting);
std::string render_tool_table(const EvalReport& report, std::string_view model);
std::string render_latency_table(const EvalReport& report);

/// Overwrites trace ground truth with values from samples sharing the id.
void join_ground_truth(std::span<PipelineTrace> traces, std::span<const pipeline::Sample> samples);

}  // namespace wikiprf::eval
