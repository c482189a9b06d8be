// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#include "wikiprf/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>
#include <unordered_map>

#include "wikiprf/error.hpp"
#include "wikiprf/rl.hpp"

namespace wikiprf::eval {

namespace {

void require_nonempty(std::span<const PipelineTrace> traces) {
  if (traces.empty()) throw Error(ErrorCode::Empty, "no traces to evaluate");
}

bool in_top_k(const std::vector<kb::ArticleHit>& hits, const std::string& id, std::size_t k) {
  const auto n = std::min(k, hits.size());
  return std::any_of(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(n),
                     [&](const kb::ArticleHit& h) { return h.article_id == id; });
}

std::vector<std::string> tokens(std::string_view text) {
  std::istringstream in(rl::normalize_answer(text));
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(std::move(w));
  return out;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

double recall_at_k(std::span<const PipelineTrace> traces, std::size_t k) {
  require_nonempty(traces);
  std::size_t hits = 0;
  for (const auto& t : traces) {
    if (!t.gt_article_id) throw Error(ErrorCode::MissingGroundTruth, "sample " + t.sample_id + " lacks gt_article_id");
    bool found = in_top_k(t.direct_hits, *t.gt_article_id, k);
    for (const auto& q : t.tool_hits) found = found || in_top_k(q.articles, *t.gt_article_id, k);
    if (found) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(traces.size());
}

double vqa_accuracy(std::span<const PipelineTrace> traces) {
  require_nonempty(traces);
  std::size_t correct = 0;
  for (const auto& t : traces) {
    if (t.gt_answers.empty()) throw Error(ErrorCode::MissingGroundTruth, "sample " + t.sample_id + " lacks gt_answer");
    correct += static_cast<std::size_t>(rl::em_answer_reward(t.answer, t.gt_answers));
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(traces.size());
}

double token_f1(std::string_view prediction, std::string_view ground_truth) {
  const auto pred = tokens(prediction);
  const auto gt = tokens(ground_truth);
  if (pred.empty() && gt.empty()) return 1.0;
  if (pred.empty() || gt.empty()) return 0.0;
  std::unordered_map<std::string, int> counts;
  for (const auto& w : gt) ++counts[w];
  std::size_t common = 0;
  for (const auto& w : pred) {
    auto it = counts.find(w);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / static_cast<double>(pred.size());
  const double recall = static_cast<double>(common) / static_cast<double>(gt.size());
  return 2.0 * precision * recall / (precision + recall);
}

ToolUsageStats tool_usage_stats(std::span<const PipelineTrace> traces) {
  ToolUsageStats stats;
  stats.samples = traces.size();
  if (traces.empty()) return stats;
  std::set<std::vector<protocol::Tool>> combos;
  std::array<std::vector<double>, 3> counts;
  for (const auto& t : traces) {
    std::array<double, 3> c{};
    std::vector<protocol::Tool> sequence;
    for (const auto& inv : t.plan.invocations) {
      c[static_cast<std::size_t>(inv.tool)] += 1.0;
      sequence.push_back(inv.tool);
    }
    for (std::size_t i = 0; i < 3; ++i) counts[i].push_back(c[i]);
    combos.insert(std::move(sequence));
  }
  const double n = static_cast<double>(traces.size());
  for (std::size_t i = 0; i < 3; ++i) {
    double mean = 0.0;
    for (double v : counts[i]) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : counts[i]) var += (v - mean) * (v - mean);
    stats.per_tool[i] = {mean, var / n};
  }
  stats.combinations = combos.size();
  return stats;
}

StageLatency mean_latency(std::span<const PipelineTrace> traces) {
  StageLatency m;
  if (traces.empty()) return m;
  for (const auto& t : traces) {
    m.processing += t.latency.processing;
    m.retrieval += t.latency.retrieval;
    m.filtering += t.latency.filtering;
    m.answering += t.latency.answering;
  }
  const double n = static_cast<double>(traces.size());
  m.processing /= n;
  m.retrieval /= n;
  m.filtering /= n;
  m.answering /= n;
  return m;
}

EvalReport evaluate(std::span<const PipelineTrace> traces, std::span<const std::size_t> ks) {
  require_nonempty(traces);
  EvalReport report;
  report.n_samples = traces.size();
  for (const auto k : ks) report.recall_at_k[k] = recall_at_k(traces, k);
  report.vqa_accuracy = vqa_accuracy(traces);
  double f1 = 0.0;
  for (const auto& t : traces) {
    double best = 0.0;
    for (const auto& gt : t.gt_answers) best = std::max(best, token_f1(t.answer, gt));
    f1 += best;
  }
  report.token_f1 = f1 / static_cast<double>(traces.size());
  report.tool_stats = tool_usage_stats(traces);
  report.stage_latency = mean_latency(traces);
  report.failed_samples =
      static_cast<std::size_t>(std::count_if(traces.begin(), traces.end(), [](const auto& t) { return t.failed; }));
  return report;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json recall = nlohmann::json::object();
  for (const auto& [k, v] : r.recall_at_k) recall[std::to_string(k)] = v;
  nlohmann::json tools = nlohmann::json::object();
  for (auto tool : {protocol::Tool::Caption, protocol::Tool::Grounding, protocol::Tool::Flip}) {
    tools[std::string(protocol::tool_name(tool))] = {{"mean", r.tool_stats.of(tool).mean},
                                                     {"variance", r.tool_stats.of(tool).variance}};
  }
  return {{"n_samples", r.n_samples},
          {"failed_samples", r.failed_samples},
          {"recall_at_k", recall},
          {"vqa_accuracy", r.vqa_accuracy},
          {"token_f1", r.token_f1},
          {"tool_stats", {{"per_tool", tools}, {"combinations", r.tool_stats.combinations}}},
          {"stage_latency",
           {{"processing", r.stage_latency.processing},
            {"retrieval", r.stage_latency.retrieval},
            {"filtering", r.stage_latency.filtering},
            {"answering", r.stage_latency.answering}}}};
}

std::string render_recall_table(const EvalReport& report, std::string_view model, std::string_view setting) {
  std::string head = pad("Model", 16) + pad("Setting", 18);
  std::string row = pad(std::string(model), 16) + pad(std::string(setting), 18);
  for (const auto& [k, v] : report.recall_at_k) {
    head += pad("Recall@" + std::to_string(k), 12);
    row += pad(fixed(v), 12);
  }
  return "Recall of retrieved articles.\n" + head + "\n" + row + "\n";
}

std::string render_tool_table(const EvalReport& report, std::string_view model) {
  const auto cell = [&](protocol::Tool t) {
    return pad(fixed(report.tool_stats.of(t).mean) + " / " + fixed(report.tool_stats.of(t).variance), 15);
  };
  return "Tool usage statistics (mean / variance).\n" + pad("Model", 16) + pad("Combinations", 14) +
         pad("Captioning", 15) + pad("Grounding", 15) + pad("Flipping", 15) + "\n" + pad(std::string(model), 16) +
         pad(std::to_string(report.tool_stats.combinations), 14) + cell(protocol::Tool::Caption) +
         cell(protocol::Tool::Grounding) + cell(protocol::Tool::Flip) + "\n";
}

std::string render_latency_table(const EvalReport& report) {
  const auto& l = report.stage_latency;
  return "Average duration of each stage (s).\n" + pad("Processing", 14) + pad("Retrieval", 14) + pad("Filtering", 14) +
         pad("Answering", 14) + "\n" + pad(fixed(l.processing), 14) + pad(fixed(l.retrieval), 14) +
         pad(fixed(l.filtering), 14) + pad(fixed(l.answering), 14) + "\n";
}

void join_ground_truth(std::span<PipelineTrace> traces, std::span<const pipeline::Sample> samples) {
  std::unordered_map<std::string, const pipeline::Sample*> by_id;
  for (const auto& s : samples) by_id[s.id] = &s;
  for (auto& t : traces) {
    const auto it = by_id.find(t.sample_id);
    if (it == by_id.end()) continue;
    if (!it->second->gt_answers.empty()) t.gt_answers = it->second->gt_answers;
    if (it->second->gt_article_id) t.gt_article_id = it->second->gt_article_id;
  }
}

}  // namespace wikiprf::eval
