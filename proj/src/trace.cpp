// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#include "wikiprf/trace.hpp"

#include "wikiprf/error.hpp"

namespace wikiprf {

using nlohmann::json;

namespace {

json hits_json(const std::vector<kb::ArticleHit>& hits) {
  json out = json::array();
  for (const auto& h : hits) out.push_back({{"article_id", h.article_id}, {"score", h.score}});
  return out;
}

std::vector<kb::ArticleHit> hits_from(const json& j) {
  std::vector<kb::ArticleHit> out;
  for (const auto& h : j) out.push_back({h.at("article_id").get<std::string>(), h.at("score").get<double>()});
  return out;
}

protocol::Tool tool_from(const json& j) {
  const auto tool = protocol::parse_tool_name(j.get<std::string>());
  if (!tool) throw Error(ErrorCode::BadRecord, "unknown tool in trace");
  return *tool;
}

model::Stage stage_from(const json& j) {
  const auto stage = model::parse_stage(j.get<std::string>());
  if (!stage) throw Error(ErrorCode::BadRecord, "unknown stage in trace");
  return *stage;
}

}  // namespace

json to_json(const PipelineTrace& t) {
  json invocations = json::array();
  for (const auto& inv : t.plan.invocations) {
    invocations.push_back({{"index", inv.index}, {"tool", protocol::tool_name(inv.tool)}, {"argument", inv.argument}});
  }
  json runs = json::array();
  for (const auto& r : t.tool_runs) {
    json run = {{"index", r.index},
                {"tool", protocol::tool_name(r.tool)},
                {"argument", r.argument},
                {"ok", r.ok},
                {"diagnostic", r.diagnostic},
                {"caption_query", r.caption_query},
                {"image_width", r.image_width},
                {"image_height", r.image_height},
                {"seconds", r.seconds}};
    run["bbox"] = r.bbox ? json::array({r.bbox->x1, r.bbox->y1, r.bbox->x2, r.bbox->y2}) : json(nullptr);
    runs.push_back(std::move(run));
  }
  json calls = json::array();
  for (const auto& c : t.model_calls) {
    calls.push_back({{"stage", model::stage_name(c.stage)},
                     {"role", model::role_name(c.role)},
                     {"prompt", c.prompt},
                     {"response", c.response},
                     {"failed", c.failed},
                     {"error", c.error},
                     {"seconds", c.seconds}});
  }
  json tool_hits = json::array();
  for (const auto& q : t.tool_hits) {
    json sections = json::array();
    for (const auto& s : q.sections) {
      sections.push_back({{"article_id", s.article_id}, {"section_index", s.section_index}, {"score", s.score}});
    }
    tool_hits.push_back({{"invocation_index", q.invocation_index},
                         {"tool", protocol::tool_name(q.tool)},
                         {"section_scorer", q.section_scorer},
                         {"articles", hits_json(q.articles)},
                         {"sections", std::move(sections)},
                         {"error", q.error}});
  }
  json search = json::array();
  for (const auto& s : t.search_sections) {
    search.push_back({{"article_id", s.article_id}, {"section_index", s.section_index}});
  }
  return json{
      {"schema_version", k_trace_schema_version},
      {"sample_id", t.sample_id},
      {"question", t.question},
      {"gt_answers", t.gt_answers},
      {"gt_article_id", t.gt_article_id ? json(*t.gt_article_id) : json(nullptr)},
      {"tools_enabled", t.tools_enabled},
      {"filter_enabled", t.filter_enabled},
      {"plan",
       {{"think", t.plan.think},
        {"invocations", std::move(invocations)},
        {"has_tool_block", t.plan_has_tool_block},
        {"diagnostics", t.plan_diagnostics}}},
      {"tool_runs", std::move(runs)},
      {"model_calls", std::move(calls)},
      {"direct_hits", hits_json(t.direct_hits)},
      {"tool_hits", std::move(tool_hits)},
      {"search_sections", std::move(search)},
      {"document", t.document},
      {"search_text", t.search_text},
      {"filter", {{"think", t.filter_think}, {"knowledge", t.knowledge}, {"degraded", t.filter_degraded}}},
      {"answer", {{"text", t.answer}, {"degraded", t.answer_degraded}}},
      {"latency",
       {{"processing", t.latency.processing},
        {"retrieval", t.latency.retrieval},
        {"filtering", t.latency.filtering},
        {"answering", t.latency.answering}}},
      {"failed", t.failed},
      {"errors", t.errors},
  };
}

PipelineTrace trace_from_json(const json& j) {
  try {
    if (j.at("schema_version").get<int>() != k_trace_schema_version) {
      throw Error(ErrorCode::VersionMismatch, "trace schema version");
    }
    PipelineTrace t;
    t.sample_id = j.at("sample_id").get<std::string>();
    t.question = j.at("question").get<std::string>();
    t.gt_answers = j.at("gt_answers").get<std::vector<std::string>>();
    if (!j.at("gt_article_id").is_null()) t.gt_article_id = j["gt_article_id"].get<std::string>();
    t.tools_enabled = j.at("tools_enabled").get<bool>();
    t.filter_enabled = j.at("filter_enabled").get<bool>();
    const auto& plan = j.at("plan");
    t.plan.think = plan.at("think").get<std::string>();
    for (const auto& inv : plan.at("invocations")) {
      t.plan.invocations.push_back(
          {inv.at("index").get<int>(), tool_from(inv.at("tool")), inv.at("argument").get<std::string>()});
    }
    t.plan_has_tool_block = plan.at("has_tool_block").get<bool>();
    t.plan_diagnostics = plan.at("diagnostics").get<std::vector<std::string>>();
    for (const auto& r : j.at("tool_runs")) {
      ToolRun run;
      run.index = r.at("index").get<int>();
      run.tool = tool_from(r.at("tool"));
      run.argument = r.at("argument").get<std::string>();
      run.ok = r.at("ok").get<bool>();
      run.diagnostic = r.at("diagnostic").get<std::string>();
      run.caption_query = r.at("caption_query").get<std::string>();
      if (!r.at("bbox").is_null()) {
        const auto b = r["bbox"].get<std::vector<int>>();
        if (b.size() != 4) throw Error(ErrorCode::BadRecord, "bbox must have 4 entries");
        run.bbox = imaging::BBox{b[0], b[1], b[2], b[3]};
      }
      run.image_width = r.at("image_width").get<int>();
      run.image_height = r.at("image_height").get<int>();
      run.seconds = r.at("seconds").get<double>();
      t.tool_runs.push_back(std::move(run));
    }
    for (const auto& c : j.at("model_calls")) {
      ModelCall call;
      call.stage = stage_from(c.at("stage"));
      call.role = c.at("role").get<std::string>() == "policy" ? model::Role::Policy : model::Role::ToolWorker;
      call.prompt = c.at("prompt").get<std::string>();
      call.response = c.at("response").get<std::string>();
      call.failed = c.at("failed").get<bool>();
      call.error = c.at("error").get<std::string>();
      call.seconds = c.at("seconds").get<double>();
      t.model_calls.push_back(std::move(call));
    }
    t.direct_hits = hits_from(j.at("direct_hits"));
    for (const auto& q : j.at("tool_hits")) {
      QueryHits hits;
      hits.invocation_index = q.at("invocation_index").get<int>();
      hits.tool = tool_from(q.at("tool"));
      hits.section_scorer = q.at("section_scorer").get<std::string>();
      hits.articles = hits_from(q.at("articles"));
      for (const auto& s : q.at("sections")) {
        hits.sections.push_back({s.at("article_id").get<std::string>(), s.at("section_index").get<std::size_t>(),
                                 s.at("score").get<double>()});
      }
      hits.error = q.at("error").get<std::string>();
      t.tool_hits.push_back(std::move(hits));
    }
    for (const auto& s : j.at("search_sections")) {
      t.search_sections.push_back({s.at("article_id").get<std::string>(), s.at("section_index").get<std::size_t>()});
    }
    t.document = j.at("document").get<std::string>();
    t.search_text = j.at("search_text").get<std::string>();
    const auto& filter = j.at("filter");
    t.filter_think = filter.at("think").get<std::string>();
    t.knowledge = filter.at("knowledge").get<std::string>();
    t.filter_degraded = filter.at("degraded").get<bool>();
    t.answer = j.at("answer").at("text").get<std::string>();
    t.answer_degraded = j.at("answer").at("degraded").get<bool>();
    const auto& lat = j.at("latency");
    t.latency = {lat.at("processing").get<double>(), lat.at("retrieval").get<double>(),
                 lat.at("filtering").get<double>(), lat.at("answering").get<double>()};
    t.failed = j.at("failed").get<bool>();
    t.errors = j.at("errors").get<std::vector<std::string>>();
    return t;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadRecord, std::string("malformed trace: ") + e.what());
  }
}

std::string serialize_trace(const PipelineTrace& trace) { return to_json(trace).dump(2) + "\n"; }

std::vector<model::RecordedCall> recorded_calls(const PipelineTrace& trace) {
  std::vector<model::RecordedCall> out;
  for (const auto& c : trace.model_calls) out.push_back({c.stage, c.response, c.failed});
  return out;
}

}  // namespace wikiprf
