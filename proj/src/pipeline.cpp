// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#include "wikiprf/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "json.hpp"
#include "wikiprf/codec.hpp"
#include "wikiprf/error.hpp"

namespace wikiprf::pipeline {

using protocol::PromptKind;
using protocol::Tool;

void RetrievalConfig::validate() const {
  if (k_direct_articles == 0 || k_tool_articles == 0 || k_sections == 0) {
    throw Error(ErrorCode::InvalidArgument, "retrieval k values must be >= 1");
  }
}

std::vector<std::string> QueryBundle::caption_queries() const {
  std::vector<std::string> out;
  for (const auto& q : queries) {
    if (q.tool == Tool::Caption) out.push_back(q.text);
  }
  return out;
}

std::vector<imaging::Image> QueryBundle::grounded_images() const {
  std::vector<imaging::Image> out;
  for (const auto& q : queries) {
    if (q.tool == Tool::Grounding && q.image) out.push_back(*q.image);
  }
  return out;
}

std::optional<imaging::Image> QueryBundle::flipped_image() const {
  for (const auto& q : queries) {
    if (q.tool == Tool::Flip && q.image) return q.image;
  }
  return std::nullopt;
}

std::string document_text(std::span<const kb::Article* const> articles) {
  std::vector<std::string> parts;
  for (const auto* article : articles) {
    if (!article->title.empty()) parts.push_back(article->title);
    for (const auto& s : article->sections) parts.push_back(s.body);
  }
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += "\n\n";
    out += parts[i];
  }
  return out;
}

namespace {

std::string join_sections(const kb::KnowledgeBase& kb, std::span<const SectionRef> refs) {
  std::string out;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (i > 0) out += "\n\n";
    out += kb.get_section(refs[i].article_id, refs[i].section_index).body;
  }
  return out;
}

}  // namespace

Pipeline::Pipeline(const kb::KnowledgeBase& kb, const Embedder& embedder, const model::ModelBackend& policy,
                   const model::ModelBackend& tool_worker, PipelineOptions options)
    : kb_(kb), embedder_(embedder), policy_(policy), tool_worker_(tool_worker), options_(std::move(options)) {
  options_.retrieval.validate();
  if (embedder_.dimension() != kb_.dimension()) {
    throw Error(ErrorCode::DimensionMismatch, "embedder dimension " + std::to_string(embedder_.dimension()) +
                                                  " vs KB dimension " + std::to_string(kb_.dimension()));
  }
}

double Pipeline::now() const {
  if (options_.timing == TimingMode::Zero) return 0.0;
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

double Pipeline::elapsed_since(double start) const {
  if (options_.timing == TimingMode::Zero) return 0.0;
  return now() - start;
}

model::ModelResponse Pipeline::call(model::Role role, model::Stage stage, std::string prompt,
                                    std::vector<imaging::Image> images, PipelineTrace& trace) const {
  const auto& backend = role == model::Role::Policy ? policy_ : tool_worker_;
  model::ModelRequest request{role, stage, std::move(prompt), std::move(images), options_.decode};
  ModelCall record{stage, role, request.prompt, {}, false, {}, 0.0};
  const double start = now();
  try {
    auto response = backend.generate(request);
    record.response = response.text;
    record.seconds = elapsed_since(start);
    trace.model_calls.push_back(std::move(record));
    return response;
  } catch (const Error& e) {
    record.failed = true;
    record.error = e.what();
    record.seconds = elapsed_since(start);
    trace.model_calls.push_back(std::move(record));
    throw;
  }
}

ProcessingResult Pipeline::run_processing(const imaging::Image& image, const std::string& question,
                                          PipelineTrace& trace) const {
  ProcessingResult result;
  std::string plan_text;
  try {
    plan_text = call(model::Role::Policy, model::Stage::ToolPlan,
                     protocol::render_prompt(PromptKind::ToolCalling, {{"Question", question}}), {image}, trace)
                    .text;
  } catch (const Error& e) {
    trace.errors.push_back(std::string("tool planning failed, empty plan used: ") + e.what());
    return result;
  }
  const auto parsed = protocol::parse_tool_plan(plan_text);
  result.plan = parsed.plan;
  trace.plan = parsed.plan;
  trace.plan_has_tool_block = parsed.has_tool_block;
  for (const auto& d : parsed.diagnostics) {
    trace.plan_diagnostics.push_back(std::string(protocol::diagnostic_name(d.kind)) + ": " + d.detail);
  }

  std::optional<imaging::Image> flipped;
  for (const auto& inv : parsed.plan.invocations) {
    ToolRun run{inv.index, inv.tool, inv.argument, false, {}, {}, std::nullopt, 0, 0, 0.0};
    const double start = now();
    try {
      switch (inv.tool) {
        case Tool::Caption: {
          result.bundle.init_captions.push_back(inv.argument);
          const auto prompt =
              protocol::render_prompt(PromptKind::Captioning, {{"Question", question}, {"Caption", inv.argument}});
          auto caption = codec::trim(call(model::Role::ToolWorker, model::Stage::Caption, prompt, {image}, trace).text);
          if (caption.empty()) throw Error(ErrorCode::ModelFailure, "empty caption");
          run.caption_query = caption;
          result.bundle.queries.push_back({inv.index, Tool::Caption, std::move(caption), std::nullopt});
          break;
        }
        case Tool::Grounding: {
          const auto& source = flipped ? *flipped : image;
          const auto prompt = protocol::render_prompt(PromptKind::Grounding, {{"object", inv.argument}});
          const auto reply = call(model::Role::ToolWorker, model::Stage::Grounding, prompt, {source}, trace).text;
          const auto box = imaging::parse_bbox_json(reply, source.width(), source.height());
          auto cropped = imaging::crop(source, box);
          run.bbox = box;
          run.image_width = cropped.width();
          run.image_height = cropped.height();
          result.bundle.queries.push_back({inv.index, Tool::Grounding, {}, std::move(cropped)});
          break;
        }
        case Tool::Flip: {
          flipped = imaging::flip_horizontal(image);
          run.image_width = flipped->width();
          run.image_height = flipped->height();
          result.bundle.queries.push_back({inv.index, Tool::Flip, {}, *flipped});
          break;
        }
      }
      run.ok = true;
    } catch (const Error& e) {
      run.diagnostic = e.what();
    }
    run.seconds = elapsed_since(start);
    trace.tool_runs.push_back(std::move(run));
  }
  return result;
}

std::vector<const kb::Article*> Pipeline::run_direct_retrieval(const imaging::Image& image,
                                                               PipelineTrace& trace) const {
  const auto hits = kb_.search_articles(embedder_.embed_image(image), options_.retrieval.k_direct_articles);
  std::vector<const kb::Article*> out;
  for (const auto& hit : hits) out.push_back(&kb_.get_article(hit.article_id));
  trace.direct_hits = hits;
  trace.document = document_text(out);
  return out;
}

std::vector<SectionRef> Pipeline::run_tool_search(const QueryBundle& bundle, const std::string& question,
                                                  PipelineTrace& trace) const {
  std::vector<SectionRef> out;
  std::set<std::pair<std::string, std::size_t>> seen;
  std::optional<Embedding> question_embedding;
  const auto& cfg = options_.retrieval;
  for (const auto& query : bundle.queries) {
    QueryHits hits;
    hits.invocation_index = query.invocation_index;
    hits.tool = query.tool;
    try {
      Embedding article_query;
      Embedding section_query;
      if (query.tool == Tool::Caption) {
        article_query = embedder_.embed_text(query.text);
        section_query = article_query;
        hits.section_scorer = "caption";
      } else {
        article_query = embedder_.embed_image(*query.image);
        if (!question_embedding) question_embedding = embedder_.embed_text(question);
        section_query = *question_embedding;
        hits.section_scorer = "question";
      }
      hits.articles = kb_.search_articles(article_query, cfg.k_tool_articles);
      std::vector<std::string> ids;
      for (const auto& a : hits.articles) ids.push_back(a.article_id);
      hits.sections = kb_.search_sections(section_query, ids, cfg.k_sections);
      for (const auto& s : hits.sections) {
        if (cfg.dedup && !seen.emplace(s.article_id, s.section_index).second) continue;
        out.push_back({s.article_id, s.section_index});
      }
    } catch (const Error& e) {
      hits.error = e.what();
    }
    trace.tool_hits.push_back(std::move(hits));
  }
  trace.search_sections = out;
  trace.search_text = join_sections(kb_, out);
  return out;
}

std::string Pipeline::run_filtering(std::span<const kb::Article* const> direct, std::span<const SectionRef> search,
                                    const std::string& question, const imaging::Image& image,
                                    PipelineTrace& trace) const {
  const std::string document = document_text(direct);
  const std::string search_text = join_sections(kb_, search);
  std::vector<std::string> tools_used;
  for (const auto& run : trace.tool_runs) {
    const std::string name(protocol::tool_name(run.tool));
    if (run.ok && std::find(tools_used.begin(), tools_used.end(), name) == tools_used.end()) tools_used.push_back(name);
  }
  std::string tool_tags;
  for (std::size_t i = 0; i < tools_used.size(); ++i) tool_tags += (i ? ", " : "") + tools_used[i];

  const auto prompt = protocol::render_prompt(
      PromptKind::Filtering,
      {{"Question", question}, {"Document", document}, {"Search", tool_tags}, {"Search_result", search_text}});
  try {
    const auto output = protocol::parse_filter_output(
        call(model::Role::Policy, model::Stage::Filter, prompt, {image}, trace).text);
    trace.filter_think = output.think;
    trace.knowledge = output.answer;
    trace.filter_degraded = false;
  } catch (const Error& e) {
    trace.errors.push_back(std::string("filtering failed, raw search result used: ") + e.what());
    trace.knowledge = search_text;
    trace.filter_degraded = true;
  }
  return trace.knowledge;
}

std::string Pipeline::answer(const std::string& knowledge, const std::string& question, const imaging::Image& image,
                             PipelineTrace& trace) const {
  const auto prompt =
      protocol::render_prompt(PromptKind::Answering, {{"Question", question}, {"Search_results", knowledge}});
  try {
    trace.answer = codec::trim(call(model::Role::ToolWorker, model::Stage::Answer, prompt, {image}, trace).text);
    trace.answer_degraded = false;
  } catch (const Error& e) {
    trace.errors.push_back(std::string("answering failed: ") + e.what());
    trace.answer.clear();
    trace.answer_degraded = true;
  }
  return trace.answer;
}

PipelineTrace Pipeline::run(const Sample& sample) const {
  PipelineTrace trace;
  trace.sample_id = sample.id;
  trace.question = sample.question;
  trace.gt_answers = sample.gt_answers;
  trace.gt_article_id = sample.gt_article_id;
  trace.tools_enabled = options_.use_tools;
  trace.filter_enabled = options_.use_filter;
  if (!sample.image) {
    trace.failed = true;
    trace.errors.push_back("sample image unavailable: " + sample.load_error);
    return trace;
  }
  const auto& image = *sample.image;
  try {
    double start = now();
    QueryBundle bundle;
    if (options_.use_tools) bundle = run_processing(image, sample.question, trace).bundle;
    trace.latency.processing = elapsed_since(start);

    start = now();
    const auto direct = run_direct_retrieval(image, trace);
    std::vector<SectionRef> search;
    if (options_.use_tools) search = run_tool_search(bundle, sample.question, trace);
    trace.latency.retrieval = elapsed_since(start);

    start = now();
    std::string knowledge;
    if (options_.use_filter) {
      knowledge = run_filtering(direct, search, sample.question, image, trace);
    } else {
      knowledge = trace.document;
      if (!trace.search_text.empty()) knowledge += (knowledge.empty() ? "" : "\n\n") + trace.search_text;
      trace.knowledge = knowledge;
    }
    trace.latency.filtering = elapsed_since(start);

    start = now();
    answer(knowledge, sample.question, image, trace);
    trace.latency.answering = elapsed_since(start);
  } catch (const std::exception& e) {
    trace.failed = true;
    trace.errors.push_back(e.what());
  }
  return trace;
}

std::vector<PipelineTrace> Pipeline::run_batch(std::span<const Sample> samples, int workers) const {
  std::vector<PipelineTrace> out(samples.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (auto i = next.fetch_add(1); i < samples.size(); i = next.fetch_add(1)) {
      out[i] = run(samples[i]);
      if (out[i].failed) spdlog::warn("sample {} failed: {}", samples[i].id, out[i].errors.back());
    }
  };
  const auto n = static_cast<std::size_t>(std::max(1, workers));
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < std::min(n, samples.size()); ++t) pool.emplace_back(work);
  work();
  return out;
}

Sample parse_sample(std::string_view json_line, const std::string& base_dir) {
  const auto rec = nlohmann::json::parse(json_line, nullptr, false);
  if (rec.is_discarded() || !rec.is_object()) throw Error(ErrorCode::BadRecord, "sample is not a JSON object");
  Sample s;
  try {
    s.id = rec.at("id").is_string() ? rec["id"].get<std::string>() : rec["id"].dump();
    s.question = rec.at("question").get<std::string>();
    if (rec.contains("gt_answer")) {
      const auto& gt = rec["gt_answer"];
      if (gt.is_array()) {
        s.gt_answers = gt.get<std::vector<std::string>>();
      } else {
        s.gt_answers = {gt.get<std::string>()};
      }
    }
    if (rec.contains("gt_article_id") && !rec["gt_article_id"].is_null()) {
      s.gt_article_id = rec["gt_article_id"].get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadRecord, e.what());
  }
  try {
    if (rec.contains("image_ppm_base64")) {
      s.image = imaging::decode_ppm(codec::base64_decode(rec["image_ppm_base64"].get<std::string>()));
    } else if (rec.contains("image_path")) {
      std::filesystem::path p(rec["image_path"].get<std::string>());
      if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
      s.image = imaging::decode_ppm(codec::read_file(p.string()));
    } else {
      s.load_error = "no image_ppm_base64 or image_path";
    }
  } catch (const std::exception& e) {
    s.load_error = e.what();
  }
  return s;
}

std::vector<Sample> load_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open samples " + path);
  const auto base = std::filesystem::path(path).parent_path().string();
  std::vector<Sample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (codec::trim(line).empty()) continue;
    try {
      out.push_back(parse_sample(line, base));
    } catch (const Error& e) {
      Sample bad;
      bad.id = "line-" + std::to_string(line_no);
      bad.load_error = e.what();
      out.push_back(std::move(bad));
    }
  }
  return out;
}

}  // namespace wikiprf::pipeline
