// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#include "wikiprf/model.hpp"

#include <chrono>
#include <fstream>
#include <istream>

#include "http_client.hpp"
#include "json.hpp"
#include "wikiprf/codec.hpp"
#include "wikiprf/error.hpp"

namespace wikiprf::model {

using nlohmann::json;

std::string_view role_name(Role role) { return role == Role::Policy ? "policy" : "tool_worker"; }

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::ToolPlan: return "tool_plan";
    case Stage::Caption: return "caption";
    case Stage::Grounding: return "grounding";
    case Stage::Filter: return "filter";
    case Stage::Answer: return "answer";
  }
  return "";
}

std::optional<Stage> parse_stage(std::string_view name) {
  for (auto s : {Stage::ToolPlan, Stage::Caption, Stage::Grounding, Stage::Filter, Stage::Answer}) {
    if (stage_name(s) == name) return s;
  }
  return std::nullopt;
}

void validate(const ModelRequest& request) {
  if (request.prompt.empty()) throw Error(ErrorCode::InvalidArgument, "empty prompt");
  if (!(request.decode.temperature >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative temperature");
}

namespace {

std::vector<TokenLogprob> parse_logprobs(const json& j) {
  if (!j.is_array()) throw Error(ErrorCode::BadRecord, "token_logprobs must be an array");
  std::vector<TokenLogprob> out;
  for (const auto& pair : j) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() || !pair[1].is_number()) {
      throw Error(ErrorCode::BadRecord, "token_logprobs entries must be [token_id, logprob]");
    }
    const double lp = pair[1].get<double>();
    if (lp > 0.0) throw Error(ErrorCode::BadRecord, "logprob must be <= 0");
    out.push_back({pair[0].get<std::int64_t>(), lp});
  }
  return out;
}

}  // namespace

std::vector<ScriptRule> parse_script(std::istream& in) {
  std::vector<ScriptRule> rules;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (codec::trim(line).empty()) continue;
    const auto where = "script line " + std::to_string(line_no) + ": ";
    const auto rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) throw Error(ErrorCode::BadRecord, where + "not a JSON object");
    ScriptRule rule;
    const auto stage = parse_stage(rec.value("stage", std::string()));
    if (!stage) throw Error(ErrorCode::BadRecord, where + "unknown stage");
    rule.stage = *stage;
    try {
      rule.contains = rec.value("contains", std::string());
      rule.response = rec.value("response", std::string());
      rule.fail = rec.value("fail", false);
      if (rec.contains("token_logprobs")) rule.token_logprobs = parse_logprobs(rec["token_logprobs"]);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::BadRecord, where + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::BadRecord, where + e.what());
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::vector<ScriptRule> load_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open script " + path);
  return parse_script(in);
}

ModelResponse ScriptedModel::generate(const ModelRequest& request) const {
  validate(request);
  for (const auto& rule : rules_) {
    if (rule.stage != request.stage) continue;
    if (request.prompt.find(rule.contains) == std::string::npos) continue;
    if (rule.fail) throw Error(ErrorCode::ModelFailure, "scripted failure at stage " + std::string(stage_name(rule.stage)));
    return {rule.response, rule.token_logprobs, 0.0};
  }
  throw Error(ErrorCode::NoScriptMatch, "no rule for stage " + std::string(stage_name(request.stage)));
}

RemoteModel::RemoteModel(const RemoteModelConfig& config)
    : client_(std::make_unique<wikiprf::HttpJsonClient>(config.endpoint, config.timeout_seconds,
                                                         config.max_in_flight, config.retries)) {}

RemoteModel::~RemoteModel() = default;

ModelResponse RemoteModel::generate(const ModelRequest& request) const {
  validate(request);
  json images = json::array();
  for (const auto& image : request.images) images.push_back(codec::base64_encode(imaging::encode_ppm(image)));
  const json body = {{"role", role_name(request.role)},
                     {"prompt", request.prompt},
                     {"images", std::move(images)},
                     {"max_tokens", request.decode.max_tokens},
                     {"temperature", request.decode.temperature},
                     {"seed", request.decode.seed}};
  const auto start = std::chrono::steady_clock::now();
  const auto response = client_->post(body);
  const auto it = response.find("text");
  if (it == response.end() || !it->is_string()) throw Error(ErrorCode::ModelFailure, "generation response lacks 'text'");
  ModelResponse out;
  out.text = it->get<std::string>();
  if (response.contains("token_logprobs") && !response["token_logprobs"].is_null()) {
    try {
      out.token_logprobs = parse_logprobs(response["token_logprobs"]);
    } catch (const Error& e) {
      throw Error(ErrorCode::ModelFailure, e.what());
    }
  }
  out.latency_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

ModelResponse ReplayModel::generate(const ModelRequest& request) const {
  validate(request);
  std::lock_guard lock(mu_);
  for (std::size_t i = 0; i < calls_.size(); ++i) {
    if (used_[i] || calls_[i].stage != request.stage) continue;
    used_[i] = true;
    if (calls_[i].failed) throw Error(ErrorCode::ModelFailure, "recorded failure");
    return {calls_[i].response, std::nullopt, 0.0};
  }
  throw Error(ErrorCode::NoScriptMatch, "replay exhausted for stage " + std::string(stage_name(request.stage)));
}

}  // namespace wikiprf::model
