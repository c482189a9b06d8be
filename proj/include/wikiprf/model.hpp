// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

/** \file model.hpp
 *  \brief Generate-text boundary for the policy and tool-worker roles.
 *
 * Backends: a scripted deterministic mock, a remote JSON client and a
 * replay backend that plays back the responses recorded in a trace.
 *
 * Script file, one JSON object per line:
 *
 *     {"stage": "tool_plan"|"caption"|"grounding"|"filter"|"answer",
 *      "contains": "prompt substring", "response": "canned text",
 *      "fail": false, "token_logprobs": [[id, logprob], ...]}
 *
 * The first rule whose stage equals the request stage and whose
 * `contains` occurs in the prompt wins. "fail": true makes the rule raise
 * ModelFailure, which is how fixtures inject backend errors.
 */

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wikiprf/imaging.hpp"

namespace wikiprf {
class HttpJsonClient;
}

namespace wikiprf::model {

enum class Role { Policy, ToolWorker };
enum class Stage { ToolPlan, Caption, Grounding, Filter, Answer };

std::string_view role_name(Role role);
std::string_view stage_name(Stage stage);
std::optional<Stage> parse_stage(std::string_view name);

struct DecodeSettings {
  int max_tokens = 512;
  double temperature = 0.0;
  std::uint64_t seed = 0;
};

struct ModelRequest {
  Role role = Role::Policy;
  Stage stage = Stage::ToolPlan;
  std::string prompt;
  std::vector<imaging::Image> images;
  DecodeSettings decode;
};

struct TokenLogprob {
  std::int64_t token_id = 0;
  double logprob = 0.0;
  bool operator==(const TokenLogprob&) const = default;
};

struct ModelResponse {
  std::string text;
  std::optional<std::vector<TokenLogprob>> token_logprobs;
  double latency_seconds = 0.0;
};

/// Throws Error(InvalidArgument) on an empty prompt or negative temperature.
void validate(const ModelRequest& request);

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  /// Errors: NoScriptMatch, ModelFailure, RemoteUnavailable, Timeout.
  virtual ModelResponse generate(const ModelRequest& request) const = 0;
};

struct ScriptRule {
  Stage stage = Stage::ToolPlan;
  std::string contains;
  std::string response;
  bool fail = false;
  std::optional<std::vector<TokenLogprob>> token_logprobs;
};

/// Errors: BadRecord (with line number in the message), Io.
std::vector<ScriptRule> parse_script(std::istream& in);
std::vector<ScriptRule> load_script(const std::string& path);

class ScriptedModel final : public ModelBackend {
 public:
  explicit ScriptedModel(std::vector<ScriptRule> rules) : rules_(std::move(rules)) {}
  ModelResponse generate(const ModelRequest& request) const override;
  const std::vector<ScriptRule>& rules() const noexcept { return rules_; }

 private:
  std::vector<ScriptRule> rules_;
};

struct RemoteModelConfig {
  std::string endpoint;
  double timeout_seconds = 120.0;
  int max_in_flight = 2;
  int retries = 2;
};

/// Wire: POST {"role", "prompt", "images": [base64 PPM], "max_tokens",
/// "temperature", "seed"} -> {"text", "token_logprobs"?: [[id, logprob]]}.
class RemoteModel final : public ModelBackend {
 public:
  explicit RemoteModel(const RemoteModelConfig& config);
  ~RemoteModel() override;
  ModelResponse generate(const ModelRequest& request) const override;

 private:
  std::unique_ptr<wikiprf::HttpJsonClient> client_;
};

struct RecordedCall {
  Stage stage = Stage::ToolPlan;
  std::string response;
  bool failed = false;
};

/// Returns recorded responses per stage, in the order they were recorded.
/// Used to replay a trace; a call beyond the recording raises NoScriptMatch.
class ReplayModel final : public ModelBackend {
 public:
  explicit ReplayModel(std::vector<RecordedCall> calls) : calls_(std::move(calls)) {}
  ModelResponse generate(const ModelRequest& request) const override;

 private:
  std::vector<RecordedCall> calls_;
  mutable std::mutex mu_;
  mutable std::vector<bool> used_ = std::vector<bool>(calls_.size(), false);
};

}  // namespace wikiprf::model
