// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#include <sstream>

#include <gtest/gtest.h>

#include "wikiprf/error.hpp"
#include "wikiprf/model.hpp"

namespace wikiprf::model {
namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::InvalidArgument;
}

ModelRequest request(Stage stage, std::string prompt) { return {Role::Policy, stage, std::move(prompt), {}, {}}; }

TEST(ScriptedModel, FirstMatchingRuleWins) {
  std::istringstream script(
      R"({"stage": "tool_plan", "contains": "statue", "response": "<think>p</think><tool></tool>"})"
      "\n"
      R"({"stage": "tool_plan", "contains": "", "response": "fallback"})"
      "\n"
      R"({"stage": "answer", "contains": "statue", "response": "bronze"})");
  const ScriptedModel m(parse_script(script));
  EXPECT_EQ(m.generate(request(Stage::ToolPlan, "what is the statue")).text, "<think>p</think><tool></tool>");
  EXPECT_EQ(m.generate(request(Stage::ToolPlan, "anything")).text, "fallback");
  EXPECT_EQ(m.generate(request(Stage::Answer, "statue?")).text, "bronze");
  EXPECT_EQ(code_of([&] { m.generate(request(Stage::Answer, "tower?")); }), ErrorCode::NoScriptMatch);
  EXPECT_EQ(code_of([&] { m.generate(request(Stage::Caption, "statue")); }), ErrorCode::NoScriptMatch);
}

TEST(ScriptedModel, PureAcrossCalls) {
  std::istringstream script(R"({"stage": "caption", "contains": "x", "response": "c", "token_logprobs": [[1, -0.5]]})");
  const ScriptedModel m(parse_script(script));
  const auto a = m.generate(request(Stage::Caption, "x"));
  const auto b = m.generate(request(Stage::Caption, "x"));
  EXPECT_EQ(a.text, b.text);
  EXPECT_EQ(a.token_logprobs, b.token_logprobs);
  EXPECT_EQ(a.latency_seconds, 0.0);
}

TEST(ScriptedModel, FailRuleRaisesModelFailure) {
  std::istringstream script(R"({"stage": "filter", "contains": "", "response": "", "fail": true})");
  const ScriptedModel m(parse_script(script));
  EXPECT_EQ(code_of([&] { m.generate(request(Stage::Filter, "p")); }), ErrorCode::ModelFailure);
}

TEST(Script, RejectsBadRules) {
  for (const char* bad : {R"({"stage": "summarise", "contains": "", "response": ""})",
                          R"({"stage": "answer", "response": 3})", "not json",
                          R"({"stage": "answer", "contains": "", "response": "", "token_logprobs": [[1, 0.5]]})"}) {
    std::istringstream in(bad);
    EXPECT_EQ(code_of([&] { parse_script(in); }), ErrorCode::BadRecord) << bad;
  }
}

TEST(Request, Validation) {
  EXPECT_EQ(code_of([] { validate(request(Stage::Answer, "")); }), ErrorCode::InvalidArgument);
  auto r = request(Stage::Answer, "p");
  r.decode.temperature = -0.1;
  EXPECT_EQ(code_of([&] { validate(r); }), ErrorCode::InvalidArgument);
  std::istringstream script(R"({"stage": "answer", "contains": "", "response": "a"})");
  EXPECT_EQ(code_of([&] { ScriptedModel(parse_script(script)).generate(r); }), ErrorCode::InvalidArgument);
}

TEST(ReplayModel, PlaysBackPerStageInOrder) {
  const ReplayModel m({{Stage::Caption, "c1", false}, {Stage::Answer, "a", false}, {Stage::Caption, "c2", false},
                       {Stage::Filter, "", true}});
  EXPECT_EQ(m.generate(request(Stage::Caption, "p")).text, "c1");
  EXPECT_EQ(m.generate(request(Stage::Caption, "p")).text, "c2");
  EXPECT_EQ(m.generate(request(Stage::Answer, "p")).text, "a");
  EXPECT_EQ(code_of([&] { m.generate(request(Stage::Filter, "p")); }), ErrorCode::ModelFailure);
  EXPECT_EQ(code_of([&] { m.generate(request(Stage::Caption, "p")); }), ErrorCode::NoScriptMatch);
}

TEST(Names, StageRoundTrip) {
  for (auto s : {Stage::ToolPlan, Stage::Caption, Stage::Grounding, Stage::Filter, Stage::Answer}) {
    EXPECT_EQ(parse_stage(stage_name(s)), s);
  }
  EXPECT_FALSE(parse_stage("summary"));
  EXPECT_EQ(role_name(Role::ToolWorker), "tool_worker");
}

}  // namespace
}  // namespace wikiprf::model
