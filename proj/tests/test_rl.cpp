// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "wikiprf/error.hpp"
#include "wikiprf/rl.hpp"

namespace wikiprf::rl {
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

int em(std::string_view pred, std::vector<std::string> gt) { return em_answer_reward(pred, gt); }

TEST(ExactMatch, Examples) {
  EXPECT_EQ(em("Bronze.", {"bronze"}), 1);
  EXPECT_EQ(em("copper", {"bronze"}), 0);
  EXPECT_EQ(em("the Eiffel Tower", {"eiffel tower"}), 1);
  EXPECT_EQ(em("  An   apple!? ", {"apple"}), 1);
  EXPECT_EQ(em("Theatre", {"atre"}), 0);
  EXPECT_EQ(em("1514", {"1900", "1514"}), 1);
  EXPECT_EQ(code_of([] { em("x", {}); }), ErrorCode::MissingGroundTruth);
}

TEST(ExactMatch, Normalization) {
  EXPECT_EQ(normalize_answer("  The  Statue  of Liberty. "), "statue of liberty");
  EXPECT_EQ(normalize_answer("a"), "a");
  EXPECT_EQ(normalize_answer("St. Mark's"), "st. mark's");
}

TEST(ComposeReward, TruthTables) {
  const double defaults[2][2][2] = {{{0.0, 0.7}, {0.3, 1.0}}, {{1.0, 1.7}, {1.3, 2.0}}};
  const double equal[2][2][2] = {{{0.0, 1.0}, {1.0, 2.0}}, {{2.0, 3.0}, {3.0, 4.0}}};
  for (int e = 0; e < 2; ++e) {
    for (int t = 0; t < 2; ++t) {
      for (int f = 0; f < 2; ++f) {
        EXPECT_DOUBLE_EQ(compose_reward(e, t, f, k_default_weights), defaults[e][t][f]);
        EXPECT_DOUBLE_EQ(compose_reward(e, t, f, weights_preset("appendix-equal")), equal[e][t][f]);
      }
    }
  }
  EXPECT_EQ(code_of([] { weights_preset("other"); }), ErrorCode::InvalidArgument);
  EXPECT_DOUBLE_EQ(weights_preset("paper").beta, 0.3);
}

TEST(GroupAdvantages, Examples) {
  const std::vector<double> flat{1, 1, 1};
  for (double a : group_advantages(flat)) EXPECT_EQ(a, 0.0);
  const std::vector<double> r{2, 1, 0};
  const auto a = group_advantages(r, 0.0);
  const double s = std::sqrt(2.0 / 3.0);
  EXPECT_NEAR(a[0], 1.0 / s, 1e-9);
  EXPECT_NEAR(a[1], 0.0, 1e-9);
  EXPECT_NEAR(a[2], -1.0 / s, 1e-9);
  EXPECT_NEAR(a[0], 1.224744871391589, 1e-9);
  const std::vector<double> one{1};
  EXPECT_EQ(code_of([&] { group_advantages(one); }), ErrorCode::GroupTooSmall);
}

TEST(GroupAdvantages, StandardizedProperty) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-3, 5);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> r(2 + rng() % 15);
    for (auto& x : r) x = u(rng);
    const auto a = group_advantages(r);
    const double mean = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
    double var = 0;
    for (double x : a) var += (x - mean) * (x - mean);
    ASSERT_NEAR(mean, 0.0, 1e-9);
    ASSERT_NEAR(std::sqrt(var / a.size()), 1.0, 1e-6);
  }
}

TEST(Objective, RatioOneIsZero) {
  GroupSample g;
  g.rewards = {2.0, 1.3, 0.0, 0.7};
  g.responses = {{{-1, -2}, {-1, -2}}, {{-0.5}, {-0.5}}, {{-3, -1, -2}, {-3, -1, -2}}, {{-0.1, -0.2}, {-0.1, -0.2}}};
  EXPECT_NEAR(grpo_objective(g, 0.2), 0.0, 1e-9);
}

TEST(Objective, ClipBranches) {
  const double eps = 0.2;
  // Positive advantage, ratio 1 + 2 eps: the clipped term (1 + eps) wins.
  const std::vector<ResponseLogprobs> up{{{0.0}, {std::log(1 + 2 * eps)}}};
  const std::vector<double> plus{1.0};
  EXPECT_NEAR(grpo_objective(up, plus, eps), 1 + eps, 1e-9);
  // Negative advantage, ratio 1 - 2 eps: unclipped -(1 - 2 eps), clipped
  // -(1 - eps); the minimum is -(1 - eps).
  const std::vector<ResponseLogprobs> down{{{0.0}, {std::log(1 - 2 * eps)}}};
  const std::vector<double> minus{-1.0};
  EXPECT_NEAR(grpo_objective(down, minus, eps), -(1 - eps), 1e-9);
  EXPECT_NEAR(clipped_surrogate(1 - 2 * eps, -1.0, eps), -(1 - eps), 1e-12);
  // Inside the clip range nothing changes.
  EXPECT_NEAR(clipped_surrogate(1.1, 2.0, eps), 2.2, 1e-12);
}

TEST(Objective, PerResponseThenGroupMean) {
  // Response 0: two tokens, ratios 1 and 1.1, A = 1 -> (1 + 1.1) / 2.
  // Response 1: one token, ratio 0.9, A = -1 -> -0.9.
  const std::vector<ResponseLogprobs> rs{{{0, 0}, {0, std::log(1.1)}}, {{0}, {std::log(0.9)}}};
  const std::vector<double> adv{1.0, -1.0};
  EXPECT_NEAR(grpo_objective(rs, adv, 0.2), ((1 + 1.1) / 2 - 0.9) / 2, 1e-12);
}

TEST(Objective, ShiftInvariantAndUnclippedLimit) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> lp(-4, -0.01), jitter(-0.5, 0.5);
  for (int trial = 0; trial < 100; ++trial) {
    GroupSample g;
    const std::size_t G = 2 + rng() % 5;
    for (std::size_t i = 0; i < G; ++i) {
      g.rewards.push_back(static_cast<double>(rng() % 3));
      ResponseLogprobs r;
      for (std::size_t t = 0; t < 1 + rng() % 6; ++t) {
        r.old_logprobs.push_back(lp(rng));
        r.new_logprobs.push_back(r.old_logprobs.back() + jitter(rng));
      }
      g.responses.push_back(r);
    }
    auto shifted = g;
    for (auto& r : shifted.responses) {
      for (auto& x : r.old_logprobs) x -= 1.75;
      for (auto& x : r.new_logprobs) x -= 1.75;
    }
    ASSERT_NEAR(grpo_objective(g, 0.2), grpo_objective(shifted, 0.2), 1e-9);

    const auto adv = group_advantages(g.rewards);
    double unclipped = 0;
    for (std::size_t i = 0; i < G; ++i) {
      double s = 0;
      const auto& r = g.responses[i];
      for (std::size_t t = 0; t < r.old_logprobs.size(); ++t) s += std::exp(r.new_logprobs[t] - r.old_logprobs[t]) * adv[i];
      unclipped += s / r.old_logprobs.size();
    }
    ASSERT_NEAR(grpo_objective(g.responses, adv, 1e9), unclipped / G, 1e-9);
  }
}

TEST(Objective, Errors) {
  const std::vector<ResponseLogprobs> mismatch{{{0, 0}, {0}}, {{0}, {0}}};
  const std::vector<double> adv{1, -1};
  EXPECT_EQ(code_of([&] { grpo_objective(mismatch, adv, 0.2); }), ErrorCode::LengthMismatch);
  const std::vector<ResponseLogprobs> ok{{{0}, {0}}, {{0}, {0}}};
  const std::vector<double> short_adv{1};
  EXPECT_EQ(code_of([&] { grpo_objective(ok, short_adv, 0.2); }), ErrorCode::LengthMismatch);
  EXPECT_EQ(code_of([&] { grpo_objective(ok, adv, 0.0); }), ErrorCode::InvalidArgument);
  GroupSample g{{1.0, 2.0}, {{{0}, {0}}}};
  EXPECT_EQ(code_of([&] { grpo_objective(g, 0.2); }), ErrorCode::LengthMismatch);
}

}  // namespace
}  // namespace wikiprf::rl
