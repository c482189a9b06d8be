// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

/** \file rl.hpp
 *  \brief Reward and objective values for group-relative policy optimization.
 *
 * The reward is alpha*EM + beta*M_tool + gamma*M_filter. Advantages are the
 * group-standardized rewards (population std), shared by every token of a
 * response. The objective is the clipped surrogate averaged per response
 * then over the group, with no KL term. Nothing here computes gradients.
 */

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wikiprf::rl {

struct RewardWeights {
  double alpha = 1.0;
  double beta = 0.3;
  double gamma = 0.7;
};

inline constexpr RewardWeights k_default_weights{1.0, 0.3, 0.7};
/// Equal answer/format ratio.
inline constexpr RewardWeights k_appendix_equal_weights{2.0, 1.0, 1.0};

/// "paper" or "appendix-equal"; throws Error(InvalidArgument) otherwise.
RewardWeights weights_preset(std::string_view name);

/// Case-fold, trim, collapse whitespace, strip terminal punctuation and a
/// leading article (a, an, the).
std::string normalize_answer(std::string_view text);

/// 1 iff the normalized prediction equals any normalized ground truth.
int em_answer_reward(std::string_view prediction, std::span<const std::string> ground_truths);

double compose_reward(int em, bool tool_ok, bool filter_ok, const RewardWeights& weights);

/// (r_i - mean) / (std_pop + eps). Throws Error(GroupTooSmall) for G < 2.
std::vector<double> group_advantages(std::span<const double> rewards, double eps = 1e-8);

struct ResponseLogprobs {
  std::vector<double> old_logprobs;
  std::vector<double> new_logprobs;
};

struct GroupSample {
  std::vector<double> rewards;
  std::vector<ResponseLogprobs> responses;
};

/// min(r*A, clip(r, 1-eps, 1+eps)*A) for one token.
double clipped_surrogate(double ratio, double advantage, double eps_clip);

/// Objective with caller-supplied per-response advantages.
/// Errors: LengthMismatch, GroupTooSmall (empty group), InvalidArgument.
double grpo_objective(std::span<const ResponseLogprobs> responses, std::span<const double> advantages,
                      double eps_clip);

/// Objective with advantages derived from the group's rewards.
double grpo_objective(const GroupSample& group, double eps_clip, double advantage_eps = 1e-8);

}  // namespace wikiprf::rl
