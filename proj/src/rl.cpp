// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#include "wikiprf/rl.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>

#include "wikiprf/error.hpp"

namespace wikiprf::rl {

RewardWeights weights_preset(std::string_view name) {
  if (name == "paper") return k_default_weights;
  if (name == "appendix-equal") return k_appendix_equal_weights;
  throw Error(ErrorCode::InvalidArgument, "unknown weights preset '" + std::string(name) + "'");
}

std::string normalize_answer(std::string_view text) {
  std::vector<std::string> words;
  std::istringstream in{std::string(text)};
  for (std::string w; in >> w;) {
    std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    words.push_back(std::move(w));
  }
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  const auto terminal = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
  while (!out.empty() && (terminal(out.back()) || out.back() == ' ')) out.pop_back();
  for (std::string_view article : {"a ", "an ", "the "}) {
    if (out.starts_with(article) && out.size() > article.size()) {
      out.erase(0, article.size());
      break;
    }
  }
  return out;
}

int em_answer_reward(std::string_view prediction, std::span<const std::string> ground_truths) {
  if (ground_truths.empty()) throw Error(ErrorCode::MissingGroundTruth, "no ground-truth answers");
  const auto pred = normalize_answer(prediction);
  for (const auto& gt : ground_truths) {
    if (normalize_answer(gt) == pred) return 1;
  }
  return 0;
}

double compose_reward(int em, bool tool_ok, bool filter_ok, const RewardWeights& w) {
  return w.alpha * static_cast<double>(em) + w.beta * (tool_ok ? 1.0 : 0.0) + w.gamma * (filter_ok ? 1.0 : 0.0);
}

std::vector<double> group_advantages(std::span<const double> rewards, double eps) {
  if (rewards.size() < 2) throw Error(ErrorCode::GroupTooSmall, "advantages need at least 2 responses");
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double denom = std::sqrt(var / n) + eps;
  std::vector<double> out;
  out.reserve(rewards.size());
  for (double r : rewards) out.push_back(denom == 0.0 ? 0.0 : (r - mean) / denom);
  return out;
}

double clipped_surrogate(double ratio, double advantage, double eps_clip) {
  const double clipped = std::clamp(ratio, 1.0 - eps_clip, 1.0 + eps_clip);
  return std::min(ratio * advantage, clipped * advantage);
}

double grpo_objective(std::span<const ResponseLogprobs> responses, std::span<const double> advantages,
                      double eps_clip) {
  if (!(eps_clip > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps_clip must be positive");
  if (responses.empty()) throw Error(ErrorCode::GroupTooSmall, "empty group");
  if (responses.size() != advantages.size()) throw Error(ErrorCode::LengthMismatch, "one advantage per response");
  double total = 0.0;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    const auto& r = responses[i];
    if (r.old_logprobs.size() != r.new_logprobs.size() || r.old_logprobs.empty()) {
      throw Error(ErrorCode::LengthMismatch, "response " + std::to_string(i) + " logprob lengths differ or are empty");
    }
    double sum = 0.0;
    for (std::size_t t = 0; t < r.old_logprobs.size(); ++t) {
      sum += clipped_surrogate(std::exp(r.new_logprobs[t] - r.old_logprobs[t]), advantages[i], eps_clip);
    }
    total += sum / static_cast<double>(r.old_logprobs.size());
  }
  return total / static_cast<double>(responses.size());
}

double grpo_objective(const GroupSample& group, double eps_clip, double advantage_eps) {
  if (group.rewards.size() != group.responses.size()) {
    throw Error(ErrorCode::LengthMismatch, "one reward per response");
  }
  const auto advantages = group_advantages(group.rewards, advantage_eps);
  return grpo_objective(group.responses, advantages, eps_clip);
}

}  // namespace wikiprf::rl
