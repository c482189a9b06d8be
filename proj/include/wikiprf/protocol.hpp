// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

/** \file protocol.hpp
 *  \brief Tag-based interaction protocol: prompt templates, tool-plan and
 *  filter-output parsing, and format compliance.
 *
 * Tag names (<think>, <tool>, <answer>) are matched case-sensitively; tool
 * names inside a <tool> block are matched case-insensitively. Only the first
 * block of each tag is honored, later duplicates are reported as diagnostics.
 */

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wikiprf::protocol {

enum class PromptKind { ToolCalling, Captioning, Grounding, Filtering, Answering };

inline constexpr PromptKind k_all_prompt_kinds[] = {PromptKind::ToolCalling, PromptKind::Captioning,
                                                    PromptKind::Grounding, PromptKind::Filtering,
                                                    PromptKind::Answering};

std::string_view prompt_kind_name(PromptKind kind);

/// Raw template text with `{Name}` slots.
std::string_view template_text(PromptKind kind);

/// Slot names declared by a template, in first-appearance order.
std::vector<std::string> template_slots(PromptKind kind);

using Bindings = std::map<std::string, std::string, std::less<>>;

/// Substitutes every `{Name}` slot. Throws Error(MissingSlot) for a declared
/// slot without a binding and Error(UnknownSlot) for a binding with no slot.
std::string render_prompt(PromptKind kind, const Bindings& bindings);

enum class Tool { Caption, Grounding, Flip };

std::string_view tool_name(Tool tool);
std::optional<Tool> parse_tool_name(std::string_view name);

struct ToolInvocation {
  int index = 0;  // 1-based, contiguous within a plan
  Tool tool = Tool::Caption;
  std::string argument;  // caption seed, object phrase, or "left"/"right"

  bool operator==(const ToolInvocation&) const = default;
};

struct ToolPlan {
  std::string think;
  std::vector<ToolInvocation> invocations;

  bool operator==(const ToolPlan&) const = default;
};

enum class DiagnosticKind { NoToolBlock, MalformedLine, DuplicateBlock, IndexMismatch };

struct Diagnostic {
  DiagnosticKind kind;
  std::string detail;
};

std::string_view diagnostic_name(DiagnosticKind kind);

struct ToolPlanParse {
  ToolPlan plan;
  std::vector<Diagnostic> diagnostics;
  bool has_tool_block = false;

  std::size_t count(DiagnosticKind kind) const;
};

/// Never throws. A missing <tool> block yields an empty plan and a
/// NoToolBlock diagnostic.
ToolPlanParse parse_tool_plan(std::string_view text);

/// Emits the layout shown in the tool-calling prompt's example.
std::string serialize_tool_plan(const ToolPlan& plan);

struct FilterOutput {
  std::string think;
  std::string answer;

  bool operator==(const FilterOutput&) const = default;
};

/// Never throws. Without an <answer> block the answer is the trimmed text
/// after the last </think> (or the whole trimmed input if there is none).
FilterOutput parse_filter_output(std::string_view text);

enum class FormatTemplate { ToolTemplate, FilterTemplate };

/// The format indicator M(a, t): exactly one <think>...</think> followed by
/// exactly one <tool>...</tool> (or <answer>...</answer>), with no stray
/// open or close tags of those names anywhere in the text.
bool match_format(std::string_view text, FormatTemplate kind);

}  // namespace wikiprf::protocol
