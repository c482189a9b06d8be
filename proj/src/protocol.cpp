// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#include "wikiprf/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

#include "wikiprf/codec.hpp"
#include "wikiprf/error.hpp"

namespace wikiprf::protocol {

namespace {

#include "wikiprf/templates.inc"

bool is_slot_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

// Calls on_text for literal runs and on_slot for every `{Name}` occurrence.
template <typename OnText, typename OnSlot>
void scan_template(std::string_view tpl, OnText on_text, OnSlot on_slot) {
  std::size_t pos = 0;
  while (pos < tpl.size()) {
    const auto open = tpl.find('{', pos);
    if (open == std::string_view::npos) break;
    auto close = open + 1;
    while (close < tpl.size() && is_slot_char(tpl[close])) ++close;
    if (close < tpl.size() && tpl[close] == '}' && close > open + 1) {
      on_text(tpl.substr(pos, open - pos));
      on_slot(tpl.substr(open + 1, close - open - 1));
      pos = close + 1;
    } else {
      on_text(tpl.substr(pos, open + 1 - pos));
      pos = open + 1;
    }
  }
  on_text(tpl.substr(pos));
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

struct Block {
  std::string_view content;
  std::size_t open = 0;
  std::size_t end = 0;  // one past the close tag
};

// First <tag>...</tag> pair, searching from `from`.
std::optional<Block> find_block(std::string_view text, std::string_view tag, std::size_t from = 0) {
  const std::string open_tag = "<" + std::string(tag) + ">";
  const std::string close_tag = "</" + std::string(tag) + ">";
  const auto open = text.find(open_tag, from);
  if (open == std::string_view::npos) return std::nullopt;
  const auto body = open + open_tag.size();
  const auto close = text.find(close_tag, body);
  if (close == std::string_view::npos) return std::nullopt;
  return Block{text.substr(body, close - body), open, close + close_tag.size()};
}

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

// Picks the flip direction out of free text such as "Flip left.".
std::optional<std::string> flip_direction(std::string_view argument) {
  const std::string folded = lower(argument);
  std::set<std::string> found;
  std::string word;
  for (std::size_t i = 0; i <= folded.size(); ++i) {
    const char c = i < folded.size() ? folded[i] : ' ';
    if (std::isalpha(static_cast<unsigned char>(c)) != 0) {
      word.push_back(c);
    } else {
      if (word == "left" || word == "right") found.insert(word);
      word.clear();
    }
  }
  if (found.size() != 1) return std::nullopt;
  return *found.begin();
}

struct ParsedLine {
  int number = 0;
  Tool tool = Tool::Caption;
  std::string argument;
};

// Grammar: optional spaces, digits, '.' or ')', name, ':', argument.
std::optional<ParsedLine> parse_line(std::string_view line, std::string& why) {
  const std::string trimmed = codec::trim(line);
  std::string_view s = trimmed;
  std::size_t i = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])) != 0) ++i;
  if (i == 0) {
    why = "missing step number";
    return std::nullopt;
  }
  ParsedLine out;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + i, out.number);
  if (ec != std::errc{}) {
    why = "bad step number";
    return std::nullopt;
  }
  (void)ptr;
  if (i >= s.size() || (s[i] != '.' && s[i] != ')')) {
    why = "missing '.' after step number";
    return std::nullopt;
  }
  const auto colon = s.find(':', i + 1);
  if (colon == std::string_view::npos) {
    why = "missing ':' after tool name";
    return std::nullopt;
  }
  const std::string name = codec::trim(s.substr(i + 1, colon - i - 1));
  const auto tool = parse_tool_name(name);
  if (!tool) {
    why = "unknown tool '" + name + "'";
    return std::nullopt;
  }
  out.tool = *tool;
  out.argument = codec::trim(s.substr(colon + 1));
  if (out.tool == Tool::Flip) {
    auto dir = flip_direction(out.argument);
    if (!dir) {
      why = "flip direction must be left or right";
      return std::nullopt;
    }
    out.argument = *dir;
  } else if (out.argument.empty()) {
    why = "empty argument";
    return std::nullopt;
  }
  return out;
}

}  // namespace

std::string_view prompt_kind_name(PromptKind kind) {
  switch (kind) {
    case PromptKind::ToolCalling: return "tool_calling";
    case PromptKind::Captioning: return "captioning";
    case PromptKind::Grounding: return "grounding";
    case PromptKind::Filtering: return "filtering";
    case PromptKind::Answering: return "answering";
  }
  return "";
}

std::string_view template_text(PromptKind kind) {
  switch (kind) {
    case PromptKind::ToolCalling: return k_template_tool_calling;
    case PromptKind::Captioning: return k_template_captioning;
    case PromptKind::Grounding: return k_template_grounding;
    case PromptKind::Filtering: return k_template_filtering;
    case PromptKind::Answering: return k_template_answering;
  }
  return {};
}

std::vector<std::string> template_slots(PromptKind kind) {
  std::vector<std::string> slots;
  scan_template(
      template_text(kind), [](std::string_view) {},
      [&](std::string_view name) {
        if (std::find(slots.begin(), slots.end(), name) == slots.end()) slots.emplace_back(name);
      });
  return slots;
}

std::string render_prompt(PromptKind kind, const Bindings& bindings) {
  const auto slots = template_slots(kind);
  for (const auto& [name, value] : bindings) {
    if (std::find(slots.begin(), slots.end(), name) == slots.end()) {
      throw Error(ErrorCode::UnknownSlot, name);
    }
  }
  std::string out;
  scan_template(
      template_text(kind), [&](std::string_view text) { out.append(text); },
      [&](std::string_view name) {
        const auto it = bindings.find(name);
        if (it == bindings.end()) throw Error(ErrorCode::MissingSlot, std::string(name));
        out.append(it->second);
      });
  return out;
}

std::string_view tool_name(Tool tool) {
  switch (tool) {
    case Tool::Caption: return "caption";
    case Tool::Grounding: return "grounding";
    case Tool::Flip: return "flip";
  }
  return "";
}

std::optional<Tool> parse_tool_name(std::string_view name) {
  const std::string folded = lower(name);
  if (folded == "caption") return Tool::Caption;
  if (folded == "grounding") return Tool::Grounding;
  if (folded == "flip") return Tool::Flip;
  return std::nullopt;
}

std::string_view diagnostic_name(DiagnosticKind kind) {
  switch (kind) {
    case DiagnosticKind::NoToolBlock: return "NoToolBlock";
    case DiagnosticKind::MalformedLine: return "MalformedLine";
    case DiagnosticKind::DuplicateBlock: return "DuplicateBlock";
    case DiagnosticKind::IndexMismatch: return "IndexMismatch";
  }
  return "";
}

std::size_t ToolPlanParse::count(DiagnosticKind kind) const {
  return static_cast<std::size_t>(std::count_if(diagnostics.begin(), diagnostics.end(),
                                                [&](const Diagnostic& d) { return d.kind == kind; }));
}

ToolPlanParse parse_tool_plan(std::string_view text) {
  ToolPlanParse result;
  if (const auto think = find_block(text, "think")) {
    result.plan.think = codec::trim(think->content);
    if (find_block(text, "think", think->end)) {
      result.diagnostics.push_back({DiagnosticKind::DuplicateBlock, "<think>"});
    }
  }
  const auto tool = find_block(text, "tool");
  if (!tool) {
    result.diagnostics.push_back({DiagnosticKind::NoToolBlock, "no <tool>...</tool> block"});
    return result;
  }
  result.has_tool_block = true;
  if (find_block(text, "tool", tool->end)) {
    result.diagnostics.push_back({DiagnosticKind::DuplicateBlock, "<tool>"});
  }
  int next_index = 1;
  for (const auto line : split_lines(tool->content)) {
    if (codec::trim(line).empty()) continue;
    std::string why;
    auto parsed = parse_line(line, why);
    if (!parsed) {
      result.diagnostics.push_back({DiagnosticKind::MalformedLine, codec::trim(line) + " (" + why + ")"});
      continue;
    }
    if (parsed->number != next_index) {
      result.diagnostics.push_back({DiagnosticKind::IndexMismatch,
                                    "step " + std::to_string(parsed->number) + " renumbered to " +
                                        std::to_string(next_index)});
    }
    result.plan.invocations.push_back({next_index, parsed->tool, std::move(parsed->argument)});
    ++next_index;
  }
  return result;
}

std::string serialize_tool_plan(const ToolPlan& plan) {
  std::string out = "<think>" + plan.think + "</think> <tool>\n";
  for (const auto& inv : plan.invocations) {
    out += std::to_string(inv.index) + ". ";
    switch (inv.tool) {
      case Tool::Flip: out += "Flip: Flip " + inv.argument + "."; break;
      case Tool::Grounding: out += "grounding: " + inv.argument; break;
      case Tool::Caption: out += "caption: " + inv.argument; break;
    }
    out += "\n";
  }
  out += "</tool>";
  return out;
}

FilterOutput parse_filter_output(std::string_view text) {
  FilterOutput out;
  if (const auto think = find_block(text, "think")) out.think = codec::trim(think->content);
  if (const auto answer = find_block(text, "answer")) {
    out.answer = codec::trim(answer->content);
    return out;
  }
  const auto last_close = text.rfind("</think>");
  if (last_close != std::string_view::npos) {
    out.answer = codec::trim(text.substr(last_close + std::string_view("</think>").size()));
  } else {
    out.answer = codec::trim(text);
  }
  return out;
}

bool match_format(std::string_view text, FormatTemplate kind) {
  const std::string_view second = kind == FormatTemplate::ToolTemplate ? "tool" : "answer";
  const std::string think_open = "<think>", think_close = "</think>";
  const std::string second_open = "<" + std::string(second) + ">";
  const std::string second_close = "</" + std::string(second) + ">";
  for (const auto& tag : {think_open, think_close, second_open, second_close}) {
    if (count_occurrences(text, tag) != 1) return false;
  }
  const auto a = text.find(think_open), b = text.find(think_close);
  const auto c = text.find(second_open), d = text.find(second_close);
  return a < b && b < c && c < d;
}

}  // namespace wikiprf::protocol
