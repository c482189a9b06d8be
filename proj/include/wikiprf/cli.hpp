// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wikiprf/embedder.hpp"
#include "wikiprf/kb.hpp"
#include "wikiprf/pipeline.hpp"
#include "wikiprf/rl.hpp"

namespace wikiprf::cli {

inline constexpr int k_exit_ok = 0;
inline constexpr int k_exit_usage = 1;
inline constexpr int k_exit_setup = 2;

enum class ModelBackendKind { Mock, Remote };
enum class TimingChoice { Auto, Wall, Zero };

struct Config {
  std::string kb_path;
  std::string samples_path;
  std::string out_path;
  std::string records_path;
  std::string traces_path;
  std::string gt_path;
  std::string fixture_path;
  int workers = 1;

  EmbedderConfig embedder;
  ModelBackendKind model_backend = ModelBackendKind::Mock;
  std::string script_path;
  std::string policy_endpoint;
  std::string tool_worker_endpoint;
  double model_timeout_seconds = 120.0;
  int model_max_in_flight = 2;

  pipeline::RetrievalConfig retrieval;
  bool use_tools = true;
  bool use_filter = true;
  TimingChoice timing = TimingChoice::Auto;
  std::string weights_preset = "paper";
  double clip_epsilon = 0.2;
  std::vector<std::size_t> recall_ks{1, 5, 10};
  kb::HeadingRule heading_rule;
};

/// Reads a JSON config file. Relative paths resolve against the file's
/// directory. Errors: Io, BadRecord.
Config load_config(const std::string& path);

int cmd_ingest(const Config& config, std::ostream& out, std::ostream& err);
int cmd_run(const Config& config, std::ostream& out, std::ostream& err);
int cmd_eval(const Config& config, std::ostream& out, std::ostream& err);
int cmd_reward_check(const Config& config, std::ostream& out, std::ostream& err);

/// Entry point used by the `wikiprf` binary.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Trace file name for a sample id: unsafe characters become '_'.
std::string trace_file_name(const std::string& sample_id);

}  // namespace wikiprf::cli
