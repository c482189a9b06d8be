// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#include "wikiprf/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "wikiprf/codec.hpp"
#include "wikiprf/error.hpp"
#include "wikiprf/eval.hpp"
#include "wikiprf/trace.hpp"

namespace wikiprf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string resolve(const fs::path& base, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (base / p).lexically_normal().string();
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw Error(ErrorCode::InvalidArgument, std::string(what) + " path not set");
  if (!fs::exists(path)) throw Error(ErrorCode::Io, std::string(what) + " not found: " + path);
}

void configure_logging() {
  auto logger = spdlog::get("wikiprf");
  if (!logger) logger = spdlog::stderr_color_mt("wikiprf");
  spdlog::set_default_logger(logger);
  const char* level = std::getenv("PRF_LOG");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
}

pipeline::TimingMode timing_mode(const Config& c) {
  switch (c.timing) {
    case TimingChoice::Wall: return pipeline::TimingMode::Wall;
    case TimingChoice::Zero: return pipeline::TimingMode::Zero;
    case TimingChoice::Auto: break;
  }
  const bool all_mock = c.embedder.backend == EmbedderBackend::Mock && c.model_backend == ModelBackendKind::Mock;
  return all_mock ? pipeline::TimingMode::Zero : pipeline::TimingMode::Wall;
}

std::string fmt_seconds(double s) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(3) << s;
  return o.str();
}

std::string fmt_values(const std::vector<double>& values) {
  std::ostringstream o;
  o << std::setprecision(10);
  for (std::size_t i = 0; i < values.size(); ++i) o << (i ? " " : "") << values[i];
  return o.str();
}

std::vector<double> doubles(const json& j, const char* what) {
  if (!j.is_array()) throw Error(ErrorCode::BadRecord, std::string(what) + " must be an array");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw Error(ErrorCode::BadRecord, std::string(what) + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<json> read_fixture_groups(const std::string& path) {
  const auto bytes = codec::read_file(path);
  const std::string text(bytes.begin(), bytes.end());
  std::vector<json> groups;
  const auto whole = json::parse(text, nullptr, false);
  if (!whole.is_discarded()) {
    if (whole.is_array()) {
      for (const auto& g : whole) groups.push_back(g);
    } else {
      groups.push_back(whole);
    }
    return groups;
  }
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (codec::trim(line).empty()) continue;
    auto g = json::parse(line, nullptr, false);
    if (g.is_discarded()) throw Error(ErrorCode::BadRecord, "fixture line " + std::to_string(line_no) + " is not JSON");
    groups.push_back(std::move(g));
  }
  return groups;
}

}  // namespace

std::string trace_file_name(const std::string& sample_id) {
  std::string name;
  for (char c : sample_id) {
    const bool safe = std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '-' || c == '_' || c == '.';
    name.push_back(safe ? c : '_');
  }
  if (name.empty() || name.front() == '.') name.insert(name.begin(), '_');
  return name + ".json";
}

Config load_config(const std::string& path) {
  const auto bytes = codec::read_file(path);
  const auto j = json::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::BadRecord, "config is not a JSON object: " + path);
  const fs::path base = fs::path(path).parent_path();
  Config c;
  try {
    c.kb_path = resolve(base, j.value("kb", std::string()));
    c.samples_path = resolve(base, j.value("samples", std::string()));
    c.out_path = resolve(base, j.value("out", std::string()));
    c.records_path = resolve(base, j.value("records", std::string()));
    c.traces_path = resolve(base, j.value("traces", std::string()));
    c.gt_path = resolve(base, j.value("gt", std::string()));
    c.fixture_path = resolve(base, j.value("fixture", std::string()));
    c.workers = j.value("workers", 1);
    if (j.contains("embedder")) {
      const auto& e = j["embedder"];
      const auto backend = e.value("backend", std::string("mock"));
      if (backend != "mock" && backend != "remote") throw Error(ErrorCode::BadRecord, "embedder.backend must be mock|remote");
      c.embedder.backend = backend == "remote" ? EmbedderBackend::Remote : EmbedderBackend::Mock;
      c.embedder.dimension = e.value("dimension", c.embedder.dimension);
      c.embedder.seed = e.value("seed", c.embedder.seed);
      c.embedder.endpoint = e.value("endpoint", std::string());
      c.embedder.timeout_seconds = e.value("timeout_seconds", c.embedder.timeout_seconds);
      c.embedder.max_in_flight = e.value("max_in_flight", c.embedder.max_in_flight);
    }
    if (j.contains("model")) {
      const auto& m = j["model"];
      const auto backend = m.value("backend", std::string("mock"));
      if (backend != "mock" && backend != "remote") throw Error(ErrorCode::BadRecord, "model.backend must be mock|remote");
      c.model_backend = backend == "remote" ? ModelBackendKind::Remote : ModelBackendKind::Mock;
      c.script_path = resolve(base, m.value("script", std::string()));
      const auto endpoint = m.value("endpoint", std::string());
      c.policy_endpoint = m.value("policy_endpoint", endpoint);
      c.tool_worker_endpoint = m.value("tool_worker_endpoint", endpoint);
      c.model_timeout_seconds = m.value("timeout_seconds", c.model_timeout_seconds);
      c.model_max_in_flight = m.value("max_in_flight", c.model_max_in_flight);
    }
    if (j.contains("retrieval")) {
      const auto& r = j["retrieval"];
      c.retrieval.k_direct_articles = r.value("k_direct_articles", c.retrieval.k_direct_articles);
      c.retrieval.k_tool_articles = r.value("k_tool_articles", c.retrieval.k_tool_articles);
      c.retrieval.k_sections = r.value("k_sections", c.retrieval.k_sections);
      c.retrieval.dedup = r.value("dedup", c.retrieval.dedup);
    }
    c.use_tools = j.value("use_tools", true);
    c.use_filter = j.value("use_filter", true);
    const auto timing = j.value("timing", std::string("auto"));
    if (timing == "wall") c.timing = TimingChoice::Wall;
    else if (timing == "zero") c.timing = TimingChoice::Zero;
    else if (timing == "auto") c.timing = TimingChoice::Auto;
    else throw Error(ErrorCode::BadRecord, "timing must be auto|wall|zero");
    c.weights_preset = j.value("weights", c.weights_preset);
    c.clip_epsilon = j.value("clip_epsilon", c.clip_epsilon);
    if (j.contains("recall_ks")) c.recall_ks = j["recall_ks"].get<std::vector<std::size_t>>();
    if (j.contains("heading_prefixes")) c.heading_rule.prefixes = j["heading_prefixes"].get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadRecord, std::string("config: ") + e.what());
  }
  return c;
}

int cmd_ingest(const Config& config, std::ostream& out, std::ostream&) {
  require_file(config.records_path, "records file");
  if (config.kb_path.empty()) throw Error(ErrorCode::InvalidArgument, "--kb output directory not set");
  const auto embedder = make_embedder(config.embedder);
  std::ifstream records(config.records_path);
  if (!records) throw Error(ErrorCode::Io, "cannot open " + config.records_path);
  auto [kb, report] = kb::ingest(records, *embedder, config.heading_rule);
  if (kb.article_count() == 0) throw Error(ErrorCode::Empty, "no valid records ingested");
  kb.save(config.kb_path);
  const json embedder_info = {
      {"backend", config.embedder.backend == EmbedderBackend::Mock ? "mock" : "remote"},
      {"dimension", config.embedder.dimension},
      {"seed", config.embedder.seed}};
  const std::string info = embedder_info.dump(2) + "\n";
  codec::write_file((fs::path(config.kb_path) / "embedder.json").string(), codec::as_bytes(info));

  out << "articles: " << report.articles << "\n"
      << "sections: " << report.sections << "\n"
      << "image entries: " << report.image_entries << "\n"
      << "empty articles: " << report.empty_articles << "\n"
      << "failures: " << report.failures.size() << "\n";
  for (const auto& f : report.failures) out << "  line " << f.line << ": " << f.message << "\n";
  return k_exit_ok;
}

int cmd_run(const Config& config, std::ostream& out, std::ostream&) {
  if (config.workers < 1) throw Error(ErrorCode::InvalidArgument, "--workers must be >= 1");
  require_file(config.kb_path, "knowledge base");
  require_file(config.samples_path, "samples file");
  if (config.out_path.empty()) throw Error(ErrorCode::InvalidArgument, "--out directory not set");

  const auto kb = kb::KnowledgeBase::load(config.kb_path);
  const auto embedder = make_embedder(config.embedder);

  std::unique_ptr<model::ModelBackend> policy, tool_worker;
  if (config.model_backend == ModelBackendKind::Mock) {
    require_file(config.script_path, "model script");
    auto rules = model::load_script(config.script_path);
    policy = std::make_unique<model::ScriptedModel>(rules);
    tool_worker = std::make_unique<model::ScriptedModel>(std::move(rules));
  } else {
    if (config.policy_endpoint.empty() || config.tool_worker_endpoint.empty()) {
      throw Error(ErrorCode::InvalidArgument, "remote model needs policy and tool_worker endpoints");
    }
    policy = std::make_unique<model::RemoteModel>(model::RemoteModelConfig{
        config.policy_endpoint, config.model_timeout_seconds, config.model_max_in_flight, 2});
    tool_worker = std::make_unique<model::RemoteModel>(model::RemoteModelConfig{
        config.tool_worker_endpoint, config.model_timeout_seconds, config.model_max_in_flight, 2});
  }

  pipeline::PipelineOptions options;
  options.retrieval = config.retrieval;
  options.use_tools = config.use_tools;
  options.use_filter = config.use_filter;
  options.timing = timing_mode(config);
  const pipeline::Pipeline pipe(kb, *embedder, *policy, *tool_worker, options);

  const auto samples = pipeline::load_samples(config.samples_path);
  const auto traces = pipe.run_batch(samples, config.workers);

  fs::create_directories(config.out_path);
  std::set<std::string> used;
  for (const auto& t : traces) {
    auto name = trace_file_name(t.sample_id);
    for (int n = 2; !used.insert(name).second; ++n) {
      name = trace_file_name(t.sample_id + "-" + std::to_string(n));
    }
    const auto text = serialize_trace(t);
    codec::write_file((fs::path(config.out_path) / name).string(), codec::as_bytes(text));
  }
  const auto failed = std::count_if(traces.begin(), traces.end(), [](const auto& t) { return t.failed; });
  const auto lat = eval::mean_latency(traces);
  out << "samples: " << traces.size() << "  failed: " << failed << "  traces: " << config.out_path << "\n"
      << "mean stage latency (s): processing " << fmt_seconds(lat.processing) << "  retrieval "
      << fmt_seconds(lat.retrieval) << "  filtering " << fmt_seconds(lat.filtering) << "  answering "
      << fmt_seconds(lat.answering) << "\n";
  return k_exit_ok;
}

int cmd_eval(const Config& config, std::ostream& out, std::ostream&) {
  require_file(config.traces_path, "traces directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(config.traces_path)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::Empty, "no trace files in " + config.traces_path);
  std::vector<PipelineTrace> traces;
  for (const auto& f : files) {
    const auto bytes = codec::read_file(f.string());
    const auto j = json::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::BadRecord, "trace is not JSON: " + f.string());
    traces.push_back(trace_from_json(j));
  }
  if (!config.gt_path.empty()) {
    require_file(config.gt_path, "ground-truth file");
    const auto samples = pipeline::load_samples(config.gt_path);
    eval::join_ground_truth(traces, samples);
  }
  auto ks = config.recall_ks;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  if (ks.empty() || ks.front() == 0) throw Error(ErrorCode::InvalidArgument, "recall k values must be >= 1");
  const auto report = eval::evaluate(traces, ks);

  const bool tools = std::any_of(traces.begin(), traces.end(), [](const auto& t) { return t.tools_enabled; });
  out << eval::render_recall_table(report, "wikiprf", tools ? "images + tools" : "images") << "\n"
      << eval::render_tool_table(report, "wikiprf") << "\n"
      << eval::render_latency_table(report) << "\n"
      << "VQA accuracy: " << std::fixed << std::setprecision(2) << report.vqa_accuracy << "\n"
      << "token F1: " << std::setprecision(4) << report.token_f1 << "\n";
  if (!config.out_path.empty()) {
    const auto text = eval::to_json(report).dump(2) + "\n";
    codec::write_file(config.out_path, codec::as_bytes(text));
  }
  return k_exit_ok;
}

int cmd_reward_check(const Config& config, std::ostream& out, std::ostream&) {
  require_file(config.fixture_path, "group fixture");
  const auto weights = rl::weights_preset(config.weights_preset);
  const auto groups = read_fixture_groups(config.fixture_path);
  if (groups.empty()) throw Error(ErrorCode::BadRecord, "fixture holds no groups");
  out << "weights: " << config.weights_preset << " (alpha=" << weights.alpha << ", beta=" << weights.beta
      << ", gamma=" << weights.gamma << ")  clip epsilon: " << config.clip_epsilon << "\n";
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& group = groups[g];
    if (!group.is_object()) throw Error(ErrorCode::BadRecord, "group " + std::to_string(g) + " is not an object");
    std::vector<double> rewards;
    try {
      if (group.contains("components")) {
        for (const auto& c : group["components"]) {
          rewards.push_back(rl::compose_reward(c.at("em").get<int>(), c.at("tool_ok").get<bool>(),
                                               c.at("filter_ok").get<bool>(), weights));
        }
      } else if (group.contains("rewards")) {
        rewards = doubles(group["rewards"], "rewards");
      } else {
        throw Error(ErrorCode::BadRecord, "group needs rewards or components");
      }
      const auto advantages = group.contains("advantages") ? doubles(group["advantages"], "advantages")
                                                           : rl::group_advantages(rewards);
      out << "group " << g << "\n"
          << "  rewards: " << fmt_values(rewards) << "\n"
          << "  advantages: " << fmt_values(advantages) << "\n";
      if (group.contains("responses")) {
        std::vector<rl::ResponseLogprobs> responses;
        for (const auto& r : group["responses"]) {
          responses.push_back({doubles(r.at("old_logprobs"), "old_logprobs"), doubles(r.at("new_logprobs"), "new_logprobs")});
        }
        const double objective = rl::grpo_objective(responses, advantages, config.clip_epsilon);
        out << "  objective: " << fmt_values({objective}) << "\n";
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::BadRecord, "group " + std::to_string(g) + ": " + e.what());
    }
  }
  return k_exit_ok;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  configure_logging();
  CLI::App app{"Knowledge-based VQA retrieval pipeline with tool-driven queries and filtering"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override it");

  // Flag values, applied over the config after parsing.
  std::optional<std::string> kb, samples, out_dir, records, traces, gt, fixture, script, weights, timing;
  std::optional<int> workers;
  std::optional<std::size_t> k_articles, k_sections, k_direct;
  std::vector<std::size_t> ks;
  bool no_tools = false, no_filter = false;
  std::optional<double> clip;

  auto* ingest = app.add_subcommand("ingest", "Ingest KB records and build the image and section indexes");
  ingest->add_option("--records", records, "Line-delimited KB records");
  ingest->add_option("--kb", kb, "Output KB directory");

  auto* run = app.add_subcommand("run", "Run the pipeline over a sample file");
  run->add_option("--kb", kb, "KB directory");
  run->add_option("--samples", samples, "Line-delimited samples");
  run->add_option("--out", out_dir, "Trace output directory");
  run->add_option("--script", script, "Model script for the mock backend");
  run->add_option("--workers", workers, "Concurrent samples");
  run->add_option("--k-articles", k_articles, "Articles retrieved per tool query");
  run->add_option("--k-sections", k_sections, "Sections kept per tool query");
  run->add_option("--k-direct", k_direct, "Articles kept from direct image retrieval");
  run->add_flag("--no-tools", no_tools, "Skip the processing stage and tool search");
  run->add_flag("--no-filter", no_filter, "Skip filtering; answer from D and S_search directly");
  run->add_option("--timing", timing, "Stage timing: auto, wall or zero")->check(CLI::IsMember({"auto", "wall", "zero"}));

  auto* evaluate = app.add_subcommand("eval", "Score a trace directory");
  evaluate->add_option("--traces", traces, "Trace directory");
  evaluate->add_option("--gt", gt, "Samples file carrying ground truth");
  evaluate->add_option("--k", ks, "Recall cut-offs, comma separated")->delimiter(',');
  evaluate->add_option("--out", out_dir, "Write the JSON report here");

  auto* reward = app.add_subcommand("reward-check", "Evaluate rewards, advantages and the clipped objective");
  reward->add_option("--fixture", fixture, "Group fixture file");
  reward->add_option("--weights", weights, "Reward weights preset")->check(CLI::IsMember({"paper", "appendix-equal"}));
  reward->add_option("--clip", clip, "Clip epsilon");

  for (auto* sub : {ingest, run, evaluate, reward}) sub->add_option("--config", config_path, "JSON config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return k_exit_ok;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return k_exit_ok;
    }
    err << "usage error: " << e.what() << "\n";
    for (auto* sub : app.get_subcommands()) err << sub->help();
    return k_exit_usage;
  }

  try {
    Config config = config_path.empty() ? Config{} : load_config(config_path);
    if (kb) config.kb_path = *kb;
    if (samples) config.samples_path = *samples;
    if (out_dir) config.out_path = *out_dir;
    if (records) config.records_path = *records;
    if (traces) config.traces_path = *traces;
    if (gt) config.gt_path = *gt;
    if (fixture) config.fixture_path = *fixture;
    if (script) {
      config.script_path = *script;
      config.model_backend = ModelBackendKind::Mock;
    }
    if (weights) config.weights_preset = *weights;
    if (workers) config.workers = *workers;
    if (k_articles) config.retrieval.k_tool_articles = *k_articles;
    if (k_sections) config.retrieval.k_sections = *k_sections;
    if (k_direct) config.retrieval.k_direct_articles = *k_direct;
    if (!ks.empty()) config.recall_ks = ks;
    if (no_tools) config.use_tools = false;
    if (no_filter) config.use_filter = false;
    if (clip) config.clip_epsilon = *clip;
    if (timing) config.timing = *timing == "wall" ? TimingChoice::Wall : *timing == "zero" ? TimingChoice::Zero : TimingChoice::Auto;

    if (ingest->parsed()) return cmd_ingest(config, out, err);
    if (run->parsed()) return cmd_run(config, out, err);
    if (evaluate->parsed()) return cmd_eval(config, out, err);
    return cmd_reward_check(config, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    const bool usage = e.code() == ErrorCode::InvalidArgument;
    return usage ? k_exit_usage : k_exit_setup;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return k_exit_setup;
  }
}

}  // namespace wikiprf::cli
