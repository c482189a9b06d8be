// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "wikiprf/embedder.hpp"
#include "wikiprf/imaging.hpp"

namespace wikiprf::fixtures {

imaging::Image random_image(std::mt19937_64& rng, int width, int height);
std::vector<float> random_unit(std::mt19937_64& rng, std::size_t dimension);
std::string ppm_base64(const imaging::Image& image);
std::string read_text(const std::filesystem::path& path);

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::string str(const std::string& child = {}) const { return (path_ / child).string(); }

 private:
  std::filesystem::path path_;
};

/// A KB, sample file and model script, all as JSON lines.
struct Scenario {
  std::vector<std::string> records;
  std::vector<std::string> samples;
  std::vector<std::string> script;
  /// Writes records.jsonl, samples.jsonl and script.jsonl into `dir`.
  void write(const std::filesystem::path& dir) const;
};

/// Planted-relevance KB: `articles` articles, `samples` samples, each with
/// one ground-truth article. For the first `hard` samples the reference
/// image points at a distractor and only the caption query reaches the
/// ground truth; for the rest the reference image matches it directly.
struct PlantedScenario : Scenario {
  std::size_t hard = 0;
  std::vector<std::string> gt_article_ids;
  std::vector<std::string> questions;
  std::vector<imaging::Image> images;
};
PlantedScenario make_planted_scenario(const MockEmbedder& embedder, std::size_t articles = 100,
                                      std::size_t samples = 20, std::size_t hard = 8, std::uint64_t seed = 2026);

/// A bell tower with a small statue on top: direct image retrieval finds the
/// tower article, the flipped-and-grounded crop and the caption find the
/// statue article, filtering keeps only the sentence about the statue.
struct TowerScenario : Scenario {
  imaging::Image image{1, 1, {0, 0, 0}};
  std::string question;
  std::string expected_knowledge;
  std::string expected_answer;
};
TowerScenario make_tower_scenario(const MockEmbedder& embedder);

}  // namespace wikiprf::fixtures
