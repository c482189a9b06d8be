// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#include "fixtures.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "wikiprf/codec.hpp"

namespace wikiprf::fixtures {

namespace fs = std::filesystem;
using nlohmann::json;

imaging::Image random_image(std::mt19937_64& rng, int width, int height) {
  std::uniform_int_distribution<int> byte(0, 255);
  std::vector<std::uint8_t> px(static_cast<std::size_t>(width) * height * 3);
  for (auto& p : px) p = static_cast<std::uint8_t>(byte(rng));
  return imaging::Image(width, height, std::move(px));
}

std::vector<float> random_unit(std::mt19937_64& rng, std::size_t dimension) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> v(dimension);
  double norm = 0.0;
  for (auto& x : v) {
    x = gauss(rng);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  std::vector<float> out(dimension);
  for (std::size_t i = 0; i < dimension; ++i) out[i] = static_cast<float>(v[i] / norm);
  return out;
}

std::string ppm_base64(const imaging::Image& image) { return codec::base64_encode(imaging::encode_ppm(image)); }

std::string read_text(const fs::path& path) {
  const auto bytes = codec::read_file(path.string());
  return {bytes.begin(), bytes.end()};
}

TempDir::TempDir(const std::string& tag) {
  static std::random_device rd;
  std::ostringstream name;
  name << "wikiprf-" << tag << "-" << std::hex << rd() << rd();
  path_ = fs::temp_directory_path() / name.str();
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

namespace {

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  for (const auto& l : lines) out << l << "\n";
}

json vector_json(std::span<const float> values) {
  json arr = json::array();
  for (float v : values) arr.push_back(v);
  return arr;
}

std::string rule(const char* stage, const std::string& contains, const std::string& response) {
  return json{{"stage", stage}, {"contains", contains}, {"response", response}}.dump();
}

std::string two_digits(std::size_t i) {
  std::ostringstream o;
  o << std::setw(2) << std::setfill('0') << i;
  return o.str();
}

std::string three_digits(std::size_t i) {
  std::ostringstream o;
  o << std::setw(3) << std::setfill('0') << i;
  return o.str();
}

std::string article_text(std::size_t i) {
  const auto n = three_digits(i);
  return "Landmark " + n + " stands in district " + std::to_string(i % 7) + ".\n"
         "== History ==\nLandmark " + n + " was completed in year " + std::to_string(1700 + i) + ".\n"
         "== Materials ==\nThe facade of landmark " + n + " uses material " + n + ".\n"
         "== Visitors ==\nAbout " + std::to_string(1000 * (i + 1)) + " people visit landmark " + n + " every year.";
}

}  // namespace

void Scenario::write(const fs::path& dir) const {
  fs::create_directories(dir);
  write_lines(dir / "records.jsonl", records);
  write_lines(dir / "samples.jsonl", samples);
  write_lines(dir / "script.jsonl", script);
}

PlantedScenario make_planted_scenario(const MockEmbedder& embedder, std::size_t articles, std::size_t samples,
                                      std::size_t hard, std::uint64_t seed) {
  // Articles 0..samples-1 are ground truth for the sample of the same index;
  // articles samples..samples+hard-1 are the distractors of the hard samples.
  if (articles < samples + hard) throw std::invalid_argument("not enough articles for the planted layout");
  PlantedScenario sc;
  sc.hard = hard;
  std::mt19937_64 rng(seed);

  std::vector<std::string> captions(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    sc.images.push_back(random_image(rng, 4, 4));
    captions[s] = "A photograph of landmark " + three_digits(s) + " seen from the main square.";
    sc.questions.push_back("Which material covers the facade in scene-" + two_digits(s) + "?");
    sc.gt_article_ids.push_back("a" + three_digits(s));
  }

  for (std::size_t i = 0; i < articles; ++i) {
    std::vector<float> image_vec;
    if (i < samples) {
      // Ground truth: reachable by the caption for hard samples, by the reference image otherwise.
      const auto e = i < hard ? embedder.embed_text(captions[i]) : embedder.embed_image(sc.images[i]);
      image_vec.assign(e.values().begin(), e.values().end());
    } else if (i < samples + hard) {
      const auto e = embedder.embed_image(sc.images[i - samples]);
      image_vec.assign(e.values().begin(), e.values().end());
    } else {
      image_vec = random_unit(rng, embedder.dimension());
    }
    sc.records.push_back(json{{"article_id", "a" + three_digits(i)},
                              {"title", "Landmark " + three_digits(i)},
                              {"text", article_text(i)},
                              {"image_embedding", vector_json(image_vec)}}
                             .dump());
  }

  for (std::size_t s = 0; s < samples; ++s) {
    const auto tag = "scene-" + two_digits(s);
    const auto seed_caption = "landmark in " + tag;
    std::string plan = "<think>The facade material needs the landmark's article.</think> <tool>\n";
    if (s >= hard && s % 3 == 0) {
      plan += "1. caption: " + seed_caption + "\n2. grounding: the facade\n";
    } else if (s >= hard && s % 3 == 1) {
      plan += "1. Flip: Flip right.\n2. caption: " + seed_caption + "\n";
    } else {
      plan += "1. caption: " + seed_caption + "\n";
    }
    plan += "</tool>";
    sc.script.push_back(rule("tool_plan", tag, plan));
    sc.script.push_back(rule("caption", tag, captions[s]));
    sc.script.push_back(rule("filter", tag,
                             "<think>Keep the materials section.</think><answer>The facade of landmark " +
                                 three_digits(s) + " uses material " + three_digits(s) + ".</answer>"));
    sc.script.push_back(rule("answer", tag, "material " + three_digits(s)));
    sc.samples.push_back(json{{"id", tag},
                              {"question", sc.questions[s]},
                              {"image_ppm_base64", ppm_base64(sc.images[s])},
                              {"gt_answer", json::array({"material " + three_digits(s)})},
                              {"gt_article_id", sc.gt_article_ids[s]}}
                             .dump());
  }
  // Grounding prompts carry only the object phrase, so one rule serves all samples.
  sc.script.push_back(rule("grounding", "the facade", R"({"bbox_2d": [0, 0, 2, 2]})"));
  return sc;
}

TowerScenario make_tower_scenario(const MockEmbedder& embedder) {
  TowerScenario sc;
  std::mt19937_64 rng(1514);
  sc.image = random_image(rng, 8, 8);
  sc.question = "What is the statue on top of this bell tower made of?";
  sc.expected_knowledge = "The statue on top of the tower is bronze covered in gold leaf.";
  sc.expected_answer = "Bronze.";

  const std::string caption = "A tall brick bell tower topped by a small gilded angel statue.";
  const imaging::BBox box{2, 0, 6, 3};
  const auto statue_crop = imaging::crop(imaging::flip_horizontal(sc.image), box);
  const auto as_vec = [](const Embedding& e) { return vector_json(e.values()); };

  sc.records.push_back(json{
      {"article_id", "bell_tower"},
      {"title", "Bell tower of the old square"},
      {"text",
       "The bell tower is the campanile of the old square and one of the most recognisable symbols of the city.\n"
       "== History ==\nConstruction began in the ninth century as a watchtower. The tower reached its present form "
       "in 1514, when the belfry and the pyramidal spire were added. It collapsed in 1902 and was rebuilt "
       "brick by brick over the following decade.\n"
       "== Architecture ==\nThe shaft is built of red brick and rises to 98.6 metres. The belfry holds five bells, "
       "each rung at a different hour of the civic day. A lift carries visitors to the loggia."},
      {"image_embedding", as_vec(embedder.embed_image(sc.image))}}
                           .dump());
  sc.records.push_back(json{
      {"article_id", "angel_statue"},
      {"title", "Angel statue of the bell tower"},
      {"sections",
       json::array({json{{"heading", "Description"},
                         {"body", "The statue on top of the tower is bronze covered in gold leaf. It turns with "
                                  "the wind and serves as a weather vane."}},
                    json{{"heading", "Restoration"},
                         {"body", "The statue was taken down for restoration several times, most recently after "
                                  "lightning damaged one of its wings."}}})},
      {"image_embedding", as_vec(embedder.embed_image(statue_crop))}}
                           .dump());
  // Extra image entry: the caption's text embedding also points at the statue.
  sc.records.push_back(json{{"article_id", "angel_statue"}, {"image_embedding", as_vec(embedder.embed_text(caption))}}.dump());
  const char* fillers[] = {"harbour", "basilica", "clock_tower", "palace", "library", "bridge"};
  for (const char* name : fillers) {
    sc.records.push_back(json{{"article_id", name},
                              {"title", std::string("The ") + name},
                              {"text", std::string("The ") + name + " is a well known building of the city.\n"
                                       "== Notes ==\nIt appears in many guide books about the " + name + "."},
                              {"image_embedding", vector_json(random_unit(rng, embedder.dimension()))}}
                             .dump());
  }

  sc.script.push_back(rule("tool_plan", "statue",
                           "<think>The statue is small next to the tower, so mirror the view, locate the statue and "
                           "describe it.</think> <tool>\n1. Flip: Flip left.\n2. grounding: the statue on top of the "
                           "tower\n3. caption: A bell tower with a statue on its top.\n</tool>"));
  sc.script.push_back(rule("caption", "statue", caption));
  sc.script.push_back(rule("grounding", "statue", R"([{"bbox_2d": [2, 0, 6, 3], "label": "statue"}])"));
  sc.script.push_back(rule("filter", "statue",
                           "<think>The retrieved document is about the tower itself; the search result describes "
                           "the statue and names its material.</think><answer>" +
                               sc.expected_knowledge + "</answer>"));
  sc.script.push_back(rule("answer", "statue", "Bronze."));
  sc.samples.push_back(json{{"id", "tower"},
                            {"question", sc.question},
                            {"image_ppm_base64", ppm_base64(sc.image)},
                            {"gt_answer", json::array({"bronze"})},
                            {"gt_article_id", "angel_statue"}}
                           .dump());
  return sc;
}

}  // namespace wikiprf::fixtures
