// SPDX-License-Identifier: Apache-2.0
#include "fuzzkd/config.hpp"
#include "fuzzkd/error.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace fuzzkd;
using namespace fuzzkd::config;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const nlohmann::json &doc, std::vector<std::string> &problems) {
  nlohmann::json merged = default_json();
  merged.merge_patch(doc);
  return from_json(merged, problems);
}

bool mentions(const std::vector<std::string> &lines, const std::string &needle) {
  for (const auto &l : lines)
    if (l.find(needle) != std::string::npos)
      return true;
  return false;
}

} // namespace

TEST_CASE("defaults are valid and match the module defaults") {
  std::vector<std::string> problems;
  const auto cfg = from_json(default_json(), problems);
  CHECK(problems.empty());
  CHECK(cfg.problems().empty());
  CHECK(cfg.loss.weight_mode == loss::WeightMode::fuzzy_mamdani);
  CHECK(cfg.loss.fixed_weight == 0.1);
  CHECK(cfg.loss.temperature == 2.0);
  CHECK(cfg.loss.balance_v == 0.5);
  CHECK(cfg.train.learning_rate == 0.001);
  CHECK(cfg.train.batch_size == 64);
  CHECK(cfg.train.epochs == 30);
  CHECK(cfg.ga.ga.crossover_rate == 0.9);
  CHECK(cfg.ga.ga.mutation_rate == 0.02);
  CHECK(cfg.ga.ga.elitism == 1);
  CHECK(cfg.fuzzy.uncertainty_mode == fuzzy::UncertaintyMode::entropy);
  CHECK(cfg.data.ratios.train == 0.7);
  CHECK(to_json(cfg) == default_json());
}

TEST_CASE("seed feeds named sub-streams") {
  std::vector<std::string> problems;
  const auto a = parse({{"seed", 5}}, problems);
  const auto b = parse({{"seed", 6}}, problems);
  CHECK(problems.empty());
  CHECK(a.seed == 5);
  CHECK(a.train.seed == substream_seed(5, "train"));
  CHECK(a.ga.ga.seed == substream_seed(5, "ga"));
  CHECK(a.train.seed != a.ga.ga.seed);
  CHECK(a.train.seed != b.train.seed);
}

TEST_CASE("documents round trip") {
  std::vector<std::string> problems;
  nlohmann::json doc = default_json();
  doc["loss"]["mode"] = "fuzzy_weighted_sum";
  doc["fuzzy"]["rules"]["high"] = {"low", "low", "high"};
  doc["ga"]["fitness_threshold"] = 20;
  doc["student"]["hidden"] = {4, 4};
  const auto cfg = from_json(doc, problems);
  CHECK(problems.empty());
  CHECK(cfg.loss.weight_mode == loss::WeightMode::fuzzy_weighted_sum);
  CHECK(cfg.fuzzy.rules.at(fuzzy::Level::high, fuzzy::Level::high) == fuzzy::Level::high);
  CHECK(cfg.ga.stop.fitness_threshold == 20);
  CHECK(to_json(cfg) == doc);
  CHECK(default_json()["ga"]["fitness_threshold"].is_null());
}

TEST_CASE("every problem is reported together") {
  std::vector<std::string> problems;
  const auto cfg = parse({{"loss", {{"temperature", -1}, {"v", 2}}},
                          {"train", {{"batch_size", 0}}},
                          {"ga", {{"crossover_rate", 1.5}}},
                          {"data", {{"source", "sql"}}},
                          {"imaging", {{"levels", 0}}}},
                         problems);
  CHECK(problems.empty());
  const auto p = cfg.problems();
  CHECK(p.size() >= 5);
  CHECK(mentions(p, "loss"));
  CHECK(mentions(p, "train"));
  CHECK(mentions(p, "ga"));
  CHECK(mentions(p, "data"));
  CHECK(mentions(p, "imaging"));
  try {
    cfg.validate();
    FAIL("invalid config accepted");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::invalid_argument);
    const std::string msg = e.what();
    CHECK(msg.find("data") != std::string::npos);
    CHECK(msg.find("imaging") != std::string::npos);
  }
}

TEST_CASE("unknown keys and type errors are collected") {
  std::vector<std::string> problems;
  parse({{"loss", {{"omgea", 0.2}, {"temperature", "hot"}}}, {"bogus", 1}}, problems);
  CHECK(problems.size() >= 3);
  CHECK(mentions(problems, "omgea"));
  CHECK(mentions(problems, "bogus"));
  CHECK(mentions(problems, "temperature"));
  problems.clear();
  from_json(nlohmann::json::array(), problems);
  CHECK_FALSE(problems.empty());
}

TEST_CASE("dotted overrides") {
  nlohmann::json doc = default_json();
  apply_override(doc, "loss.temperature", "4");
  apply_override(doc, "loss.mode", "static");
  apply_override(doc, "student.hidden", "[8,8]");
  CHECK(doc["loss"]["temperature"] == 4);
  CHECK(doc["loss"]["mode"] == "static");
  CHECK(doc["student"]["hidden"] == nlohmann::json::array({8, 8}));
  apply_override(doc, "new.nested", "1");
  std::vector<std::string> problems;
  from_json(doc, problems);
  CHECK(mentions(problems, "new"));
  CHECK_THROWS_AS(apply_override(doc, "", "1"), Error);
}

TEST_CASE("load layers file then overrides") {
  const fs::path dir = fs::temp_directory_path() / "fuzzkd_config_test";
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "c.json");
    out << R"({"seed": 3, "loss": {"temperature": 3.0}, "train": {"epochs": 7}})";
  }
  const auto cfg = load(dir / "c.json", {"loss.temperature=5", "train.batch_size=16"});
  CHECK(cfg.seed == 3);
  CHECK(cfg.loss.temperature == 5.0);
  CHECK(cfg.train.epochs == 7);
  CHECK(cfg.train.batch_size == 16);
  CHECK(load("", {}).loss.temperature == 2.0);

  CHECK_THROWS_AS(load(dir / "missing.json", {}), Error);
  CHECK_THROWS_AS(load("", {"loss.temperature"}), Error);
  {
    std::ofstream out(dir / "broken.json");
    out << "{ not json";
  }
  try {
    load(dir / "broken.json", {});
    FAIL("broken file accepted");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::invalid_argument); // a bad config is a validation failure
  }
  try {
    load("", {"loss.v=3", "train.learning_rate=-1", "zzz=1"});
    FAIL("bad overrides accepted");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::invalid_argument);
    const std::string msg = e.what();
    CHECK(msg.find("zzz") != std::string::npos);
    CHECK(msg.find("learning") != std::string::npos);
    CHECK(msg.find("loss") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("model section builds network specs") {
  const auto blobs = data::make_blobs(30, 3, 2, 3.0, 1.0, 1);
  ModelSection m;
  m.hidden = {5};
  const auto s = make_spec(m, blobs);
  CHECK(s.input_dim == 2);
  CHECK(s.classes == 3);
  CHECK(s.hidden == std::vector<std::size_t>{5});
  m.kind = nn::NetKind::micro_cnn;
  CHECK_THROWS_AS(make_spec(m, blobs), Error);
}
