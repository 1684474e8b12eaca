// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fuzzkd/dataset.hpp"
#include "fuzzkd/fuzzy.hpp"
#include "fuzzkd/ga.hpp"
#include "fuzzkd/harness.hpp"
#include "fuzzkd/imaging.hpp"
#include "fuzzkd/losses.hpp"
#include "fuzzkd/nn.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fuzzkd::config {

struct GASection {
  ga::GAConfig ga;
  ga::StoppingCriteria stop;
  std::string fitness = "onemax"; // onemax | sphere | distill
  std::size_t genome_length = 20; // onemax / sphere only
  int sphere_bound = 5;           // sphere genes lie in [-b, b]
  std::size_t budget_epochs = 5;  // distill only
  double penalty = 0.1;
};

struct ModelSection {
  nn::NetKind kind = nn::NetKind::mlp;
  std::vector<std::size_t> hidden{16};
  std::size_t depth_multiplier = 1;
  std::size_t pointwise_channels = 8;
};

struct TeacherSection {
  std::string kind = "network"; // network | synthetic
  ModelSection model{nn::NetKind::mlp, {64, 64}, 1, 8};
  std::size_t epochs = 30;
  double learning_rate = 0.01;
  double confidence = 0.9; // synthetic only
};

struct ImagingSection {
  imaging::GammaParams gamma{};
  bool histeq = false;
  int levels = 2;
  std::size_t output_side = 224;
};

struct BlobSection {
  std::size_t samples = 600;
  std::size_t classes = 3;
  std::size_t dims = 2;
  double separation = 3.0;
  double stddev = 1.0;
};

struct DataSection {
  std::string source = "blobs"; // blobs | images
  std::string root;             // class-per-directory tree (images)
  std::string manifest;         // optional saved manifest (images)
  data::SplitRatios ratios{};
  BlobSection blobs{};
  std::size_t image_side = 32;
  bool balance = false; // balance train and valid after splitting
};

/// Every knob of an experiment. Parsed from a JSON document layered over the
/// defaults; dotted-key overrides are applied last.
struct ExperimentConfig {
  fuzzy::FuzzyEngine fuzzy{};
  loss::DistillConfig loss{};
  GASection ga{};
  harness::TrainConfig train{};
  ModelSection student{};
  TeacherSection teacher{};
  ImagingSection imaging{};
  DataSection data{};
  std::uint64_t seed = 0;

  /// All range problems at once; empty when the config is usable.
  std::vector<std::string> problems() const;
  /// Throws invalid_argument carrying every problem, one per line.
  void validate() const;
};

nlohmann::json default_json();
nlohmann::json to_json(const ExperimentConfig &cfg);

/// Parses a merged document. Type and unknown-key problems are collected
/// into `problems` rather than thrown.
ExperimentConfig from_json(const nlohmann::json &doc,
                           std::vector<std::string> &problems);

/// Sets `key` (dot separated) in `doc`. `value` is read as JSON when it
/// parses, otherwise taken as a string.
void apply_override(nlohmann::json &doc, const std::string &key,
                    const std::string &value);

/// defaults <- file (if non-empty) <- overrides "key=value", then validated.
ExperimentConfig load(const std::filesystem::path &file,
                      const std::vector<std::string> &overrides);

nn::NetworkSpec make_spec(const ModelSection &m, const data::Dataset &d);

} // namespace fuzzkd::config
