// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fuzzkd/config.hpp"
#include "fuzzkd/metrics.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace fuzzkd::commands {

namespace fs = std::filesystem;

/// Per-file outcome of a batch image command.
struct BatchOutcome {
  std::size_t written = 0;
  std::vector<std::string> failures; // "path: reason"
};

std::size_t default_jobs();

/// Gamma (and optionally histogram equalization) over every image below
/// `in_dir`. Gamma-only results go to out_dir/Pix1, equalized ones to
/// out_dir/Pix2, mirroring the input layout with .png names. Unreadable
/// files are logged and skipped.
BatchOutcome enhance(const fs::path &in_dir, const fs::path &out_dir,
                     const config::ImagingSection &img, std::size_t jobs);

/// Fuses images with the same relative path under both trees, resized to
/// side x side. Throws invalid_argument naming every unmatched file before
/// any work starts.
BatchOutcome fuse(const fs::path &pix1, const fs::path &pix2,
                  const fs::path &out_dir, int levels, std::size_t side,
                  std::size_t jobs);

/// Dataset and split described by the config's data section.
data::Dataset load_dataset(const config::ExperimentConfig &cfg,
                           data::IndexSplit &split);

/// Writes student.fkdm (best validation epoch), history.json and, for a
/// trained teacher, teacher.fkdm.
void train(const config::ExperimentConfig &cfg, const fs::path &out_dir);

/// Writes best.json and ga_history.json.
void select(const config::ExperimentConfig &cfg, const fs::path &out_dir);

/// Test-split report for a checkpoint.
metrics::MetricsReport evaluate(const config::ExperimentConfig &cfg,
                                const fs::path &checkpoint);

/// Report from a CSV of "true,predicted" rows (header optional). Extra
/// columns are per-class scores.
metrics::MetricsReport evaluate_predictions(const fs::path &csv,
                                            std::size_t classes);

void write_report(const fs::path &path, const metrics::MetricsReport &r);
std::string render_report(const fs::path &report_json);

/// Splits (and optionally balances) an image tree into a manifest file.
data::DatasetManifest split(const config::ExperimentConfig &cfg,
                            const fs::path &manifest_out);

/// Pretty JSON with a trailing newline, parent directories created.
void write_json(const fs::path &path, const nlohmann::json &doc);

} // namespace fuzzkd::commands
