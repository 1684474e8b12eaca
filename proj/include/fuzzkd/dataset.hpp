// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fuzzkd/imaging.hpp"
#include "fuzzkd/matrix.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fuzzkd::data {

struct SplitRatios {
  double train = 0.7;
  double valid = 0.1;
  double test = 0.2;

  void validate() const;
};

enum class SplitName { train, valid, test };

std::string_view to_string(SplitName s);
SplitName split_from_string(std::string_view name);

/// Split sizes for n items: floors of n * ratio, remainder handed out by
/// largest fractional part (ties go to the earlier split). Sums to n exactly.
std::array<std::size_t, 3> largest_remainder(std::size_t n,
                                             const SplitRatios &ratios);

struct IndexSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
  std::vector<std::size_t> test;
};

/// Per-class seeded shuffle followed by largest-remainder allotment.
IndexSplit stratified_split(std::span<const int> labels, std::size_t classes,
                            const SplitRatios &ratios, std::uint64_t seed);

/// Labeled feature matrix. Image datasets also carry their pixel geometry so
/// a micro_cnn can consume rows as HxWxC maps.
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  std::size_t classes = 0;
  std::vector<std::string> class_names;
  std::size_t image_width = 0;
  std::size_t image_height = 0;
  std::size_t image_channels = 0;

  std::size_t size() const { return labels.size(); }
  void validate() const;
  /// Rows `idx` of this dataset.
  Dataset subset(std::span<const std::size_t> idx) const;
};

/// Isotropic Gaussian blobs with centers evenly spaced on a circle of radius
/// `separation` (2-D) or on scaled unit axes (higher dims).
Dataset make_blobs(std::size_t samples, std::size_t classes,
                   std::size_t dims, double separation, double stddev,
                   std::uint64_t seed);

struct Sample {
  std::string path;
  int label = 0;
  std::optional<imaging::Augment> augment; // nullopt = original
  std::size_t copy = 0;                    // ordinal among augmented copies

  bool operator==(const Sample &) const = default;
};

struct DatasetManifest {
  std::vector<std::string> classes;
  std::vector<Sample> train;
  std::vector<Sample> valid;
  std::vector<Sample> test;

  std::vector<Sample> &split(SplitName s);
  const std::vector<Sample> &split(SplitName s) const;
  std::vector<std::size_t> class_counts(SplitName s) const;

  bool operator==(const DatasetManifest &) const = default;
};

/// Splits in-memory per-class file lists (class order is kept).
DatasetManifest build_manifest(
    const std::vector<std::string> &classes,
    const std::vector<std::vector<std::string>> &files_per_class,
    const SplitRatios &ratios, std::uint64_t seed);

/// Scans root/<class>/*.{png,jpg,jpeg} (classes and files sorted by name).
DatasetManifest split_directory(const std::filesystem::path &root,
                                const SplitRatios &ratios, std::uint64_t seed);

/// Oversamples minority classes of one split to the majority count with
/// augmented copies. Ops cycle rot90, rot180, rot270, flip_h, flip_v; each
/// copy's source is a seeded draw from that class's originals.
DatasetManifest balance(const DatasetManifest &manifest, SplitName target,
                        std::uint64_t seed);

void to_json(nlohmann::json &j, const DatasetManifest &m);
void from_json(const nlohmann::json &j, DatasetManifest &m);

void save_manifest(const std::filesystem::path &path, const DatasetManifest &m);
DatasetManifest load_manifest(const std::filesystem::path &path);

/// Loads the sample's source image and applies its augmentation.
imaging::ImageGrid materialize(const Sample &sample);

/// Loads a split as a grayscale dataset resized to `side` x `side`, unit
/// range, flattened row-major.
Dataset load_split(const DatasetManifest &m, SplitName s, std::size_t side);

} // namespace fuzzkd::data
