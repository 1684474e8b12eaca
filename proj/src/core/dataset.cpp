// SPDX-License-Identifier: Apache-2.0
#include "fuzzkd/dataset.hpp"

#include "fuzzkd/error.hpp"
#include "fuzzkd/image_io.hpp"
#include "fuzzkd/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace fuzzkd::data {

void SplitRatios::validate() const {
  if (train < 0.0 || valid < 0.0 || test < 0.0)
    throw_invalid("split ratios must be non-negative");
  if (std::abs(train + valid + test - 1.0) > 1e-9)
    throw_invalid("split ratios must sum to 1");
}

std::string_view to_string(SplitName s) {
  switch (s) {
  case SplitName::train:
    return "train";
  case SplitName::valid:
    return "valid";
  case SplitName::test:
    return "test";
  }
  return "?";
}

SplitName split_from_string(std::string_view name) {
  if (name == "train")
    return SplitName::train;
  if (name == "valid")
    return SplitName::valid;
  if (name == "test")
    return SplitName::test;
  throw_invalid("unknown split '" + std::string(name) + "'");
}

std::array<std::size_t, 3> largest_remainder(std::size_t n,
                                             const SplitRatios &ratios) {
  ratios.validate();
  const std::array<double, 3> r{ratios.train, ratios.valid, ratios.test};
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> frac{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = static_cast<double>(n) * r[i];
    // Guard against 0.7 * 10 landing at 6.999...
    const double fl = std::floor(exact + 1e-9);
    counts[i] = static_cast<std::size_t>(fl);
    frac[i] = exact - fl;
    assigned += counts[i];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned)
    ++counts[order[k % 3]];
  return counts;
}

IndexSplit stratified_split(std::span<const int> labels, std::size_t classes,
                            const SplitRatios &ratios, std::uint64_t seed) {
  Rng rng(seed);
  IndexSplit out;
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == static_cast<int>(c))
        idx.push_back(i);
    rng.shuffle(idx.begin(), idx.end());
    const auto counts = largest_remainder(idx.size(), ratios);
    auto it = idx.begin();
    out.train.insert(out.train.end(), it, it + static_cast<long>(counts[0]));
    it += static_cast<long>(counts[0]);
    out.valid.insert(out.valid.end(), it, it + static_cast<long>(counts[1]));
    it += static_cast<long>(counts[1]);
    out.test.insert(out.test.end(), it, idx.end());
  }
  return out;
}

void Dataset::validate() const {
  if (labels.empty())
    throw_invalid("dataset is empty");
  if (features.rows() != labels.size())
    throw_invalid("dataset feature rows do not match label count");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= classes)
      throw_invalid("dataset label out of range");
}

Dataset Dataset::subset(std::span<const std::size_t> idx) const {
  Dataset out;
  out.classes = classes;
  out.class_names = class_names;
  out.image_width = image_width;
  out.image_height = image_height;
  out.image_channels = image_channels;
  out.features = Matrix(idx.size(), features.cols());
  out.labels.reserve(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto src = features.row(idx[r]);
    std::copy(src.begin(), src.end(), out.features.row(r).begin());
    out.labels.push_back(labels[idx[r]]);
  }
  return out;
}

Dataset make_blobs(std::size_t samples, std::size_t classes, std::size_t dims,
                   double separation, double stddev, std::uint64_t seed) {
  if (classes < 2 || dims < 1 || samples < classes)
    throw_invalid("blobs need >= 2 classes, >= 1 dim and a sample per class");
  Rng rng(seed);
  Matrix centers(classes, dims);
  for (std::size_t c = 0; c < classes; ++c) {
    if (dims >= 2) {
      const double angle = 2.0 * M_PI * static_cast<double>(c) /
                           static_cast<double>(classes);
      centers(c, 0) = separation * std::cos(angle);
      centers(c, 1) = separation * std::sin(angle);
      if (dims > 2)
        centers(c, 2 + c % (dims - 2)) += separation;
    } else {
      centers(c, 0) = separation * static_cast<double>(c);
    }
  }
  Dataset d;
  d.classes = classes;
  d.features = Matrix(samples, dims);
  d.labels.resize(samples);
  for (std::size_t c = 0; c < classes; ++c)
    d.class_names.push_back("blob" + std::to_string(c));
  for (std::size_t i = 0; i < samples; ++i) {
    const std::size_t c = i % classes;
    d.labels[i] = static_cast<int>(c);
    for (std::size_t j = 0; j < dims; ++j)
      d.features(i, j) = centers(c, j) + stddev * rng.normal();
  }
  return d;
}

std::vector<Sample> &DatasetManifest::split(SplitName s) {
  return s == SplitName::train ? train : s == SplitName::valid ? valid : test;
}

const std::vector<Sample> &DatasetManifest::split(SplitName s) const {
  return s == SplitName::train ? train : s == SplitName::valid ? valid : test;
}

std::vector<std::size_t> DatasetManifest::class_counts(SplitName s) const {
  std::vector<std::size_t> counts(classes.size(), 0);
  for (const Sample &smp : split(s))
    ++counts.at(static_cast<std::size_t>(smp.label));
  return counts;
}

DatasetManifest build_manifest(
    const std::vector<std::string> &classes,
    const std::vector<std::vector<std::string>> &files_per_class,
    const SplitRatios &ratios, std::uint64_t seed) {
  if (classes.empty())
    throw_invalid("dataset has no classes");
  if (classes.size() != files_per_class.size())
    throw_invalid("class list and file lists differ in length");
  std::string empty;
  for (std::size_t c = 0; c < classes.size(); ++c)
    if (files_per_class[c].empty())
      empty += (empty.empty() ? "" : ", ") + classes[c];
  if (!empty.empty())
    throw_invalid("classes without images: " + empty);

  Rng rng(seed);
  DatasetManifest m;
  m.classes = classes;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    std::vector<std::string> files = files_per_class[c];
    rng.shuffle(files.begin(), files.end());
    const auto counts = largest_remainder(files.size(), ratios);
    std::size_t i = 0;
    for (SplitName s : {SplitName::train, SplitName::valid, SplitName::test})
      for (std::size_t n = 0; n < counts[static_cast<std::size_t>(s)]; ++n, ++i)
        m.split(s).push_back({files[i], static_cast<int>(c), std::nullopt, 0});
  }
  return m;
}

DatasetManifest split_directory(const std::filesystem::path &root,
                                const SplitRatios &ratios, std::uint64_t seed) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root))
    throw_io("dataset root is not a directory: " + root.string());
  std::vector<std::string> classes;
  for (const auto &entry : fs::directory_iterator(root))
    if (entry.is_directory())
      classes.push_back(entry.path().filename().string());
  std::sort(classes.begin(), classes.end());
  if (classes.empty())
    throw_invalid("no class directories under " + root.string());
  std::vector<std::vector<std::string>> files(classes.size());
  for (std::size_t c = 0; c < classes.size(); ++c) {
    for (const auto &entry : fs::directory_iterator(root / classes[c]))
      if (entry.is_regular_file() && imaging::is_image_file(entry.path()))
        files[c].push_back(entry.path().string());
    std::sort(files[c].begin(), files[c].end());
  }
  return build_manifest(classes, files, ratios, seed);
}

DatasetManifest balance(const DatasetManifest &manifest, SplitName target,
                        std::uint64_t seed) {
  if (target == SplitName::test)
    throw_invalid("the test split is never augmented");
  static constexpr std::array<imaging::Augment, 5> kCycle = {
      imaging::Augment::rot90, imaging::Augment::rot180,
      imaging::Augment::rot270, imaging::Augment::flip_h,
      imaging::Augment::flip_v};

  DatasetManifest out = manifest;
  auto &samples = out.split(target);
  const auto counts = manifest.class_counts(target);
  const std::size_t majority = *std::max_element(counts.begin(), counts.end());
  std::string empty;
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (counts[c] == 0)
      empty += (empty.empty() ? "" : ", ") + manifest.classes[c];
  if (!empty.empty())
    throw_invalid("cannot balance classes with no samples in " +
                  std::string(to_string(target)) + ": " + empty);

  Rng rng(seed);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    std::vector<const Sample *> originals;
    for (const Sample &s : manifest.split(target))
      if (s.label == static_cast<int>(c) && !s.augment)
        originals.push_back(&s);
    if (originals.empty())
      throw_invalid("class " + manifest.classes[c] +
                    " has only augmented samples to draw from");
    for (std::size_t j = 0; counts[c] + j < majority; ++j) {
      const Sample &src = *originals[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<long>(originals.size()) - 1))];
      samples.push_back({src.path, src.label, kCycle[j % kCycle.size()], j + 1});
    }
  }
  return out;
}

namespace {

nlohmann::json samples_to_json(const std::vector<Sample> &v) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Sample &s : v) {
    nlohmann::json e{{"path", s.path}, {"label", s.label}};
    e["provenance"] =
        s.augment ? "augmented(" + std::string(imaging::to_string(*s.augment)) + ")"
                  : std::string("original");
    if (s.augment)
      e["copy"] = s.copy;
    arr.push_back(std::move(e));
  }
  return arr;
}

std::vector<Sample> samples_from_json(const nlohmann::json &arr) {
  std::vector<Sample> out;
  for (const auto &e : arr) {
    Sample s;
    s.path = e.at("path").get<std::string>();
    s.label = e.at("label").get<int>();
    const auto prov = e.at("provenance").get<std::string>();
    if (prov != "original") {
      const std::string prefix = "augmented(";
      if (prov.rfind(prefix, 0) != 0 || prov.back() != ')')
        throw_format("bad sample provenance '" + prov + "'");
      s.augment = imaging::augment_from_string(
          prov.substr(prefix.size(), prov.size() - prefix.size() - 1));
      s.copy = e.value("copy", std::size_t{0});
    }
    out.push_back(std::move(s));
  }
  return out;
}

} // namespace

void to_json(nlohmann::json &j, const DatasetManifest &m) {
  j = nlohmann::json{{"format", "fuzzkd-manifest"},
                     {"version", 1},
                     {"classes", m.classes},
                     {"train", samples_to_json(m.train)},
                     {"valid", samples_to_json(m.valid)},
                     {"test", samples_to_json(m.test)}};
}

void from_json(const nlohmann::json &j, DatasetManifest &m) {
  if (j.value("format", "") != "fuzzkd-manifest")
    throw_format("not a fuzzkd manifest");
  m.classes = j.at("classes").get<std::vector<std::string>>();
  m.train = samples_from_json(j.at("train"));
  m.valid = samples_from_json(j.at("valid"));
  m.test = samples_from_json(j.at("test"));
}

void save_manifest(const std::filesystem::path &path, const DatasetManifest &m) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out)
    throw_io("cannot write manifest " + path.string());
  out << nlohmann::json(m).dump(2) << '\n';
}

DatasetManifest load_manifest(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw_io("cannot open manifest " + path.string());
  try {
    return nlohmann::json::parse(in).get<DatasetManifest>();
  } catch (const nlohmann::json::exception &e) {
    throw_format("malformed manifest " + path.string() + ": " + e.what());
  }
}

imaging::ImageGrid materialize(const Sample &sample) {
  imaging::ImageGrid img = imaging::load_image(sample.path);
  return sample.augment ? imaging::augment(img, *sample.augment) : img;
}

Dataset load_split(const DatasetManifest &m, SplitName s, std::size_t side) {
  const auto &samples = m.split(s);
  Dataset d;
  d.classes = m.classes.size();
  d.class_names = m.classes;
  d.image_width = side;
  d.image_height = side;
  d.image_channels = 1;
  d.features = Matrix(samples.size(), side * side);
  d.labels.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    imaging::ImageGrid img = materialize(samples[i]);
    if (img.channels == 3) {
      imaging::ImageGrid gray(img.width, img.height, 1, img.range);
      for (std::size_t p = 0; p < img.width * img.height; ++p)
        gray.pixels[p] = 0.299 * img.pixels[3 * p] +
                         0.587 * img.pixels[3 * p + 1] +
                         0.114 * img.pixels[3 * p + 2];
      img = std::move(gray);
    }
    img = imaging::rescale_unit(imaging::resize_bilinear(img, side, side));
    std::copy(img.pixels.begin(), img.pixels.end(), d.features.row(i).begin());
    d.labels.push_back(samples[i].label);
  }
  return d;
}

} // namespace fuzzkd::data
