// SPDX-License-Identifier: Apache-2.0
#include "fuzzkd/dataset.hpp"
#include "fuzzkd/error.hpp"
#include "fuzzkd/image_io.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

using namespace fuzzkd;
using namespace fuzzkd::data;
namespace fs = std::filesystem;

namespace {

std::vector<std::vector<std::string>> files(const std::vector<std::size_t> &counts) {
  std::vector<std::vector<std::string>> out;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    out.emplace_back();
    for (std::size_t i = 0; i < counts[c]; ++i)
      out.back().push_back("c" + std::to_string(c) + "/img" + std::to_string(i) + ".png");
  }
  return out;
}

std::vector<std::string> names(std::size_t k) {
  std::vector<std::string> out;
  for (std::size_t c = 0; c < k; ++c)
    out.push_back("class" + std::to_string(c));
  return out;
}

// Builds a manifest whose `target` split has exactly `counts` originals.
DatasetManifest with_counts(SplitName target, const std::vector<std::size_t> &counts) {
  DatasetManifest m;
  m.classes = names(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c)
    for (std::size_t i = 0; i < counts[c]; ++i)
      m.split(target).push_back({"c" + std::to_string(c) + "/" + std::to_string(i) + ".png",
                                 static_cast<int>(c), std::nullopt, 0});
  return m;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string &name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("largest remainder allotment") {
  CHECK(largest_remainder(10, {}) == std::array<std::size_t, 3>{7, 1, 2});
  CHECK(largest_remainder(0, {}) == std::array<std::size_t, 3>{0, 0, 0});
  CHECK(largest_remainder(561, {}) == std::array<std::size_t, 3>{393, 56, 112});
  CHECK(largest_remainder(416, {}) == std::array<std::size_t, 3>{291, 42, 83});
  for (std::size_t n = 0; n < 300; ++n) {
    const auto a = largest_remainder(n, {0.6, 0.25, 0.15});
    CHECK(a[0] + a[1] + a[2] == n);
    CHECK(std::abs(static_cast<double>(a[0]) - 0.6 * static_cast<double>(n)) < 1.0);
  }
  CHECK_THROWS_AS((SplitRatios{0.7, 0.2, 0.2}.validate()), Error);
  CHECK_THROWS_AS((SplitRatios{-0.1, 0.9, 0.2}.validate()), Error);
}

TEST_CASE("ten per class splits 7/1/2") {
  const auto m = build_manifest(names(3), files({10, 10, 10}), {}, 5);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(m.class_counts(SplitName::train)[c] == 7);
    CHECK(m.class_counts(SplitName::valid)[c] == 1);
    CHECK(m.class_counts(SplitName::test)[c] == 2);
  }
  std::set<std::string> seen;
  for (auto s : {SplitName::train, SplitName::valid, SplitName::test})
    for (const auto &x : m.split(s))
      CHECK(seen.insert(x.path).second);
  CHECK(seen.size() == 30);
}

TEST_CASE("seeded manifests are reproducible") {
  const auto a = build_manifest(names(3), files({40, 13, 22}), {}, 9);
  CHECK(a == build_manifest(names(3), files({40, 13, 22}), {}, 9));
  CHECK_FALSE(a == build_manifest(names(3), files({40, 13, 22}), {}, 10));
}

TEST_CASE("1097 images over three classes") {
  const auto m = build_manifest(names(3), files({120, 561, 416}), {}, 1);
  const auto total = [&](SplitName s) {
    const auto c = m.class_counts(s);
    return c[0] + c[1] + c[2];
  };
  CHECK(total(SplitName::train) + total(SplitName::valid) + total(SplitName::test) == 1097);
  // per-class rounding can move each split by at most one sample per class
  CHECK(std::abs(static_cast<double>(total(SplitName::train)) - 0.7 * 1097) <= 3);
  CHECK(std::abs(static_cast<double>(total(SplitName::valid)) - 0.1 * 1097) <= 3);
  CHECK(std::abs(static_cast<double>(total(SplitName::test)) - 0.2 * 1097) <= 3);
  CHECK(total(SplitName::train) == 84 + 393 + 291);
}

TEST_CASE("empty class is named") {
  try {
    build_manifest(names(3), files({5, 0, 5}), {}, 1);
    FAIL("empty class accepted");
  } catch (const Error &e) {
    CHECK(std::string(e.what()).find("class1") != std::string::npos);
  }
}

TEST_CASE("balancing to the majority count") {
  const auto train = with_counts(SplitName::train, {86, 339, 332});
  const auto bt = balance(train, SplitName::train, 3);
  CHECK(bt.class_counts(SplitName::train) == std::vector<std::size_t>{339, 339, 339});

  const auto valid = with_counts(SplitName::valid, {10, 49, 33});
  const auto bv = balance(valid, SplitName::valid, 3);
  CHECK(bv.class_counts(SplitName::valid) == std::vector<std::size_t>{49, 49, 49});

  // originals kept, copies recorded, op cycle fixed
  std::size_t originals = 0;
  std::vector<imaging::Augment> ops;
  for (const auto &s : bt.train) {
    if (!s.augment) {
      ++originals;
      continue;
    }
    CHECK(s.copy >= 1);
    if (s.label == 0)
      ops.push_back(*s.augment);
  }
  CHECK(originals == 86 + 339 + 332);
  REQUIRE(ops.size() == 339 - 86);
  CHECK(ops[0] == imaging::Augment::rot90);
  CHECK(ops[4] == imaging::Augment::flip_v);
  CHECK(ops[5] == imaging::Augment::rot90);
  CHECK(std::equal(train.train.begin(), train.train.end(), bt.train.begin()));

  CHECK(balance(train, SplitName::train, 3) == bt);
  const auto flat = with_counts(SplitName::train, {5, 5});
  CHECK(balance(flat, SplitName::train, 1) == flat);
  CHECK_THROWS_AS(balance(with_counts(SplitName::test, {3, 5}), SplitName::test, 1), Error);
  CHECK_THROWS_AS(balance(with_counts(SplitName::train, {3, 0}), SplitName::train, 1), Error);
}

TEST_CASE("manifest JSON round trip") {
  const auto m = balance(build_manifest(names(2), files({9, 4}), {}, 2), SplitName::train, 4);
  const nlohmann::json j = m;
  CHECK(j.at("format") == "fuzzkd-manifest");
  CHECK(j.get<DatasetManifest>() == m);
  TempDir tmp("fuzzkd_manifest_test");
  save_manifest(tmp.path / "sub" / "m.json", m);
  CHECK(load_manifest(tmp.path / "sub" / "m.json") == m);
  CHECK_THROWS_AS(load_manifest(tmp.path / "missing.json"), Error);
  nlohmann::json bad = j;
  bad["format"] = "x";
  CHECK_THROWS(bad.get<DatasetManifest>());
}

TEST_CASE("stratified split keeps class proportions") {
  std::vector<int> labels;
  for (int c = 0; c < 3; ++c)
    labels.insert(labels.end(), 20, c);
  const auto s = stratified_split(labels, 3, {}, 6);
  CHECK(s.train.size() == 42);
  CHECK(s.valid.size() == 6);
  CHECK(s.test.size() == 12);
  std::vector<std::size_t> all;
  for (const auto *v : {&s.train, &s.valid, &s.test})
    all.insert(all.end(), v->begin(), v->end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i)
    CHECK(all[i] == i);
  const auto again = stratified_split(labels, 3, {}, 6);
  CHECK(again.train == s.train);
}

TEST_CASE("blobs are labeled and reproducible") {
  const auto a = make_blobs(90, 3, 2, 3.0, 1.0, 1);
  CHECK(a.size() == 90);
  CHECK(a.features.cols() == 2);
  CHECK(std::count(a.labels.begin(), a.labels.end(), 1) == 30);
  CHECK(a.features.data() == make_blobs(90, 3, 2, 3.0, 1.0, 1).features.data());
  const auto hi = make_blobs(40, 4, 5, 3.0, 1.0, 1);
  CHECK(hi.features.cols() == 5);
  CHECK_NOTHROW(hi.validate());
  const auto sub = a.subset(std::vector<std::size_t>{3, 0});
  CHECK(sub.labels == std::vector<int>{a.labels[3], a.labels[0]});
  CHECK(sub.features(0, 1) == a.features(3, 1));
}

TEST_CASE("directory scan, materialize and load") {
  TempDir tmp("fuzzkd_dataset_dir");
  for (const char *cls : {"b_class", "a_class"})
    for (int i = 0; i < 10; ++i) {
      imaging::ImageGrid img(4, 2, 1, imaging::Range::byte);
      for (std::size_t p = 0; p < img.pixels.size(); ++p)
        img.pixels[p] = static_cast<double>((p * 30 + static_cast<std::size_t>(i)) % 256);
      imaging::save_png(tmp.path / cls / ("img" + std::to_string(i) + ".png"), img);
    }
  fs::create_directories(tmp.path / "empty_class");
  CHECK_THROWS_AS(split_directory(tmp.path, {}, 1), Error);
  fs::remove(tmp.path / "empty_class");

  const auto m = split_directory(tmp.path, {}, 1);
  CHECK(m.classes == std::vector<std::string>{"a_class", "b_class"});
  CHECK(m.class_counts(SplitName::train) == std::vector<std::size_t>{7, 7});

  const auto b = balance(m, SplitName::train, 2);
  Sample aug = b.train.front();
  aug.augment = imaging::Augment::rot90;
  const auto rotated = materialize(aug);
  const auto plain = imaging::load_image(aug.path);
  CHECK(rotated.width == plain.height);
  CHECK(rotated.pixels == imaging::augment(plain, imaging::Augment::rot90).pixels);

  const auto d = load_split(m, SplitName::test, 3);
  CHECK(d.size() == 4);
  CHECK(d.features.cols() == 9);
  CHECK(d.image_width == 3);
  for (double v : d.features.data()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK_THROWS_AS(split_directory(tmp.path / "nope", {}, 1), Error);
}
