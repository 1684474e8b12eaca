// SPDX-License-Identifier: Apache-2.0
// Exercises the shared library through the C header only.
#include "fuzzkd/fuzzkd.h"

#include <doctest.h>

#include "oracles.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Engine {
  fuzzkd_engine *h = nullptr;
  Engine() { REQUIRE(fuzzkd_engine_create(&h) == FUZZKD_OK); }
  ~Engine() { fuzzkd_engine_destroy(h); }
};

struct Image {
  fuzzkd_image *h = nullptr;
  ~Image() { fuzzkd_image_destroy(h); }
};

std::string take(char *s) {
  std::string out = s ? s : "";
  fuzzkd_string_free(s);
  return out;
}

double onemax_cb(const int *genes, size_t k, void *user, int *valid) {
  ++*static_cast<int *>(user);
  double s = 0;
  for (size_t i = 0; i < k; ++i)
    s += genes[i];
  *valid = 1;
  return s;
}

double reject_odd(const int *genes, size_t, void *, int *valid) {
  *valid = genes[0] % 2 == 0;
  return genes[0];
}

} // namespace

TEST_CASE("version and error plumbing") {
  CHECK(std::string(fuzzkd_version()) == "0.1.0");
  CHECK(fuzzkd_set_log_level("warn") == FUZZKD_OK);
  CHECK(fuzzkd_set_log_level("loud") == FUZZKD_ERR_INVALID_ARGUMENT);
  CHECK(std::string(fuzzkd_last_error()).find("loud") != std::string::npos);
  CHECK(fuzzkd_engine_create(nullptr) == FUZZKD_ERR_INVALID_ARGUMENT);
  fuzzkd_engine_destroy(nullptr);
  fuzzkd_string_free(nullptr);
}

TEST_CASE("engine weights match the oracle") {
  Engine e;
  double w = 0;
  REQUIRE(fuzzkd_engine_weight(e.h, 0.9, 0.1, &w) == FUZZKD_OK);
  CHECK(std::abs(w - oracle::centroid(oracle::activations(0.9, 0.1))) < 1e-12);
  CHECK(w >= 0.80);
  CHECK(w <= 0.95);
  CHECK(fuzzkd_engine_weight(e.h, 1.5, 0.1, &w) == FUZZKD_ERR_DOMAIN);
  CHECK(fuzzkd_engine_weight(e.h, 0.5, std::nan(""), &w) == FUZZKD_ERR_DOMAIN);

  const double probs[3] = {0.9, 0.05, 0.05};
  REQUIRE(fuzzkd_engine_set_uncertainty_mode(e.h, FUZZKD_UNCERTAINTY_COMPLEMENT) == FUZZKD_OK);
  double wp = 0;
  REQUIRE(fuzzkd_engine_weight_from_probs(e.h, probs, 3, &wp) == FUZZKD_OK);
  CHECK(wp == doctest::Approx(w));
  const double bad[2] = {0.7, 0.7};
  CHECK(fuzzkd_engine_weight_from_probs(e.h, bad, 2, &wp) == FUZZKD_ERR_DOMAIN);

  REQUIRE(fuzzkd_engine_set_method(e.h, FUZZKD_METHOD_WEIGHTED_SUM) == FUZZKD_OK);
  REQUIRE(fuzzkd_engine_weight(e.h, 0.9, 0.1, &w) == FUZZKD_OK);
  CHECK(w == doctest::Approx(0.8));
  CHECK(fuzzkd_engine_set_method(e.h, 7) == FUZZKD_ERR_INVALID_ARGUMENT);
  CHECK(fuzzkd_engine_set_level_weights(e.h, 0.5, 0.2, 0.8) == FUZZKD_ERR_DOMAIN);
  CHECK(fuzzkd_engine_set_rule(e.h, 3, 0, 0) == FUZZKD_ERR_INVALID_ARGUMENT);
  CHECK(fuzzkd_engine_set_rule(e.h, 2, 0, 1) == FUZZKD_OK);

  double m[3];
  REQUIRE(fuzzkd_memberships(0, 0.35, m) == FUZZKD_OK);
  CHECK(m[0] == doctest::Approx(0.5));
  CHECK(m[1] == doctest::Approx(0.5));
  CHECK(m[2] == 0.0);
  CHECK(fuzzkd_memberships(2, 0.5, m) == FUZZKD_ERR_INVALID_ARGUMENT);
}

TEST_CASE("loss and gradient through the C API") {
  const double s[6] = {0.3, 0.1, -0.2, 1.0, -1.0, 0.5};
  const double t[6] = {2.0, 0.0, -1.0, 0.0, 0.2, 0.1};
  const int y[2] = {0, 2};
  fuzzkd_distill_config cfg = fuzzkd_distill_defaults();
  CHECK(cfg.weight_mode == FUZZKD_WEIGHT_FUZZY_MAMDANI);
  CHECK(cfg.omega == 0.1);
  CHECK(cfg.temperature == 2.0);
  CHECK(cfg.v == 0.5);

  double total = 0, grad[6];
  REQUIRE(fuzzkd_kd_loss(nullptr, &cfg, s, t, y, 2, 3, nullptr, &total, grad) == FUZZKD_OK);
  // finite differences with the fuzzy weights held by the teacher
  for (int i = 0; i < 6; ++i) {
    double sp[6], sm[6];
    std::copy(s, s + 6, sp);
    std::copy(s, s + 6, sm);
    sp[i] += 1e-6;
    sm[i] -= 1e-6;
    double fp = 0, fm = 0;
    fuzzkd_kd_loss(nullptr, &cfg, sp, t, y, 2, 3, nullptr, &fp, nullptr);
    fuzzkd_kd_loss(nullptr, &cfg, sm, t, y, 2, 3, nullptr, &fm, nullptr);
    CHECK(grad[i] == doctest::Approx((fp - fm) / 2e-6).epsilon(1e-6));
  }

  // zero weights leave (1 - v) * CE
  const double zero[2] = {0, 0};
  REQUIRE(fuzzkd_kd_loss(nullptr, &cfg, s, t, y, 2, 3, zero, &total, nullptr) == FUZZKD_OK);
  const auto p0 = oracle::softmax({0.3, 0.1, -0.2}, 1.0L);
  const auto p1 = oracle::softmax({1.0, -1.0, 0.5}, 1.0L);
  const double ce = static_cast<double>(-(std::log(p0[0]) + std::log(p1[2])) / 2);
  CHECK(std::abs(total - 0.5 * ce) < 1e-12);

  cfg.temperature = 0;
  CHECK(fuzzkd_kd_loss(nullptr, &cfg, s, t, y, 2, 3, nullptr, &total, nullptr) ==
        FUZZKD_ERR_DOMAIN);
  cfg = fuzzkd_distill_defaults();
  const int bad_y[2] = {0, 3};
  CHECK(fuzzkd_kd_loss(nullptr, &cfg, s, t, bad_y, 2, 3, nullptr, &total, nullptr) != FUZZKD_OK);

  double sm[3];
  REQUIRE(fuzzkd_softmax_t(s, 3, 2.0, sm) == FUZZKD_OK);
  CHECK(sm[0] + sm[1] + sm[2] == doctest::Approx(1.0));
}

TEST_CASE("image handles") {
  Image a, b, fused, g;
  REQUIRE(fuzzkd_image_create(8, 8, 1, FUZZKD_RANGE_BYTE, &a.h) == FUZZKD_OK);
  REQUIRE(fuzzkd_image_create(8, 8, 1, FUZZKD_RANGE_BYTE, &b.h) == FUZZKD_OK);
  CHECK(fuzzkd_image_width(a.h) == 8);
  CHECK(fuzzkd_image_channels(a.h) == 1);
  CHECK(fuzzkd_image_range(a.h) == FUZZKD_RANGE_BYTE);
  double *pa = fuzzkd_image_pixels(a.h);
  double *pb = fuzzkd_image_pixels(b.h);
  for (int i = 0; i < 64; ++i) {
    pa[i] = 100;
    pb[i] = 200;
  }
  REQUIRE(fuzzkd_image_fuse_mean(a.h, b.h, 2, 1, &fused.h) == FUZZKD_OK);
  for (int i = 0; i < 64; ++i)
    CHECK(fuzzkd_image_pixels(fused.h)[i] == doctest::Approx(150));

  Image unit, rot, small;
  REQUIRE(fuzzkd_image_rescale_unit(a.h, &unit.h) == FUZZKD_OK);
  CHECK(fuzzkd_image_range(unit.h) == FUZZKD_RANGE_UNIT);
  REQUIRE(fuzzkd_image_gamma(unit.h, 2.0, 1.0, &g.h) == FUZZKD_OK);
  CHECK(fuzzkd_image_pixels(g.h)[0] == doctest::Approx(std::pow(100.0 / 255, 2.0)));
  REQUIRE(fuzzkd_image_resize(a.h, 4, 2, &small.h) == FUZZKD_OK);
  REQUIRE(fuzzkd_image_augment(small.h, FUZZKD_AUG_ROT90, &rot.h) == FUZZKD_OK);
  CHECK(fuzzkd_image_width(rot.h) == 2);
  CHECK(fuzzkd_image_height(rot.h) == 4);

  Image odd, none;
  REQUIRE(fuzzkd_image_create(5, 8, 1, FUZZKD_RANGE_BYTE, &odd.h) == FUZZKD_OK);
  CHECK(fuzzkd_image_fuse_mean(a.h, odd.h, 2, 1, &none.h) != FUZZKD_OK);
  CHECK(none.h == nullptr);
  CHECK(fuzzkd_image_create(0, 8, 1, FUZZKD_RANGE_BYTE, &none.h) == FUZZKD_ERR_INVALID_ARGUMENT);
  CHECK(fuzzkd_image_create(8, 8, 2, FUZZKD_RANGE_BYTE, &none.h) == FUZZKD_ERR_INVALID_ARGUMENT);
  CHECK(fuzzkd_image_augment(a.h, 9, &none.h) == FUZZKD_ERR_INVALID_ARGUMENT);

  const fs::path dir = fs::temp_directory_path() / "fuzzkd_capi_img";
  fs::create_directories(dir);
  REQUIRE(fuzzkd_image_save_png(a.h, (dir / "a.png").c_str()) == FUZZKD_OK);
  Image back;
  REQUIRE(fuzzkd_image_load((dir / "a.png").c_str(), &back.h) == FUZZKD_OK);
  CHECK(fuzzkd_image_pixels(back.h)[5] == 100);
  CHECK(fuzzkd_image_load((dir / "none.png").c_str(), &none.h) == FUZZKD_ERR_IO);
  fs::remove_all(dir);
}

TEST_CASE("genetic search with a C callback") {
  std::vector<int> lo(20, 0), hi(20, 1);
  fuzzkd_ga_config cfg = fuzzkd_ga_defaults();
  cfg.population = 30;
  cfg.max_generations = 100;
  cfg.fitness_threshold = 20;
  cfg.seed = 1000;
  int calls = 0;
  fuzzkd_ga_result *r = nullptr;
  REQUIRE(fuzzkd_ga_run(lo.data(), hi.data(), 20, &cfg, onemax_cb, &calls, &r) == FUZZKD_OK);
  std::vector<int> genes(20);
  double best = 0;
  REQUIRE(fuzzkd_ga_result_best(r, genes.data(), 20, &best) == FUZZKD_OK);
  CHECK(best == 20);
  CHECK(fuzzkd_ga_result_stop_reason(r) == 2);
  const size_t gens = fuzzkd_ga_result_generations(r);
  CHECK(gens >= 1);
  double hb = 0, hm = 0;
  CHECK(fuzzkd_ga_result_history(r, gens - 1, &hb, &hm) == FUZZKD_OK);
  CHECK(hb == 20);
  CHECK(hm <= hb);
  CHECK(fuzzkd_ga_result_history(r, gens, &hb, &hm) == FUZZKD_ERR_INVALID_ARGUMENT);
  CHECK(fuzzkd_ga_result_best(r, genes.data(), 3, &best) == FUZZKD_ERR_INVALID_ARGUMENT);
  CHECK(calls > 0);
  fuzzkd_ga_result_destroy(r);

  const int l1[1] = {0}, h1[1] = {9};
  cfg = fuzzkd_ga_defaults();
  cfg.max_generations = 5;
  REQUIRE(fuzzkd_ga_run(l1, h1, 1, &cfg, reject_odd, nullptr, &r) == FUZZKD_OK);
  int g0 = -1;
  REQUIRE(fuzzkd_ga_result_best(r, &g0, 1, &best) == FUZZKD_OK);
  CHECK(g0 % 2 == 0);
  fuzzkd_ga_result_destroy(r);

  CHECK(fuzzkd_ga_run(l1, h1, 1, &cfg, nullptr, nullptr, &r) == FUZZKD_ERR_INVALID_ARGUMENT);
  cfg.crossover_rate = 2;
  CHECK(fuzzkd_ga_run(l1, h1, 1, &cfg, reject_odd, nullptr, &r) == FUZZKD_ERR_INVALID_ARGUMENT);
}

TEST_CASE("metrics through the C API") {
  const uint64_t cm[4] = {50, 10, 5, 35};
  fuzzkd_class_metrics pc[2];
  double acc = 0, f1 = 0;
  REQUIRE(fuzzkd_metrics_summarize(cm, 2, pc, &acc, &f1) == FUZZKD_OK);
  CHECK(acc == 0.85);
  CHECK(pc[0].precision == doctest::Approx(50.0 / 55));
  CHECK(pc[0].recall == doctest::Approx(50.0 / 60));
  CHECK(f1 == doctest::Approx((pc[0].f1 + pc[1].f1) / 2));

  const double s[4] = {0.9, 0.2, 0.7, 0.1};
  const int y[4] = {1, 0, 1, 0};
  double auc = 0, ap = 0;
  REQUIRE(fuzzkd_roc_auc(s, y, 4, &auc) == FUZZKD_OK);
  CHECK(auc == 1.0);
  REQUIRE(fuzzkd_average_precision(s, y, 4, &ap) == FUZZKD_OK);
  CHECK(ap == 1.0);
  const int none[4] = {0, 0, 0, 0};
  CHECK(fuzzkd_roc_auc(s, none, 4, &auc) == FUZZKD_ERR_DOMAIN);
}

TEST_CASE("config and commands") {
  fuzzkd_config *cfg = nullptr;
  const char *bad[] = {"loss.v=3", "train.batch_size=0"};
  CHECK(fuzzkd_config_load(nullptr, bad, 2, &cfg) == FUZZKD_ERR_INVALID_ARGUMENT);
  const std::string err = fuzzkd_last_error();
  CHECK(err.find('\n') != std::string::npos);
  CHECK(cfg == nullptr);

  const char *ok[] = {"data.blobs.samples=120", "train.epochs=2", "teacher.epochs=2",
                      "seed=9"};
  REQUIRE(fuzzkd_config_load(nullptr, ok, 4, &cfg) == FUZZKD_OK);
  char *json = nullptr;
  REQUIRE(fuzzkd_config_dump(cfg, &json) == FUZZKD_OK);
  CHECK(take(json).find("\"seed\": 9") != std::string::npos);

  const fs::path dir = fs::temp_directory_path() / "fuzzkd_capi_cmd";
  fs::remove_all(dir);
  REQUIRE(fuzzkd_cmd_train(cfg, (dir / "run").c_str()) == FUZZKD_OK);
  CHECK(fs::exists(dir / "run" / "student.fkdm"));
  REQUIRE(fuzzkd_cmd_evaluate(cfg, (dir / "run" / "student.fkdm").c_str(),
                              (dir / "report.json").c_str()) == FUZZKD_OK);
  char *text = nullptr;
  REQUIRE(fuzzkd_cmd_report((dir / "report.json").c_str(), &text) == FUZZKD_OK);
  CHECK(take(text).find("accuracy") != std::string::npos);
  CHECK(fuzzkd_cmd_report((dir / "missing.json").c_str(), &text) == FUZZKD_ERR_IO);
  CHECK(fuzzkd_cmd_evaluate(cfg, (dir / "report.json").c_str(), (dir / "r2.json").c_str()) ==
        FUZZKD_ERR_FORMAT);

  size_t written = 7;
  char *failures = nullptr;
  fs::create_directories(dir / "empty");
  CHECK(fuzzkd_cmd_enhance((dir / "empty").c_str(), (dir / "out").c_str(), cfg, 1, &written,
                           &failures) != FUZZKD_OK);
  fuzzkd_string_free(failures);
  fuzzkd_config_destroy(cfg);
  fs::remove_all(dir);
  CHECK(fuzzkd_default_jobs() >= 1);
}
