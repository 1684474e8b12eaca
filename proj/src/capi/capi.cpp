// SPDX-License-Identifier: Apache-2.0
#include "fuzzkd/fuzzkd.h"

#include "fuzzkd/commands.hpp"
#include "fuzzkd/error.hpp"
#include "fuzzkd/fuzzy.hpp"
#include "fuzzkd/ga.hpp"
#include "fuzzkd/image_io.hpp"
#include "fuzzkd/imaging.hpp"
#include "fuzzkd/log.hpp"
#include "fuzzkd/losses.hpp"
#include "fuzzkd/metrics.hpp"

#include <cstring>
#include <new>
#include <string>

using namespace fuzzkd;

struct fuzzkd_engine {
  fuzzy::FuzzyEngine engine;
};
struct fuzzkd_image {
  imaging::ImageGrid grid;
};
struct fuzzkd_ga_result {
  ga::RunResult result;
};
struct fuzzkd_config {
  config::ExperimentConfig cfg;
};

namespace {

thread_local std::string g_last_error;

template <class F> fuzzkd_status guard(F &&fn) {
  try {
    fn();
    return FUZZKD_OK;
  } catch (const Error &e) {
    g_last_error = e.what();
    return static_cast<fuzzkd_status>(e.code());
  } catch (const std::bad_alloc &) {
    g_last_error = "out of memory";
  } catch (const std::exception &e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown failure";
  }
  return FUZZKD_ERR_INTERNAL;
}

void need(const void *p, const char *what) {
  if (!p)
    throw_invalid(std::string(what) + " must not be null");
}

char *dup_string(const std::string &s) {
  char *out = static_cast<char *>(std::malloc(s.size() + 1));
  if (!out)
    throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

fuzzy::Level level(int v) {
  if (v < 0 || v > 2)
    throw_invalid("fuzzy level must be 0, 1 or 2");
  return static_cast<fuzzy::Level>(v);
}

fuzzkd_status emit_image(imaging::ImageGrid g, fuzzkd_image **out) {
  *out = new fuzzkd_image{std::move(g)};
  return FUZZKD_OK;
}

loss::DistillConfig distill(const fuzzkd_distill_config *c) {
  loss::DistillConfig d;
  if (c) {
    if (c->weight_mode < 0 || c->weight_mode > 2)
      throw_invalid("unknown weight mode");
    d.weight_mode = static_cast<loss::WeightMode>(c->weight_mode);
    d.fixed_weight = c->omega;
    d.temperature = c->temperature;
    d.balance_v = c->v;
  }
  d.validate();
  return d;
}

std::string join_lines(const std::vector<std::string> &lines) {
  std::string s;
  for (const auto &l : lines)
    s += (s.empty() ? "" : "\n") + l;
  return s;
}

fuzzkd_status batch_status(const commands::BatchOutcome &o, size_t *written,
                           char **failures) {
  if (written)
    *written = o.written;
  if (failures)
    *failures = o.failures.empty() ? nullptr : dup_string(join_lines(o.failures));
  if (o.written == 0) {
    g_last_error = "every input failed";
    return FUZZKD_ERR_IO;
  }
  return FUZZKD_OK;
}

} // namespace

extern "C" {

const char *fuzzkd_last_error(void) { return g_last_error.c_str(); }
const char *fuzzkd_version(void) { return "0.1.0"; }
void fuzzkd_string_free(char *s) { std::free(s); }

fuzzkd_status fuzzkd_set_log_level(const char *lvl) {
  return guard([&] {
    need(lvl, "level");
    const auto parsed = spdlog::level::from_str(lvl);
    if (parsed == spdlog::level::off && std::string(lvl) != "off")
      throw_invalid(std::string("unknown log level ") + lvl);
    logger().set_level(parsed);
  });
}

fuzzkd_status fuzzkd_engine_create(fuzzkd_engine **out) {
  return guard([&] {
    need(out, "out");
    *out = new fuzzkd_engine{};
  });
}

void fuzzkd_engine_destroy(fuzzkd_engine *engine) { delete engine; }

fuzzkd_status fuzzkd_engine_set_rule(fuzzkd_engine *e, int c, int u, int o) {
  return guard([&] {
    need(e, "engine");
    e->engine.rules.set(level(c), level(u), level(o));
  });
}

fuzzkd_status fuzzkd_engine_set_level_weights(fuzzkd_engine *e, double lo, double med,
                                              double hi) {
  return guard([&] {
    need(e, "engine");
    fuzzy::LevelWeights lw{lo, med, hi};
    lw.validate();
    e->engine.level_weights = lw;
  });
}

fuzzkd_status fuzzkd_engine_set_method(fuzzkd_engine *e, int method) {
  return guard([&] {
    need(e, "engine");
    if (method != FUZZKD_METHOD_MAMDANI && method != FUZZKD_METHOD_WEIGHTED_SUM)
      throw_invalid("unknown fuzzy method");
    e->engine.method = static_cast<fuzzy::Method>(method);
  });
}

fuzzkd_status fuzzkd_engine_set_uncertainty_mode(fuzzkd_engine *e, int mode) {
  return guard([&] {
    need(e, "engine");
    if (mode != FUZZKD_UNCERTAINTY_ENTROPY && mode != FUZZKD_UNCERTAINTY_COMPLEMENT)
      throw_invalid("unknown uncertainty mode");
    e->engine.uncertainty_mode = static_cast<fuzzy::UncertaintyMode>(mode);
  });
}

fuzzkd_status fuzzkd_engine_set_normalize(fuzzkd_engine *e, int normalize) {
  return guard([&] {
    need(e, "engine");
    e->engine.normalize = normalize != 0;
  });
}

fuzzkd_status fuzzkd_engine_weight(const fuzzkd_engine *e, double c, double u, double *w) {
  return guard([&] {
    need(e, "engine");
    need(w, "weight");
    *w = e->engine.assess(c, u).weight;
  });
}

fuzzkd_status fuzzkd_engine_weight_from_probs(const fuzzkd_engine *e, const double *p,
                                              size_t k, double *w) {
  return guard([&] {
    need(e, "engine");
    need(p, "probs");
    need(w, "weight");
    *w = e->engine.assess(std::span<const double>(p, k)).weight;
  });
}

fuzzkd_status fuzzkd_memberships(int which, double x, double out[3]) {
  return guard([&] {
    need(out, "out");
    if (which != 0 && which != 1)
      throw_invalid("which must be 0 (confidence) or 1 (uncertainty)");
    const auto m = which == 0 ? fuzzy::confidence_memberships(x)
                              : fuzzy::uncertainty_memberships(x);
    out[0] = m.low;
    out[1] = m.medium;
    out[2] = m.high;
  });
}

fuzzkd_distill_config fuzzkd_distill_defaults(void) {
  const loss::DistillConfig d;
  return {static_cast<int>(d.weight_mode), d.fixed_weight, d.temperature, d.balance_v};
}

fuzzkd_status fuzzkd_softmax_t(const double *logits, size_t k, double t, double *out) {
  return guard([&] {
    need(logits, "logits");
    need(out, "out");
    const auto p = loss::softmax_t(std::span<const double>(logits, k), t);
    std::copy(p.probs.begin(), p.probs.end(), out);
  });
}

fuzzkd_status fuzzkd_kd_loss(const fuzzkd_engine *engine, const fuzzkd_distill_config *cfg,
                             const double *student, const double *teacher, const int *labels,
                             size_t n, size_t k, const double *weights, double *total,
                             double *grad) {
  return guard([&] {
    need(student, "student_logits");
    need(teacher, "teacher_logits");
    need(labels, "labels");
    need(total, "total");
    if (n == 0 || k < 2)
      throw_invalid("need at least one row and two classes");
    const auto d = distill(cfg);
    const fuzzy::FuzzyEngine eng = engine ? engine->engine : fuzzy::FuzzyEngine{};
    Matrix s(n, k), t(n, k);
    std::copy(student, student + n * k, s.data().begin());
    std::copy(teacher, teacher + n * k, t.data().begin());
    const std::span<const int> y(labels, n);
    if (weights) {
      const std::span<const double> w(weights, n);
      *total = loss::kd_loss_weighted(s, t, y, d, w).total;
      if (grad) {
        const auto g = loss::gradients_weighted(s, t, y, d, w);
        std::copy(g.data().begin(), g.data().end(), grad);
      }
      return;
    }
    *total = loss::kd_loss(s, t, y, d, eng).total;
    if (grad) {
      const auto g = loss::loss_gradients(s, t, y, d, eng);
      std::copy(g.data().begin(), g.data().end(), grad);
    }
  });
}

fuzzkd_status fuzzkd_image_create(size_t w, size_t h, size_t c, int range,
                                  fuzzkd_image **out) {
  return guard([&] {
    need(out, "out");
    if (range != FUZZKD_RANGE_UNIT && range != FUZZKD_RANGE_BYTE)
      throw_invalid("unknown pixel range");
    imaging::ImageGrid g(w, h, c, range == FUZZKD_RANGE_UNIT ? imaging::Range::unit
                                                             : imaging::Range::byte);
    g.validate();
    emit_image(std::move(g), out);
  });
}

fuzzkd_status fuzzkd_image_load(const char *path, fuzzkd_image **out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    emit_image(imaging::load_image(path), out);
  });
}

fuzzkd_status fuzzkd_image_save_png(const fuzzkd_image *img, const char *path) {
  return guard([&] {
    need(img, "image");
    need(path, "path");
    imaging::save_png(path, img->grid);
  });
}

void fuzzkd_image_destroy(fuzzkd_image *img) { delete img; }
size_t fuzzkd_image_width(const fuzzkd_image *img) { return img ? img->grid.width : 0; }
size_t fuzzkd_image_height(const fuzzkd_image *img) { return img ? img->grid.height : 0; }
size_t fuzzkd_image_channels(const fuzzkd_image *img) { return img ? img->grid.channels : 0; }
int fuzzkd_image_range(const fuzzkd_image *img) {
  return img && img->grid.range == imaging::Range::unit ? FUZZKD_RANGE_UNIT : FUZZKD_RANGE_BYTE;
}
double *fuzzkd_image_pixels(fuzzkd_image *img) {
  return img ? img->grid.pixels.data() : nullptr;
}

fuzzkd_status fuzzkd_image_gamma(const fuzzkd_image *img, double gamma, double scale,
                                 fuzzkd_image **out) {
  return guard([&] {
    need(img, "image");
    need(out, "out");
    emit_image(imaging::gamma_correct(img->grid, {gamma, scale}), out);
  });
}

fuzzkd_status fuzzkd_image_histeq(const fuzzkd_image *img, fuzzkd_image **out) {
  return guard([&] {
    need(img, "image");
    need(out, "out");
    emit_image(imaging::hist_equalize(img->grid), out);
  });
}

fuzzkd_status fuzzkd_image_resize(const fuzzkd_image *img, size_t w, size_t h,
                                  fuzzkd_image **out) {
  return guard([&] {
    need(img, "image");
    need(out, "out");
    emit_image(imaging::resize_bilinear(img->grid, w, h), out);
  });
}

fuzzkd_status fuzzkd_image_augment(const fuzzkd_image *img, int op, fuzzkd_image **out) {
  return guard([&] {
    need(img, "image");
    need(out, "out");
    if (op < FUZZKD_AUG_ROT90 || op > FUZZKD_AUG_FLIP_V)
      throw_invalid("unknown augmentation");
    emit_image(imaging::augment(img->grid, static_cast<imaging::Augment>(op)), out);
  });
}

fuzzkd_status fuzzkd_image_rescale_unit(const fuzzkd_image *img, fuzzkd_image **out) {
  return guard([&] {
    need(img, "image");
    need(out, "out");
    emit_image(imaging::rescale_unit(img->grid), out);
  });
}

fuzzkd_status fuzzkd_image_to_byte(const fuzzkd_image *img, fuzzkd_image **out) {
  return guard([&] {
    need(img, "image");
    need(out, "out");
    emit_image(imaging::to_byte(img->grid), out);
  });
}

fuzzkd_status fuzzkd_image_fuse_mean(const fuzzkd_image *a, const fuzzkd_image *b, int levels,
                                     int normalize, fuzzkd_image **out) {
  return guard([&] {
    need(a, "a");
    need(b, "b");
    need(out, "out");
    emit_image(normalize ? imaging::fuse_mean(a->grid, b->grid, levels)
                         : imaging::fuse_mean_raw(a->grid, b->grid, levels),
               out);
  });
}

fuzzkd_ga_config fuzzkd_ga_defaults(void) {
  const ga::GAConfig g;
  const ga::StoppingCriteria s;
  return {g.population, g.crossover_rate, g.mutation_rate, g.elitism, g.seed,
          s.max_generations, s.delta_f_min, s.fitness_threshold};
}

fuzzkd_status fuzzkd_ga_run(const int *lo, const int *hi, size_t k, const fuzzkd_ga_config *cfg,
                            fuzzkd_fitness_fn fitness, void *user, fuzzkd_ga_result **out) {
  return guard([&] {
    need(lo, "lo");
    need(hi, "hi");
    if (!fitness)
      throw_invalid("fitness must not be null");
    need(out, "out");
    const fuzzkd_ga_config c = cfg ? *cfg : fuzzkd_ga_defaults();
    ga::GenomeSpec spec;
    for (size_t i = 0; i < k; ++i)
      spec.bounds.push_back({lo[i], hi[i]});
    ga::GAConfig g;
    g.population = c.population;
    g.crossover_rate = c.crossover_rate;
    g.mutation_rate = c.mutation_rate;
    g.elitism = c.elitism;
    g.seed = c.seed;
    g.threads = 1;
    ga::StoppingCriteria s{c.max_generations, c.delta_f_min, c.fitness_threshold};
    auto fn = [&](const std::vector<int> &genes) -> std::optional<double> {
      int valid = 1;
      const double f = fitness(genes.data(), genes.size(), user, &valid);
      if (!valid)
        return std::nullopt;
      return f;
    };
    *out = new fuzzkd_ga_result{ga::run(spec, g, s, fn)};
  });
}

void fuzzkd_ga_result_destroy(fuzzkd_ga_result *r) { delete r; }
size_t fuzzkd_ga_result_generations(const fuzzkd_ga_result *r) {
  return r ? r->result.history.size() : 0;
}
int fuzzkd_ga_result_stop_reason(const fuzzkd_ga_result *r) {
  return r ? static_cast<int>(r->result.reason) : 0;
}

fuzzkd_status fuzzkd_ga_result_best(const fuzzkd_ga_result *r, int *genes, size_t k,
                                    double *fitness) {
  return guard([&] {
    need(r, "result");
    const auto &b = r->result.best;
    if (genes) {
      if (k != b.genes.size())
        throw_invalid("genome length mismatch");
      std::copy(b.genes.begin(), b.genes.end(), genes);
    }
    if (fitness)
      *fitness = b.fitness.value_or(-std::numeric_limits<double>::infinity());
  });
}

fuzzkd_status fuzzkd_ga_result_history(const fuzzkd_ga_result *r, size_t gen, double *best,
                                       double *mean) {
  return guard([&] {
    need(r, "result");
    if (gen >= r->result.history.size())
      throw_invalid("generation out of range");
    const auto &h = r->result.history[gen];
    if (best)
      *best = h.best;
    if (mean)
      *mean = h.mean;
  });
}

fuzzkd_status fuzzkd_metrics_summarize(const uint64_t *cm, size_t k,
                                       fuzzkd_class_metrics *per_class, double *accuracy,
                                       double *macro_f1) {
  return guard([&] {
    need(cm, "cm");
    metrics::ConfusionMatrix m(k);
    for (size_t t = 0; t < k; ++t)
      for (size_t p = 0; p < k; ++p)
        m(t, p) = cm[t * k + p];
    const auto r = metrics::summarize(m);
    if (per_class)
      for (size_t c = 0; c < k; ++c) {
        const auto &x = r.per_class[c];
        per_class[c] = {x.precision, x.recall, x.f1, x.accuracy, x.degenerate ? 1 : 0};
      }
    if (accuracy)
      *accuracy = r.accuracy;
    if (macro_f1)
      *macro_f1 = r.macro_f1;
  });
}

fuzzkd_status fuzzkd_roc_auc(const double *scores, const int *positive, size_t n,
                             double *auc) {
  return guard([&] {
    need(scores, "scores");
    need(positive, "positive");
    need(auc, "auc");
    *auc = metrics::roc_points({scores, n}, {positive, n}).area;
  });
}

fuzzkd_status fuzzkd_average_precision(const double *scores, const int *positive, size_t n,
                                       double *ap) {
  return guard([&] {
    need(scores, "scores");
    need(positive, "positive");
    need(ap, "ap");
    *ap = metrics::pr_points({scores, n}, {positive, n}).area;
  });
}

fuzzkd_status fuzzkd_config_load(const char *path, const char *const *overrides, size_t n,
                                 fuzzkd_config **out) {
  return guard([&] {
    need(out, "out");
    std::vector<std::string> ov;
    for (size_t i = 0; i < n; ++i) {
      need(overrides[i], "override");
      ov.emplace_back(overrides[i]);
    }
    *out = new fuzzkd_config{config::load(path ? path : "", ov)};
  });
}

void fuzzkd_config_destroy(fuzzkd_config *cfg) { delete cfg; }

fuzzkd_status fuzzkd_config_dump(const fuzzkd_config *cfg, char **json) {
  return guard([&] {
    need(cfg, "config");
    need(json, "json");
    *json = dup_string(config::to_json(cfg->cfg).dump(2));
  });
}

fuzzkd_status fuzzkd_cmd_enhance(const char *in_dir, const char *out_dir,
                                 const fuzzkd_config *cfg, size_t jobs, size_t *written,
                                 char **failures) {
  commands::BatchOutcome o;
  const auto st = guard([&] {
    need(in_dir, "in_dir");
    need(out_dir, "out_dir");
    need(cfg, "config");
    o = commands::enhance(in_dir, out_dir, cfg->cfg.imaging, jobs ? jobs : 1);
  });
  return st != FUZZKD_OK ? st : batch_status(o, written, failures);
}

fuzzkd_status fuzzkd_cmd_fuse(const char *pix1, const char *pix2, const char *out_dir,
                              const fuzzkd_config *cfg, size_t jobs, size_t *written,
                              char **failures) {
  commands::BatchOutcome o;
  const auto st = guard([&] {
    need(pix1, "pix1_dir");
    need(pix2, "pix2_dir");
    need(out_dir, "out_dir");
    need(cfg, "config");
    o = commands::fuse(pix1, pix2, out_dir, cfg->cfg.imaging.levels,
                       cfg->cfg.imaging.output_side, jobs ? jobs : 1);
  });
  return st != FUZZKD_OK ? st : batch_status(o, written, failures);
}

fuzzkd_status fuzzkd_cmd_train(const fuzzkd_config *cfg, const char *out_dir) {
  return guard([&] {
    need(cfg, "config");
    need(out_dir, "out_dir");
    commands::train(cfg->cfg, out_dir);
  });
}

fuzzkd_status fuzzkd_cmd_select(const fuzzkd_config *cfg, const char *out_dir) {
  return guard([&] {
    need(cfg, "config");
    need(out_dir, "out_dir");
    commands::select(cfg->cfg, out_dir);
  });
}

fuzzkd_status fuzzkd_cmd_evaluate(const fuzzkd_config *cfg, const char *checkpoint,
                                  const char *report_path) {
  return guard([&] {
    need(cfg, "config");
    need(checkpoint, "checkpoint");
    need(report_path, "report_path");
    commands::write_report(report_path, commands::evaluate(cfg->cfg, checkpoint));
  });
}

fuzzkd_status fuzzkd_cmd_evaluate_predictions(const char *csv, size_t classes,
                                              const char *report_path) {
  return guard([&] {
    need(csv, "csv");
    need(report_path, "report_path");
    commands::write_report(report_path, commands::evaluate_predictions(csv, classes));
  });
}

fuzzkd_status fuzzkd_cmd_report(const char *report_path, char **text) {
  return guard([&] {
    need(report_path, "report_path");
    need(text, "text");
    *text = dup_string(commands::render_report(report_path));
  });
}

fuzzkd_status fuzzkd_cmd_split(const fuzzkd_config *cfg, const char *manifest_out) {
  return guard([&] {
    need(cfg, "config");
    need(manifest_out, "manifest_out");
    commands::split(cfg->cfg, manifest_out);
  });
}

size_t fuzzkd_default_jobs(void) { return commands::default_jobs(); }

} // extern "C"
