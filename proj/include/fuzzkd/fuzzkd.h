/* SPDX-License-Identifier: Apache-2.0 */
#ifndef FUZZKD_H
#define FUZZKD_H

#include <stddef.h>
#include <stdint.h>

#if defined(FUZZKD_BUILDING_LIBRARY)
#define FUZZKD_API __attribute__((visibility("default")))
#else
#define FUZZKD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fuzzkd_status {
  FUZZKD_OK = 0,
  FUZZKD_ERR_INVALID_ARGUMENT = 1,
  FUZZKD_ERR_DOMAIN = 2,
  FUZZKD_ERR_IO = 3,
  FUZZKD_ERR_FORMAT = 4,
  FUZZKD_ERR_DIVERGED = 5,
  FUZZKD_ERR_INTERNAL = 6
} fuzzkd_status;

/* Message of the last failed call on this thread ("" if none). Valid until
   the next failing call on the same thread. */
FUZZKD_API const char *fuzzkd_last_error(void);
FUZZKD_API const char *fuzzkd_version(void);
/* Frees strings returned through char** out-parameters. */
FUZZKD_API void fuzzkd_string_free(char *s);
/* "trace", "debug", "info", "warn", "error", "off". */
FUZZKD_API fuzzkd_status fuzzkd_set_log_level(const char *level);

/* ---- fuzzy weighting ---- */

enum { FUZZKD_LEVEL_LOW = 0, FUZZKD_LEVEL_MEDIUM = 1, FUZZKD_LEVEL_HIGH = 2 };
enum { FUZZKD_METHOD_MAMDANI = 0, FUZZKD_METHOD_WEIGHTED_SUM = 1 };
enum { FUZZKD_UNCERTAINTY_ENTROPY = 0, FUZZKD_UNCERTAINTY_COMPLEMENT = 1 };

typedef struct fuzzkd_engine fuzzkd_engine;

FUZZKD_API fuzzkd_status fuzzkd_engine_create(fuzzkd_engine **out);
FUZZKD_API void fuzzkd_engine_destroy(fuzzkd_engine *engine);
FUZZKD_API fuzzkd_status fuzzkd_engine_set_rule(fuzzkd_engine *engine, int confidence,
                                                int uncertainty, int output);
FUZZKD_API fuzzkd_status fuzzkd_engine_set_level_weights(fuzzkd_engine *engine, double low,
                                                         double medium, double high);
FUZZKD_API fuzzkd_status fuzzkd_engine_set_method(fuzzkd_engine *engine, int method);
FUZZKD_API fuzzkd_status fuzzkd_engine_set_uncertainty_mode(fuzzkd_engine *engine, int mode);
FUZZKD_API fuzzkd_status fuzzkd_engine_set_normalize(fuzzkd_engine *engine, int normalize);
FUZZKD_API fuzzkd_status fuzzkd_engine_weight(const fuzzkd_engine *engine, double confidence,
                                              double uncertainty, double *weight);
FUZZKD_API fuzzkd_status fuzzkd_engine_weight_from_probs(const fuzzkd_engine *engine,
                                                         const double *probs, size_t k,
                                                         double *weight);
/* which: 0 = confidence sets, 1 = uncertainty sets. out = {low, medium, high}. */
FUZZKD_API fuzzkd_status fuzzkd_memberships(int which, double x, double out[3]);

/* ---- distillation loss ---- */

enum {
  FUZZKD_WEIGHT_STATIC = 0,
  FUZZKD_WEIGHT_FUZZY_MAMDANI = 1,
  FUZZKD_WEIGHT_FUZZY_WEIGHTED_SUM = 2
};

typedef struct fuzzkd_distill_config {
  int weight_mode;
  double omega;       /* CE weight in static mode */
  double temperature;
  double v;           /* fuzzy-scaled KD weight in fuzzy modes */
} fuzzkd_distill_config;

FUZZKD_API fuzzkd_distill_config fuzzkd_distill_defaults(void);
FUZZKD_API fuzzkd_status fuzzkd_softmax_t(const double *logits, size_t k, double temperature,
                                          double *out);
/* Batch loss over n rows of k logits. `engine` may be NULL (defaults).
   `weights` (n values) overrides the fuzzy weights when non-NULL. `grad`
   (n*k values) receives d total / d student logits when non-NULL. */
FUZZKD_API fuzzkd_status fuzzkd_kd_loss(const fuzzkd_engine *engine,
                                        const fuzzkd_distill_config *cfg,
                                        const double *student_logits,
                                        const double *teacher_logits, const int *labels,
                                        size_t n, size_t k, const double *weights,
                                        double *total, double *grad);

/* ---- images ---- */

enum { FUZZKD_RANGE_UNIT = 0, FUZZKD_RANGE_BYTE = 1 };
enum {
  FUZZKD_AUG_ROT90 = 0,
  FUZZKD_AUG_ROT180 = 1,
  FUZZKD_AUG_ROT270 = 2,
  FUZZKD_AUG_FLIP_H = 3,
  FUZZKD_AUG_FLIP_V = 4
};

typedef struct fuzzkd_image fuzzkd_image;

FUZZKD_API fuzzkd_status fuzzkd_image_create(size_t width, size_t height, size_t channels,
                                             int range, fuzzkd_image **out);
FUZZKD_API fuzzkd_status fuzzkd_image_load(const char *path, fuzzkd_image **out);
FUZZKD_API fuzzkd_status fuzzkd_image_save_png(const fuzzkd_image *img, const char *path);
FUZZKD_API void fuzzkd_image_destroy(fuzzkd_image *img);
FUZZKD_API size_t fuzzkd_image_width(const fuzzkd_image *img);
FUZZKD_API size_t fuzzkd_image_height(const fuzzkd_image *img);
FUZZKD_API size_t fuzzkd_image_channels(const fuzzkd_image *img);
FUZZKD_API int fuzzkd_image_range(const fuzzkd_image *img);
/* Interleaved row-major pixels, width*height*channels values. */
FUZZKD_API double *fuzzkd_image_pixels(fuzzkd_image *img);
FUZZKD_API fuzzkd_status fuzzkd_image_gamma(const fuzzkd_image *img, double gamma, double scale,
                                            fuzzkd_image **out);
FUZZKD_API fuzzkd_status fuzzkd_image_histeq(const fuzzkd_image *img, fuzzkd_image **out);
FUZZKD_API fuzzkd_status fuzzkd_image_resize(const fuzzkd_image *img, size_t width,
                                             size_t height, fuzzkd_image **out);
FUZZKD_API fuzzkd_status fuzzkd_image_augment(const fuzzkd_image *img, int op,
                                              fuzzkd_image **out);
FUZZKD_API fuzzkd_status fuzzkd_image_rescale_unit(const fuzzkd_image *img, fuzzkd_image **out);
FUZZKD_API fuzzkd_status fuzzkd_image_to_byte(const fuzzkd_image *img, fuzzkd_image **out);
/* normalize = 0 gives the raw coefficient-mean reconstruction. */
FUZZKD_API fuzzkd_status fuzzkd_image_fuse_mean(const fuzzkd_image *a, const fuzzkd_image *b,
                                                int levels, int normalize, fuzzkd_image **out);

/* ---- genetic search ---- */

/* Returns the fitness; set *valid = 0 to mark the genome unusable. */
typedef double (*fuzzkd_fitness_fn)(const int *genes, size_t k, void *user, int *valid);

typedef struct fuzzkd_ga_config {
  size_t population;
  double crossover_rate;
  double mutation_rate;
  size_t elitism;
  uint64_t seed;
  size_t max_generations;
  double delta_f_min;       /* 0 disables the no-improvement stop */
  double fitness_threshold; /* +inf disables */
} fuzzkd_ga_config;

typedef struct fuzzkd_ga_result fuzzkd_ga_result;

FUZZKD_API fuzzkd_ga_config fuzzkd_ga_defaults(void);
/* Gene i ranges over [lo[i], hi[i]]. The callback runs on the calling thread. */
FUZZKD_API fuzzkd_status fuzzkd_ga_run(const int *lo, const int *hi, size_t k,
                                       const fuzzkd_ga_config *cfg, fuzzkd_fitness_fn fitness,
                                       void *user, fuzzkd_ga_result **out);
FUZZKD_API void fuzzkd_ga_result_destroy(fuzzkd_ga_result *r);
FUZZKD_API size_t fuzzkd_ga_result_generations(const fuzzkd_ga_result *r);
/* 0 max generations, 1 converged, 2 threshold */
FUZZKD_API int fuzzkd_ga_result_stop_reason(const fuzzkd_ga_result *r);
FUZZKD_API fuzzkd_status fuzzkd_ga_result_best(const fuzzkd_ga_result *r, int *genes, size_t k,
                                               double *fitness);
FUZZKD_API fuzzkd_status fuzzkd_ga_result_history(const fuzzkd_ga_result *r, size_t generation,
                                                  double *best, double *mean);

/* ---- metrics ---- */

typedef struct fuzzkd_class_metrics {
  double precision;
  double recall;
  double f1;
  double accuracy;
  int degenerate;
} fuzzkd_class_metrics;

/* cm is k*k row-major (rows = true class). per_class has k entries. */
FUZZKD_API fuzzkd_status fuzzkd_metrics_summarize(const uint64_t *cm, size_t k,
                                                  fuzzkd_class_metrics *per_class,
                                                  double *accuracy, double *macro_f1);
FUZZKD_API fuzzkd_status fuzzkd_roc_auc(const double *scores, const int *positive, size_t n,
                                        double *auc);
FUZZKD_API fuzzkd_status fuzzkd_average_precision(const double *scores, const int *positive,
                                                  size_t n, double *ap);

/* ---- experiment config and commands ---- */

typedef struct fuzzkd_config fuzzkd_config;

/* path may be NULL for defaults. overrides are "dotted.key=value" strings.
   Validation failures return FUZZKD_ERR_INVALID_ARGUMENT with one problem
   per line in fuzzkd_last_error(). */
FUZZKD_API fuzzkd_status fuzzkd_config_load(const char *path, const char *const *overrides,
                                            size_t n_overrides, fuzzkd_config **out);
FUZZKD_API void fuzzkd_config_destroy(fuzzkd_config *cfg);
FUZZKD_API fuzzkd_status fuzzkd_config_dump(const fuzzkd_config *cfg, char **json);

/* failures (may be NULL) receives one "path: reason" per line. */
FUZZKD_API fuzzkd_status fuzzkd_cmd_enhance(const char *in_dir, const char *out_dir,
                                            const fuzzkd_config *cfg, size_t jobs,
                                            size_t *written, char **failures);
FUZZKD_API fuzzkd_status fuzzkd_cmd_fuse(const char *pix1_dir, const char *pix2_dir,
                                         const char *out_dir, const fuzzkd_config *cfg,
                                         size_t jobs, size_t *written, char **failures);
FUZZKD_API fuzzkd_status fuzzkd_cmd_train(const fuzzkd_config *cfg, const char *out_dir);
FUZZKD_API fuzzkd_status fuzzkd_cmd_select(const fuzzkd_config *cfg, const char *out_dir);
FUZZKD_API fuzzkd_status fuzzkd_cmd_evaluate(const fuzzkd_config *cfg, const char *checkpoint,
                                             const char *report_path);
/* classes = 0 infers the class count from the labels. */
FUZZKD_API fuzzkd_status fuzzkd_cmd_evaluate_predictions(const char *csv, size_t classes,
                                                         const char *report_path);
FUZZKD_API fuzzkd_status fuzzkd_cmd_report(const char *report_path, char **text);
FUZZKD_API fuzzkd_status fuzzkd_cmd_split(const fuzzkd_config *cfg, const char *manifest_out);
FUZZKD_API size_t fuzzkd_default_jobs(void);

#ifdef __cplusplus
}
#endif

#endif
