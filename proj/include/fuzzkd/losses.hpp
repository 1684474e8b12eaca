// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fuzzkd/fuzzy.hpp"
#include "fuzzkd/matrix.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace fuzzkd::loss {

/// Probabilities are floored here before any logarithm.
inline constexpr double kProbFloor = 1e-12;

struct ProbVector {
  std::vector<double> probs;
  double temperature = 1.0;

  std::size_t size() const { return probs.size(); }
};

enum class WeightMode { fixed, fuzzy_mamdani, fuzzy_weighted_sum };

std::string_view to_string(WeightMode m);
WeightMode weight_mode_from_string(std::string_view name);

struct DistillConfig {
  double fixed_weight = 0.1; // weight on the hard-label CE term (fixed mode)
  double temperature = 2.0;
  double balance_v = 0.5; // weight on the fuzzy-scaled KD term (fuzzy modes)
  WeightMode weight_mode = WeightMode::fuzzy_mamdani;

  void validate() const;
};

/// Batch-mean loss terms. `kd_term` is the T^2-scaled KL divergence and
/// `weighted_kd_term` its mean after per-sample weighting, so that
///   fixed: total = w*ce_term + (1-w)*kd_term
///   fuzzy: total = v*weighted_kd_term + (1-v)*ce_term
struct LossBreakdown {
  double total = 0.0;
  double ce_term = 0.0;
  double kd_term = 0.0;
  double weighted_kd_term = 0.0;
  double fuzzy_weight = 0.0; // mean of per_sample_weights
  std::vector<double> per_sample_weights;
};

ProbVector softmax_t(std::span<const double> logits, double temperature);

/// Row-wise softmax of a logit batch.
Matrix softmax_rows(const Matrix &logits, double temperature);

double cross_entropy(int label, const ProbVector &p);
/// Mean of -ln p[label] over the batch.
double cross_entropy(std::span<const int> labels, const Matrix &probs);

/// KL(p || q) = sum p_i ln(p_i / q_i); zero-probability terms of p vanish.
double kl_divergence(const ProbVector &p, const ProbVector &q);

/// Sum with a fixed pairwise reduction tree so batch results do not depend on
/// how elements were produced.
double pairwise_sum(std::span<const double> values);

LossBreakdown kd_loss_static(const Matrix &student_logits,
                             const Matrix &teacher_logits,
                             std::span<const int> labels,
                             const DistillConfig &cfg);

/// Fuzzy-form loss with caller-supplied per-sample KD weights.
LossBreakdown kd_loss_weighted(const Matrix &student_logits,
                               const Matrix &teacher_logits,
                               std::span<const int> labels,
                               const DistillConfig &cfg,
                               std::span<const double> weights);

/// Per-sample fuzzy weights from the teacher's T=1 distribution. The engine's
/// method is overridden by the fuzzy mode in `cfg`.
std::vector<double> teacher_weights(const Matrix &teacher_logits,
                                    const DistillConfig &cfg,
                                    const fuzzy::FuzzyEngine &engine);

LossBreakdown kd_loss_fuzzy(const Matrix &student_logits,
                            const Matrix &teacher_logits,
                            std::span<const int> labels,
                            const DistillConfig &cfg,
                            const fuzzy::FuzzyEngine &engine);

/// Dispatches on cfg.weight_mode.
LossBreakdown kd_loss(const Matrix &student_logits,
                      const Matrix &teacher_logits,
                      std::span<const int> labels, const DistillConfig &cfg,
                      const fuzzy::FuzzyEngine &engine);

/// Gradient of the fuzzy-form total w.r.t. student logits for fixed weights.
Matrix gradients_weighted(const Matrix &student_logits,
                          const Matrix &teacher_logits,
                          std::span<const int> labels,
                          const DistillConfig &cfg,
                          std::span<const double> weights);

/// Gradient of the active total loss w.r.t. student logits. Fuzzy weights
/// depend only on the teacher and are held constant.
Matrix loss_gradients(const Matrix &student_logits,
                      const Matrix &teacher_logits,
                      std::span<const int> labels, const DistillConfig &cfg,
                      const fuzzy::FuzzyEngine &engine);

} // namespace fuzzkd::loss
