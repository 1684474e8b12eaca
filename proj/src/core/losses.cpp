// SPDX-License-Identifier: Apache-2.0
#include "fuzzkd/losses.hpp"

#include "fuzzkd/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fuzzkd::loss {

namespace {

void check_batch(const Matrix &student, const Matrix &teacher,
                 std::span<const int> labels) {
  if (student.rows() == 0)
    throw_domain("empty batch");
  if (student.rows() != teacher.rows() || student.cols() != teacher.cols())
    throw_domain("student and teacher logits differ in shape");
  if (labels.size() != student.rows())
    throw_domain("label count does not match batch size");
  const int k = static_cast<int>(student.cols());
  for (int y : labels)
    if (y < 0 || y >= k)
      throw_domain("label " + std::to_string(y) + " out of range for " +
                   std::to_string(k) + " classes");
}

void softmax_into(std::span<const double> z, double t, std::span<double> out) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp((z[i] - zmax) / t);
    s += out[i];
  }
  for (double &v : out)
    v /= s;
}

double kl_rows(std::span<const double> p, std::span<const double> q) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0)
      acc += p[i] * (std::log(p[i]) - std::log(std::max(q[i], kProbFloor)));
  return acc;
}

struct PerSample {
  std::vector<double> ce;
  std::vector<double> kd; // T^2 * KL(teacher_T || student_T)
};

PerSample per_sample_terms(const Matrix &student, const Matrix &teacher,
                           std::span<const int> labels, double t) {
  const std::size_t n = student.rows();
  const Matrix p1 = softmax_rows(student, 1.0);
  const Matrix ps = softmax_rows(student, t);
  const Matrix pt = softmax_rows(teacher, t);
  PerSample out;
  out.ce.resize(n);
  out.kd.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.ce[i] = -std::log(std::max(p1(i, labels[i]), kProbFloor));
    out.kd[i] = t * t * kl_rows(pt.row(i), ps.row(i));
  }
  return out;
}

double mean(std::span<const double> v) {
  return pairwise_sum(v) / static_cast<double>(v.size());
}

} // namespace

std::string_view to_string(WeightMode m) {
  switch (m) {
  case WeightMode::fixed:
    return "static";
  case WeightMode::fuzzy_mamdani:
    return "fuzzy_mamdani";
  case WeightMode::fuzzy_weighted_sum:
    return "fuzzy_weighted_sum";
  }
  return "?";
}

WeightMode weight_mode_from_string(std::string_view name) {
  if (name == "static")
    return WeightMode::fixed;
  if (name == "fuzzy_mamdani")
    return WeightMode::fuzzy_mamdani;
  if (name == "fuzzy_weighted_sum")
    return WeightMode::fuzzy_weighted_sum;
  throw_invalid("unknown weight mode '" + std::string(name) + "'");
}

void DistillConfig::validate() const {
  if (!(fixed_weight >= 0.0 && fixed_weight <= 1.0))
    throw_domain("fixed_weight must lie in [0,1]");
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw_domain("temperature must be positive");
  if (!(balance_v >= 0.0 && balance_v <= 1.0))
    throw_domain("balance_v must lie in [0,1]");
}

ProbVector softmax_t(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0))
    throw_domain("temperature must be positive");
  if (logits.empty())
    throw_domain("softmax of empty logits");
  for (double z : logits)
    if (!std::isfinite(z))
      throw_domain("logits must be finite");
  ProbVector p;
  p.temperature = temperature;
  p.probs.resize(logits.size());
  softmax_into(logits, temperature, p.probs);
  return p;
}

Matrix softmax_rows(const Matrix &logits, double temperature) {
  if (!(temperature > 0.0))
    throw_domain("temperature must be positive");
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i)
    softmax_into(logits.row(i), temperature, out.row(i));
  return out;
}

double cross_entropy(int label, const ProbVector &p) {
  if (label < 0 || static_cast<std::size_t>(label) >= p.size())
    throw_domain("label out of range");
  return -std::log(std::max(p.probs[label], kProbFloor));
}

double cross_entropy(std::span<const int> labels, const Matrix &probs) {
  if (labels.empty())
    throw_domain("empty batch");
  if (labels.size() != probs.rows())
    throw_domain("label count does not match batch size");
  std::vector<double> terms(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= probs.cols())
      throw_domain("label out of range");
    terms[i] = -std::log(std::max(probs(i, y), kProbFloor));
  }
  return mean(terms);
}

double kl_divergence(const ProbVector &p, const ProbVector &q) {
  if (p.size() != q.size())
    throw_domain("KL divergence of distributions with different class counts");
  if (p.temperature != q.temperature)
    throw_domain("KL divergence of distributions at different temperatures");
  return kl_rows(p.probs, q.probs);
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values)
      s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

LossBreakdown kd_loss_static(const Matrix &student_logits,
                             const Matrix &teacher_logits,
                             std::span<const int> labels,
                             const DistillConfig &cfg) {
  check_batch(student_logits, teacher_logits, labels);
  cfg.validate();
  const PerSample terms =
      per_sample_terms(student_logits, teacher_logits, labels, cfg.temperature);
  LossBreakdown out;
  out.ce_term = mean(terms.ce);
  out.kd_term = mean(terms.kd);
  out.weighted_kd_term = out.kd_term;
  out.fuzzy_weight = 1.0 - cfg.fixed_weight;
  out.per_sample_weights.assign(labels.size(), 1.0 - cfg.fixed_weight);
  out.total = cfg.fixed_weight * out.ce_term +
              (1.0 - cfg.fixed_weight) * out.kd_term;
  return out;
}

LossBreakdown kd_loss_weighted(const Matrix &student_logits,
                               const Matrix &teacher_logits,
                               std::span<const int> labels,
                               const DistillConfig &cfg,
                               std::span<const double> weights) {
  check_batch(student_logits, teacher_logits, labels);
  cfg.validate();
  if (weights.size() != labels.size())
    throw_domain("weight count does not match batch size");
  const PerSample terms =
      per_sample_terms(student_logits, teacher_logits, labels, cfg.temperature);
  std::vector<double> weighted(labels.size());
  for (std::size_t i = 0; i < weighted.size(); ++i)
    weighted[i] = weights[i] * terms.kd[i];

  LossBreakdown out;
  out.ce_term = mean(terms.ce);
  out.kd_term = mean(terms.kd);
  out.weighted_kd_term = mean(weighted);
  out.per_sample_weights.assign(weights.begin(), weights.end());
  out.fuzzy_weight = mean(weights);
  out.total = cfg.balance_v * out.weighted_kd_term +
              (1.0 - cfg.balance_v) * out.ce_term;
  return out;
}

std::vector<double> teacher_weights(const Matrix &teacher_logits,
                                    const DistillConfig &cfg,
                                    const fuzzy::FuzzyEngine &engine) {
  if (cfg.weight_mode == WeightMode::fixed)
    throw_invalid("teacher_weights requires a fuzzy weight mode");
  fuzzy::FuzzyEngine e = engine;
  e.method = cfg.weight_mode == WeightMode::fuzzy_mamdani
                 ? fuzzy::Method::mamdani
                 : fuzzy::Method::weighted_sum;
  const Matrix pt = softmax_rows(teacher_logits, 1.0);
  std::vector<double> w(pt.rows());
  for (std::size_t i = 0; i < pt.rows(); ++i)
    w[i] = e.assess(pt.row(i)).weight;
  return w;
}

LossBreakdown kd_loss_fuzzy(const Matrix &student_logits,
                            const Matrix &teacher_logits,
                            std::span<const int> labels,
                            const DistillConfig &cfg,
                            const fuzzy::FuzzyEngine &engine) {
  check_batch(student_logits, teacher_logits, labels);
  const auto w = teacher_weights(teacher_logits, cfg, engine);
  return kd_loss_weighted(student_logits, teacher_logits, labels, cfg, w);
}

LossBreakdown kd_loss(const Matrix &student_logits,
                      const Matrix &teacher_logits,
                      std::span<const int> labels, const DistillConfig &cfg,
                      const fuzzy::FuzzyEngine &engine) {
  if (cfg.weight_mode == WeightMode::fixed)
    return kd_loss_static(student_logits, teacher_logits, labels, cfg);
  return kd_loss_fuzzy(student_logits, teacher_logits, labels, cfg, engine);
}

namespace {

// d/dz [a*CE + sum_i b_i * T^2 KL_i] / n with CE at T=1 and KL at T.
Matrix combine_gradients(const Matrix &student, const Matrix &teacher,
                         std::span<const int> labels, double t, double ce_coef,
                         std::span<const double> kd_coef) {
  const std::size_t n = student.rows();
  const std::size_t k = student.cols();
  const Matrix p1 = softmax_rows(student, 1.0);
  const Matrix ps = softmax_rows(student, t);
  const Matrix pt = softmax_rows(teacher, t);
  Matrix g(n, k);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      const double onehot = static_cast<int>(j) == labels[i] ? 1.0 : 0.0;
      g(i, j) = inv_n * (ce_coef * (p1(i, j) - onehot) +
                         kd_coef[i] * t * (ps(i, j) - pt(i, j)));
    }
  return g;
}

} // namespace

Matrix gradients_weighted(const Matrix &student_logits,
                          const Matrix &teacher_logits,
                          std::span<const int> labels,
                          const DistillConfig &cfg,
                          std::span<const double> weights) {
  check_batch(student_logits, teacher_logits, labels);
  cfg.validate();
  if (weights.size() != labels.size())
    throw_domain("weight count does not match batch size");
  std::vector<double> coef(weights.size());
  for (std::size_t i = 0; i < coef.size(); ++i)
    coef[i] = cfg.balance_v * weights[i];
  return combine_gradients(student_logits, teacher_logits, labels,
                           cfg.temperature, 1.0 - cfg.balance_v, coef);
}

Matrix loss_gradients(const Matrix &student_logits,
                      const Matrix &teacher_logits,
                      std::span<const int> labels, const DistillConfig &cfg,
                      const fuzzy::FuzzyEngine &engine) {
  check_batch(student_logits, teacher_logits, labels);
  cfg.validate();
  if (cfg.weight_mode == WeightMode::fixed) {
    const std::vector<double> coef(labels.size(), 1.0 - cfg.fixed_weight);
    return combine_gradients(student_logits, teacher_logits, labels,
                             cfg.temperature, cfg.fixed_weight, coef);
  }
  const auto w = teacher_weights(teacher_logits, cfg, engine);
  return gradients_weighted(student_logits, teacher_logits, labels, cfg, w);
}

} // namespace fuzzkd::loss
