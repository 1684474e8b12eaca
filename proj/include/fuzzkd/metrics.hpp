// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fuzzkd::metrics {

/// K x K counts; rows are the true class, columns the predicted one.
class ConfusionMatrix {
public:
  explicit ConfusionMatrix(std::size_t classes);

  std::size_t classes() const { return k_; }
  std::uint64_t &operator()(std::size_t t, std::size_t p) { return counts_[t * k_ + p]; }
  std::uint64_t operator()(std::size_t t, std::size_t p) const { return counts_[t * k_ + p]; }
  std::uint64_t total() const;
  std::uint64_t trace() const;

  static ConfusionMatrix from_rows(const std::vector<std::vector<std::uint64_t>> &rows);

private:
  std::size_t k_;
  std::vector<std::uint64_t> counts_;
};

ConfusionMatrix confusion(std::span<const int> truth,
                          std::span<const int> predicted, std::size_t classes);

struct ClassMetrics {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  double accuracy = 0.0; // one-vs-rest (TP+TN)/(TP+FP+TN+FN)
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double f1_counts = 0.0; // 2TP / (2TP+FP+FN), same quantity by another route
  bool degenerate = false; // some denominator was zero and 0 was substituted
  std::optional<double> roc_auc;
  std::optional<double> average_precision;
};

struct MetricsReport {
  std::vector<std::string> class_names;
  std::vector<ClassMetrics> per_class;
  double accuracy = 0.0; // trace / total
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::uint64_t samples = 0;
  std::vector<std::vector<std::uint64_t>> confusion;
};

MetricsReport summarize(const ConfusionMatrix &cm);

struct CurvePoint {
  double threshold = 0.0;
  double x = 0.0; // FPR for ROC, recall for PR
  double y = 0.0; // TPR for ROC, precision for PR
};

struct Curve {
  std::vector<CurvePoint> points;
  double area = 0.0; // trapezoid AUC for ROC, step AP for PR
};

/// Threshold sweep over the distinct scores, highest first. Tied scores enter
/// the curve together. Throws unless both classes are present.
Curve roc_points(std::span<const double> scores, std::span<const int> positive);

/// Precision/recall after each distinct threshold; AP = sum (R_k - R_{k-1}) P_k.
/// Throws when there are no positives.
Curve pr_points(std::span<const double> scores, std::span<const int> positive);

/// Adds one-vs-rest ROC-AUC and AP per class from a row-major N x K score
/// matrix. Classes missing positives or negatives are left without a value.
void attach_curves(MetricsReport &report, std::span<const double> scores,
                   std::span<const int> truth);

void to_json(nlohmann::json &j, const MetricsReport &r);
void from_json(const nlohmann::json &j, MetricsReport &r);

/// Fixed-width text table of a report.
std::string render(const MetricsReport &r);

} // namespace fuzzkd::metrics
