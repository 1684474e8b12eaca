// SPDX-License-Identifier: Apache-2.0
#include "fuzzkd/metrics.hpp"

#include "fuzzkd/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <limits>
#include <numeric>

namespace fuzzkd::metrics {

ConfusionMatrix::ConfusionMatrix(std::size_t classes)
    : k_(classes), counts_(classes * classes, 0) {
  if (classes == 0)
    throw_invalid("confusion matrix needs at least one class");
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < k_; ++i)
    t += (*this)(i, i);
  return t;
}

ConfusionMatrix
ConfusionMatrix::from_rows(const std::vector<std::vector<std::uint64_t>> &rows) {
  ConfusionMatrix cm(rows.size());
  for (std::size_t t = 0; t < rows.size(); ++t) {
    if (rows[t].size() != rows.size())
      throw_invalid("confusion matrix must be square");
    for (std::size_t p = 0; p < rows.size(); ++p)
      cm(t, p) = rows[t][p];
  }
  return cm;
}

ConfusionMatrix confusion(std::span<const int> truth,
                          std::span<const int> predicted, std::size_t classes) {
  if (truth.size() != predicted.size())
    throw_invalid("label and prediction counts differ");
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = predicted[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= classes ||
        static_cast<std::size_t>(p) >= classes)
      throw_domain(fmt::format("label out of range at index {}: true={} predicted={} K={}",
                               i, t, p, classes));
    ++cm(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
  }
  return cm;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den, bool &flag) {
  if (den == 0) {
    flag = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

} // namespace

MetricsReport summarize(const ConfusionMatrix &cm) {
  const std::size_t k = cm.classes();
  MetricsReport r;
  r.samples = cm.total();
  bool unused = false;
  r.accuracy = ratio(cm.trace(), r.samples, unused);
  r.confusion.assign(k, std::vector<std::uint64_t>(k));
  for (std::size_t t = 0; t < k; ++t)
    for (std::size_t p = 0; p < k; ++p)
      r.confusion[t][p] = cm(t, p);
  for (std::size_t c = 0; c < k; ++c) {
    r.class_names.push_back(std::to_string(c));
    ClassMetrics m;
    m.tp = cm(c, c);
    for (std::size_t o = 0; o < k; ++o) {
      if (o == c)
        continue;
      m.fn += cm(c, o);
      m.fp += cm(o, c);
    }
    m.tn = r.samples - m.tp - m.fn - m.fp;
    bool deg = false;
    m.accuracy = ratio(m.tp + m.tn, r.samples, deg);
    m.precision = ratio(m.tp, m.tp + m.fp, deg);
    m.recall = ratio(m.tp, m.tp + m.fn, deg);
    const double pr = m.precision + m.recall;
    if (pr > 0.0) {
      m.f1 = 2.0 * m.precision * m.recall / pr;
    } else {
      m.f1 = 0.0;
      deg = true;
    }
    m.f1_counts = ratio(2 * m.tp, 2 * m.tp + m.fp + m.fn, deg);
    m.degenerate = deg;
    r.per_class.push_back(m);
  }
  const double kd = static_cast<double>(k);
  for (const auto &m : r.per_class) {
    r.macro_precision += m.precision / kd;
    r.macro_recall += m.recall / kd;
    r.macro_f1 += m.f1 / kd;
  }
  return r;
}

namespace {

struct Ranked {
  std::vector<std::size_t> order;
  std::size_t positives = 0;
};

Ranked rank(std::span<const double> scores, std::span<const int> positive) {
  if (scores.size() != positive.size())
    throw_invalid("score and label counts differ");
  Ranked r;
  r.order.resize(scores.size());
  std::iota(r.order.begin(), r.order.end(), std::size_t{0});
  std::stable_sort(r.order.begin(), r.order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  for (int p : positive)
    r.positives += p != 0;
  return r;
}

// Calls f(threshold, tp, fp) once per group of equal scores.
template <class F>
void sweep(const Ranked &r, std::span<const double> scores,
           std::span<const int> positive, F &&f) {
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < r.order.size()) {
    const double s = scores[r.order[i]];
    while (i < r.order.size() && scores[r.order[i]] == s) {
      (positive[r.order[i]] != 0 ? tp : fp) += 1;
      ++i;
    }
    f(s, tp, fp);
  }
}

} // namespace

Curve roc_points(std::span<const double> scores, std::span<const int> positive) {
  const Ranked r = rank(scores, positive);
  const std::size_t pos = r.positives, neg = scores.size() - pos;
  if (pos == 0 || neg == 0)
    throw_domain("ROC needs both positive and negative samples");
  Curve c;
  c.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  sweep(r, scores, positive, [&](double s, std::size_t tp, std::size_t fp) {
    const CurvePoint p{s, static_cast<double>(fp) / static_cast<double>(neg),
                       static_cast<double>(tp) / static_cast<double>(pos)};
    const CurvePoint &q = c.points.back();
    c.area += (p.x - q.x) * (p.y + q.y) / 2.0;
    c.points.push_back(p);
  });
  return c;
}

Curve pr_points(std::span<const double> scores, std::span<const int> positive) {
  const Ranked r = rank(scores, positive);
  if (r.positives == 0)
    throw_domain("precision-recall needs at least one positive sample");
  Curve c;
  double prev_recall = 0.0;
  sweep(r, scores, positive, [&](double s, std::size_t tp, std::size_t fp) {
    const double recall = static_cast<double>(tp) / static_cast<double>(r.positives);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    c.area += (recall - prev_recall) * precision;
    prev_recall = recall;
    c.points.push_back({s, recall, precision});
  });
  return c;
}

void attach_curves(MetricsReport &report, std::span<const double> scores,
                   std::span<const int> truth) {
  const std::size_t k = report.per_class.size();
  if (scores.size() != truth.size() * k)
    throw_invalid("score matrix does not match labels and classes");
  std::vector<double> col(truth.size());
  std::vector<int> pos(truth.size());
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t npos = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      col[i] = scores[i * k + c];
      pos[i] = truth[i] == static_cast<int>(c);
      npos += pos[i];
    }
    auto &m = report.per_class[c];
    m.roc_auc.reset();
    m.average_precision.reset();
    if (npos > 0 && npos < truth.size())
      m.roc_auc = roc_points(col, pos).area;
    if (npos > 0)
      m.average_precision = pr_points(col, pos).area;
  }
}

void to_json(nlohmann::json &j, const MetricsReport &r) {
  nlohmann::json rows = nlohmann::json::array();
  nlohmann::json auc = nlohmann::json::object();
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto &m = r.per_class[c];
    rows.push_back({{"class", r.class_names.at(c)},
                    {"tp", m.tp},
                    {"fp", m.fp},
                    {"fn", m.fn},
                    {"tn", m.tn},
                    {"accuracy", m.accuracy},
                    {"precision", m.precision},
                    {"recall", m.recall},
                    {"f1", m.f1},
                    {"degenerate", m.degenerate}});
    if (m.roc_auc || m.average_precision) {
      nlohmann::json a = nlohmann::json::object();
      if (m.roc_auc)
        a["roc_auc"] = *m.roc_auc;
      if (m.average_precision)
        a["average_precision"] = *m.average_precision;
      auc[r.class_names.at(c)] = a;
    }
  }
  j = nlohmann::json{{"format", "fuzzkd-report"},
                     {"version", 1},
                     {"samples", r.samples},
                     {"accuracy", r.accuracy},
                     {"per_class", rows},
                     {"macro",
                      {{"precision", r.macro_precision},
                       {"recall", r.macro_recall},
                       {"f1", r.macro_f1}}},
                     {"auc", auc},
                     {"confusion", r.confusion}};
}

void from_json(const nlohmann::json &j, MetricsReport &r) {
  if (j.value("format", "") != "fuzzkd-report")
    throw_format("not a fuzzkd report");
  r = MetricsReport{};
  r.samples = j.at("samples").get<std::uint64_t>();
  r.accuracy = j.at("accuracy").get<double>();
  r.macro_precision = j.at("macro").at("precision").get<double>();
  r.macro_recall = j.at("macro").at("recall").get<double>();
  r.macro_f1 = j.at("macro").at("f1").get<double>();
  r.confusion = j.at("confusion").get<std::vector<std::vector<std::uint64_t>>>();
  const auto &auc = j.at("auc");
  for (const auto &row : j.at("per_class")) {
    ClassMetrics m;
    const auto name = row.at("class").get<std::string>();
    m.tp = row.at("tp").get<std::uint64_t>();
    m.fp = row.at("fp").get<std::uint64_t>();
    m.fn = row.at("fn").get<std::uint64_t>();
    m.tn = row.at("tn").get<std::uint64_t>();
    m.accuracy = row.at("accuracy").get<double>();
    m.precision = row.at("precision").get<double>();
    m.recall = row.at("recall").get<double>();
    m.f1 = row.at("f1").get<double>();
    m.degenerate = row.at("degenerate").get<bool>();
    const double den = static_cast<double>(2 * m.tp + m.fp + m.fn);
    m.f1_counts = den > 0 ? 2.0 * static_cast<double>(m.tp) / den : 0.0;
    if (auc.contains(name)) {
      const auto &a = auc.at(name);
      if (a.contains("roc_auc"))
        m.roc_auc = a.at("roc_auc").get<double>();
      if (a.contains("average_precision"))
        m.average_precision = a.at("average_precision").get<double>();
    }
    r.class_names.push_back(name);
    r.per_class.push_back(m);
  }
}

std::string render(const MetricsReport &r) {
  std::size_t w = 5;
  for (const auto &n : r.class_names)
    w = std::max(w, n.size());
  std::string out = fmt::format("samples: {}\naccuracy: {:.4f}\n\n", r.samples, r.accuracy);
  out += fmt::format("{:<{}}  {:>9}  {:>9}  {:>9}  {:>9}  {:>9}  {:>9}\n", "class", w,
                     "precision", "recall", "f1", "accuracy", "roc_auc", "ap");
  const auto opt = [](const std::optional<double> &v) {
    return v ? fmt::format("{:.4f}", *v) : std::string("-");
  };
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto &m = r.per_class[c];
    out += fmt::format("{:<{}}  {:>9.4f}  {:>9.4f}  {:>9.4f}  {:>9.4f}  {:>9}  {:>9}{}\n",
                       r.class_names[c], w, m.precision, m.recall, m.f1, m.accuracy,
                       opt(m.roc_auc), opt(m.average_precision),
                       m.degenerate ? "  (degenerate)" : "");
  }
  out += fmt::format("{:<{}}  {:>9.4f}  {:>9.4f}  {:>9.4f}\n", "macro", w,
                     r.macro_precision, r.macro_recall, r.macro_f1);
  out += "\nconfusion (rows = true, cols = predicted):\n";
  for (const auto &row : r.confusion) {
    for (std::size_t p = 0; p < row.size(); ++p)
      out += fmt::format("{}{:>6}", p ? " " : "", row[p]);
    out += '\n';
  }
  return out;
}

} // namespace fuzzkd::metrics
