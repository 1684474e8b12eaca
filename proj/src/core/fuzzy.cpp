// SPDX-License-Identifier: Apache-2.0
#include "fuzzkd/fuzzy.hpp"

#include "fuzzkd/error.hpp"
#include "fuzzkd/log.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>

namespace fuzzkd::fuzzy {

namespace {

void require_unit(double x, const char *what) {
  if (!(x >= 0.0 && x <= 1.0))
    throw_domain(std::string(what) + " must lie in [0,1], got " +
                 std::to_string(x));
}

constexpr std::array<Level, 3> kLevels = {Level::low, Level::medium,
                                          Level::high};

} // namespace

std::string_view to_string(Level level) {
  switch (level) {
  case Level::low:
    return "low";
  case Level::medium:
    return "medium";
  case Level::high:
    return "high";
  }
  return "?";
}

Level level_from_string(std::string_view name) {
  if (name == "low")
    return Level::low;
  if (name == "medium")
    return Level::medium;
  if (name == "high")
    return Level::high;
  throw_invalid("unknown fuzzy level '" + std::string(name) + "'");
}

std::string_view to_string(Method m) {
  return m == Method::mamdani ? "mamdani" : "weighted_sum";
}

std::string_view to_string(UncertaintyMode m) {
  return m == UncertaintyMode::entropy ? "entropy" : "complement";
}

Method method_from_string(std::string_view name) {
  if (name == "mamdani")
    return Method::mamdani;
  if (name == "weighted_sum")
    return Method::weighted_sum;
  throw_invalid("unknown fuzzy method '" + std::string(name) + "'");
}

UncertaintyMode uncertainty_mode_from_string(std::string_view name) {
  if (name == "entropy")
    return UncertaintyMode::entropy;
  if (name == "complement")
    return UncertaintyMode::complement;
  throw_invalid("unknown uncertainty mode '" + std::string(name) + "'");
}

double MembershipTriple::max() const { return std::max({low, medium, high}); }

void LevelWeights::validate() const {
  if (!(0.0 <= w_low && w_low < w_medium && w_medium < w_high &&
        w_high <= 1.0))
    throw_domain("level weights must satisfy 0 <= low < medium < high <= 1");
}

RuleTable RuleTable::standard() {
  RuleTable t;
  using L = Level;
  t.set(L::low, L::low, L::low);
  t.set(L::low, L::medium, L::low);
  t.set(L::low, L::high, L::low);
  t.set(L::medium, L::low, L::medium);
  t.set(L::medium, L::medium, L::medium);
  t.set(L::medium, L::high, L::low); // "moderate to lower" -> low
  t.set(L::high, L::low, L::high);
  t.set(L::high, L::medium, L::medium);
  t.set(L::high, L::high, L::low);
  return t;
}

double Triangle::operator()(double x) const {
  if (x < a || x > c)
    return 0.0;
  if (x < b)
    return (x - a) / (b - a);
  if (x == b)
    return 1.0;
  return (c - x) / (c - b);
}

namespace {

// (1 - 0.7) / 0.3 is a hair above 1 in binary floating point
MembershipTriple clamped(MembershipTriple m) {
  for (double *g : {&m.low, &m.medium, &m.high})
    *g = std::clamp(*g, 0.0, 1.0);
  return m;
}

} // namespace

MembershipTriple confidence_memberships(double c) {
  require_unit(c, "confidence");
  MembershipTriple m;
  if (c <= 0.2)
    m.low = 1.0;
  else if (c <= 0.5)
    m.low = (0.5 - c) / 0.3;

  if (c <= 0.2)
    m.medium = 0.0;
  else if (c <= 0.5)
    m.medium = (c - 0.2) / 0.3;
  else if (c <= 0.8)
    m.medium = (0.8 - c) / 0.3;

  if (c >= 0.5)
    m.high = (c - 0.5) / 0.5;
  return clamped(m);
}

MembershipTriple uncertainty_memberships(double u) {
  require_unit(u, "uncertainty");
  MembershipTriple m;
  if (u <= 0.2)
    m.low = 1.0;
  else if (u <= 0.4)
    m.low = (0.4 - u) / 0.2;

  if (u > 0.3 && u <= 0.6)
    m.medium = (u - 0.3) / 0.3;
  else if (u > 0.6 && u <= 0.9)
    m.medium = (0.9 - u) / 0.3;

  if (u >= 0.7)
    m.high = (u - 0.7) / 0.3;
  return clamped(m);
}

FuzzyAssessment weight_mamdani(double c, double u, const RuleTable &rules,
                               const OutputSets &sets, double fallback) {
  FuzzyAssessment out;
  out.method = Method::mamdani;
  out.confidence = c;
  out.uncertainty = u;
  out.conf_grades = confidence_memberships(c);
  out.unc_grades = uncertainty_memberships(u);

  // Aggregate activation per output level.
  std::array<double, 3> activation{0.0, 0.0, 0.0};
  for (Level cl : kLevels)
    for (Level ul : kLevels) {
      const double fire = std::min(out.conf_grades[cl], out.unc_grades[ul]);
      auto &slot = activation[static_cast<std::size_t>(rules.at(cl, ul))];
      slot = std::max(slot, fire);
    }

  double num = 0.0;
  double den = 0.0;
  for (int i = 0; i < kCentroidSamples; ++i) {
    const double x = (i + 0.5) / kCentroidSamples;
    double mu = 0.0;
    for (Level l : kLevels)
      mu = std::max(mu, std::min(activation[static_cast<std::size_t>(l)],
                                 sets[l](x)));
    num += x * mu;
    den += mu;
  }

  if (den <= 0.0) {
    logger().warn("no fuzzy rule fired for confidence={} uncertainty={}; "
                  "using fallback weight {}",
                  c, u, fallback);
    out.weight = fallback;
  } else {
    out.weight = std::clamp(num / den, 0.0, 1.0);
  }
  return out;
}

FuzzyAssessment weight_weighted_sum(double c, const LevelWeights &lw,
                                    bool normalize) {
  FuzzyAssessment out;
  out.method = Method::weighted_sum;
  out.confidence = c;
  out.conf_grades = confidence_memberships(c);
  out.uncertainty = 1.0 - c;
  out.unc_grades = uncertainty_memberships(out.uncertainty);

  const auto &g = out.conf_grades;
  double w = g.low * lw.w_low + g.medium * lw.w_medium + g.high * lw.w_high;
  if (normalize) {
    const double s = g.sum();
    assert(s > 0.0 && "confidence memberships cover [0,1]");
    w /= s;
  }
  out.weight = std::clamp(w, 0.0, 1.0);
  return out;
}

ConfidencePair assess_from_distribution(std::span<const double> probs,
                                        UncertaintyMode mode) {
  const std::size_t k = probs.size();
  if (k < 2)
    throw_domain("distribution needs at least 2 classes");
  double conf = 0.0;
  double entropy = 0.0;
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0))
      throw_domain("probabilities must be non-negative");
    total += p;
    conf = std::max(conf, p);
    if (p > 0.0)
      entropy -= p * std::log(p);
  }
  if (std::abs(total - 1.0) > 1e-6)
    throw_domain("probabilities must sum to 1");
  conf = std::min(conf, 1.0);
  double unc = mode == UncertaintyMode::entropy
                   ? entropy / std::log(static_cast<double>(k))
                   : 1.0 - conf;
  return {conf, std::clamp(unc, 0.0, 1.0)};
}

FuzzyAssessment FuzzyEngine::assess(double confidence,
                                    double uncertainty) const {
  if (method == Method::mamdani)
    return weight_mamdani(confidence, uncertainty, rules, output_sets,
                          level_weights.w_medium);
  FuzzyAssessment a = weight_weighted_sum(confidence, level_weights, normalize);
  a.uncertainty = uncertainty;
  a.unc_grades = uncertainty_memberships(uncertainty);
  return a;
}

FuzzyAssessment FuzzyEngine::assess(std::span<const double> probs) const {
  const auto [c, u] = assess_from_distribution(probs, uncertainty_mode);
  return assess(c, u);
}

} // namespace fuzzkd::fuzzy
