// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>

namespace fuzzkd::fuzzy {

enum class Level { low = 0, medium = 1, high = 2 };

std::string_view to_string(Level level);
Level level_from_string(std::string_view name);

/// Membership grades of one crisp value in the Low/Medium/High sets.
struct MembershipTriple {
  double low = 0.0;
  double medium = 0.0;
  double high = 0.0;

  double operator[](Level level) const {
    switch (level) {
    case Level::low:
      return low;
    case Level::medium:
      return medium;
    case Level::high:
      break;
    }
    return high;
  }
  double max() const;
  double sum() const { return low + medium + high; }
};

enum class Method { mamdani, weighted_sum };
enum class UncertaintyMode { entropy, complement };

std::string_view to_string(Method m);
std::string_view to_string(UncertaintyMode m);
Method method_from_string(std::string_view name);
UncertaintyMode uncertainty_mode_from_string(std::string_view name);

struct FuzzyAssessment {
  double confidence = 0.0;
  double uncertainty = 0.0;
  MembershipTriple conf_grades;
  MembershipTriple unc_grades;
  double weight = 0.0;
  Method method = Method::mamdani;
};

/// Per-level crisp weights for the weighted-sum variant. Defaults sit at the
/// midpoints of the output weight ranges.
struct LevelWeights {
  double w_low = 0.2;
  double w_medium = 0.5;
  double w_high = 0.8;

  /// Throws a domain error unless 0 <= low < medium < high <= 1.
  void validate() const;
};

/// Rule consequents indexed by (confidence level, uncertainty level).
class RuleTable {
public:
  /// The full 3x3 table: monotone in confidence, antitone in uncertainty.
  static RuleTable standard();

  Level at(Level confidence, Level uncertainty) const {
    return cells_[index(confidence)][index(uncertainty)];
  }
  void set(Level confidence, Level uncertainty, Level output) {
    cells_[index(confidence)][index(uncertainty)] = output;
  }

  bool operator==(const RuleTable &) const = default;

private:
  static std::size_t index(Level l) { return static_cast<std::size_t>(l); }
  std::array<std::array<Level, 3>, 3> cells_{};
};

/// Triangle (a, b, c) with a <= b <= c. Degenerate shoulders (a == b or
/// b == c) are allowed.
struct Triangle {
  double a, b, c;
  double operator()(double x) const;
};

/// Output sets used for centroid defuzzification.
struct OutputSets {
  Triangle low{0.0, 0.0, 0.4};
  Triangle medium{0.3, 0.5, 0.7};
  Triangle high{0.6, 1.0, 1.0};

  const Triangle &operator[](Level l) const {
    return l == Level::low ? low : l == Level::medium ? medium : high;
  }
};

inline constexpr int kCentroidSamples = 1001;

MembershipTriple confidence_memberships(double c);
MembershipTriple uncertainty_memberships(double u);

/// Mamdani inference: AND = min, aggregation = max, clipped triangular output
/// sets, centroid by midpoint integration over [0, 1]. If no rule fires the
/// weight falls back to `fallback` (the medium level weight).
FuzzyAssessment weight_mamdani(double c, double u,
                               const RuleTable &rules = RuleTable::standard(),
                               const OutputSets &sets = {},
                               double fallback = LevelWeights{}.w_medium);

/// Weighted sum of confidence memberships with per-level weights; divided by
/// the membership sum when `normalize` is set. Uncertainty is reported as the
/// complement of confidence.
FuzzyAssessment weight_weighted_sum(double c, const LevelWeights &lw = {},
                                    bool normalize = true);

struct ConfidencePair {
  double confidence;
  double uncertainty;
};

/// Confidence is the largest probability; uncertainty is normalized entropy
/// H(p)/ln K or 1 - confidence.
ConfidencePair assess_from_distribution(std::span<const double> probs,
                                        UncertaintyMode mode);

/// Configured two-input/one-output system. Immutable once built, so one
/// instance may be shared across threads.
struct FuzzyEngine {
  RuleTable rules = RuleTable::standard();
  LevelWeights level_weights{};
  OutputSets output_sets{};
  Method method = Method::mamdani;
  UncertaintyMode uncertainty_mode = UncertaintyMode::entropy;
  bool normalize = true;

  FuzzyAssessment assess(double confidence, double uncertainty) const;
  FuzzyAssessment assess(std::span<const double> probs) const;
};

} // namespace fuzzkd::fuzzy
