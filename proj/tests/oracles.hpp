// SPDX-License-Identifier: Apache-2.0
// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the library's numerical code.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

inline double ramp_down(double x, double a, double b) {
  return std::clamp((b - x) / (b - a), 0.0, 1.0);
}
inline double ramp_up(double x, double a, double b) {
  return std::clamp((x - a) / (b - a), 0.0, 1.0);
}
inline double tri(double x, double a, double b, double c) {
  if (x < a || x > c)
    return 0.0;
  const double up = b > a ? (x - a) / (b - a) : 1.0;
  const double down = c > b ? (c - x) / (c - b) : 1.0;
  return std::clamp(std::min(up, down), 0.0, 1.0);
}

// {low, medium, high}
inline std::array<double, 3> conf(double c) {
  return {ramp_down(c, 0.2, 0.5), tri(c, 0.2, 0.5, 0.8), c >= 0.5 ? (c - 0.5) / 0.5 : 0.0};
}
inline std::array<double, 3> unc(double u) {
  return {ramp_down(u, 0.2, 0.4), tri(u, 0.3, 0.6, 0.9), ramp_up(u, 0.7, 1.0)};
}

// Rule consequents [confidence][uncertainty] as levels 0/1/2.
inline constexpr int kRules[3][3] = {{0, 0, 0}, {1, 1, 0}, {2, 1, 0}};

inline std::array<double, 3> activations(double c, double u) {
  const auto cg = conf(c), ug = unc(u);
  std::array<double, 3> act{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      act[kRules[i][j]] = std::max(act[kRules[i][j]], std::min(cg[i], ug[j]));
  return act;
}

// Centroid of the max of clipped output triangles, sampled at n midpoints.
inline double centroid(const std::array<double, 3> &act, int n = 1001) {
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = (i + 0.5) / n;
    const double mu = std::max({std::min(act[0], tri(x, 0.0, 0.0, 0.4)),
                                std::min(act[1], tri(x, 0.3, 0.5, 0.7)),
                                std::min(act[2], tri(x, 0.6, 1.0, 1.0))});
    num += x * mu;
    den += mu;
  }
  return num / den;
}

// Same integral by the trapezoid rule on a much finer grid.
inline double centroid_fine(const std::array<double, 3> &act, int n = 200000) {
  double num = 0.0, den = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = static_cast<double>(i) / n;
    const double mu = std::max({std::min(act[0], tri(x, 0.0, 0.0, 0.4)),
                                std::min(act[1], tri(x, 0.3, 0.5, 0.7)),
                                std::min(act[2], tri(x, 0.6, 1.0, 1.0))});
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    num += w * x * mu;
    den += w * mu;
  }
  return num / den;
}

inline std::vector<long double> softmax(const std::vector<double> &z, long double t) {
  long double mx = z[0];
  for (double v : z)
    mx = std::max<long double>(mx, v);
  std::vector<long double> p(z.size());
  long double s = 0;
  for (std::size_t i = 0; i < z.size(); ++i)
    s += p[i] = std::exp((z[i] - mx) / t);
  for (auto &v : p)
    v /= s;
  return p;
}

inline long double kl(const std::vector<long double> &p, const std::vector<long double> &q) {
  long double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0)
      s += p[i] * std::log(p[i] / q[i]);
  return s;
}

// Central differences of f at x with step eps.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double> &)> &f,
                                       std::vector<double> x, double eps = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + eps;
    const double fp = f(x);
    x[i] = x0 - eps;
    const double fm = f(x);
    x[i] = x0;
    g[i] = (fp - fm) / (2 * eps);
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||, floor)
inline double rel_error(const std::vector<double> &a, const std::vector<double> &b,
                        double floor = 1e-8) {
  double d = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(d) / std::max({std::sqrt(na), std::sqrt(nb), floor});
}

// P(score_pos > score_neg) + 0.5 P(tie) by counting every pair.
inline double pair_auc(const std::vector<double> &s, const std::vector<int> &pos) {
  double good = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!pos[i])
      continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (pos[j])
        continue;
      pairs += 1;
      good += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  }
  return good / pairs;
}

// AP by enumerating every candidate threshold t (predict positive iff s >= t)
// in decreasing order and summing precision times the recall increase.
inline double brute_ap(const std::vector<double> &s, const std::vector<int> &pos) {
  std::vector<double> th(s);
  std::sort(th.begin(), th.end(), std::greater<>());
  th.erase(std::unique(th.begin(), th.end()), th.end());
  double npos = 0;
  for (int p : pos)
    npos += p != 0;
  double ap = 0, prev_r = 0;
  for (double t : th) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i] >= t)
        (pos[i] ? tp : fp) += 1;
    const double r = tp / npos;
    ap += (r - prev_r) * (tp / (tp + fp));
    prev_r = r;
  }
  return ap;
}

// Two-level Haar analysis/synthesis written directly on a 2x2 block.
inline std::array<double, 4> haar_block(double a, double b, double c, double d) {
  return {(a + b + c + d) / 2, ((a + b) - (c + d)) / 2, ((a + c) - (b + d)) / 2,
          ((a + d) - (b + c)) / 2};
}

} // namespace oracle
