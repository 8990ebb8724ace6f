#pragma once

// Direct-from-definition metric oracles: pairwise scans, no shared helpers
// with the library. Used by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <vector>

#include "floodaid/fairness.hpp"
#include "floodaid/rng.hpp"

namespace floodaid::oracle {

inline double group_mean(const std::vector<double>& v, const std::vector<int>& g, int id) {
  double s = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (g[i] == id) {
      s += v[i];
      ++n;
    }
  return s / n;
}

inline double group_mae(const std::vector<double>& a, const std::vector<double>& p, const std::vector<int>& g,
                        int id) {
  std::vector<double> err;
  for (std::size_t i = 0; i < a.size(); ++i) err.push_back(std::abs(a[i] - p[i]));
  return group_mean(err, g, id);
}

inline int group_count(const std::vector<int>& g) { return *std::max_element(g.begin(), g.end()) + 1; }

inline double spd(const std::vector<double>& p, const std::vector<int>& g) {
  double best = 0.0;
  for (int i = 0; i < group_count(g); ++i)
    for (int j = 0; j < group_count(g); ++j)
      best = std::max(best, std::abs(group_mean(p, g, i) - group_mean(p, g, j)));
  return best;
}

inline double variance(const std::vector<double>& p, const std::vector<int>& g) {
  const int k = group_count(g);
  double m = 0.0;
  for (int i = 0; i < k; ++i) m += group_mean(p, g, i) / k;
  double v = 0.0;
  for (int i = 0; i < k; ++i) v += std::pow(group_mean(p, g, i) - m, 2) / k;
  return v;
}

inline double eo(const std::vector<double>& a, const std::vector<double>& p, const std::vector<int>& g) {
  double best = 0.0;
  for (int i = 0; i < group_count(g); ++i)
    for (int j = 0; j < group_count(g); ++j) best = std::max(best, group_mae(a, p, g, i) - group_mae(a, p, g, j));
  return best;
}

inline double gap(const std::vector<double>& a, const std::vector<double>& p, const std::vector<bool>& haor) {
  std::vector<int> g;
  for (bool h : haor) g.push_back(h ? 0 : 1);
  return std::abs(group_mae(a, p, g, 0) - group_mae(a, p, g, 1));
}

inline PerformanceReport performance(const std::vector<double>& a, const std::vector<double>& p) {
  const double n = static_cast<double>(a.size());
  double se = 0.0, ae = 0.0, mean = 0.0, tot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    se += (a[i] - p[i]) * (a[i] - p[i]);
    ae += std::abs(a[i] - p[i]);
    mean += a[i];
  }
  mean /= n;
  for (double v : a) tot += (v - mean) * (v - mean);
  return {se / n, ae / n, std::sqrt(se / n), 1.0 - se / tot};
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i] / n;
    mb += b[i] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Rank by counting: 1 + number smaller + half the other ties.
inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<double> r;
  for (double x : v) {
    double less = 0, equal = 0;
    for (double y : v) {
      less += y < x;
      equal += y == x;
    }
    r.push_back(less + (equal + 1) / 2);
  }
  return r;
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  return pearson(ranks(a), ranks(b));
}

struct Fixture {
  std::vector<double> actual, predicted;
  std::vector<int> groups;
  std::vector<bool> haor;
};

// Up to 10 rows and 3 groups; values on a quarter grid keep the arithmetic
// exact so oracle and library agree bit for bit.
inline Fixture random_fixture(RngStream& rng) {
  Fixture f;
  const int k = 2 + static_cast<int>(rng.engine()() % 2);
  const std::size_t n = static_cast<std::size_t>(k) + rng.engine()() % (11 - k);
  for (std::size_t i = 0; i < n; ++i) {
    f.actual.push_back(0.25 * static_cast<double>(rng.engine()() % 64));
    f.predicted.push_back(0.25 * static_cast<double>(rng.engine()() % 64));
    f.groups.push_back(i < static_cast<std::size_t>(k) ? static_cast<int>(i) : static_cast<int>(rng.engine()() % k));
    f.haor.push_back(f.groups.back() == 0);
  }
  if (f.actual == std::vector<double>(n, f.actual[0])) f.actual[0] += 1.0;
  return f;
}

// Small-integer vectors with ties, neither constant.
inline std::pair<std::vector<double>, std::vector<double>> random_pair(RngStream& rng) {
  const std::size_t n = 2 + rng.engine()() % 9;
  std::vector<double> a, b;
  for (std::size_t i = 0; i < n; ++i) {
    a.push_back(static_cast<double>(rng.engine()() % 6));
    b.push_back(static_cast<double>(rng.engine()() % 6));
  }
  if (std::all_of(a.begin(), a.end(), [&](double x) { return x == a[0]; })) a[0] += 1;
  if (std::all_of(b.begin(), b.end(), [&](double x) { return x == b[0]; })) b[0] += 1;
  return {a, b};
}

}  // namespace floodaid::oracle
