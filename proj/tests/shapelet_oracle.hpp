#pragma once

// Brute-force references for shapelet scoring.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <set>
#include <vector>

#include "timecf/shapelets.hpp"

namespace oracle {

inline double entropy(const std::vector<int>& labels, int k) {
  if (labels.empty()) return 0.0;
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(labels.size());
    h -= p * std::log2(p);
  }
  return h;
}

// Tries every midpoint between distinct distances and partitions by d < threshold.
inline timecf::SplitResult information_gain(const std::vector<double>& d, const std::vector<int>& labels) {
  const int k = *std::max_element(labels.begin(), labels.end()) + 1;
  const std::set<double> distinct(d.begin(), d.end());
  const std::vector<double> u(distinct.begin(), distinct.end());
  const double h = entropy(labels, k);
  const double n = static_cast<double>(d.size());
  timecf::SplitResult best{0.0, u.front()};
  double best_w = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j + 1 < u.size(); ++j) {
    const double thr = (u[j] + u[j + 1]) / 2.0;
    std::vector<int> left, right;
    for (std::size_t i = 0; i < d.size(); ++i) (d[i] < thr ? left : right).push_back(labels[i]);
    const double w = static_cast<double>(left.size()) / n * entropy(left, k) +
                     static_cast<double>(right.size()) / n * entropy(right, k);
    if (w < best_w) {
      best_w = w;
      best.threshold = thr;
    }
  }
  if (u.size() > 1) best.gain = std::max(0.0, h - best_w);
  return best;
}

inline double min_distance(const std::vector<double>& c, const std::vector<double>& t) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t off = 0; off + c.size() <= t.size(); ++off) {
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) s += (c[i] - t[off + i]) * (c[i] - t[off + i]);
    best = std::min(best, s / static_cast<double>(c.size()));
  }
  return best;
}

struct SuiteResult {
  int cases = 0;
  int mismatches = 0;
  double max_abs_error = 0.0;
};

// Random cases of 2..12 points; half draw distances from a coarse grid so ties occur.
inline SuiteResult run_information_gain_suite(int count, std::uint64_t seed = 2024) {
  std::mt19937_64 rng(seed);
  SuiteResult r;
  for (int c = 0; c < count; ++c) {
    const auto n = std::uniform_int_distribution<std::size_t>(2, 12)(rng);
    const int k = std::uniform_int_distribution<int>(1, 3)(rng);
    const bool coarse = c % 2 == 0;
    std::vector<double> d(n);
    std::vector<int> labels(n);
    std::vector<timecf::ClassLabel> wrapped(n);
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = coarse ? 0.25 * std::uniform_int_distribution<int>(0, 5)(rng)
                    : std::uniform_real_distribution<double>(0.0, 3.0)(rng);
      labels[i] = std::uniform_int_distribution<int>(0, k - 1)(rng);
      wrapped[i] = timecf::ClassLabel{labels[i]};
    }
    const auto got = timecf::information_gain(d, wrapped);
    const auto want = information_gain(d, labels);
    ++r.cases;
    if (got.gain != want.gain || got.threshold != want.threshold) ++r.mismatches;
    r.max_abs_error = std::max({r.max_abs_error, std::abs(got.gain - want.gain), std::abs(got.threshold - want.threshold)});
  }
  return r;
}

inline SuiteResult run_distance_suite(int count, std::uint64_t seed = 99, double tol = 1e-12) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> val(0.0, 1.5);
  SuiteResult r;
  for (int c = 0; c < count; ++c) {
    const auto n = std::uniform_int_distribution<std::size_t>(3, 60)(rng);
    const auto len = std::uniform_int_distribution<std::size_t>(1, n)(rng);
    std::vector<double> t(n), cand(len);
    for (auto& v : t) v = val(rng);
    for (auto& v : cand) v = val(rng);
    const double got = timecf::min_subsequence_distance(cand, timecf::TimeSeries(t));
    const double want = min_distance(cand, t);
    const double err = std::abs(got - want);
    ++r.cases;
    if (!(err <= tol)) ++r.mismatches;
    r.max_abs_error = std::max(r.max_abs_error, err);
  }
  return r;
}

}  // namespace oracle
