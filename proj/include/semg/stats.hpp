#pragma once

// Accuracy summaries and the paired two-sided Wilcoxon signed-rank test.
//
// The Wilcoxon here follows the classic recipe: zero differences are
// discarded, ties get average ranks, and for n <= 25 the p-value is exact -
// computed from the full sign-flip distribution (a subset-sum DP equivalent
// to enumerating all 2^n assignments). Larger n uses the normal
// approximation with tie correction and no continuity correction.

#include "semg/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace semg {

struct AccuracyStats {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double stddev = std::numeric_limits<double>::quiet_NaN();  // sample (n-1)
  double se = std::numeric_limits<double>::quiet_NaN();      // stddev / sqrt(n)
  int n = 0;
};

inline AccuracyStats accuracy_stats(const std::vector<double>& xs) {
  AccuracyStats st;
  st.n = static_cast<int>(xs.size());
  if (st.n == 0) return st;
  st.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / st.n;
  if (st.n < 2) return st;
  double ss = 0;
  for (double x : xs) ss += (x - st.mean) * (x - st.mean);
  st.stddev = std::sqrt(ss / (st.n - 1));
  st.se = st.stddev / std::sqrt(static_cast<double>(st.n));
  return st;
}

struct WilcoxonResult {
  double p = 1.0;
  double statistic = 0.0;  // W+ = sum of ranks of positive differences
  int n = 0;               // pairs remaining after zero-difference removal
  bool all_zero = false;   // degenerate input: p forced to 1, caller warned
  bool exact = false;      // true when the full distribution was used
};

inline constexpr int kWilcoxonExactLimit = 25;

inline WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& x,
                                           const std::vector<double>& y) {
  if (x.size() != y.size())
    throw ValidationError("wilcoxon: paired samples must have equal length");
  if (x.empty()) throw ValidationError("wilcoxon: empty input");

  std::vector<double> d;
  d.reserve(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const double di = x[i] - y[i];
    if (di != 0.0) d.push_back(di);
  }
  WilcoxonResult res;
  if (d.empty()) {
    res.all_zero = true;
    res.p = 1.0;
    return res;
  }
  const int n = static_cast<int>(d.size());
  if (n < 5)
    throw ValidationError("wilcoxon: need at least 5 nonzero differences, got " +
                          std::to_string(n));
  res.n = n;

  // Average ranks of |d|, kept doubled so ties stay integral.
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&d](int a, int b) { return std::abs(d[static_cast<size_t>(a)]) <
                                        std::abs(d[static_cast<size_t>(b)]); });
  std::vector<long long> rank2(static_cast<size_t>(n));
  std::vector<int> tie_sizes;
  int i = 0;
  while (i < n) {
    int j = i;
    while (j < n && std::abs(d[static_cast<size_t>(order[static_cast<size_t>(j)])]) ==
                        std::abs(d[static_cast<size_t>(order[static_cast<size_t>(i)])]))
      ++j;
    const long long avg2 = static_cast<long long>(i) + 1 + j;  // 2 * mean of ranks i+1..j
    for (int k = i; k < j; ++k) rank2[static_cast<size_t>(order[static_cast<size_t>(k)])] = avg2;
    tie_sizes.push_back(j - i);
    i = j;
  }

  long long w2 = 0;  // doubled W+
  long long total2 = 0;
  for (int k = 0; k < n; ++k) {
    total2 += rank2[static_cast<size_t>(k)];
    if (d[static_cast<size_t>(k)] > 0) w2 += rank2[static_cast<size_t>(k)];
  }
  res.statistic = static_cast<double>(w2) / 2.0;

  if (n <= kWilcoxonExactLimit) {
    // counts[s] = number of sign assignments whose doubled positive-rank sum
    // is s. Counts stay below 2^25, exactly representable in double.
    std::vector<double> counts(static_cast<size_t>(total2) + 1, 0.0);
    counts[0] = 1.0;
    long long reach = 0;
    for (int k = 0; k < n; ++k) {
      const long long r = rank2[static_cast<size_t>(k)];
      for (long long s = reach; s >= 0; --s)
        if (counts[static_cast<size_t>(s)] != 0.0)
          counts[static_cast<size_t>(s + r)] += counts[static_cast<size_t>(s)];
      reach += r;
    }
    const double denom = std::ldexp(1.0, n);  // 2^n
    double p_le = 0, p_ge = 0;
    for (long long s = 0; s <= total2; ++s) {
      if (s <= w2) p_le += counts[static_cast<size_t>(s)];
      if (s >= w2) p_ge += counts[static_cast<size_t>(s)];
    }
    res.p = std::min(1.0, 2.0 * std::min(p_le, p_ge) / denom);
    res.exact = true;
  } else {
    const double nn = n;
    const double mu = nn * (nn + 1) / 4.0;
    double tie_term = 0;
    for (int t : tie_sizes) tie_term += static_cast<double>(t) * t * t - t;
    const double var = nn * (nn + 1) * (2 * nn + 1) / 24.0 - tie_term / 48.0;
    if (var <= 0) {
      res.p = 1.0;  // everything tied at one magnitude and n even: no information
      return res;
    }
    const double z = (static_cast<double>(w2) / 2.0 - mu) / std::sqrt(var);
    res.p = std::erfc(std::abs(z) / std::sqrt(2.0));
    res.exact = false;
  }
  return res;
}

}  // namespace semg
