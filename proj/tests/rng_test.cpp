#include "semg/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace semg;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, DeriveSeedSeparatesPurposesAndKeys) {
  const auto s1 = derive_seed(7, "alpha");
  const auto s2 = derive_seed(7, "beta");
  const auto s3 = derive_seed(7, "alpha", 1);
  const auto s4 = derive_seed(7, "alpha", 2);
  const auto s5 = derive_seed(8, "alpha");
  std::set<std::uint64_t> all{s1, s2, s3, s4, s5};
  EXPECT_EQ(all.size(), 5u);
  EXPECT_EQ(derive_seed(7, "alpha", 1, 2), derive_seed(7, "alpha", 1, 2));
}

TEST(Rng, UniformInRange) {
  Rng r(1);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  EXPECT_LT(lo, 0.01);
  EXPECT_GT(hi, 0.99);
}

TEST(Rng, UniformIntIsUnbiasedEnough) {
  Rng r(3);
  int counts[7] = {0};
  const int n = 70000;
  for (int i = 0; i < n; ++i) counts[r.uniform_int(7)]++;
  for (int k = 0; k < 7; ++k) EXPECT_NEAR(counts[k], n / 7.0, 5 * std::sqrt(n / 7.0));
}

TEST(Rng, NormalMoments) {
  Rng r(9);
  double sum = 0, sum2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(var, 1.0, 0.02);
}

TEST(Rng, PermutationIsAPermutation) {
  Rng r(5);
  auto p = r.permutation(257);
  std::vector<int> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 257; ++i) EXPECT_EQ(sorted[static_cast<size_t>(i)], i);
  // and not the identity
  EXPECT_NE(p, sorted);
}
