#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "ghss/f2sketch.hpp"
#include "ghss/hashing.hpp"

namespace {

using ghss::AmsSketch;

TEST(AmsSketch, SingleItemExact) {
  // One item with frequency f: every accumulator is +-f, so the raw mean of
  // squares is exactly f^2 and the corrected estimate is f^2 / (1 - delta).
  AmsSketch s(3, 4, 0.1, 7);
  s.update(42, -6);
  EXPECT_DOUBLE_EQ(s.raw_mean_of_squares(), 36.0);
  EXPECT_NEAR(s.estimate(), 36.0 / 0.9, 1e-9);
}

TEST(AmsSketch, TwoItemAccumulatorValues) {
  // f = (3, 4): each accumulator is 3*xi1 + 4*xi2, so its square is 1 or 49,
  // and the two cases average to F2 = 25 over the sign randomness.
  double sum = 0;
  const int trials = 2000;
  for (int t = 0; t < trials; ++t) {
    AmsSketch s(1, 1, 0.0, 100 + t);
    s.update(1, 3);
    s.update(2, 4);
    double sq = s.raw_mean_of_squares();
    EXPECT_TRUE(sq == 1.0 || sq == 49.0);
    sum += sq;
  }
  // Values are 1 or 49 with equal probability: sd = 24, so 3 SE ~= 1.61.
  EXPECT_NEAR(sum / trials, 25.0, 1.7);
}

TEST(AmsSketch, UnbiasedOverSeeds) {
  // f = (1, 2, 3), F2 = 14. Mean of raw estimates over 10^4 seeds within 3 SE.
  // Var(acc^2) = 2 (F2^2 - F4) = 196; with 8 accumulators per sketch the
  // per-sketch variance is 24.5, so SE at 10^4 trials is ~0.05.
  double sum = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    AmsSketch s(2, 4, 0.0, 5000 + t);
    s.update(1, 1);
    s.update(2, 2);
    s.update(3, 3);
    sum += s.raw_mean_of_squares();
  }
  EXPECT_NEAR(sum / trials, 14.0, 0.15);
}

TEST(AmsSketch, DeleteToZero) {
  AmsSketch s(3, 10, 0.1, 3);
  for (int i = 1; i <= 50; ++i) s.update(i, i);
  EXPECT_FALSE(s.all_zero());
  for (int i = 1; i <= 50; ++i) s.update(i, -i);
  EXPECT_TRUE(s.all_zero());
  EXPECT_DOUBLE_EQ(s.estimate(), 0.0);
}

TEST(AmsSketch, MergeMatchesWholeStream) {
  AmsSketch whole(3, 8, 0.05, 9), a(3, 8, 0.05, 9), b(3, 8, 0.05, 9);
  ghss::SeedStream rng(2);
  for (int u = 0; u < 1000; ++u) {
    std::uint64_t item = rng.next_below(100) + 1;
    std::int64_t delta = static_cast<std::int64_t>(rng.next_below(11)) - 5;
    whole.update(item, delta);
    (u % 3 == 0 ? a : b).update(item, delta);
  }
  a.merge(b);
  EXPECT_TRUE(a == whole);
  EXPECT_DOUBLE_EQ(a.estimate(), whole.estimate());
}

TEST(AmsSketch, MergeRejectsMismatch) {
  AmsSketch a(2, 4, 0.0, 1), b(2, 4, 0.0, 2), c(2, 5, 0.0, 1);
  EXPECT_THROW(a.merge(b), std::invalid_argument);
  EXPECT_THROW(a.merge(c), std::invalid_argument);
}

TEST(AmsSketch, OneSidedAndAccurateOnSkewedStreams) {
  // Zipf-like stream, production layout 5 groups x 200: the corrected
  // estimate is >= F2 in >= 90% of trials and within [0.85, 1.30] * F2 in
  // >= 90% of trials.
  const std::size_t n = 1024;
  int above = 0, close = 0;
  const int trials = 60;
  for (int t = 0; t < trials; ++t) {
    AmsSketch s(5, 200, 0.15, 40000 + t);
    std::vector<std::int64_t> freq(n + 1, 0);
    ghss::SeedStream rng(800 + t);
    for (int u = 0; u < 2000; ++u) {
      // Skewed item choice: min of two uniforms biases toward small ids.
      std::uint64_t a = rng.next_below(n) + 1, b = rng.next_below(n) + 1;
      std::uint64_t item = std::min(a, b);
      freq[item] += 1;
      s.update(item, 1);
    }
    double f2 = 0;
    for (auto f : freq) f2 += static_cast<double>(f) * static_cast<double>(f);
    double est = s.estimate();
    if (est >= f2) ++above;
    if (est >= 0.85 * f2 && est <= 1.30 * f2) ++close;
  }
  EXPECT_GE(above, trials * 9 / 10);
  EXPECT_GE(close, trials * 9 / 10);
}

TEST(AmsSketch, Deterministic) {
  AmsSketch a(2, 3, 0.1, 55), b(2, 3, 0.1, 55);
  for (int i = 1; i <= 20; ++i) {
    a.update(i, 2 * i - 7);
    b.update(i, 2 * i - 7);
  }
  EXPECT_TRUE(a == b);
  EXPECT_DOUBLE_EQ(a.estimate(), b.estimate());
}

}  // namespace
