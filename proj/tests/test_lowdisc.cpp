#include <gtest/gtest.h>

#include <set>

#include "bo4io/lowdisc.hpp"

using bo4io::LowDiscrepancySequence;

// Every 1-D projection of the first 2^m unshifted Sobol' points puts exactly one point in each
// dyadic interval of width 2^-m.
TEST(Sobol, OneDimensionalProjectionsAreStratified) {
  for (int dim = 0; dim < LowDiscrepancySequence::kMaxSobolDim; ++dim) {
    for (int m = 1; m <= 8; ++m) {
      const std::uint64_t n = 1ULL << m;
      std::set<std::uint64_t> cells;
      for (std::uint64_t i = 0; i < n; ++i)
        cells.insert(static_cast<std::uint64_t>(LowDiscrepancySequence::raw_sobol(dim, i) * n));
      EXPECT_EQ(cells.size(), n) << "dim " << dim << " m " << m;
    }
  }
}

// (0, m, 2)-net property of the first two coordinates: each 2^a x 2^(m-a) box holds one point.
TEST(Sobol, FirstTwoDimensionsFormANet) {
  const int m = 6;
  const std::uint64_t n = 1ULL << m;
  for (int a = 0; a <= m; ++a) {
    std::set<std::pair<std::uint64_t, std::uint64_t>> boxes;
    for (std::uint64_t i = 0; i < n; ++i) {
      const auto bx = static_cast<std::uint64_t>(LowDiscrepancySequence::raw_sobol(0, i) * (1ULL << a));
      const auto by = static_cast<std::uint64_t>(LowDiscrepancySequence::raw_sobol(1, i) * (1ULL << (m - a)));
      boxes.insert({bx, by});
    }
    EXPECT_EQ(boxes.size(), n) << "a=" << a;
  }
}

TEST(Sobol, ShiftedPointsStayInUnitCubeAndDependOnSeed) {
  LowDiscrepancySequence s1(3, 1), s1b(3, 1), s2(3, 2);
  for (std::uint64_t i = 0; i < 100; ++i) {
    const auto x = s1.point(i);
    EXPECT_TRUE((x.array() > 0.0).all() && (x.array() < 1.0).all());
    EXPECT_EQ(x, s1b.point(i));
  }
  EXPECT_NE(s1.point(0), s2.point(0));
}

TEST(Halton, HighDimensionalFallback) {
  LowDiscrepancySequence s(14, 7);
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto x = s.point(i);
    ASSERT_EQ(x.size(), 14);
    EXPECT_TRUE((x.array() >= 0.0).all() && (x.array() < 1.0).all());
  }
}
