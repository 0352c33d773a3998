#include <gtest/gtest.h>

#include <cmath>

#include "oracle/oracle.hpp"

// Sanity checks of the reference implementation against facts that can be
// worked out by hand.

namespace {

TEST(Oracle, SolveAndDeterminant) {
  const oracle::SquareMatrix a{{0, 2, 1}, {1, 1, 0}, {3, 0, 1}};
  const auto [x, ld] = oracle::solve(a, {3, 2, 4});
  EXPECT_NEAR(static_cast<double>(x[0]), 1.0, 1e-15);
  EXPECT_NEAR(static_cast<double>(x[1]), 1.0, 1e-15);
  EXPECT_NEAR(static_cast<double>(x[2]), 1.0, 1e-15);
  EXPECT_NEAR(static_cast<double>(ld), std::log(5.0), 1e-15);  // |det| = 5
  EXPECT_THROW(oracle::solve({{1, 2}, {2, 4}}, {1, 1}), std::runtime_error);
}

TEST(Oracle, SingleColumnClosedForm) {
  // x = (-1, 1) after standardization (sum of squares 2); y~ = (-1, 1).
  oracle::Problem pr;
  pr.z = {{3, 5}};
  pr.y = {0, 2};
  const double lambda = 0.5, w = 0.25;
  const auto f = oracle::fit(pr, {0}, lambda, w);
  // A = 2.5, beta = 2 / 2.5, rss = 2 - 4/2.5 = 0.4.
  EXPECT_NEAR(static_cast<double>(f.beta[0]), 0.8, 1e-15);
  EXPECT_NEAR(static_cast<double>(f.rss), 0.4, 1e-15);
  const double want = 0.5 * std::log(0.5) - 0.5 * std::log(2.5) - 0.5 * std::log(0.4) + std::log(1.0 / 3.0);
  EXPECT_NEAR(static_cast<double>(f.log_post), want, 1e-14);
}

TEST(Oracle, InclusionProbabilitiesAreConsistent) {
  oracle::Problem pr;
  pr.y = {1, 3, 2, 5, 4, 6};
  pr.z = {{1, 2, 3, 4, 5, 6}, {0, 1, 0, 1, 1, 0}, {2, 2, 1, 5, 3, 3}};
  const auto pi = oracle::inclusion_probabilities(pr, 1.0, 0.5);
  const auto all = oracle::enumerate(pr, 1.0, 0.5);
  ASSERT_EQ(all.size(), 8u);
  double den = 0, num0 = 0;
  for (std::uint32_t m = 0; m < 8; ++m) {
    den += std::exp(all[m]);
    if (m & 1u) num0 += std::exp(all[m]);
  }
  EXPECT_NEAR(pi[0], num0 / den, 1e-12);
  for (double v : pi) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_EQ(oracle::median_probability_model({0.2, 0.51, 0.5, 0.9}), (std::vector<int>{1, 3}));
}

TEST(Oracle, Softmax) {
  const auto s = oracle::softmax({0.0, std::log(3.0)}, 1.0);
  EXPECT_NEAR(s[0], 0.25, 1e-15);
  EXPECT_NEAR(s[1], 0.75, 1e-15);
  const auto t = oracle::softmax({0.0, std::log(9.0)}, 2.0);
  EXPECT_NEAR(t[1], 0.75, 1e-15);
}

}  // namespace
