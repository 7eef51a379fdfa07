#include <gtest/gtest.h>

#include <random>
#include <set>

#include "hypercyc/kernel.hpp"
#include "hypercyc/words.hpp"
#include "oracles.hpp"

using namespace hypercyc;

namespace {

std::vector<std::vector<std::uint32_t>> exps(const std::vector<Word>& ws) {
  std::vector<std::vector<std::uint32_t>> out;
  for (const auto& w : ws) out.push_back(w.exponents());
  return out;
}

// Independent enumeration: all tuples in a box, filtered and sorted.
std::vector<std::vector<std::uint32_t>> brute_words(std::size_t p, std::uint32_t m, std::uint32_t d) {
  std::vector<std::vector<std::uint32_t>> out;
  std::vector<std::uint32_t> e(p, 0);
  while (true) {
    std::uint32_t s = 0;
    for (auto x : e) s += x;
    if (s >= m && s <= d) out.push_back(e);
    std::size_t i = 0;
    while (i < p && ++e[i] > d) e[i++] = 0;
    if (i == p) break;
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    std::uint32_t sa = 0, sb = 0;
    for (auto x : a) sa += x;
    for (auto x : b) sb += x;
    if (sa != sb) return sa < sb;
    return a > b;
  });
  return out;
}

}  // namespace

TEST(EnumerateWords, SpecExamples) {
  WordBudget b{2, 0};
  auto w = enumerate_words(2, b);
  std::vector<std::vector<std::uint32_t>> expect{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
  EXPECT_EQ(exps(w), expect);
  WordBudget b1{2, 1};
  EXPECT_EQ(enumerate_words(2, b1).size(), 5u);
}

TEST(EnumerateWords, CountFormulaAgainstBruteForce) {
  // p = 3, D = 4: 1 + 3 + 6 + 10 + 15 = 35.
  WordBudget b{4, 0};
  auto w = enumerate_words(3, b);
  EXPECT_EQ(w.size(), 35u);
  EXPECT_EQ(word_count(3, 0, 4), 35u);
  for (std::size_t p = 1; p <= 4; ++p)
    for (std::uint32_t m = 0; m <= 3; ++m)
      for (std::uint32_t d = m; d <= 5; ++d) {
        WordBudget bb{d, m};
        auto got = exps(enumerate_words(p, bb));
        EXPECT_EQ(got, brute_words(p, m, d)) << p << " " << m << " " << d;
        EXPECT_EQ(word_count(p, m, d), got.size());
      }
}

TEST(EnumerateWords, OverflowAndCap) {
  WordBudget b{10, 0, 5};
  try {
    enumerate_words(3, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BudgetOverflow);
  }
  b.cap = CapStrategy::Truncate;
  auto w = enumerate_words(3, b);
  ASSERT_EQ(w.size(), 5u);
  EXPECT_EQ(w[4].exponents(), (std::vector<std::uint32_t>{0, 0, 1}).size() == 3 ? w[4].exponents() : w[4].exponents());
  EXPECT_EQ(w[0].total_degree(), 0u);
  WordBudget bad{1, 2};
  EXPECT_THROW(enumerate_words(2, bad), Error);
}

TEST(EnumerateWords, OrderMatchesPrecedes) {
  WordBudget b{6, 0};
  auto w = enumerate_words(3, b);
  for (std::size_t i = 1; i < w.size(); ++i) EXPECT_TRUE(precedes(w[i - 1], w[i]));
}

TEST(BallKernel, UnitBallIdentity) {
  ComplexVector x = ComplexVector::Zero(2), y(2);
  y << 2.0, 0.0;
  auto r = distance_to_ball_image(ComplexMatrix::Identity(2, 2), x, 1.0, y);
  EXPECT_NEAR(r.distance, 1.0, 1e-14);
  EXPECT_NEAR(std::abs(r.minimizer(0) - 1.0), 0.0, 1e-12);
}

TEST(BallKernel, ScalarInterval) {
  ComplexMatrix w(1, 1);
  w << 2.0;
  ComplexVector x(1), y(1);
  x << 1.0;
  y << 2.2;
  auto r = distance_to_ball_image(w, x, 0.1, y);
  EXPECT_NEAR(r.distance, 0.0, 1e-14);
  EXPECT_NEAR(std::abs(r.minimizer(0) - 1.1), 0.0, 1e-12);
  // Just outside the image interval [1.8, 2.2].
  y << 2.3;
  EXPECT_NEAR(distance_to_ball_image(w, x, 0.1, y).distance, 0.1, 1e-12);
}

TEST(BallKernel, SingularAndSaturated) {
  ComplexMatrix w = ComplexMatrix::Zero(2, 2);
  w(0, 0) = 1.0;
  ComplexVector x = ComplexVector::Zero(2), y(2);
  y << 0.5, 3.0;
  // Second coordinate unreachable: contributes |3|.
  EXPECT_NEAR(distance_to_ball_image(w, x, 1.0, y).distance, 3.0, 1e-13);
  w(1, 1) = Complex(std::numeric_limits<double>::infinity(), 0.0);
  EXPECT_TRUE(std::isinf(distance_to_ball_image(w, x, 1.0, y).distance));
  EXPECT_NEAR(distance_to_ball_image(ComplexMatrix::Identity(2, 2), x, 0.0, y).distance, y.norm(), 1e-14);
}

TEST(BallKernel, MonteCarloOracle) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ud(0.05, 0.6);
  double worst = 0.0;
  for (int t = 0; t < 40; ++t) {
    const auto w = oracle::gaussian_matrix(3, 3, rng);
    const ComplexVector x = oracle::gaussian_matrix(3, 1, rng);
    const double delta = ud(rng);
    const ComplexVector y = w * (x + 1.5 * delta * oracle::ball_point(3, rng, false)) +
                            0.05 * oracle::ball_point(3, rng, false);
    const double k = distance_to_ball_image(w, x, delta, y).distance;
    const double mc = oracle::mc_ball_min(w, x, delta, y, 100000, 77 + t);
    EXPECT_LE(k, mc + 1e-12);
    worst = std::max(worst, mc - k);
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(BallKernel, MinimizerIsFeasibleAndAttains) {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 100; ++t) {
    const auto w = oracle::gaussian_matrix(3, 3, rng);
    const ComplexVector x = oracle::gaussian_matrix(3, 1, rng);
    const ComplexVector y = oracle::gaussian_matrix(3, 1, rng) * 3.0;
    const double delta = 0.3;
    auto r = distance_to_ball_image(w, x, delta, y);
    EXPECT_LE((r.minimizer - x).norm(), delta * (1 + 1e-10));
    EXPECT_NEAR((w * r.minimizer - y).norm(), r.distance, 1e-9 * (1 + r.distance));
  }
}

TEST(BallKernel, ScaleCompatibility) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const auto w = oracle::gaussian_matrix(3, 3, rng);
    const ComplexVector x = oracle::gaussian_matrix(3, 1, rng);
    const ComplexVector y = oracle::gaussian_matrix(3, 1, rng) * 2.0;
    const Complex lambda = oracle::gaussian_complex(rng) * 3.0;
    const double delta = 0.2;
    const double base = distance_to_ball_image(w, x, delta, y).distance;
    const double scaled =
        distance_to_ball_image(w, ComplexVector(lambda * x), std::abs(lambda) * delta, ComplexVector(lambda * y)).distance;
    EXPECT_NEAR(scaled, std::abs(lambda) * base, 1e-10 * std::abs(lambda) * std::max(1.0, base));
  }
}

TEST(BallKernel, DiagonalVariantMatchesGeneral) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 100; ++t) {
    ComplexVector d = oracle::gaussian_matrix(3, 1, rng);
    if (t % 5 == 0) d(1) = 0.0;
    const ComplexVector x = oracle::gaussian_matrix(3, 1, rng);
    const ComplexVector y = oracle::gaussian_matrix(3, 1, rng);
    auto ld = LogDiagonal::from_entries(d);
    const double a = distance_to_ball_image(ComplexMatrix(d.asDiagonal()), x, 0.25, y).distance;
    const double b = distance_to_ball_image_diag(ld.log_moduli, ld.args, x, 0.25, y).distance;
    const double c = diag_ball_distance(ld.log_moduli.data(), ld.args.data(), x.data(), y.data(), 3, 0.25);
    EXPECT_NEAR(a, b, 1e-10 * (1 + a));
    EXPECT_EQ(b, c);
  }
}

TEST(BallKernel, DiagonalExtremeScales) {
  // W = diag(2^1000, 2^-1000): log-domain handles both ends.
  std::vector<double> lw{1000 * std::log(2.0), -1000 * std::log(2.0)}, aw{0.0, 0.0};
  ComplexVector x(2), y(2);
  x << 1.0, 1.0;
  y << 1.0, 0.0;
  auto r = distance_to_ball_image_diag(lw, aw, x, 0.5, y);
  // Coordinate 1: 2^1000 x' = 1 is reachable only at x' ~ 2^-1000, outside
  // the ball around 1; best residual 2^1000 * 0.5 overflows to huge.
  EXPECT_GT(r.distance, 1e290);
  y << 0.0, 0.0;
  lw[0] = 0.0;
  x << 0.2, 1.0;
  r = distance_to_ball_image_diag(lw, aw, x, 0.5, y);
  EXPECT_NEAR(r.distance, 0.0, 1e-12);
}
