#include <gtest/gtest.h>

#include <functional>
#include <random>
#include <sstream>

#include "hypercyc/certify.hpp"
#include "hypercyc/jset.hpp"
#include "hypercyc/orbit.hpp"
#include "oracles.hpp"

using namespace hypercyc;

namespace {

ComplexMatrix diag(std::initializer_list<Complex> d) {
  ComplexVector v(static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (auto z : d) v(i++) = z;
  return v.asDiagonal();
}

ComplexVector vec(std::initializer_list<Complex> d) {
  ComplexVector v(static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (auto z : d) v(i++) = z;
  return v;
}

WordBudget budget(std::uint32_t m, std::uint32_t d) {
  WordBudget b;
  b.min_total_degree = m;
  b.max_total_degree = d;
  return b;
}

GeneratorFamily counterexample_family(std::size_t n, Complex a, Complex b) {
  const auto N = static_cast<Eigen::Index>(n);
  std::vector<ComplexMatrix> m{b * ComplexMatrix::Identity(N, N)};
  for (Eigen::Index k = 0; k < N; ++k) {
    ComplexMatrix d = a * ComplexMatrix::Identity(N, N);
    d(k, k) = 1.0;
    m.push_back(d);
  }
  return verify_commuting(m);
}

// Reference J-score: every word in order, word matrix from plain repeated
// multiplication, strict improvement only (so ties keep the earliest word).
std::pair<double, std::vector<std::uint32_t>> naive_jset(const std::vector<ComplexMatrix>& gens,
                                                         const ComplexVector& x, const ComplexVector& y,
                                                         double delta, std::uint32_t m, std::uint32_t d) {
  const std::size_t p = gens.size();
  const auto n = x.size();
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::uint32_t> best_e;
  for (std::uint32_t deg = m; deg <= d; ++deg) {
    // All compositions of deg into p parts, lexicographically descending.
    std::vector<std::vector<std::uint32_t>> all;
    std::vector<std::uint32_t> e(p, 0);
    std::function<void(std::size_t, std::uint32_t)> rec = [&](std::size_t i, std::uint32_t left) {
      if (i + 1 == p) {
        e[i] = left;
        all.push_back(e);
        return;
      }
      for (std::uint32_t k = left + 1; k-- > 0;) {
        e[i] = k;
        rec(i + 1, left - k);
      }
    };
    rec(0, deg);
    for (const auto& ex : all) {
      ComplexMatrix w = ComplexMatrix::Identity(n, n);
      for (std::size_t j = 0; j < p; ++j)
        for (std::uint32_t k = 0; k < ex[j]; ++k) w = w * gens[j];
      const double dist = distance_to_ball_image(w, x, delta, y).distance;
      if (dist < best) {
        best = dist;
        best_e = ex;
      }
    }
  }
  return {best, best_e};
}

}  // namespace

TEST(Jset, ScalarExamples) {
  auto f = verify_commuting(std::vector<ComplexMatrix>{diag({2.0})});
  // delta = 0 is outside jset_score's domain; the kernel gives the word value.
  EXPECT_EQ(distance_to_ball_image(diag({8.0}), vec({1.0}), 0.0, vec({8.0})).distance, 0.0);
  auto exact = jset_score(f, vec({1.0}), vec({8.0}), 1e-12, budget(1, 10));
  EXPECT_EQ(exact.best_word, Word({3}));
  EXPECT_LT(exact.best_distance, 1e-10);

  auto s = jset_score(f, vec({1.0}), vec({3.0}), 0.1, budget(1, 10));
  EXPECT_EQ(s.best_word, Word({2}));
  EXPECT_NEAR(s.best_distance, 0.6, 1e-12);
}

TEST(Jset, DomainErrors) {
  auto f = verify_commuting(std::vector<ComplexMatrix>{diag({2.0})});
  EXPECT_THROW(jset_score(f, vec({1.0}), vec({3.0}), 0.0, budget(1, 5)), Error);
  try {
    jset_score(f, vec({1.0}), vec({3.0}), 0.1, budget(0, 5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
  WordBudget capped = budget(1, 50);
  capped.max_words = 10;
  EXPECT_THROW(jset_score(f, vec({1.0}), vec({3.0}), 0.1, capped), Error);
}

TEST(Jset, BranchAndBoundMatchesNaiveScan) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> lm(-0.8, 0.8), ang(-std::numbers::pi, std::numbers::pi), u(0.0, 1.0);
  int checked = 0;
  for (int t = 0; t < 80; ++t) {
    const Eigen::Index n = 1 + t % 3;
    const int p = 1 + (t / 3) % 3;
    std::vector<ComplexMatrix> gens;
    for (int j = 0; j < p; ++j) {
      ComplexVector d(n);
      for (Eigen::Index l = 0; l < n; ++l) {
        const bool real = u(rng) < 0.3, unit = u(rng) < 0.2;
        d(l) = std::polar(unit ? 1.0 : std::exp(lm(rng)), real ? 0.0 : ang(rng));
      }
      gens.push_back(d.asDiagonal());
    }
    auto f = verify_commuting(gens);
    ComplexVector x = oracle::gaussian_matrix(n, 1, rng);
    if (t % 4 == 0) x(0) = 0.0;  // exercises the monotone last level
    const ComplexVector y = oracle::gaussian_matrix(n, 1, rng);
    const double delta = 0.02 + 0.3 * u(rng);
    const std::uint32_t m = 1 + t % 3, d = 14;
    auto got = jset_score(f, x, y, delta, budget(m, d));
    auto [want, want_e] = naive_jset(gens, x, y, delta, m, d);
    EXPECT_NEAR(got.best_distance, want, 1e-10 * (1.0 + want)) << "t=" << t;
    if (std::abs(got.best_distance - want) < 1e-13) {
      EXPECT_EQ(got.best_word, Word(want_e)) << "t=" << t;
      ++checked;
    }
  }
  EXPECT_GT(checked, 40);
}

TEST(Jset, CounterexampleFamilyMatchesNaiveScan) {
  const Complex a = 2.0, b = std::polar(0.7, 1.9);
  auto f = counterexample_family(2, a, b);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> box(-2.0, 2.0);
  for (int t = 0; t < 12; ++t) {
    const ComplexVector x = ComplexVector::Unit(2, t % 2);
    const ComplexVector y = vec({{box(rng), box(rng)}, {box(rng), box(rng)}});
    auto got = jset_score(f, x, y, 0.05, budget(1, 24));
    auto [want, want_e] = naive_jset(f.generators(), x, y, 0.05, 1, 24);
    EXPECT_NEAR(got.best_distance, want, 1e-10 * (1.0 + want));
  }
}

TEST(Jset, NonDiagonalUsesWordScan) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 6; ++t) {
    auto g = oracle::random_k_family({2}, 2, rng);
    for (auto& m : g) m *= 0.8;
    auto f = verify_commuting(g, Tolerances{1e-8});
    ASSERT_FALSE(f.is_diagonal());
    const ComplexVector x = oracle::gaussian_matrix(2, 1, rng), y = oracle::gaussian_matrix(2, 1, rng);
    auto got = jset_score(f, x, y, 0.1, budget(1, 8));
    auto [want, want_e] = naive_jset(g, x, y, 0.1, 1, 8);
    EXPECT_NEAR(got.best_distance, want, 1e-9 * (1.0 + want));
  }
}

TEST(Jset, MonotoneInBudget) {
  auto f = counterexample_family(2, 2.0, std::polar(0.8, 2.3));
  std::mt19937_64 rng(12);
  for (int t = 0; t < 5; ++t) {
    const ComplexVector x = oracle::gaussian_matrix(2, 1, rng), y = oracle::gaussian_matrix(2, 1, rng);
    double prev = std::numeric_limits<double>::infinity();
    for (std::uint32_t d : {4u, 8u, 16u, 32u, 64u}) {
      const double s = jset_score(f, x, y, 0.05, budget(2, d)).best_distance;
      EXPECT_LE(s, prev);
      prev = s;
    }
    prev = 0.0;
    for (std::uint32_t m : {1u, 3u, 6u, 12u}) {
      const double s = jset_score(f, x, y, 0.05, budget(m, 24)).best_distance;
      EXPECT_GE(s, prev);
      prev = s;
    }
  }
}

TEST(Jset, InitialRadiusDoesNotChangeResult) {
  auto f = counterexample_family(3, 2.0, std::polar(0.75, 0.9));
  std::mt19937_64 rng(41);
  for (int t = 0; t < 5; ++t) {
    const ComplexVector x = ComplexVector::Unit(3, t % 3), y = oracle::gaussian_matrix(3, 1, rng);
    auto a = jset_score(f, x, y, 0.01, budget(1, 200));
    JsetOptions o;
    o.initial_radius = 10.0;
    auto b = jset_score(f, x, y, 0.01, budget(1, 200), o);
    EXPECT_EQ(a.best_distance, b.best_distance);
    EXPECT_EQ(a.best_word, b.best_word);
  }
}

TEST(Orbit, Examples) {
  auto f = verify_commuting(std::vector<ComplexMatrix>{diag({2.0})});
  auto c = orbit_sample(f, vec({1.0}), budget(0, 5));
  ASSERT_EQ(c.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(c.points[i](0), Complex(std::ldexp(1.0, static_cast<int>(i)), 0.0));
    EXPECT_FALSE(c.saturated[i]);
  }
  EXPECT_EQ(orbit_sample(f, vec({1.0}), budget(3, 2)).size(), 0u);
}

TEST(Orbit, CounterexampleRatiosArePowersOfA) {
  const Complex a = std::polar(2.0, 0.4);
  auto f = counterexample_family(3, a, std::polar(0.7, 1.3));
  auto c = orbit_sample(f, ComplexVector::Ones(3), budget(0, 10));
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& w = c.words[i];
    for (Eigen::Index l = 0; l < 2; ++l) {
      // x_l / x_3 = a^(k_3 - k_l), with A_k at word index k.
      const int e = static_cast<int>(w[3]) - static_cast<int>(w[static_cast<std::size_t>(l) + 1]);
      const Complex want = std::pow(a, e);
      EXPECT_LT(std::abs(c.points[i](l) / c.points[i](2) - want), 1e-12 * std::abs(want));
    }
  }
}

TEST(Orbit, SaturatedPointsKept) {
  auto f = verify_commuting(std::vector<ComplexMatrix>{diag({1e10})});
  auto c = orbit_sample(f, vec({1.0}), budget(31, 32));
  ASSERT_EQ(c.size(), 2u);
  EXPECT_TRUE(c.saturated[0]);
  EXPECT_TRUE(c.saturated[1]);
}

TEST(Orbit, CsvLayout) {
  auto f = verify_commuting(std::vector<ComplexMatrix>{diag({2.0, 1.0}), diag({1.0, 0.5})});
  auto c = orbit_sample(f, vec({1.0, 1.0}), budget(0, 1));
  std::ostringstream os;
  write_cloud_csv(os, c);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "k1,k2,re1,im1,re2,im2,saturated");
  std::getline(is, line);
  EXPECT_EQ(line, "0,0,1,0,1,0,0");
  std::getline(is, line);
  EXPECT_EQ(line, "1,0,2,0,1,0,0");
  std::getline(is, line);
  EXPECT_EQ(line, "0,1,1,0,0.5,0,0");
}

TEST(Coverage, Examples) {
  std::vector<ComplexVector> pts;
  for (int k = 0; k < 12; ++k) pts.push_back(vec({std::ldexp(1.0, k)}));
  auto r = box_coverage(pts, 2.0, 0.1);
  EXPECT_EQ(r.cells_total, 1600.0);
  EXPECT_LE(r.coverage, 3.0 / 1600.0);
  EXPECT_EQ(box_coverage({}, 2.0, 0.1).coverage, 0.0);
  std::vector<ComplexVector> big{ComplexVector::Zero(3)};
  try {
    box_coverage(big, 2.0, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GridTooLarge);
  }
}

TEST(Coverage, DirectCount) {
  // Hand-placed points: 3 distinct cells, one point outside, one saturated.
  std::vector<ComplexVector> pts{vec({{0.05, 0.05}}), vec({{0.06, 0.01}}), vec({{-1.95, 1.99}}),
                                 vec({{2.0, -2.0}}), vec({{3.0, 0.0}}), vec({{0.5, 0.5}})};
  std::vector<bool> sat{false, false, false, false, false, true};
  auto r = box_coverage(pts, sat, 2.0, 0.1);
  EXPECT_EQ(r.cells_hit, 3u);
  EXPECT_EQ(r.outside, 1u);
  EXPECT_EQ(r.saturated, 1u);
}

TEST(Coverage, ScanMatchesExplicitCloud) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> lm(-0.6, 0.6), ang(-std::numbers::pi, std::numbers::pi);
  for (int t = 0; t < 12; ++t) {
    const Eigen::Index n = 1 + t % 2;
    const int p = 2 + t % 2;
    std::vector<ComplexMatrix> gens;
    for (int j = 0; j < p; ++j) {
      ComplexVector d(n);
      for (Eigen::Index l = 0; l < n; ++l) d(l) = std::polar(std::exp(lm(rng)), ang(rng));
      gens.push_back(d.asDiagonal());
    }
    auto f = verify_commuting(gens);
    ComplexVector v = oracle::gaussian_matrix(n, 1, rng);
    const std::uint32_t D = 18;
    OrbitScanOptions so;
    auto rec = scan_orbit(f, v, D, so);
    auto cloud = orbit_sample(f, v, budget(0, D));
    for (std::uint32_t d : {6u, 12u, 18u}) {
      std::vector<ComplexVector> sub;
      for (std::size_t i = 0; i < cloud.size(); ++i)
        if (cloud.words[i].total_degree() <= d) sub.push_back(cloud.points[i]);
      auto want = box_coverage(sub, 2.0, 0.1);
      EXPECT_EQ(rec.full()->hits(d), want.cells_hit) << "t=" << t << " d=" << d;
    }
  }
}

TEST(Coverage, ScanMonotoneInBudget) {
  auto f = counterexample_family(2, 2.0, std::polar(0.8, 2.0));
  auto rec = scan_orbit(f, ComplexVector::Ones(2), 60);
  double prev = 0.0;
  for (std::uint32_t d = 0; d <= 60; d += 5) {
    const double c = rec.full()->coverage(d);
    EXPECT_GE(c, prev);
    prev = c;
  }
}

TEST(Certify, IdentityHasRankObstruction) {
  auto f = verify_commuting(std::vector<ComplexMatrix>{ComplexMatrix::Identity(2, 2)});
  auto rep = certify_hypercyclic(f);
  EXPECT_EQ(rep.verdict, Verdict::NotHypercyclic);
  EXPECT_EQ(rep.reason.rfind("rank obstruction", 0), 0u);
}

TEST(Certify, CounterexamplePlateaus) {
  auto f = counterexample_family(2, 2.0, std::polar(0.8, 2.0));
  auto rep = certify_hypercyclic(f);
  EXPECT_EQ(rep.verdict, Verdict::NotHypercyclic);
  EXPECT_EQ(rep.reason.rfind("structure", 0), 0u);
  for (const auto& r : rep.rungs) EXPECT_LT(r.full_coverage, 0.05);
}

TEST(BasisProbe, Examples) {
  ComplexMatrix j(2, 2);
  j << 1.2, 0.0, 1.0, 1.2;
  auto f = verify_commuting(std::vector<ComplexMatrix>{j});
  CertifyOptions o;
  o.ladder = {5, 10};
  EXPECT_EQ(basis_jset_probe(f, {ComplexVector::Unit(2, 0), ComplexVector::Unit(2, 1)}, o).i0, 1u);
  EXPECT_EQ(basis_jset_probe(f, {ComplexVector::Unit(2, 1), vec({1.0, 1.0})}, o).i0, 2u);
  try {
    basis_jset_probe(f, {ComplexVector::Unit(2, 1), vec({0.0, 2.0})}, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoBasisVectorInU);
  }
  auto g = verify_commuting(std::vector<ComplexMatrix>{diag({1.0, 2.0})});
  EXPECT_THROW(basis_jset_probe(g, {ComplexVector::Unit(2, 0), ComplexVector::Unit(2, 1)}, o), Error);
}
