#include <gtest/gtest.h>

#include <random>

#include "hypercyc/structure.hpp"
#include "oracles.hpp"

using namespace hypercyc;

namespace {

ComplexMatrix lower2(Complex mu, Complex c) {
  ComplexMatrix m(2, 2);
  m << mu, 0.0, c, mu;
  return m;
}

ComplexMatrix t3(Complex mu, Complex a21, Complex a31, Complex a32) {
  ComplexMatrix m = mu * ComplexMatrix::Identity(3, 3);
  m(1, 0) = a21;
  m(2, 0) = a31;
  m(2, 1) = a32;
  return m;
}

NormalForm nf_of(const std::vector<ComplexMatrix>& m) { return build_normal_form(verify_commuting(m, Tolerances{1e-8})); }

GeneratorFamily counterexample_family(std::size_t n, Complex a, Complex b) {
  const auto nn = static_cast<Eigen::Index>(n);
  std::vector<ComplexMatrix> m{b * ComplexMatrix::Identity(nn, nn)};
  for (Eigen::Index k = 0; k < nn; ++k) {
    ComplexMatrix d = a * ComplexMatrix::Identity(nn, nn);
    d(k, k) = 1.0;
    m.push_back(d);
  }
  return verify_commuting(m);
}

}  // namespace

TEST(FSubspace, Examples) {
  std::vector<ComplexMatrix> b{lower2(2.0, 3.0)};
  auto f = f_subspace(b);
  ASSERT_EQ(f.rank, 1u);
  EXPECT_NEAR(std::abs(f.basis(1, 0)), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(f.basis(0, 0)), 0.0, 1e-14);

  std::vector<ComplexMatrix> id{ComplexMatrix::Identity(3, 3)};
  EXPECT_EQ(f_subspace(id).rank, 0u);

  std::vector<ComplexMatrix> pair{t3(1.0, 1.0, 0.0, 0.0), t3(2.0, 0.0, 0.0, 1.0)};
  auto f2 = f_subspace(pair);
  EXPECT_EQ(f2.rank, 2u);
  EXPECT_TRUE(f2.contains(ComplexVector::Unit(3, 1)));
  EXPECT_TRUE(f2.contains(ComplexVector::Unit(3, 2)));
  EXPECT_FALSE(f2.contains(ComplexVector::Unit(3, 0)));
}

TEST(FSubspace, RejectsNonTriangular) {
  ComplexMatrix u(2, 2);
  u << 1.0, 1.0, 0.0, 1.0;
  std::vector<ComplexMatrix> b{u};
  try {
    f_subspace(b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotTriangularForm);
  }
}

TEST(FSubspace, RankBoundAndNoClosureGrowth) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 200; ++t) {
    std::uniform_int_distribution<int> md(1, 5), pd(1, 3);
    const auto m = static_cast<Eigen::Index>(md(rng));
    auto gens = oracle::random_t_family(m, pd(rng), 0.5, rng);
    auto f = f_subspace(gens);
    EXPECT_LE(f.rank, static_cast<std::size_t>(std::max<Eigen::Index>(0, m - 1)));
    EXPECT_EQ(f.closure_growth, 0u);
  }
}

TEST(FSubspace, OracleEquivalence) {
  std::mt19937_64 rng(29);
  for (int t = 0; t < 100; ++t) {
    std::uniform_int_distribution<int> md(1, 4), pd(1, 3);
    const auto m = static_cast<Eigen::Index>(md(rng));
    auto gens = oracle::random_t_family(m, pd(rng), 0.5, rng);
    auto f = f_subspace(gens);
    const auto cols = oracle::brute_seed_collection(gens, 4);
    double wmax = 0.0;
    for (Eigen::Index c = 0; c < cols.cols(); ++c) wmax = std::max(wmax, cols.col(c).norm());
    const int r = oracle::numerical_rank(cols, 1e-9, 1e-11 * wmax);
    ASSERT_EQ(static_cast<int>(f.rank), r) << "trial " << t;
    const auto q = oracle::span_basis(cols, 1e-9, 1e-11 * wmax);
    EXPECT_LT(oracle::max_principal_sine(f.basis, q), 1e-8);
  }
}

TEST(RankCondition, Examples) {
  auto cex = build_normal_form(counterexample_family(2, 2.0, std::polar(0.8, 1.0)));
  auto r1 = rank_condition(cex);
  EXPECT_TRUE(r1.pass);
  for (const auto& b : r1.blocks) EXPECT_EQ(b.rank, 0u);

  auto id = nf_of({ComplexMatrix::Identity(2, 2)});
  auto r2 = rank_condition(id);
  EXPECT_FALSE(r2.pass);
  EXPECT_NE(r2.obstruction.find("rank obstruction"), std::string::npos);

  auto t = nf_of({t3(4.0, 1.0, 0.0, 1.0)});
  auto r3 = rank_condition(t);
  ASSERT_EQ(t.partition, std::vector<std::size_t>{3});
  EXPECT_TRUE(r3.pass);
  EXPECT_EQ(r3.blocks[0].rank, 2u);
}

TEST(RankCondition, ConjugatedScalarStillObstructed) {
  std::mt19937_64 rng(3);
  const auto q = oracle::random_conditioned(3, 50.0, rng);
  ComplexMatrix s = q * (Complex(2.0, 1.0) * ComplexMatrix::Identity(3, 3)) * q.inverse();
  auto nf = nf_of({s});
  auto rep = rank_condition(nf);
  EXPECT_FALSE(rep.pass);
}

TEST(HSubspace, Examples) {
  auto nf = nf_of({lower2(2.0, 3.0)});
  ASSERT_EQ(nf.partition, std::vector<std::size_t>{2});
  // Work directly in normal-form coordinates.
  auto h0 = h_subspace(ComplexVector::Zero(2), nf);
  EXPECT_EQ(h0.rank, 1u);
  auto h1 = h_subspace(ComplexVector::Unit(2, 0), nf);
  EXPECT_EQ(h1.rank, 2u);
  EXPECT_EQ(invariance_residual(h1, nf.conjugated), 0.0);
}

TEST(HSubspace, RankIsFPlusMembership) {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 100; ++t) {
    auto gens = oracle::random_t_family(3, 2, 0.5, rng);
    auto fam = make_family_unchecked(gens, 0.0);
    NormalForm nf;
    nf.P = nf.P_inv = ComplexMatrix::Identity(3, 3);
    nf.partition = nf.spectral_groups = {3};
    nf.conjugated = gens;
    auto f = f_subspace(gens);
    ComplexVector x = oracle::gaussian_matrix(3, 1, rng);
    if (t % 4 == 0 && f.rank > 0) x = f.basis * oracle::gaussian_matrix(f.rank, 1, rng);
    auto h = h_subspace(x, nf);
    EXPECT_EQ(h.rank, f.rank + (f.contains(x) ? 0u : 1u));
    EXPECT_LT(invariance_residual(h, fam), 1e-10);
  }
}

TEST(Invariance, Examples) {
  std::vector<ComplexMatrix> b{lower2(1.0, 1.0)};
  Subspace full;
  full.ambient_dim = 2;
  full.basis = ComplexMatrix::Identity(2, 2);
  full.rank = 2;
  EXPECT_EQ(invariance_residual(full, b), 0.0);
  Subspace e1;
  e1.ambient_dim = 2;
  e1.basis = ComplexMatrix::Identity(2, 1);
  e1.rank = 1;
  EXPECT_GT(invariance_residual(e1, b), 0.4);
}

TEST(Invariance, HxOnConjugatedFamilies) {
  std::mt19937_64 rng(57);
  for (int t = 0; t < 100; ++t) {
    std::uniform_int_distribution<int> nd(1, 5), pd(1, 3);
    const int n = nd(rng);
    std::vector<Eigen::Index> eta;
    int left = n;
    while (left > 0) {
      std::uniform_int_distribution<int> bd(1, left);
      eta.push_back(bd(rng));
      left -= static_cast<int>(eta.back());
    }
    auto gens = oracle::random_k_family(eta, pd(rng), rng);
    const auto p0 = oracle::random_conditioned(n, 100.0, rng);
    const ComplexMatrix p0i = p0.inverse();
    for (auto& g : gens) g = p0 * g * p0i;
    auto nf = nf_of(gens);
    for (int k = 0; k < 10; ++k) {
      auto h = h_subspace(oracle::gaussian_matrix(n, 1, rng), nf);
      EXPECT_LT(invariance_residual(h, nf.conjugated), 1e-10 * nf.cond_P);
    }
  }
}

TEST(LocusBound, CounterexampleFrame) {
  auto nf = build_normal_form(counterexample_family(3, 2.0, std::polar(0.8, 1.0)));
  auto hs = jdense_locus_bound(nf);
  ASSERT_EQ(hs.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(hs[k].rank, 2u);
    const auto kk = static_cast<Eigen::Index>(k);
    EXPECT_FALSE(hs[k].contains(ComplexVector::Unit(3, kk)));
    for (Eigen::Index j = 0; j < 3; ++j)
      if (j != kk) EXPECT_TRUE(hs[k].contains(ComplexVector::Unit(3, j)));
  }
}

TEST(LocusBound, ComplementOfV) {
  std::mt19937_64 rng(77);
  auto gens = oracle::random_k_family({2, 1, 1}, 2, rng);
  const auto p0 = oracle::random_conditioned(4, 40.0, rng);
  for (auto& g : gens) g = p0 * g * p0.inverse();
  auto nf = nf_of(gens);
  auto fr = reference_frame(nf);
  auto hs = jdense_locus_bound(nf);
  const auto off = nf.block_offsets();
  for (int t = 0; t < 1000; ++t) {
    ComplexVector u = oracle::gaussian_matrix(4, 1, rng);
    if (t % 2 == 0) u(static_cast<Eigen::Index>(off[static_cast<std::size_t>(t / 2) % off.size()])) = 0.0;
    const ComplexVector x = nf.P * u;
    bool in_some = false;
    for (const auto& h : hs) in_some = in_some || h.contains(x);
    EXPECT_EQ(fr.in_V(x), !in_some);
    if (t % 2 == 0) {
      const auto k = static_cast<std::size_t>(t / 2) % off.size();
      EXPECT_TRUE(hs[k].contains(x));
    }
  }
}
