#pragma once

// F_G, F_{G_k}, H_x and the locus subspaces H_k of a family in normal form.
//
// F_G is seeded with (A_j - mu_j I) e_i, i < n-1, over the generators only:
// for a product, (AB - mu_A mu_B) e_i = A (B - mu_B) e_i + mu_B (A - mu_A) e_i,
// and A (B - mu_B) e_i stays in the span because the seed span is invariant
// (B w = mu w + sum_i w_i (B - mu) e_i for w in the span). The closure loop
// below re-checks that invariance numerically.

#include <Eigen/SVD>

#include <algorithm>
#include <span>
#include <vector>

#include "hypercyc/core_algebra.hpp"
#include "hypercyc/normal_form.hpp"

namespace hypercyc {

struct Subspace {
  std::size_t ambient_dim = 0;
  ComplexMatrix basis;  // ambient_dim x rank, orthonormal columns
  std::size_t rank = 0;
  double tol = 0.0;
  std::size_t closure_growth = 0;  // dimensions added by the closure loop

  bool contains(const ComplexVector& x, double rel_tol = 1e-10) const {
    const double nx = x.norm();
    if (nx == 0.0) return true;
    if (rank == 0) return false;
    return (x - basis * (basis.adjoint() * x)).norm() <= rel_tol * nx;
  }
};

namespace detail {

// Orthonormal basis of span(cols) keeping singular values above
// max(rel * sigma_max, abs_floor).
inline Subspace span_of(const ComplexMatrix& cols, double rel, double abs_floor) {
  Subspace s;
  s.ambient_dim = static_cast<std::size_t>(cols.rows());
  s.basis = ComplexMatrix(cols.rows(), 0);
  if (cols.cols() == 0) return s;
  Eigen::JacobiSVD<ComplexMatrix> svd(cols, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  s.tol = std::max(rel * (sv.size() ? sv(0) : 0.0), abs_floor);
  Eigen::Index r = 0;
  while (r < sv.size() && sv(r) > s.tol) ++r;
  s.basis = svd.matrixU().leftCols(r);
  s.rank = static_cast<std::size_t>(r);
  return s;
}

inline double max_norm(std::span<const ComplexMatrix> gens) {
  double m = 0.0;
  for (const auto& g : gens) m = std::max(m, g.norm());
  return m;
}

}  // namespace detail

struct StructureOptions {
  double rank_rel = 1e-9;
  double rank_abs = 1e-11;      // times the reference norm
  double norm_reference = 0.0;  // 0: largest norm of the matrices passed in
  double structure_tol = Tolerances{}.structure;
};

// F_G of a single-block family (each matrix in T_m).
inline Subspace f_subspace(std::span<const ComplexMatrix> block_gens, const StructureOptions& opt = {}) {
  if (block_gens.empty()) throw Error(ErrorCode::InvalidArgument, "empty block family");
  const Eigen::Index m = block_gens.front().rows();
  const std::vector<std::size_t> single{static_cast<std::size_t>(m)};
  std::vector<Complex> mu;
  for (std::size_t j = 0; j < block_gens.size(); ++j) {
    const auto& a = block_gens[j];
    if (a.rows() != m || a.cols() != m)
      throw Error(ErrorCode::DimensionMismatch, "block generators differ in size");
    auto chk = is_in_k(a, single, opt.structure_tol);
    if (!chk.ok)
      throw Error(ErrorCode::NotTriangularForm, "generator " + std::to_string(j + 1) +
                                                    " is not lower triangular with constant diagonal (residual " +
                                                    std::to_string(chk.residual) + ")");
    mu.push_back(a.diagonal().mean());
  }
  const double floor =
      opt.rank_abs * (opt.norm_reference > 0.0 ? opt.norm_reference : detail::max_norm(block_gens));
  const Eigen::Index per = std::max<Eigen::Index>(0, m - 1);
  ComplexMatrix seeds(m, per * static_cast<Eigen::Index>(block_gens.size()));
  for (std::size_t j = 0; j < block_gens.size(); ++j)
    for (Eigen::Index i = 0; i < per; ++i) {
      ComplexVector c = block_gens[j].col(i);
      c(i) -= mu[j];
      seeds.col(static_cast<Eigen::Index>(j) * per + i) = c;
    }
  Subspace s = detail::span_of(seeds, opt.rank_rel, floor);
  // Invariance closure.
  for (std::size_t iter = 0; iter < static_cast<std::size_t>(m) && s.rank > 0 && s.rank < static_cast<std::size_t>(m); ++iter) {
    ComplexMatrix cols(m, s.basis.cols() * static_cast<Eigen::Index>(1 + block_gens.size()));
    cols.leftCols(s.basis.cols()) = s.basis;
    for (std::size_t j = 0; j < block_gens.size(); ++j)
      cols.middleCols(s.basis.cols() * static_cast<Eigen::Index>(j + 1), s.basis.cols()) = block_gens[j] * s.basis;
    Subspace next = detail::span_of(cols, opt.rank_rel, floor);
    if (next.rank <= s.rank) break;
    next.closure_growth = s.closure_growth + (next.rank - s.rank);
    s = std::move(next);
  }
  return s;
}

inline double invariance_residual(const Subspace& s, std::span<const ComplexMatrix> gens) {
  if (s.rank == 0 || s.rank == s.ambient_dim) return 0.0;
  double worst = 0.0;
  for (const auto& a : gens) {
    const ComplexMatrix img = a * s.basis;
    const ComplexMatrix perp = img - s.basis * (s.basis.adjoint() * img);
    for (Eigen::Index c = 0; c < img.cols(); ++c)
      worst = std::max(worst, perp.col(c).norm() / (img.col(c).norm() + 1.0));
  }
  return worst;
}

inline double invariance_residual(const Subspace& s, const GeneratorFamily& family) {
  return invariance_residual(s, std::span<const ComplexMatrix>(family.generators()));
}

struct BlockRank {
  std::size_t offset = 0;
  std::size_t size = 0;
  Subspace f;  // in block coordinates
  std::size_t rank = 0;
  bool full = false;  // rank == size - 1
};

struct BlockStructureReport {
  std::vector<BlockRank> blocks;  // one per normal-form block
  std::vector<BlockRank> groups;  // one per common spectral subspace
  bool pass = false;
  // A failure is an obstruction to J_G(u) = C^n for u in U.
  std::string obstruction;
};

namespace detail {

inline std::vector<ComplexMatrix> diagonal_block(const std::vector<ComplexMatrix>& conj, std::size_t off,
                                                 std::size_t size) {
  std::vector<ComplexMatrix> out;
  for (const auto& c : conj)
    out.push_back(c.block(static_cast<Eigen::Index>(off), static_cast<Eigen::Index>(off),
                          static_cast<Eigen::Index>(size), static_cast<Eigen::Index>(size)));
  return out;
}

inline std::vector<BlockRank> rank_per_range(const std::vector<ComplexMatrix>& conj,
                                             const std::vector<std::size_t>& sizes, const StructureOptions& opt,
                                             double abs_scale) {
  std::vector<BlockRank> out;
  std::size_t off = 0;
  StructureOptions local = opt;
  for (auto sz : sizes) {
    BlockRank br;
    br.offset = off;
    br.size = sz;
    auto gens = diagonal_block(conj, off, sz);
    // Floor relative to the whole family so that numerically scalar blocks
    // do not register noise seeds.
    if (local.norm_reference == 0.0) local.norm_reference = abs_scale;
    br.f = f_subspace(gens, local);
    br.rank = br.f.rank;
    br.full = br.rank + 1 == sz;
    out.push_back(std::move(br));
    off += sz;
  }
  return out;
}

}  // namespace detail

// Rank condition rank(F_{G_k}) = n_k - 1, checked on the normal-form blocks
// and on the coarser common spectral subspaces of the same frame.
inline BlockStructureReport rank_condition(const NormalForm& nf, const StructureOptions& opt = {}) {
  BlockStructureReport rep;
  const double scale = detail::max_norm(nf.conjugated);
  rep.blocks = detail::rank_per_range(nf.conjugated, nf.partition, opt, scale);
  rep.groups = detail::rank_per_range(nf.conjugated, nf.spectral_groups, opt, scale);
  rep.pass = true;
  for (const auto& b : rep.blocks)
    if (!b.full) {
      rep.pass = false;
      rep.obstruction = "rank obstruction: block at offset " + std::to_string(b.offset) + " of size " +
                        std::to_string(b.size) + " has rank(F) = " + std::to_string(b.rank);
      return rep;
    }
  for (const auto& g : rep.groups)
    if (!g.full) {
      rep.pass = false;
      rep.obstruction = "rank obstruction: spectral subspace at offset " + std::to_string(g.offset) +
                        " of dimension " + std::to_string(g.size) + " has rank(F) = " + std::to_string(g.rank);
      return rep;
    }
  return rep;
}

// H_x = direct sum over blocks of (C x_k + F_{G_k}), x in normal-form
// coordinates; the result is in normal-form coordinates.
inline Subspace h_subspace(const ComplexVector& x, const NormalForm& nf, const StructureOptions& opt = {}) {
  if (static_cast<std::size_t>(x.size()) != nf.dim())
    throw Error(ErrorCode::DimensionMismatch, "vector length differs from dimension");
  const auto n = static_cast<Eigen::Index>(nf.dim());
  const double scale = detail::max_norm(nf.conjugated);
  const auto ranks = detail::rank_per_range(nf.conjugated, nf.partition, opt, scale);
  Subspace out;
  out.ambient_dim = nf.dim();
  out.basis = ComplexMatrix::Zero(n, 0);
  std::vector<ComplexMatrix> pieces;
  Eigen::Index total = 0;
  for (const auto& br : ranks) {
    const auto off = static_cast<Eigen::Index>(br.offset);
    const auto sz = static_cast<Eigen::Index>(br.size);
    ComplexMatrix cols(sz, br.f.basis.cols() + 1);
    cols.leftCols(br.f.basis.cols()) = br.f.basis;
    cols.col(br.f.basis.cols()) = x.segment(off, sz);
    const double xn = x.segment(off, sz).norm();
    Subspace local = detail::span_of(cols, opt.rank_rel, std::max(1e-14 * xn, br.f.tol));
    ComplexMatrix emb = ComplexMatrix::Zero(n, local.basis.cols());
    emb.middleRows(off, sz) = local.basis;
    total += local.basis.cols();
    pieces.push_back(std::move(emb));
    out.tol = std::max(out.tol, local.tol);
  }
  out.basis = ComplexMatrix(n, total);
  Eigen::Index c = 0;
  for (const auto& p : pieces) {
    out.basis.middleCols(c, p.cols()) = p;
    c += p.cols();
  }
  out.rank = static_cast<std::size_t>(total);
  return out;
}

// Image of a normal-form-coordinate subspace in original coordinates.
inline Subspace to_original(const Subspace& s, const NormalForm& nf) {
  Subspace out = detail::span_of(nf.P * s.basis, 1e-12, 0.0);
  out.ambient_dim = s.ambient_dim;
  return out;
}

// H_k = P({x : first coordinate of block k is 0}), one per block.
inline std::vector<Subspace> jdense_locus_bound(const NormalForm& nf) {
  const auto n = static_cast<Eigen::Index>(nf.dim());
  std::vector<Subspace> out;
  for (auto off : nf.block_offsets()) {
    ComplexMatrix cols(n, n - 1);
    Eigen::Index c = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (i != static_cast<Eigen::Index>(off)) cols.col(c++) = nf.P.col(i);
    Subspace s = detail::span_of(cols, 1e-14, 0.0);
    s.ambient_dim = nf.dim();
    if (s.rank != static_cast<std::size_t>(n - 1)) {
      Eigen::HouseholderQR<ComplexMatrix> qr(cols);
      s.basis = qr.householderQ() * ComplexMatrix::Identity(n, n - 1);
      s.rank = static_cast<std::size_t>(n - 1);
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace hypercyc
