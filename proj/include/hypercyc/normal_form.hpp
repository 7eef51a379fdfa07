#pragma once

// Simultaneous block-triangular normal form of a commuting family.
//
// P maps normal-form coordinates to the original ones: every conjugated
// generator P^{-1} A P lies in K_{eta,r}, i.e. is block diagonal with lower
// triangular blocks of constant diagonal.
//
// Construction: a seeded random combination C of the generators is brought
// to Schur form, its eigenvalues clustered, the Schur form reordered by
// cluster and decoupled by triangular Sylvester solves. Each cluster is
// recursively split again using the restricted family (combination first,
// then each generator). Inside a leaf every generator has one eigenvalue and
// the nilpotent parts are triangularized by deflating common null vectors.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "hypercyc/core_algebra.hpp"

namespace hypercyc {

struct SpectralBlock {
  std::vector<Complex> tuple;  // eigenvalue of each generator on the block
  ComplexMatrix basis;         // n x m, orthonormal columns
};

struct NormalForm {
  ComplexMatrix P;
  ComplexMatrix P_inv;
  std::vector<std::size_t> partition;            // eta
  std::vector<std::vector<Complex>> block_tuples;  // one per block
  // Coarse partition into common spectral subspaces; each entry spans one or
  // more consecutive blocks (a scalar subspace is split into unit blocks).
  std::vector<std::size_t> spectral_groups;
  std::vector<ComplexMatrix> conjugated;  // P^{-1} A_j P
  double cond_P = 1.0;
  double residual = 0.0;

  std::size_t r() const { return partition.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(P.rows()); }
  std::vector<std::size_t> block_offsets() const {
    std::vector<std::size_t> off(partition.size(), 0);
    for (std::size_t k = 1; k < partition.size(); ++k) off[k] = off[k - 1] + partition[k - 1];
    return off;
  }
};

class IllConditionedError : public Error {
 public:
  explicit IllConditionedError(NormalForm best)
      : Error(ErrorCode::IllConditioned,
              "normal-form conjugation is ill conditioned (cond " + std::to_string(best.cond_P) + ")"),
        best_(std::move(best)) {}
  const NormalForm& best() const { return best_; }

 private:
  NormalForm best_;
};

struct NormalFormOptions {
  double eig_rel = 1e-12;        // cluster diameter threshold, before the 1/m root
  double ambiguity_factor = 10;  // ambiguity band above the threshold
  double scalar_rel = 1e-8;      // nilpotent part below this (relative) counts as zero
  double max_cond = 1e12;
  std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
};

namespace detail {

inline double cluster_threshold(std::size_t m, double scale, double rel) {
  return scale * std::pow(rel, 1.0 / static_cast<double>(std::max<std::size_t>(1, m)));
}

inline double diameter(const std::vector<Complex>& z, const std::vector<std::size_t>& idx) {
  double d = 0.0;
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b) d = std::max(d, std::abs(z[idx[a]] - z[idx[b]]));
  return d;
}

// Divisive single-linkage clustering. A set of m values is accepted as one
// perturbed multiple eigenvalue when its diameter is at most
// scale * rel^(1/m); otherwise the longest spanning-tree edge is cut.
struct Clustering {
  std::vector<std::size_t> label;
  std::size_t count = 0;
  bool ambiguous = false;
};

inline void split_cluster(const std::vector<Complex>& z, std::vector<std::size_t> idx, double scale,
                          const NormalFormOptions& opt, std::vector<std::vector<std::size_t>>& out,
                          bool& ambiguous) {
  const std::size_t m = idx.size();
  const double diam = diameter(z, idx);
  if (m == 1 || diam <= cluster_threshold(m, scale, opt.eig_rel)) {
    out.push_back(std::move(idx));
    return;
  }
  if (diam <= cluster_threshold(m, scale, opt.eig_rel * opt.ambiguity_factor)) ambiguous = true;
  // Prim's algorithm, then drop the longest edge.
  std::vector<bool> in(m, false);
  std::vector<double> best(m, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> parent(m, 0);
  best[0] = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<double> weights;
  for (std::size_t it = 0; it < m; ++it) {
    std::size_t u = m;
    for (std::size_t v = 0; v < m; ++v)
      if (!in[v] && (u == m || best[v] < best[u])) u = v;
    in[u] = true;
    if (it > 0) {
      edges.emplace_back(parent[u], u);
      weights.push_back(best[u]);
    }
    for (std::size_t v = 0; v < m; ++v) {
      if (in[v]) continue;
      const double d = std::abs(z[idx[u]] - z[idx[v]]);
      if (d < best[v]) {
        best[v] = d;
        parent[v] = u;
      }
    }
  }
  const std::size_t cut = static_cast<std::size_t>(
      std::max_element(weights.begin(), weights.end()) - weights.begin());
  // Components after removing the cut edge.
  std::vector<std::vector<std::size_t>> adj(m);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (e == cut) continue;
    adj[edges[e].first].push_back(edges[e].second);
    adj[edges[e].second].push_back(edges[e].first);
  }
  std::vector<int> comp(m, -1);
  std::vector<std::size_t> stack{edges[cut].first};
  comp[edges[cut].first] = 0;
  while (!stack.empty()) {
    std::size_t u = stack.back();
    stack.pop_back();
    for (auto v : adj[u])
      if (comp[v] < 0) {
        comp[v] = 0;
        stack.push_back(v);
      }
  }
  std::vector<std::size_t> a, b;
  for (std::size_t i = 0; i < m; ++i) (comp[i] == 0 ? a : b).push_back(idx[i]);
  split_cluster(z, std::move(a), scale, opt, out, ambiguous);
  split_cluster(z, std::move(b), scale, opt, out, ambiguous);
}

inline bool lex_less(Complex a, Complex b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

inline Clustering cluster_eigenvalues(const std::vector<Complex>& z, double scale,
                                      const NormalFormOptions& opt) {
  Clustering c;
  c.label.assign(z.size(), 0);
  if (z.empty()) return c;
  std::vector<std::size_t> all(z.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::vector<std::size_t>> groups;
  split_cluster(z, all, scale, opt, groups, c.ambiguous);
  // Deterministic cluster numbering: by cluster mean, (re, im) ascending.
  std::vector<Complex> mean(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    Complex s = 0.0;
    for (auto i : groups[g]) s += z[i];
    mean[g] = s / static_cast<double>(groups[g].size());
  }
  std::vector<std::size_t> order(groups.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return lex_less(mean[x], mean[y]); });
  for (std::size_t rank = 0; rank < order.size(); ++rank)
    for (auto i : groups[order[rank]]) c.label[i] = rank;
  c.count = groups.size();
  return c;
}

// Swaps the adjacent diagonal entries i, i+1 of the upper triangular T,
// updating U so that A = U T U^H is preserved.
inline void schur_swap(ComplexMatrix& t, ComplexMatrix& u, Eigen::Index i) {
  const Complex t11 = t(i, i), t22 = t(i + 1, i + 1), t12 = t(i, i + 1);
  Complex v1 = t12, v2 = t22 - t11;
  const double nv = std::sqrt(std::norm(v1) + std::norm(v2));
  if (nv == 0.0) return;
  v1 /= nv;
  v2 /= nv;
  Eigen::Matrix2cd g;
  g << v1, -std::conj(v2), v2, std::conj(v1);
  t.middleCols(i, 2) = t.middleCols(i, 2) * g;
  t.middleRows(i, 2) = g.adjoint() * t.middleRows(i, 2);
  u.middleCols(i, 2) = u.middleCols(i, 2) * g;
  t(i + 1, i) = 0.0;
  t(i, i) = t22;
  t(i + 1, i + 1) = t11;
}

// Solves T11 Y - Y T22 = R for upper triangular T11, T22 with disjoint spectra.
inline ComplexMatrix triangular_sylvester(const ComplexMatrix& t11, const ComplexMatrix& t22,
                                          const ComplexMatrix& rhs) {
  const Eigen::Index s = t11.rows(), m = t22.rows();
  ComplexMatrix y(s, m);
  for (Eigen::Index c = 0; c < m; ++c) {
    ComplexVector b = rhs.col(c);
    for (Eigen::Index k = 0; k < c; ++k) b += y.col(k) * t22(k, c);
    ComplexMatrix a = t11;
    a.diagonal().array() -= t22(c, c);
    y.col(c) = a.triangularView<Eigen::Upper>().solve(b);
  }
  return y;
}

inline ComplexMatrix orthonormalize(const ComplexMatrix& b) {
  Eigen::HouseholderQR<ComplexMatrix> qr(b);
  return qr.householderQ() * ComplexMatrix::Identity(b.rows(), b.cols());
}

// Splits the invariant subspace `basis` (orthonormal) using `cand`, the
// candidate matrix restricted to it. Returns the cluster bases, or nothing
// if the candidate has a single cluster or is ambiguous.
inline std::optional<std::vector<ComplexMatrix>> split_by(const ComplexMatrix& cand,
                                                          const ComplexMatrix& basis,
                                                          const NormalFormOptions& opt,
                                                          bool& ambiguous) {
  const Eigen::Index m = cand.rows();
  Eigen::ComplexSchur<ComplexMatrix> schur(cand);
  ComplexMatrix t = schur.matrixT();
  ComplexMatrix u = schur.matrixU();
  std::vector<Complex> eig(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) eig[static_cast<std::size_t>(i)] = t(i, i);
  const double scale = cand.norm();
  if (scale == 0.0) return std::nullopt;
  Clustering cl = cluster_eigenvalues(eig, scale, opt);
  if (cl.ambiguous) {
    ambiguous = true;
    return std::nullopt;
  }
  if (cl.count <= 1) return std::nullopt;
  // Bubble the diagonal into cluster order.
  std::vector<std::size_t> lab = cl.label;
  for (Eigen::Index pass = 0; pass < m; ++pass) {
    bool swapped = false;
    for (Eigen::Index i = 0; i + 1 < m; ++i) {
      auto ii = static_cast<std::size_t>(i);
      if (lab[ii] > lab[ii + 1]) {
        schur_swap(t, u, i);
        std::swap(lab[ii], lab[ii + 1]);
        swapped = true;
      }
    }
    if (!swapped) break;
  }
  std::vector<ComplexMatrix> out;
  Eigen::Index start = 0;
  for (std::size_t c = 0; c < cl.count; ++c) {
    Eigen::Index len = 0;
    while (start + len < m && lab[static_cast<std::size_t>(start + len)] == c) ++len;
    ComplexMatrix local;
    if (start == 0) {
      local = u.leftCols(len);
    } else {
      const ComplexMatrix y = triangular_sylvester(t.topLeftCorner(start, start),
                                                   t.block(start, start, len, len),
                                                   -t.block(0, start, start, len));
      local = u.leftCols(start) * y + u.middleCols(start, len);
    }
    out.push_back(orthonormalize(basis * local));
    start += len;
  }
  return out;
}

struct Leaf {
  std::vector<Complex> tuple;
  ComplexMatrix basis;
};

inline std::vector<ComplexMatrix> restrict_family(const std::vector<ComplexMatrix>& gens,
                                                  const ComplexMatrix& basis) {
  std::vector<ComplexMatrix> out;
  out.reserve(gens.size());
  for (const auto& a : gens) out.push_back(basis.adjoint() * a * basis);
  return out;
}

inline void split_recursive(const std::vector<ComplexMatrix>& gens, const ComplexMatrix& basis,
                            const std::vector<Complex>& weights, const NormalFormOptions& opt,
                            std::vector<Leaf>& leaves) {
  const auto restricted = restrict_family(gens, basis);
  const Eigen::Index m = basis.cols();
  bool ambiguous = false;
  if (m > 1) {
    ComplexMatrix comb = ComplexMatrix::Zero(m, m);
    for (std::size_t j = 0; j < gens.size(); ++j) comb += weights[j] * restricted[j];
    std::vector<const ComplexMatrix*> candidates{&comb};
    for (const auto& r : restricted) candidates.push_back(&r);
    for (const ComplexMatrix* cand : candidates) {
      auto parts = split_by(*cand, basis, opt, ambiguous);
      if (!parts) continue;
      for (const auto& part : *parts) split_recursive(gens, part, weights, opt, leaves);
      return;
    }
    if (ambiguous)
      throw Error(ErrorCode::ClusteringAmbiguous,
                  "joint eigenvalues lie within the ambiguity band of the clustering threshold");
  }
  Leaf leaf;
  leaf.basis = basis;
  for (const auto& r : restricted) leaf.tuple.push_back(r.trace() / static_cast<double>(m));
  leaves.push_back(std::move(leaf));
}

// Unitary W (m x m) making all nilpotent parts strictly lower triangular.
inline ComplexMatrix triangularize_nilpotent(std::vector<ComplexMatrix> ns) {
  const Eigen::Index m = ns.empty() ? 0 : ns.front().rows();
  ComplexMatrix w = ComplexMatrix::Identity(m, m);
  for (Eigen::Index s = 0; s + 1 < m; ++s) {
    const Eigen::Index d = m - s;
    ComplexMatrix stacked(static_cast<Eigen::Index>(ns.size()) * d, d);
    for (std::size_t j = 0; j < ns.size(); ++j)
      stacked.middleRows(static_cast<Eigen::Index>(j) * d, d) = ns[j].bottomRightCorner(d, d);
    Eigen::JacobiSVD<ComplexMatrix> svd(stacked, Eigen::ComputeFullV);
    const ComplexVector v = svd.matrixV().col(d - 1);
    Eigen::HouseholderQR<ComplexMatrix> qr(v);
    const ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(d, d);
    ComplexMatrix g = ComplexMatrix::Identity(m, m);
    g.bottomRightCorner(d, d) = q;
    for (auto& n : ns) n = g.adjoint() * n * g;
    w = w * g;
  }
  // Upper triangular in w's columns; reversing the order gives lower.
  return w.rowwise().reverse();
}

inline void normalize_phase(ComplexMatrix& b) {
  for (Eigen::Index c = 0; c < b.cols(); ++c) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < b.rows(); ++i)
      if (std::abs(b(i, c)) > std::abs(b(best, c)) * (1.0 + 1e-12)) best = i;
    const double mag = std::abs(b(best, c));
    if (mag > 0.0) b.col(c) *= std::conj(b(best, c)) / mag;
  }
}

// Lexicographic on (re, im) per entry; parts closer than 1e-8 relative
// count as equal so that rounding noise cannot reorder blocks.
inline bool tuple_less(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  auto differ = [](double x, double y) { return std::abs(x - y) > 1e-8 * (1.0 + std::abs(x) + std::abs(y)); };
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    if (differ(a[i].real(), b[i].real())) return a[i].real() < b[i].real();
    if (differ(a[i].imag(), b[i].imag())) return a[i].imag() < b[i].imag();
  }
  return a.size() < b.size();
}

inline double condition_number(const ComplexMatrix& p) {
  Eigen::JacobiSVD<ComplexMatrix> svd(p);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 1.0;
  const double lo = s(s.size() - 1);
  return lo == 0.0 ? std::numeric_limits<double>::infinity() : s(0) / lo;
}

inline std::vector<Complex> random_weights(const GeneratorFamily& family, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mod(0.5, 1.5), ang(-std::numbers::pi, std::numbers::pi);
  std::vector<Complex> w;
  for (const auto& a : family.generators()) {
    const double nrm = a.norm();
    w.push_back(std::polar(mod(rng), ang(rng)) / (nrm > 0.0 ? nrm : 1.0));
  }
  return w;
}

inline std::vector<Leaf> spectral_leaves(const GeneratorFamily& family, const NormalFormOptions& opt) {
  const auto n = static_cast<Eigen::Index>(family.dim());
  std::vector<Leaf> leaves;
  split_recursive(family.generators(), ComplexMatrix::Identity(n, n),
                  random_weights(family, opt.seed), opt, leaves);
  std::stable_sort(leaves.begin(), leaves.end(), [](const Leaf& a, const Leaf& b) {
    if (a.basis.cols() != b.basis.cols()) return a.basis.cols() > b.basis.cols();
    return tuple_less(a.tuple, b.tuple);
  });
  return leaves;
}

}  // namespace detail

// Decomposition of C^n into common generalized eigenspaces, ordered by
// descending dimension then lexicographic eigenvalue tuple.
inline std::vector<SpectralBlock> common_spectral_split(const GeneratorFamily& family,
                                                        const NormalFormOptions& opt = {}) {
  std::vector<SpectralBlock> out;
  if (family.is_diagonal()) {
    // Group equal diagonal tuples.
    const std::size_t n = family.dim();
    std::vector<std::vector<Complex>> tup(n);
    for (std::size_t i = 0; i < n; ++i)
      for (const auto& g : family.generators())
        tup[i].push_back(g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
    std::vector<bool> used(n, false);
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i]) continue;
      std::vector<std::size_t> members;
      for (std::size_t k = i; k < n; ++k)
        if (!used[k] && tup[k] == tup[i]) {
          used[k] = true;
          members.push_back(k);
        }
      ComplexMatrix b = ComplexMatrix::Zero(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(members.size()));
      for (std::size_t c = 0; c < members.size(); ++c)
        b(static_cast<Eigen::Index>(members[c]), static_cast<Eigen::Index>(c)) = 1.0;
      out.push_back({tup[i], std::move(b)});
    }
    std::stable_sort(out.begin(), out.end(), [](const SpectralBlock& a, const SpectralBlock& b) {
      if (a.basis.cols() != b.basis.cols()) return a.basis.cols() > b.basis.cols();
      return detail::tuple_less(a.tuple, b.tuple);
    });
    return out;
  }
  for (auto& leaf : detail::spectral_leaves(family, opt)) out.push_back({leaf.tuple, leaf.basis});
  return out;
}

inline NormalForm build_normal_form(const GeneratorFamily& family, const NormalFormOptions& opt = {}) {
  const auto n = static_cast<Eigen::Index>(family.dim());
  const auto split = common_spectral_split(family, opt);

  struct Block {
    std::vector<Complex> tuple;
    ComplexMatrix basis;
    std::size_t group;
  };
  std::vector<Block> blocks;
  for (std::size_t g = 0; g < split.size(); ++g) {
    const auto& sb = split[g];
    const Eigen::Index m = sb.basis.cols();
    std::vector<ComplexMatrix> ns;
    bool scalar = true;
    for (std::size_t j = 0; j < family.size(); ++j) {
      ComplexMatrix nj = sb.basis.adjoint() * family[j] * sb.basis;
      nj.diagonal().array() -= sb.tuple[j];
      if (nj.norm() > opt.scalar_rel * (1.0 + family[j].norm())) scalar = false;
      ns.push_back(std::move(nj));
    }
    if (scalar || m == 1) {
      for (Eigen::Index c = 0; c < m; ++c) blocks.push_back({sb.tuple, sb.basis.col(c), g});
    } else {
      blocks.push_back({sb.tuple, sb.basis * detail::triangularize_nilpotent(std::move(ns)), g});
    }
  }
  std::stable_sort(blocks.begin(), blocks.end(), [](const Block& a, const Block& b) {
    if (a.basis.cols() != b.basis.cols()) return a.basis.cols() > b.basis.cols();
    return detail::tuple_less(a.tuple, b.tuple);
  });

  NormalForm nf;
  nf.P = ComplexMatrix(n, n);
  Eigen::Index col = 0;
  for (auto& b : blocks) {
    if (!family.is_diagonal()) detail::normalize_phase(b.basis);
    nf.P.middleCols(col, b.basis.cols()) = b.basis;
    col += b.basis.cols();
    nf.partition.push_back(static_cast<std::size_t>(b.basis.cols()));
    nf.block_tuples.push_back(b.tuple);
  }
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    if (k > 0 && blocks[k].group == blocks[k - 1].group)
      nf.spectral_groups.back() += nf.partition[k];
    else
      nf.spectral_groups.push_back(nf.partition[k]);
  }
  if (family.is_diagonal()) {
    nf.P_inv = nf.P.transpose();
    nf.cond_P = 1.0;
  } else {
    nf.P_inv = nf.P.fullPivLu().inverse();
    nf.cond_P = detail::condition_number(nf.P);
  }
  for (const auto& a : family.generators()) {
    ComplexMatrix c = nf.P_inv * a * nf.P;
    nf.residual = std::max(nf.residual, is_in_k(c, nf.partition, std::numeric_limits<double>::infinity()).residual);
    nf.conjugated.push_back(std::move(c));
  }
  if (!(nf.cond_P <= opt.max_cond)) throw IllConditionedError(std::move(nf));
  return nf;
}

// u0 (block-wise first basis vectors), v0 = P u0, and membership tests for
// U = prod (C* x C^{n_k - 1}) and V = P(U).
class ReferenceFrame {
 public:
  ReferenceFrame() = default;
  explicit ReferenceFrame(const NormalForm& nf) : P_(nf.P), P_inv_(nf.P_inv), offsets_(nf.block_offsets()) {
    u0_ = ComplexVector::Zero(static_cast<Eigen::Index>(nf.dim()));
    for (auto o : offsets_) u0_(static_cast<Eigen::Index>(o)) = 1.0;
    v0_ = P_ * u0_;
  }
  const ComplexVector& u0() const { return u0_; }
  const ComplexVector& v0() const { return v0_; }
  const std::vector<std::size_t>& block_offsets() const { return offsets_; }

  // Exact test in normal-form coordinates.
  bool in_U(const ComplexVector& u) const {
    for (auto o : offsets_)
      if (u(static_cast<Eigen::Index>(o)) == Complex(0.0, 0.0)) return false;
    return true;
  }
  // x in V iff every block-first coordinate of P^{-1} x exceeds
  // rel_tol * |P^{-1} x| in modulus; rel_tol = 0 gives the exact test.
  bool in_V(const ComplexVector& x, double rel_tol = 1e-10) const {
    const ComplexVector u = P_inv_ * x;
    const double scale = u.norm();
    if (scale == 0.0) return false;
    for (auto o : offsets_)
      if (std::abs(u(static_cast<Eigen::Index>(o))) <= rel_tol * scale) return false;
    return true;
  }

 private:
  ComplexMatrix P_, P_inv_;
  std::vector<std::size_t> offsets_;
  ComplexVector u0_, v0_;
};

inline ReferenceFrame reference_frame(const NormalForm& nf) { return ReferenceFrame(nf); }

}  // namespace hypercyc
