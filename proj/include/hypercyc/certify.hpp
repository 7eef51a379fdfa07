#pragma once

// Empirical hypercyclicity certification: normal form, exact rank
// obstruction, then grid coverage of the orbit of v0 along a budget ladder.

#include <algorithm>
#include <string>
#include <vector>

#include "hypercyc/coverage.hpp"
#include "hypercyc/normal_form.hpp"
#include "hypercyc/orbit.hpp"
#include "hypercyc/structure.hpp"

namespace hypercyc {

enum class Verdict { EmpiricallyHypercyclic, NotHypercyclic, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::EmpiricallyHypercyclic: return "EmpiricallyHypercyclic";
    case Verdict::NotHypercyclic: return "NotHypercyclic";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

struct CertifyOptions {
  Grid grid{2.0, 0.1};
  std::vector<std::uint32_t> ladder{10, 20, 40, 80};  // max total degree per rung
  double dense_projection = 0.9;  // every 2-dim coordinate projection
  double dense_full = 0.5;        // full grid, only required when n <= 2
  std::size_t full_grid_max_n = 2;
  double plateau_growth = 0.01;   // absolute, across the last plateau_rungs rungs
  std::size_t plateau_rungs = 3;
  double plateau_ceiling = 0.1;
  NormalFormOptions normal_form{};
  StructureOptions structure{};
  Tolerances tol{};
};

struct CoverageRung {
  std::uint32_t max_degree = 0;
  std::uint64_t words = 0;  // words of degree <= max_degree
  std::vector<double> projection_coverage;  // one per coordinate pair
  double min_projection = 0.0;
  double full_coverage = 0.0;
  std::uint64_t full_cells_hit = 0;
  double full_cells_total = 0.0;
};

struct CertifyReport {
  Verdict verdict = Verdict::Inconclusive;
  std::string reason;
  NormalForm normal_form;
  BlockStructureReport structure;
  ComplexVector v0;
  std::vector<CoverageRung> rungs;
  std::uint64_t points_scanned = 0;
};

// Coverage of G(v) at every rung from one scan at the top rung.
inline std::vector<CoverageRung> coverage_ladder(const GeneratorFamily& family, const ComplexVector& v,
                                                 const CertifyOptions& opt) {
  std::vector<CoverageRung> out;
  if (opt.ladder.empty()) return out;
  if (!std::is_sorted(opt.ladder.begin(), opt.ladder.end()))
    throw Error(ErrorCode::InvalidArgument, "budget ladder must be nondecreasing");
  OrbitScanOptions so;
  so.grid = opt.grid;
  so.tol = opt.tol;
  so.projections = true;
  so.full = true;
  const CoverageRecorder rec = scan_orbit(family, v, opt.ladder.back(), so);
  for (auto D : opt.ladder) {
    CoverageRung r;
    r.max_degree = D;
    r.words = word_count(family.size(), 0, D);
    r.min_projection = 1.0;
    const auto& proj = *rec.projections();
    for (std::size_t p = 0; p < proj.pairs().size(); ++p) {
      r.projection_coverage.push_back(proj.coverage(p, D));
      r.min_projection = std::min(r.min_projection, r.projection_coverage.back());
    }
    r.full_cells_hit = rec.full()->hits(D);
    r.full_cells_total = rec.full()->cells_total();
    r.full_coverage = rec.full()->coverage(D);
    out.push_back(std::move(r));
  }
  return out;
}

namespace detail {

inline bool dense_enough(const std::vector<CoverageRung>& rungs, std::size_t n, const CertifyOptions& opt) {
  if (rungs.empty()) return false;
  const auto& top = rungs.back();
  if (top.min_projection < opt.dense_projection) return false;
  return n > opt.full_grid_max_n || top.full_coverage >= opt.dense_full;
}

inline bool plateaued(const std::vector<CoverageRung>& rungs, const CertifyOptions& opt) {
  if (rungs.size() < opt.plateau_rungs || opt.plateau_rungs == 0) return false;
  const auto& last = rungs.back();
  const auto& first = rungs[rungs.size() - opt.plateau_rungs];
  return last.full_coverage - first.full_coverage < opt.plateau_growth && last.full_coverage < opt.plateau_ceiling;
}

}  // namespace detail

inline CertifyReport certify_hypercyclic(const GeneratorFamily& family, const CertifyOptions& opt = {}) {
  CertifyReport rep;
  rep.normal_form = build_normal_form(family, opt.normal_form);
  rep.structure = rank_condition(rep.normal_form, opt.structure);
  rep.v0 = reference_frame(rep.normal_form).v0();
  if (!rep.structure.pass) {
    rep.verdict = Verdict::NotHypercyclic;
    rep.reason = rep.structure.obstruction;
    return rep;
  }
  rep.rungs = coverage_ladder(family, rep.v0, opt);
  if (detail::dense_enough(rep.rungs, family.dim(), opt)) {
    rep.verdict = Verdict::EmpiricallyHypercyclic;
    rep.reason = "v0 orbit covers the grid";
  } else if (detail::plateaued(rep.rungs, opt)) {
    rep.verdict = Verdict::NotHypercyclic;
    rep.reason = "structure: v0 orbit coverage plateaus at " + std::to_string(rep.rungs.back().full_coverage);
  } else {
    rep.verdict = Verdict::Inconclusive;
    rep.reason = "coverage neither dense nor plateaued";
  }
  return rep;
}

struct BasisProbeReport {
  std::size_t i0 = 0;  // 1-based index of the chosen basis vector
  Verdict verdict = Verdict::Inconclusive;
  std::vector<CoverageRung> rungs;
};

// Picks the first basis vector with a nonzero first coordinate and runs the
// coverage ladder on its orbit. A single non-dense orbit proves nothing, so
// the verdict is EmpiricallyHypercyclic or Inconclusive.
inline BasisProbeReport basis_jset_probe(const GeneratorFamily& family, const std::vector<ComplexVector>& basis,
                                         const CertifyOptions& opt = {}) {
  const std::vector<std::size_t> single{family.dim()};
  for (std::size_t j = 0; j < family.size(); ++j)
    if (!is_in_k(family[j], single, opt.structure.structure_tol).ok)
      throw Error(ErrorCode::NotTriangularForm, "generator " + std::to_string(j + 1) + " is not in T_n form");
  if (basis.size() != family.dim()) throw Error(ErrorCode::DimensionMismatch, "basis must have n vectors");
  BasisProbeReport rep;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    if (static_cast<std::size_t>(basis[i].size()) != family.dim())
      throw Error(ErrorCode::DimensionMismatch, "basis vector length differs from dimension");
    if (basis[i](0) != Complex(0.0, 0.0)) {
      rep.i0 = i + 1;
      break;
    }
  }
  if (rep.i0 == 0) throw Error(ErrorCode::NoBasisVectorInU, "no basis vector has a nonzero first coordinate");
  rep.rungs = coverage_ladder(family, basis[rep.i0 - 1], opt);
  rep.verdict = detail::dense_enough(rep.rungs, family.dim(), opt) ? Verdict::EmpiricallyHypercyclic
                                                                  : Verdict::Inconclusive;
  return rep;
}

}  // namespace hypercyc
