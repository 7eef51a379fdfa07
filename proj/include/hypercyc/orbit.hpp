#pragma once

// Orbit clouds G(v) = {A v : A in G} over a word budget, CSV export, and the
// streaming coverage scan used by the certification ladder.

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "hypercyc/core_algebra.hpp"
#include "hypercyc/coverage.hpp"
#include "hypercyc/words.hpp"

namespace hypercyc {

struct OrbitCloud {
  std::size_t generators = 0;
  std::vector<Word> words;
  std::vector<ComplexVector> points;
  std::vector<bool> saturated;  // kept: a saturated point witnesses escape

  std::size_t size() const { return points.size(); }
};

inline OrbitCloud orbit_sample(const GeneratorFamily& family, const ComplexVector& v, const WordBudget& budget,
                               const Tolerances& tol = {}) {
  if (static_cast<std::size_t>(v.size()) != family.dim())
    throw Error(ErrorCode::DimensionMismatch, "vector length differs from dimension");
  OrbitCloud cloud;
  cloud.generators = family.size();
  if (budget.min_total_degree > budget.max_total_degree) return cloud;
  check_budget(family.size(), budget);
  const bool cached = !family.is_diagonal() && budget.max_total_degree <= 2048;
  std::optional<PowerCache> cache;
  if (cached) cache.emplace(family, budget.max_total_degree, tol);
  for_each_word(family.size(), budget, [&](const Word& w) {
    WordApplyResult r = cached ? cache->apply(w, v, tol.saturation) : word_apply(family, w, v, tol);
    cloud.words.push_back(w);
    cloud.points.push_back(std::move(r.value));
    cloud.saturated.push_back(r.saturated);
    return true;
  });
  return cloud;
}

// Header k1..kp, re1, im1, ..., saturated; numbers with 17 significant digits.
inline void write_cloud_csv(std::ostream& os, const OrbitCloud& cloud) {
  const std::size_t n = cloud.points.empty() ? 0 : static_cast<std::size_t>(cloud.points.front().size());
  for (std::size_t j = 0; j < cloud.generators; ++j) os << 'k' << j + 1 << ',';
  for (std::size_t l = 0; l < n; ++l) os << "re" << l + 1 << ",im" << l + 1 << ',';
  os << "saturated\n";
  char buf[64];
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (std::size_t j = 0; j < cloud.generators; ++j) os << cloud.words[i][j] << ',';
    for (std::size_t l = 0; l < n; ++l) {
      const Complex z = cloud.points[i](static_cast<Eigen::Index>(l));
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,", z.real(), z.imag());
      os << buf;
    }
    os << (cloud.saturated[i] ? 1 : 0) << '\n';
  }
}

struct OrbitScanOptions {
  Grid grid{2.0, 0.1};
  bool projections = true;
  bool full = true;
  std::uint32_t min_degree = 0;
  Tolerances tol{};
};

namespace detail {

// Depth-first scan of a diagonal family without zero entries. Only words
// whose image lies in the box are visited (|v_l| e^{L_l} <= R sqrt 2 is
// necessary), which is exact for coverage. When the last generator
// contracts every coordinate and the current point is within h/2 of the
// origin, later points can only land in the cells adjacent to the origin;
// the tail is cut once all those cells already carry a smaller first-hit
// degree.
class DiagonalOrbitScan {
 public:
  DiagonalOrbitScan(const GeneratorFamily& family, const ComplexVector& v, std::uint32_t max_degree,
                    const OrbitScanOptions& opt, CoverageRecorder& rec)
      : n_(family.dim()), p_(family.size()), D_(max_degree), M_(opt.min_degree), grid_(opt.grid), rec_(rec) {
    const auto& logs = family.log_diagonals();
    active_.assign(n_, false);
    for (std::size_t l = 0; l < n_; ++l) {
      const Complex vl = v(static_cast<Eigen::Index>(l));
      active_[l] = vl != Complex(0.0, 0.0);
      log_v_.push_back(active_[l] ? std::log(std::abs(vl)) : 0.0);
      arg_v_.push_back(active_[l] ? safe_arg(vl) : 0.0);
      hi_.push_back(std::log(grid_.R * std::sqrt(2.0)) - log_v_.back());
    }
    // Contracting generator (every active log-modulus <= 0) goes last.
    std::size_t last = p_;
    double best_max = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < p_; ++j) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t l = 0; l < n_; ++l)
        if (active_[l]) mx = std::max(mx, logs[j].log_moduli[l]);
      if (mx <= 0.0 && mx < best_max) {
        best_max = mx;
        last = j;
      }
    }
    contracting_last_ = last < p_;
    for (std::size_t j = 0; j < p_; ++j)
      if (j != last) order_.push_back(j);
    if (contracting_last_) order_.push_back(last);
    for (auto j : order_) {
      lam_.push_back(logs[j].log_moduli);
      phi_.push_back(logs[j].args);
    }
    // Hull of the generators after each level: min(0, lambda) per coordinate.
    cmin_.assign(p_ + 1, std::vector<double>(n_, 0.0));
    for (std::size_t lv = p_; lv-- > 0;)
      for (std::size_t l = 0; l < n_; ++l)
        cmin_[lv][l] = std::min(cmin_[lv + 1][l], lv + 1 < p_ ? lam_[lv + 1][l] : 0.0);
    // Candidate cells for points within h/2 of the origin, per real axis.
    const std::int64_t cz = grid_.cell(0.0);
    const std::int64_t top = static_cast<std::int64_t>(grid_.cells_per_axis()) - 1;
    for (std::size_t d = 0; d < 2 * n_; ++d) {
      std::vector<std::int64_t> c;
      if (!active_[d / 2]) {
        c.push_back(cz);
      } else {
        for (std::int64_t k = cz - 1; k <= cz + 1; ++k)
          if (k >= 0 && k <= top) c.push_back(k);
      }
      near_origin_.push_back(std::move(c));
    }
    partial_log_.assign(n_, 0.0);
    partial_arg_.assign(n_, 0.0);
  }

  void run() {
    if (M_ > D_) return;
    descend(0, 0);
  }

 private:
  // k range at level lv from the box constraint; false if empty.
  bool k_range(std::size_t lv, std::uint32_t used, std::uint64_t& kmin, std::uint64_t& kmax) const {
    const double rem = static_cast<double>(D_ - used);
    double lo = 0.0, hi = rem;
    for (std::size_t l = 0; l < n_; ++l) {
      if (!active_[l]) continue;
      const double c = lam_[lv][l] - cmin_[lv][l];
      const double r = hi_[l] - partial_log_[l] - rem * cmin_[lv][l];
      const double slack = 1e-9 * (1.0 + std::abs(r));
      if (c > 1e-300) {
        hi = std::min(hi, std::floor((r + slack) / c));
      } else if (c < -1e-300) {
        lo = std::max(lo, std::ceil((r + slack) / c));
      } else if (r < -slack) {
        return false;
      }
    }
    if (lv + 1 == order_.size() && M_ > used) lo = std::max(lo, static_cast<double>(M_ - used));
    if (!(lo <= hi)) return false;
    kmin = static_cast<std::uint64_t>(std::max(0.0, lo));
    kmax = static_cast<std::uint64_t>(std::min(rem, hi));
    return kmin <= kmax;
  }

  void descend(std::size_t lv, std::uint32_t used) {
    std::uint64_t kmin = 0, kmax = 0;
    if (!k_range(lv, used, kmin, kmax)) return;
    if (lv + 1 == order_.size()) {
      leaf(lv, used, kmin, kmax);
      return;
    }
    const std::vector<double> save_log = partial_log_, save_arg = partial_arg_;
    for (std::uint64_t k = kmin; k <= kmax; ++k) {
      for (std::size_t l = 0; l < n_; ++l) {
        partial_log_[l] = save_log[l] + static_cast<double>(k) * lam_[lv][l];
        partial_arg_[l] = save_arg[l] + static_cast<double>(k) * phi_[lv][l];
      }
      descend(lv + 1, used + static_cast<std::uint32_t>(k));
    }
    partial_log_ = save_log;
    partial_arg_ = save_arg;
  }

  void leaf(std::size_t lv, std::uint32_t used, std::uint64_t kmin, std::uint64_t kmax) {
    ComplexVector z(static_cast<Eigen::Index>(n_));
    const bool cut_ok = contracting_last_;
    for (std::uint64_t k = kmin; k <= kmax; ++k) {
      bool tiny = true;
      for (std::size_t l = 0; l < n_; ++l) {
        if (!active_[l]) {
          z(static_cast<Eigen::Index>(l)) = 0.0;
          continue;
        }
        const double lm = log_v_[l] + partial_log_[l] + static_cast<double>(k) * lam_[lv][l];
        const double ar = arg_v_[l] + partial_arg_[l] + static_cast<double>(k) * phi_[lv][l];
        z(static_cast<Eigen::Index>(l)) = std::polar(std::exp(lm), ar);
        if (!(std::exp(lm) < 0.5 * grid_.h)) tiny = false;
      }
      const auto degree = static_cast<std::uint32_t>(used + k);
      rec_.add(z, degree, false);
      if (cut_ok && tiny && ((k - kmin) % 8 == 7) && rec_.all_hit_by(near_origin_, degree)) break;
    }
  }

  std::size_t n_, p_;
  std::uint32_t D_, M_;
  Grid grid_;
  CoverageRecorder& rec_;
  std::vector<bool> active_;
  std::vector<double> log_v_, arg_v_, hi_;
  std::vector<std::size_t> order_;
  bool contracting_last_ = false;
  std::vector<std::vector<double>> lam_, phi_, cmin_;
  std::vector<std::vector<std::int64_t>> near_origin_;
  std::vector<double> partial_log_, partial_arg_;
};

}  // namespace detail

// Streams every word of degree in [min_degree, max_degree] into a coverage
// recorder. Diagonal families without zero entries skip words whose image
// leaves the box (they cannot hit a cell); those words are not counted in
// the recorder's point totals.
inline CoverageRecorder scan_orbit(const GeneratorFamily& family, const ComplexVector& v, std::uint32_t max_degree,
                                   const OrbitScanOptions& opt = {}) {
  if (static_cast<std::size_t>(v.size()) != family.dim())
    throw Error(ErrorCode::DimensionMismatch, "vector length differs from dimension");
  CoverageRecorder rec(family.dim(), opt.grid, opt.projections, opt.full);
  bool zero_entry = false;
  if (family.is_diagonal())
    for (const auto& d : family.log_diagonals()) zero_entry = zero_entry || d.has_zero();
  if (family.is_diagonal() && !zero_entry) {
    detail::DiagonalOrbitScan scan(family, v, max_degree, opt, rec);
    scan.run();
    return rec;
  }
  WordBudget b;
  b.max_total_degree = max_degree;
  b.min_total_degree = opt.min_degree;
  if (b.min_total_degree > b.max_total_degree) return rec;
  const bool cached = !family.is_diagonal() && max_degree <= 2048;
  std::optional<PowerCache> cache;
  if (cached) cache.emplace(family, max_degree, opt.tol);
  for_each_word(family.size(), b, [&](const Word& w) {
    WordApplyResult r = cached ? cache->apply(w, v, opt.tol.saturation) : word_apply(family, w, v, opt.tol);
    rec.add(r.value, static_cast<std::uint32_t>(w.total_degree()), r.saturated);
    return true;
  });
  return rec;
}

}  // namespace hypercyc
