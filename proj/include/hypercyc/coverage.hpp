#pragma once

// Epsilon-grid coverage of point clouds in C^n viewed as R^{2n}
// (coordinates interleaved re1, im1, re2, im2, ...).
//
// Cells have side h on the closed box [-R, R]; a coordinate equal to R falls
// in the last cell. Accumulators remember the smallest word degree that hit
// each cell, so a single scan answers every rung of a budget ladder.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

#include "hypercyc/core_algebra.hpp"

namespace hypercyc {

struct Grid {
  double R = 2.0;
  double h = 0.1;

  std::uint32_t cells_per_axis() const {
    if (!(R > 0.0) || !(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "grid needs R > 0 and h > 0");
    const double c = 2.0 * R / h;
    const double rc = std::round(c);
    return static_cast<std::uint32_t>(std::abs(c - rc) < 1e-9 * c ? rc : std::ceil(c));
  }
  // Cell index along one axis, or -1 outside [-R, R].
  std::int64_t cell(double c) const {
    if (!(c >= -R && c <= R)) return -1;
    const auto cells = static_cast<std::int64_t>(cells_per_axis());
    auto i = static_cast<std::int64_t>(std::floor((c + R) / h));
    return std::min(i, cells - 1);
  }
};

struct DensityReport {
  double R = 0.0;
  double h = 0.0;
  std::size_t real_dims = 0;
  std::uint64_t cells_hit = 0;
  double cells_total = 0.0;  // may exceed 2^64 for sparse full grids
  double coverage = 0.0;
  std::uint64_t points_used = 0;
  std::uint64_t saturated = 0;
  std::uint64_t outside = 0;
};

inline double real_coord(const ComplexVector& v, std::size_t d) {
  const Complex z = v(static_cast<Eigen::Index>(d / 2));
  return d % 2 == 0 ? z.real() : z.imag();
}

constexpr double kMaxDenseCells = 1e8;

// Dense coverage of an explicit cloud; saturated points are ignored.
inline DensityReport box_coverage(const std::vector<ComplexVector>& cloud, const std::vector<bool>& saturated,
                                  double R, double h) {
  Grid g{R, h};
  const std::uint32_t cells = g.cells_per_axis();
  DensityReport rep;
  rep.R = R;
  rep.h = h;
  const std::size_t n = cloud.empty() ? 0 : static_cast<std::size_t>(cloud.front().size());
  rep.real_dims = 2 * n;
  rep.cells_total = std::pow(static_cast<double>(cells), static_cast<double>(rep.real_dims));
  if (rep.cells_total > kMaxDenseCells)
    throw Error(ErrorCode::GridTooLarge, "grid has " + std::to_string(rep.cells_total) + " cells");
  if (cloud.empty()) return rep;
  std::vector<bool> hit(static_cast<std::size_t>(rep.cells_total), false);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    ++rep.points_used;
    if (i < saturated.size() && saturated[i]) {
      ++rep.saturated;
      continue;
    }
    std::uint64_t key = 0;
    bool inside = true;
    for (std::size_t d = rep.real_dims; d-- > 0;) {
      const std::int64_t c = g.cell(real_coord(cloud[i], d));
      if (c < 0) {
        inside = false;
        break;
      }
      key = key * cells + static_cast<std::uint64_t>(c);
    }
    if (!inside) {
      ++rep.outside;
      continue;
    }
    if (!hit[key]) {
      hit[key] = true;
      ++rep.cells_hit;
    }
  }
  rep.coverage = static_cast<double>(rep.cells_hit) / rep.cells_total;
  return rep;
}

inline DensityReport box_coverage(const std::vector<ComplexVector>& cloud, double R, double h) {
  return box_coverage(cloud, {}, R, h);
}

// First-hit degree per cell on every 2-dimensional coordinate projection
// (pairs d1 < d2 of real coordinates), dense.
class ProjectionAccumulator {
 public:
  ProjectionAccumulator(std::size_t n, Grid g) : grid_(g), dims_(2 * n), cells_(g.cells_per_axis()) {
    for (std::size_t a = 0; a < dims_; ++a)
      for (std::size_t b = a + 1; b < dims_; ++b) pairs_.emplace_back(a, b);
    first_.assign(pairs_.size(), std::vector<std::uint32_t>(static_cast<std::size_t>(cells_) * cells_, kNever));
  }

  void add(const std::int64_t* cells, std::uint32_t degree) {
    for (std::size_t p = 0; p < pairs_.size(); ++p) {
      const std::int64_t a = cells[pairs_[p].first], b = cells[pairs_[p].second];
      if (a < 0 || b < 0) continue;
      auto& slot = first_[p][static_cast<std::size_t>(a) * cells_ + static_cast<std::size_t>(b)];
      slot = std::min(slot, degree);
    }
  }

  const std::vector<std::pair<std::size_t, std::size_t>>& pairs() const { return pairs_; }
  std::uint32_t first(std::size_t p, std::int64_t a, std::int64_t b) const {
    return first_[p][static_cast<std::size_t>(a) * cells_ + static_cast<std::size_t>(b)];
  }

  // Coverage of projection p counting hits with degree <= max_degree.
  double coverage(std::size_t p, std::uint32_t max_degree) const {
    std::uint64_t hit = 0;
    for (auto d : first_[p])
      if (d <= max_degree) ++hit;
    return static_cast<double>(hit) / static_cast<double>(first_[p].size());
  }

 private:
  static constexpr std::uint32_t kNever = std::numeric_limits<std::uint32_t>::max();
  Grid grid_;
  std::size_t dims_;
  std::uint32_t cells_;
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
  std::vector<std::vector<std::uint32_t>> first_;
};

// First-hit degree per occupied cell of the full 2n-dimensional grid,
// stored sparsely.
class FullGridAccumulator {
 public:
  FullGridAccumulator(std::size_t n, Grid g) : grid_(g), dims_(2 * n), cells_(g.cells_per_axis()) {
    const double bits = static_cast<double>(dims_) * std::log2(static_cast<double>(cells_));
    if (bits > 127.0) throw Error(ErrorCode::GridTooLarge, "full grid key exceeds 128 bits");
    total_ = std::pow(static_cast<double>(cells_), static_cast<double>(dims_));
  }

  void add(const std::int64_t* cells, std::uint32_t degree) {
    unsigned __int128 key = 0;
    for (std::size_t d = 0; d < dims_; ++d) {
      if (cells[d] < 0) return;
      key = key * cells_ + static_cast<unsigned __int128>(cells[d]);
    }
    auto [it, inserted] = first_.try_emplace(key, degree);
    if (!inserted) it->second = std::min(it->second, degree);
  }

  std::uint32_t first(const std::int64_t* cells) const {
    unsigned __int128 key = 0;
    for (std::size_t d = 0; d < dims_; ++d) key = key * cells_ + static_cast<unsigned __int128>(cells[d]);
    auto it = first_.find(key);
    return it == first_.end() ? std::numeric_limits<std::uint32_t>::max() : it->second;
  }
  double cells_total() const { return total_; }
  std::uint64_t hits(std::uint32_t max_degree) const {
    std::uint64_t h = 0;
    for (const auto& kv : first_)
      if (kv.second <= max_degree) ++h;
    return h;
  }
  double coverage(std::uint32_t max_degree) const { return static_cast<double>(hits(max_degree)) / total_; }

 private:
  struct KeyHash {
    std::size_t operator()(unsigned __int128 k) const {
      const auto lo = static_cast<std::uint64_t>(k), hi = static_cast<std::uint64_t>(k >> 64);
      return std::hash<std::uint64_t>{}(lo ^ (hi * 0x9e3779b97f4a7c15ULL));
    }
  };
  Grid grid_;
  std::size_t dims_;
  std::uint32_t cells_;
  double total_ = 0.0;
  std::unordered_map<unsigned __int128, std::uint32_t, KeyHash> first_;
};

// Feeds points into both accumulators.
class CoverageRecorder {
 public:
  CoverageRecorder(std::size_t n, Grid g, bool projections, bool full)
      : grid_(g), n_(n), cells_(2 * n) {
    if (projections && n >= 1) proj_.emplace(n, g);
    if (full) full_.emplace(n, g);
  }

  void add(const ComplexVector& v, std::uint32_t degree, bool saturated) {
    ++points_;
    if (saturated) {
      ++saturated_;
      return;
    }
    bool inside = true;
    for (std::size_t d = 0; d < 2 * n_; ++d) {
      cells_[d] = grid_.cell(real_coord(v, d));
      if (cells_[d] < 0) inside = false;
    }
    if (!inside) ++outside_;
    if (proj_) proj_->add(cells_.data(), degree);
    if (full_ && inside) full_->add(cells_.data(), degree);
  }

  // True if every cell formed from the per-axis candidates already has a
  // first-hit degree <= degree, in each enabled accumulator.
  bool all_hit_by(const std::vector<std::vector<std::int64_t>>& axis_cells, std::uint32_t degree) const {
    if (proj_) {
      for (std::size_t p = 0; p < proj_->pairs().size(); ++p) {
        const auto [a, b] = proj_->pairs()[p];
        for (auto ca : axis_cells[a])
          for (auto cb : axis_cells[b])
            if (proj_->first(p, ca, cb) > degree) return false;
      }
    }
    if (full_) {
      std::vector<std::size_t> idx(axis_cells.size(), 0);
      std::vector<std::int64_t> cell(axis_cells.size());
      while (true) {
        for (std::size_t d = 0; d < idx.size(); ++d) cell[d] = axis_cells[d][idx[d]];
        if (full_->first(cell.data()) > degree) return false;
        std::size_t d = 0;
        while (d < idx.size() && ++idx[d] == axis_cells[d].size()) idx[d++] = 0;
        if (d == idx.size()) break;
      }
    }
    return true;
  }

  const std::optional<ProjectionAccumulator>& projections() const { return proj_; }
  const std::optional<FullGridAccumulator>& full() const { return full_; }
  std::uint64_t points() const { return points_; }
  std::uint64_t saturated() const { return saturated_; }
  std::uint64_t outside() const { return outside_; }

 private:
  Grid grid_;
  std::size_t n_;
  std::vector<std::int64_t> cells_;
  std::optional<ProjectionAccumulator> proj_;
  std::optional<FullGridAccumulator> full_;
  std::uint64_t points_ = 0, saturated_ = 0, outside_ = 0;
};

}  // namespace hypercyc
