#pragma once

// Numerical J-set membership: the smallest distance from y to the image
// W B(x, delta) over the words W of a budget with M <= degree <= D.
//
// Diagonal families without zero entries use an exact branch and bound over
// the exponents; everything else is scanned word by word.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "hypercyc/core_algebra.hpp"
#include "hypercyc/kernel.hpp"
#include "hypercyc/parallel.hpp"
#include "hypercyc/words.hpp"

namespace hypercyc {

struct JsetScore {
  ComplexVector x;
  ComplexVector y;
  double delta = 0.0;
  Word best_word;
  double best_distance = std::numeric_limits<double>::infinity();
  WordBudget budget;
  std::uint64_t words_evaluated = 0;  // kernel evaluations actually performed
};

struct JsetOptions {
  // First search radius of the branch and bound; 0 picks 1e-3 (1 + |y|).
  // Only affects speed: the result is the exact minimum either way.
  double initial_radius = 0.0;
  Tolerances tol{};
};

namespace detail {

inline void offer(JsetScore& s, const Word& w, double d) {
  if (d < s.best_distance || (d == s.best_distance && (s.best_word.size() == 0 || precedes(w, s.best_word)))) {
    s.best_distance = d;
    s.best_word = w;
  }
}

class DiagonalJsetSearch {
 public:
  DiagonalJsetSearch(const GeneratorFamily& family, const ComplexVector& x, const ComplexVector& y, double delta,
                     const WordBudget& budget, JsetScore& out)
      : n_(family.dim()), p_(family.size()), D_(budget.max_total_degree), M_(budget.min_total_degree),
        delta_(delta), out_(out) {
    const auto& logs = family.log_diagonals();
    for (std::size_t l = 0; l < n_; ++l) {
      const Complex xl = x(static_cast<Eigen::Index>(l)), yl = y(static_cast<Eigen::Index>(l));
      xs_.push_back(xl);
      ys_.push_back(yl);
      ax_.push_back(std::abs(xl));
      ay_.push_back(std::abs(yl));
      argx_.push_back(safe_arg(xl));
      argy_.push_back(safe_arg(yl));
    }
    // Order: generators with a nonzero argument first, then by the number of
    // coordinates where both modulus bounds can apply, then by index.
    std::vector<std::size_t> idx(p_);
    for (std::size_t j = 0; j < p_; ++j) idx[j] = j;
    auto rotates = [&](std::size_t j) {
      for (double a : logs[j].args)
        if (a != 0.0) return true;
      return false;
    };
    auto two_sided = [&](std::size_t j) {
      int c = 0;
      for (std::size_t l = 0; l < n_; ++l)
        if (ax_[l] > delta_ && ay_[l] > 0.0 && logs[j].log_moduli[l] != 0.0) ++c;
      return c;
    };
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      const bool ra = rotates(a), rb = rotates(b);
      if (ra != rb) return ra;
      return two_sided(a) > two_sided(b);
    });
    order_ = idx;
    for (auto j : order_) {
      lam_.push_back(logs[j].log_moduli);
      phi_.push_back(logs[j].args);
    }
    cmin_.assign(p_ + 1, std::vector<double>(n_, 0.0));
    cmax_.assign(p_ + 1, std::vector<double>(n_, 0.0));
    still_rotating_.assign(p_ + 1, std::vector<bool>(n_, false));
    for (std::size_t lv = p_; lv-- > 0;)
      for (std::size_t l = 0; l < n_; ++l) {
        const bool has_next = lv + 1 < p_;
        cmin_[lv][l] = std::min(cmin_[lv + 1][l], has_next ? lam_[lv + 1][l] : 0.0);
        cmax_[lv][l] = std::max(cmax_[lv + 1][l], has_next ? lam_[lv + 1][l] : 0.0);
        still_rotating_[lv][l] = still_rotating_[lv + 1][l] || (has_next && phi_[lv + 1][l] != 0.0);
      }
    // Monotone last level: the last generator only moves coordinates where
    // x is zero, and only outward.
    monotone_last_ = true;
    for (std::size_t l = 0; l < n_; ++l) {
      const bool moves = lam_.back()[l] != 0.0 || phi_.back()[l] != 0.0;
      if (moves && (xs_[l] != Complex(0.0, 0.0) || lam_.back()[l] < 0.0)) monotone_last_ = false;
    }
    exps_.assign(p_, 0);
    word_.assign(p_, 0);
    plog_.assign(n_, 0.0);
    parg_.assign(n_, 0.0);
    wlog_.resize(n_);
    warg_.resize(n_);
  }

  void run(double tau) {
    tau_ = tau;
    descend(0, 0);
  }

 private:
  double bound() const { return std::min(out_.best_distance, tau_); }

  double evaluate(std::size_t lv, std::uint64_t k) {
    for (std::size_t l = 0; l < n_; ++l) {
      wlog_[l] = plog_[l] + static_cast<double>(k) * lam_[lv][l];
      warg_[l] = parg_[l] + static_cast<double>(k) * phi_[lv][l];
    }
    ++out_.words_evaluated;
    return diag_ball_distance(wlog_.data(), warg_.data(), xs_.data(), ys_.data(), n_, delta_);
  }

  void record(std::size_t lv, std::uint64_t k, double d) {
    exps_[lv] = static_cast<std::uint32_t>(k);
    for (std::size_t i = 0; i < p_; ++i) word_[order_[i]] = exps_[i];
    offer(out_, Word(word_), d);
    exps_[lv] = 0;
  }

  // Exponent range at level lv allowed by the per-coordinate modulus bounds
  // for distance <= b. Loosened by a small slack, never tightened.
  bool k_range(std::size_t lv, std::uint32_t used, double b, std::uint64_t& kmin, std::uint64_t& kmax) const {
    const double rem = static_cast<double>(D_ - used);
    double lo = 0.0, hi = rem;
    auto apply = [&](double c, double r, bool upper) {
      // upper: c k <= r, otherwise c k >= r.
      const double slack = 1e-9 * (1.0 + std::abs(r));
      if (!upper) {
        c = -c;
        r = -r;
      }
      if (c > 1e-300) hi = std::min(hi, std::floor((r + slack) / c));
      else if (c < -1e-300) lo = std::max(lo, std::ceil((r + slack) / c));
      else if (r < -slack) lo = hi + 1.0;
    };
    for (std::size_t l = 0; l < n_; ++l) {
      if (ax_[l] > delta_) {
        const double up = std::log(ay_[l] + b) - std::log(ax_[l] - delta_);
        apply(lam_[lv][l] - cmin_[lv][l], up - plog_[l] - rem * cmin_[lv][l], true);
      }
      if (ay_[l] > b) {
        const double dn = std::log(ay_[l] - b) - std::log(ax_[l] + delta_);
        apply(lam_[lv][l] - cmax_[lv][l], dn - plog_[l] - rem * cmax_[lv][l], false);
      }
    }
    if (lv + 1 == p_ && M_ > used) lo = std::max(lo, static_cast<double>(M_ - used));
    if (!(lo <= hi)) return false;
    kmin = static_cast<std::uint64_t>(std::max(0.0, lo));
    kmax = static_cast<std::uint64_t>(std::min(rem, hi));
    return kmin <= kmax;
  }

  // Argument test on coordinates whose argument is final after level lv.
  bool args_ok(std::size_t lv, std::uint64_t k, double b) const {
    for (std::size_t l = 0; l < n_; ++l) {
      if (still_rotating_[lv][l] || !(ax_[l] > delta_) || !(ay_[l] > b)) continue;
      const double half = std::asin(delta_ / ax_[l]) + std::asin(b / ay_[l]);
      if (half >= std::numbers::pi) continue;
      const double a = parg_[l] + static_cast<double>(k) * phi_[lv][l] + argx_[l] - argy_[l];
      if (std::abs(wrap_angle(a)) > half * (1.0 + 1e-9) + 1e-12) return false;
    }
    return true;
  }

  void descend(std::size_t lv, std::uint32_t used) {
    std::uint64_t kmin = 0, kmax = 0;
    if (!k_range(lv, used, bound(), kmin, kmax)) return;
    if (lv + 1 == p_) {
      leaf(lv, kmin, kmax);
      return;
    }
    const std::vector<double> save_log = plog_, save_arg = parg_;
    for (std::uint64_t k = kmin; k <= kmax; ++k) {
      if (!args_ok(lv, k, bound())) continue;
      // The range may shrink as the incumbent improves.
      std::uint64_t a = 0, z = 0;
      if (!k_range(lv, used, bound(), a, z) || k > z) break;
      if (k < a) continue;
      for (std::size_t l = 0; l < n_; ++l) {
        plog_[l] = save_log[l] + static_cast<double>(k) * lam_[lv][l];
        parg_[l] = save_arg[l] + static_cast<double>(k) * phi_[lv][l];
      }
      exps_[lv] = static_cast<std::uint32_t>(k);
      descend(lv + 1, used + static_cast<std::uint32_t>(k));
      plog_ = save_log;
      parg_ = save_arg;
    }
    exps_[lv] = 0;
  }

  void leaf(std::size_t lv, std::uint64_t kmin, std::uint64_t kmax) {
    if (monotone_last_) {
      // Distance is nonincreasing in k here: take the smallest k attaining
      // the value at kmax.
      const double dmax = evaluate(lv, kmax);
      std::uint64_t lo = kmin, hi = kmax;
      while (lo < hi) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        if (evaluate(lv, mid) <= dmax) hi = mid;
        else lo = mid + 1;
      }
      record(lv, lo, lo == kmax ? dmax : evaluate(lv, lo));
      return;
    }
    for (std::uint64_t k = kmin; k <= kmax; ++k) {
      const double b = bound();
      if (!args_ok(lv, k, b)) continue;
      const double d = evaluate(lv, k);
      if (d <= b) record(lv, k, d);
    }
  }

  std::size_t n_, p_;
  std::uint32_t D_, M_;
  double delta_;
  JsetScore& out_;
  double tau_ = 0.0;
  std::vector<Complex> xs_, ys_;
  std::vector<double> ax_, ay_, argx_, argy_;
  std::vector<std::size_t> order_;
  std::vector<std::vector<double>> lam_, phi_, cmin_, cmax_;
  std::vector<std::vector<bool>> still_rotating_;
  bool monotone_last_ = false;
  std::vector<std::uint32_t> exps_, word_;
  std::vector<double> plog_, parg_, wlog_, warg_;
};

// Word-by-word scan; parallel within each degree, merged in word order.
inline void brute_force_jset(const GeneratorFamily& family, const ComplexVector& x, const ComplexVector& y,
                             double delta, const WordBudget& budget, const Tolerances& tol, JsetScore& out) {
  const std::size_t p = family.size(), n = family.dim();
  const bool diagonal = family.is_diagonal();
  std::optional<PowerCache> cache;
  if (!diagonal && budget.max_total_degree <= 2048) cache.emplace(family, budget.max_total_degree, tol);
  std::vector<Complex> xs(n), ys(n);
  for (std::size_t l = 0; l < n; ++l) {
    xs[l] = x(static_cast<Eigen::Index>(l));
    ys[l] = y(static_cast<Eigen::Index>(l));
  }
  auto distance = [&](const Word& w) {
    if (diagonal) {
      std::vector<double> lw(n, 0.0), aw(n, 0.0);
      const auto& logs = family.log_diagonals();
      for (std::size_t l = 0; l < n; ++l)
        for (std::size_t j = 0; j < p; ++j) {
          if (w[j] == 0) continue;
          lw[l] += static_cast<double>(w[j]) * logs[j].log_moduli[l];
          aw[l] += static_cast<double>(w[j]) * logs[j].args[l];
        }
      return diag_ball_distance(lw.data(), aw.data(), xs.data(), ys.data(), n, delta);
    }
    bool sat = false;
    const ComplexMatrix m = cache ? cache->matrix(w, sat, tol.saturation) : word_matrix(family, w, sat, tol);
    if (sat) return std::numeric_limits<double>::infinity();
    return distance_to_ball_image(m, x, delta, y).distance;
  };
  std::uint64_t left = budget.max_words.value_or(std::numeric_limits<std::uint64_t>::max());
  for (std::uint32_t d = budget.min_total_degree; d <= budget.max_total_degree && left > 0; ++d) {
    std::vector<Word> words = words_with_degree(p, d);
    if (words.size() > left) words.resize(static_cast<std::size_t>(left));
    left -= words.size();
    std::vector<JsetScore> partial(thread_count());
    const std::size_t used = parallel_chunks(
        words.size(),
        [&](std::size_t c, std::size_t b, std::size_t e) {
          for (std::size_t i = b; i < e; ++i) offer(partial[c], words[i], distance(words[i]));
        },
        64);
    for (std::size_t c = 0; c < used; ++c)
      if (partial[c].best_word.size() > 0) offer(out, partial[c].best_word, partial[c].best_distance);
    out.words_evaluated += words.size();
  }
}

}  // namespace detail

inline JsetScore jset_score(const GeneratorFamily& family, const ComplexVector& x, const ComplexVector& y,
                            double delta, const WordBudget& budget, const JsetOptions& opt = {}) {
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "J-set scoring needs delta > 0");
  if (budget.min_total_degree < 1)
    throw Error(ErrorCode::InvalidArgument, "J-set scoring needs min_total_degree >= 1");
  if (static_cast<std::size_t>(x.size()) != family.dim() || static_cast<std::size_t>(y.size()) != family.dim())
    throw Error(ErrorCode::DimensionMismatch, "vector length differs from dimension");
  budget.validate();
  check_budget(family.size(), budget);
  JsetScore out;
  out.x = x;
  out.y = y;
  out.delta = delta;
  out.budget = budget;

  bool zero_entry = false;
  if (family.is_diagonal())
    for (const auto& d : family.log_diagonals()) zero_entry = zero_entry || d.has_zero();
  const std::uint64_t count = word_count(family.size(), budget.min_total_degree, budget.max_total_degree);
  const bool truncated = budget.max_words && count > *budget.max_words;
  if (!family.is_diagonal() || zero_entry || truncated) {
    detail::brute_force_jset(family, x, y, delta, budget, opt.tol, out);
    return out;
  }

  // Incumbent: the first word of the budget.
  std::vector<std::uint32_t> first(family.size(), 0);
  first[0] = budget.min_total_degree;
  {
    WordBudget one = budget;
    one.max_total_degree = budget.min_total_degree;
    one.max_words = 1;
    one.cap = CapStrategy::Truncate;
    detail::brute_force_jset(family, x, y, delta, one, opt.tol, out);
  }
  detail::DiagonalJsetSearch search(family, x, y, delta, budget, out);
  double tau = opt.initial_radius > 0.0 ? opt.initial_radius : 1e-3 * (1.0 + y.norm());
  while (true) {
    search.run(tau);
    if (out.best_distance <= tau) break;
    tau *= 8.0;
  }
  return out;
}

// Scores for several targets from one source, in target order.
inline std::vector<JsetScore> jset_scores(const GeneratorFamily& family, const ComplexVector& x,
                                          const std::vector<ComplexVector>& targets, double delta,
                                          const WordBudget& budget, const JsetOptions& opt = {}) {
  return parallel_map<JsetScore>(targets.size(),
                                 [&](std::size_t i) { return jset_score(family, x, targets[i], delta, budget, opt); });
}

}  // namespace hypercyc
