#pragma once

// The diagonal family B = b I_n, A_k = diag(a, ..., a, 1, a, ..., a): J-dense
// at every e_k, yet its orbits stay on the lines x_i / x_n in a^Z.
// Includes the grid search for a dense pair (a, b) and the explicit witness
// sequence B_m = A_s^i B^j A_k^j.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "hypercyc/certify.hpp"
#include "hypercyc/coverage.hpp"
#include "hypercyc/jset.hpp"
#include "hypercyc/parallel.hpp"

namespace hypercyc {

struct DensePair {
  Complex a;
  Complex b;
  double score = 0.0;          // band coverage of {a^k b^l}
  std::uint64_t pairs_used = 0;
  Grid grid{2.0, 0.1};
};

inline void check_pair_moduli(Complex a, Complex b) {
  const double ma = std::abs(a), mb = std::abs(b);
  if (!(ma > 1.0)) throw Error(ErrorCode::InvalidArgument, "dense pair needs |a| > 1");
  if (!(mb < 1.0 && mb * ma > 1.0)) throw Error(ErrorCode::InvalidArgument, "dense pair needs 1/|a| < |b| < 1");
}

// Coverage of {a^k b^l : 0 <= k, l <= K}, computed in the log domain.
inline double pair_density_score(Complex a, Complex b, std::uint32_t K, Grid grid = {}) {
  if (!(std::abs(a) > 1.0) || !(std::abs(b) < 1.0))
    throw Error(ErrorCode::InvalidArgument, "pair score needs |a| > 1 > |b|");
  const std::uint32_t cells = grid.cells_per_axis();
  std::vector<bool> hit(static_cast<std::size_t>(cells) * cells, false);
  const double la = std::log(std::abs(a)), pa = safe_arg(a);
  const double lb = b == Complex(0.0) ? -std::numeric_limits<double>::infinity() : std::log(std::abs(b));
  const double pb = safe_arg(b);
  const double cap = std::log(grid.R * std::sqrt(2.0));
  std::uint64_t count = 0;
  for (std::uint32_t l = 0; l <= K; ++l)
    for (std::uint32_t k = 0; k <= K; ++k) {
      const double lm = k * la + (l == 0 ? 0.0 : l * lb);
      if (lm > cap) break;
      const Complex z = std::polar(std::exp(lm), k * pa + l * pb);
      const std::int64_t i = grid.cell(z.real()), j = grid.cell(z.imag());
      if (i < 0 || j < 0) continue;
      auto&& slot = hit[static_cast<std::size_t>(i) * cells + static_cast<std::size_t>(j)];
      if (!slot) {
        slot = true;
        ++count;
      }
    }
  return static_cast<double>(count) / static_cast<double>(hit.size());
}

struct BandScore {
  double coverage = 0.0;
  std::uint64_t pairs = 0;
};

// Coverage from the first max_pairs pairs (k, l) whose product has modulus
// in [h/2, R sqrt 2], taken l-major with k ascending. Nested budgets give
// nested pair sets, so the score is monotone in max_pairs.
inline BandScore pair_band_score(Complex a, Complex b, std::uint64_t max_pairs, Grid grid = {}) {
  check_pair_moduli(a, b);
  const std::uint32_t cells = grid.cells_per_axis();
  std::vector<bool> hit(static_cast<std::size_t>(cells) * cells, false);
  const double la = std::log(std::abs(a)), pa = safe_arg(a);
  const double lb = std::log(std::abs(b)), pb = safe_arg(b);
  const double lo = std::log(0.5 * grid.h), hi = std::log(grid.R * std::sqrt(2.0));
  BandScore s;
  std::uint64_t count = 0;
  for (std::uint64_t l = 0; s.pairs < max_pairs; ++l) {
    const double base = static_cast<double>(l) * lb;
    const double kmin = std::max(0.0, std::ceil((lo - base) / la - 1e-12));
    const double kmax = std::floor((hi - base) / la + 1e-12);
    for (double k = kmin; k <= kmax && s.pairs < max_pairs; ++k) {
      const Complex z = std::polar(std::exp(k * la + base), k * pa + static_cast<double>(l) * pb);
      ++s.pairs;
      const std::int64_t i = grid.cell(z.real()), j = grid.cell(z.imag());
      if (i < 0 || j < 0) continue;
      auto&& slot = hit[static_cast<std::size_t>(i) * cells + static_cast<std::size_t>(j)];
      if (!slot) {
        slot = true;
        ++count;
      }
    }
  }
  s.coverage = static_cast<double>(count) / static_cast<double>(hit.size());
  return s;
}

struct DensePairSearch {
  std::size_t n_rho = 24;
  std::size_t n_theta = 64;
  std::uint64_t max_pairs = 10000;
  double target = 0.9;
  Grid grid{2.0, 0.1};
};

// Scans b = rho e^{i theta}, rho from just below 1 down towards 1/|a|,
// theta in (0, pi); returns the first b reaching the target. The theta grid
// is offset by the golden-ratio fraction: for theta in pi Q the arguments of
// b^l form a finite set and {a^k b^l} cannot be dense when a is real.
inline DensePair find_dense_pair(Complex a, const DensePairSearch& s = {}) {
  const double ma = std::abs(a);
  if (!(ma > 1.0)) throw Error(ErrorCode::InvalidArgument, "dense pair search needs |a| > 1");
  double best = -1.0, best_rho = 0.0, best_theta = 0.0;
  const double offset = (std::sqrt(5.0) - 1.0) / 2.0;
  for (std::size_t ir = s.n_rho; ir-- > 0;) {
    const double rho = 1.0 / ma + (1.0 - 1.0 / ma) * (static_cast<double>(ir) + 0.5) / static_cast<double>(s.n_rho);
    const auto scores = parallel_map<BandScore>(s.n_theta, [&](std::size_t it) {
      const double theta = std::numbers::pi * (static_cast<double>(it) + offset) / static_cast<double>(s.n_theta);
      return pair_band_score(a, std::polar(rho, theta), s.max_pairs, s.grid);
    });
    for (std::size_t it = 0; it < s.n_theta; ++it) {
      const double theta = std::numbers::pi * (static_cast<double>(it) + offset) / static_cast<double>(s.n_theta);
      if (scores[it].coverage > best) {
        best = scores[it].coverage;
        best_rho = rho;
        best_theta = theta;
      }
      if (scores[it].coverage >= s.target) {
        DensePair p;
        p.a = a;
        p.b = std::polar(rho, theta);
        p.score = scores[it].coverage;
        p.pairs_used = scores[it].pairs;
        p.grid = s.grid;
        return p;
      }
    }
  }
  throw NoPairFoundError(best, best_rho, best_theta);
}

struct CounterexampleFamily {
  std::size_t n = 0;
  Complex a, b;
  GeneratorFamily family;           // (B, A_1, ..., A_n)
  std::vector<std::string> labels;  // "B", "A1", ...
};

inline CounterexampleFamily build_counterexample(std::size_t n, Complex a, Complex b) {
  if (n < 2) throw Error(ErrorCode::BadDimension, "the construction needs n >= 2");
  check_pair_moduli(a, b);
  const auto N = static_cast<Eigen::Index>(n);
  std::vector<ComplexMatrix> gens{b * ComplexMatrix::Identity(N, N)};
  CounterexampleFamily out;
  out.labels.push_back("B");
  for (Eigen::Index k = 0; k < N; ++k) {
    ComplexMatrix d = ComplexMatrix::Zero(N, N);
    for (Eigen::Index l = 0; l < N; ++l) d(l, l) = l == k ? Complex(1.0) : a;
    gens.push_back(d);
    out.labels.push_back("A" + std::to_string(k + 1));
  }
  out.n = n;
  out.a = a;
  out.b = b;
  out.family = verify_commuting(gens);
  return out;
}

inline CounterexampleFamily build_counterexample(std::size_t n, const DensePair& pair) {
  return build_counterexample(n, pair.a, pair.b);
}

namespace detail {

inline double line_residual(double log_ratio, double arg_ratio, Complex a) {
  const double la = std::log(std::abs(a));
  const double t = log_ratio / la;
  const double m = std::round(t);
  return std::abs(t - m) + std::abs(wrap_angle(arg_ratio - m * safe_arg(a))) / la;
}

}  // namespace detail

// max over i < n of the distance of log(x_i / x_n) / log a to the integers:
// |Re - nearest integer m| plus the argument mismatch against m arg a,
// scaled by 1 / log|a|.
inline double verify_line_structure(const LogVector& x, Complex a) {
  const std::size_t n = x.size();
  for (std::size_t l = 0; l < n; ++l)
    if (std::isinf(x.log_moduli[l]) && x.log_moduli[l] < 0)
      throw Error(ErrorCode::ZeroCoordinate, "coordinate " + std::to_string(l + 1) + " is zero");
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i)
    worst = std::max(worst, detail::line_residual(x.log_moduli[i] - x.log_moduli[n - 1], x.args[i] - x.args[n - 1], a));
  return worst;
}

inline double verify_line_structure(const ComplexVector& x, Complex a) {
  LogVector lv;
  for (Eigen::Index l = 0; l < x.size(); ++l) {
    const double m = std::abs(x(l));
    lv.log_moduli.push_back(m == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(m));
    lv.args.push_back(safe_arg(x(l)));
  }
  return verify_line_structure(lv, a);
}

// One step of the witness sequence for target y and slot k (0-based).
struct WitnessStep {
  std::uint32_t i = 0, j = 0;       // B_m = A_s^i B^j A_k^j
  Complex a_mk;                     // a^i b^j, the k-th diagonal entry of B_m
  std::vector<double> log_moduli;   // log |a_{m,l}| for every l
  double x_distance = 0.0;          // |x_m - e_k|, underflows to 0 quickly
  double log_x_distance = 0.0;      // log |x_m - e_k|
  double image_error = 0.0;         // max_l |(B_m x_m)_l - expected_l| / |expected_l|
};

struct WitnessReport {
  std::size_t k = 0, s = 0;  // 0-based
  ComplexVector y;
  std::vector<WitnessStep> steps;
  double max_image_error = 0.0;
  bool growth_ok = false;       // |a_{m,l}| strictly increasing for l != k
  bool converges = false;       // every step found and log |x_m - e_k| strictly decreasing
};

// Finds j_1 < j_2 < ... with |a^{i_m} b^{j_m} - y_k| < |y_k| 2^{-m} and
// checks B_m x_m = (y_1, ..., a_{m,k}, ..., y_n) coordinate by coordinate.
inline WitnessReport witness_sequence(const CounterexampleFamily& cex, std::size_t k, const ComplexVector& y,
                                      std::size_t steps = 6, std::uint32_t max_j = 2000000) {
  const std::size_t n = cex.n;
  if (k >= n || static_cast<std::size_t>(y.size()) != n) throw Error(ErrorCode::DimensionMismatch, "bad witness slot");
  WitnessReport rep;
  rep.k = k;
  rep.s = k == 0 ? 1 : 0;
  rep.y = y;
  const Complex yk = y(static_cast<Eigen::Index>(k));
  if (yk == Complex(0.0)) throw Error(ErrorCode::ZeroCoordinate, "target slot is zero");
  const double la = std::log(std::abs(cex.a)), lb = std::log(std::abs(cex.b));
  const double pa = safe_arg(cex.a), pb = safe_arg(cex.b);
  const double ly = std::log(std::abs(yk));
  std::uint32_t j = 0;
  for (std::size_t m = 1; m <= steps; ++m) {
    const double eps = std::abs(yk) * std::ldexp(1.0, -static_cast<int>(m));
    bool found = false;
    while (!found && j < max_j) {
      ++j;
      const double i0 = std::round((ly - j * lb) / la);
      if (i0 < 0.0) continue;
      const auto i = static_cast<std::uint32_t>(i0);
      const Complex z = std::polar(std::exp(i * la + j * lb), i * pa + j * pb);
      if (std::abs(z - yk) < eps) {
        WitnessStep st;
        st.i = i;
        st.j = j;
        // B_m in word form (B, A_1, ..., A_n) and its diagonal in log form.
        std::vector<std::uint32_t> e(n + 1, 0);
        e[0] = j;
        e[rep.s + 1] += i;
        e[k + 1] += j;
        const LogVector diagonal = word_apply_log(cex.family, Word(e), ComplexVector::Ones(static_cast<Eigen::Index>(n)));
        st.log_moduli = diagonal.log_moduli;
        st.a_mk = std::polar(std::exp(diagonal.log_moduli[k]), diagonal.args[k]);
        // x_{m,l} = y_l / a_{m,l} (l != k), 1 at k; image computed in the log domain.
        std::vector<double> lxs;
        for (std::size_t l = 0; l < n; ++l) {
          const Complex yl = y(static_cast<Eigen::Index>(l));
          Complex expected, image;
          if (l == k) {
            expected = st.a_mk;
            image = st.a_mk * Complex(1.0);
          } else {
            const double lx = std::log(std::abs(yl)) - diagonal.log_moduli[l];
            const double ax = safe_arg(yl) - diagonal.args[l];
            lxs.push_back(lx);
            expected = yl;
            image = std::polar(std::exp(lx + diagonal.log_moduli[l]), ax + diagonal.args[l]);
          }
          st.image_error = std::max(st.image_error, std::abs(image - expected) / std::abs(expected));
        }
        const double top = *std::max_element(lxs.begin(), lxs.end());
        double sum = 0.0;
        for (double lx : lxs) sum += std::exp(2.0 * (lx - top));
        st.log_x_distance = top + 0.5 * std::log(sum);
        st.x_distance = std::exp(st.log_x_distance);
        rep.max_image_error = std::max(rep.max_image_error, st.image_error);
        rep.steps.push_back(std::move(st));
        found = true;
      }
    }
    if (!found) break;
  }
  rep.growth_ok = rep.steps.size() >= 2;
  for (std::size_t m = 1; m < rep.steps.size(); ++m)
    for (std::size_t l = 0; l < n; ++l)
      if (l != k && !(rep.steps[m].log_moduli[l] > rep.steps[m - 1].log_moduli[l])) rep.growth_ok = false;
  rep.converges = rep.steps.size() == steps;
  for (std::size_t m = 1; m < rep.steps.size(); ++m)
    if (!(rep.steps[m].log_x_distance < rep.steps[m - 1].log_x_distance)) rep.converges = false;
  return rep;
}

struct TheoremOptions {
  std::size_t targets_per_k = 100;
  std::uint64_t seed = 2024;
  double delta = 1e-2;
  std::uint32_t jset_max_degree = 40000;
  std::uint32_t jset_min_degree = 1;
  double jset_threshold = 1e-3;
  std::uint32_t line_max_degree = 30;  // u0-orbit words checked for line structure
  double line_threshold = 1e-9;
  CertifyOptions certify{};
  double orbit_coverage_ceiling = 0.05;
  std::size_t witness_targets = 3;
  std::size_t witness_steps = 6;
  double witness_tolerance = 1e-12;
};

struct TheoremReport {
  // (i) J-scores from e_k
  std::vector<std::vector<double>> jset_scores;  // [k][target]
  double jset_worst = 0.0;
  bool jset_pass = false;
  // (ii) certification of the u0 orbit
  CertifyReport certify;
  bool certify_pass = false;
  // (iii) line structure of the u0 orbit
  std::uint64_t line_points = 0;
  double line_worst = 0.0;
  bool line_pass = false;
  // (iv) witness sequences
  std::vector<WitnessReport> witnesses;
  bool witness_pass = false;

  bool pass() const { return jset_pass && certify_pass && line_pass && witness_pass; }
};

// Uniform targets in the box [-R, R]^{2n}.
inline std::vector<ComplexVector> box_targets(std::size_t n, std::size_t count, double R, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-R, R);
  std::vector<ComplexVector> out;
  for (std::size_t t = 0; t < count; ++t) {
    ComplexVector y(static_cast<Eigen::Index>(n));
    for (std::size_t l = 0; l < n; ++l) {
      const double re = u(rng);
      y(static_cast<Eigen::Index>(l)) = Complex(re, u(rng));
    }
    out.push_back(std::move(y));
  }
  return out;
}

inline TheoremReport reproduce_theorem(std::size_t n, const DensePair& pair, const TheoremOptions& opt = {}) {
  const CounterexampleFamily cex = build_counterexample(n, pair);
  const auto N = static_cast<Eigen::Index>(n);
  TheoremReport rep;

  const auto targets = box_targets(n, opt.targets_per_k, opt.certify.grid.R, opt.seed);
  WordBudget jb;
  jb.min_total_degree = opt.jset_min_degree;
  jb.max_total_degree = opt.jset_max_degree;
  JsetOptions jo;
  jo.initial_radius = opt.jset_threshold;
  rep.jset_pass = true;
  for (std::size_t k = 0; k < n; ++k) {
    const auto scores = jset_scores(cex.family, ComplexVector::Unit(N, static_cast<Eigen::Index>(k)), targets,
                                    opt.delta, jb, jo);
    std::vector<double> ds;
    for (const auto& s : scores) {
      ds.push_back(s.best_distance);
      rep.jset_worst = std::max(rep.jset_worst, s.best_distance);
    }
    rep.jset_scores.push_back(std::move(ds));
  }
  rep.jset_pass = rep.jset_worst < opt.jset_threshold;

  rep.certify = certify_hypercyclic(cex.family, opt.certify);
  rep.certify_pass = rep.certify.verdict == Verdict::NotHypercyclic && rep.certify.reason.rfind("structure", 0) == 0;
  for (const auto& r : rep.certify.rungs)
    if (!(r.full_coverage < opt.orbit_coverage_ceiling)) rep.certify_pass = false;

  WordBudget lb;
  lb.max_total_degree = opt.line_max_degree;
  const ComplexVector u0 = ComplexVector::Ones(N);
  for_each_word(cex.family.size(), lb, [&](const Word& w) {
    rep.line_worst = std::max(rep.line_worst, verify_line_structure(word_apply_log(cex.family, w, u0), cex.a));
    ++rep.line_points;
    return true;
  });
  rep.line_pass = rep.line_worst < opt.line_threshold;

  rep.witness_pass = true;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t t = 0; t < std::min(opt.witness_targets, targets.size()); ++t) {
      auto w = witness_sequence(cex, k, targets[t], opt.witness_steps);
      if (!(w.max_image_error < opt.witness_tolerance && w.growth_ok && w.converges)) rep.witness_pass = false;
      rep.witnesses.push_back(std::move(w));
    }
  return rep;
}

}  // namespace hypercyc
