#pragma once

// Distance from a target y to the image W(B(x, delta)) of a closed ball:
//   min_{|x' - x| <= delta} |W x' - y|.
// In SVD coordinates W = U S V^H the problem separates: directions with
// sigma = 0 contribute their residual unchanged, the others are a
// ball-constrained least-squares problem solved by a scalar secular equation
// in the log of the Lagrange multiplier.

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hypercyc/core_algebra.hpp"

namespace hypercyc {

struct BallImageResult {
  double distance = 0.0;
  ComplexVector minimizer;
};

namespace detail {

// log(1 + exp(a)) without overflow.
inline double softplus(double a) {
  return a > 0.0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a));
}

// For active directions: g = |q_l| (unconstrained step length), log_sigma.
// Returns the optimal residual norm over the active directions and writes
// the shrink factors 1 / (1 + t_l) applied to q_l.
struct SecularSolution {
  double residual_sq = 0.0;
  std::vector<double> shrink;
};

inline SecularSolution solve_secular(const std::vector<double>& g,
                                     const std::vector<double>& log_sigma, double delta) {
  SecularSolution sol;
  const std::size_t m = g.size();
  sol.shrink.assign(m, 1.0);
  double qn2 = 0.0;
  for (double v : g) qn2 += v * v;
  const double qn = std::sqrt(qn2);
  if (qn <= delta) return sol;
  if (delta == 0.0) {
    // x' = x: the residual is sigma_l * g_l in every active direction.
    for (std::size_t l = 0; l < m; ++l) {
      sol.shrink[l] = 0.0;
      const double r = std::exp(log_sigma[l]) * g[l];
      sol.residual_sq += r * r;
    }
    return sol;
  }
  double ls_min = std::numeric_limits<double>::infinity();
  double ls_max = -std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < m; ++l)
    if (g[l] > 0.0) {
      ls_min = std::min(ls_min, log_sigma[l]);
      ls_max = std::max(ls_max, log_sigma[l]);
    }
  const double ratio = qn / delta;
  double lo = 2.0 * ls_min + std::log((ratio - 1.0) / 2.0);
  double hi = 2.0 * ls_max + std::log(ratio) + 1.0;

  auto eval = [&](double nu, double& phi, double& dphi) {
    phi = -delta * delta;
    dphi = 0.0;
    for (std::size_t l = 0; l < m; ++l) {
      if (g[l] == 0.0) continue;
      const double a = nu - 2.0 * log_sigma[l];
      const double s = std::exp(-softplus(a));   // 1 / (1 + t)
      const double ts = std::exp(a - softplus(a));  // t / (1 + t)
      phi += g[l] * g[l] * s * s;
      dphi += -2.0 * g[l] * g[l] * ts * s * s;
    }
  };

  double nu = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    double phi, dphi;
    eval(nu, phi, dphi);
    if (phi > 0.0) lo = nu; else hi = nu;
    if (std::abs(phi) <= 1e-15 * delta * delta || hi - lo <= 1e-14 * std::max(1.0, std::abs(nu))) break;
    double next = dphi < 0.0 ? nu - phi / dphi : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    nu = next;
  }
  for (std::size_t l = 0; l < m; ++l) {
    const double sp = softplus(nu - 2.0 * log_sigma[l]);
    sol.shrink[l] = std::exp(-sp);
    // |c_l - sigma_l z_l| = g_l * exp(nu - ln sigma_l) / (1 + t_l)
    const double r = g[l] * std::exp(nu - log_sigma[l] - sp);
    sol.residual_sq += r * r;
  }
  return sol;
}

}  // namespace detail

inline BallImageResult distance_to_ball_image(const ComplexMatrix& w, const ComplexVector& x,
                                              double delta, const ComplexVector& y) {
  if (delta < 0.0) throw Error(ErrorCode::InvalidArgument, "ball radius must be nonnegative");
  if (w.rows() != y.size() || w.cols() != x.size())
    throw Error(ErrorCode::DimensionMismatch, "kernel operand sizes disagree");
  BallImageResult out;
  if (!all_finite(w)) {
    out.distance = std::numeric_limits<double>::infinity();
    out.minimizer = x;
    return out;
  }
  Eigen::JacobiSVD<ComplexMatrix> svd(w, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const ComplexVector c = svd.matrixU().adjoint() * (y - w * x);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  const double cutoff = smax * 1e-15 * static_cast<double>(std::max(w.rows(), w.cols()));

  std::vector<double> g, ls;
  std::vector<Complex> q;
  std::vector<Eigen::Index> idx;
  double null_sq = 0.0;
  for (Eigen::Index l = 0; l < c.size(); ++l) {
    const double s = l < sv.size() ? sv(l) : 0.0;
    if (s <= cutoff || s == 0.0) {
      null_sq += std::norm(c(l));
    } else {
      const Complex ql = c(l) / s;
      q.push_back(ql);
      g.push_back(std::abs(ql));
      ls.push_back(std::log(s));
      idx.push_back(l);
    }
  }
  auto sol = detail::solve_secular(g, ls, delta);
  ComplexVector zp = ComplexVector::Zero(x.size());
  for (std::size_t k = 0; k < idx.size(); ++k) zp(idx[k]) = q[k] * sol.shrink[k];
  out.minimizer = x + svd.matrixV() * zp;
  out.distance = std::sqrt(sol.residual_sq + null_sq);
  return out;
}

// Diagonal W given in log form (log_moduli, args per coordinate). Entries
// with modulus below 1e-250 are treated as zero.
inline BallImageResult distance_to_ball_image_diag(const std::vector<double>& log_w,
                                                   const std::vector<double>& arg_w,
                                                   const ComplexVector& x, double delta,
                                                   const ComplexVector& y) {
  const std::size_t n = log_w.size();
  BallImageResult out;
  const double floor_log = std::log(1e-250);
  std::vector<double> g, ls;
  std::vector<Complex> q;
  std::vector<std::size_t> idx;
  double null_sq = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    const auto li = static_cast<Eigen::Index>(l);
    if (std::isnan(log_w[l]) || log_w[l] == std::numeric_limits<double>::infinity()) {
      out.distance = std::numeric_limits<double>::infinity();
      out.minimizer = x;
      return out;
    }
    if (log_w[l] < floor_log) {
      null_sq += std::norm(y(li));
      continue;
    }
    const Complex ql = y(li) * std::polar(std::exp(-log_w[l]), -arg_w[l]) - x(li);
    q.push_back(ql);
    g.push_back(std::abs(ql));
    ls.push_back(log_w[l]);
    idx.push_back(l);
  }
  auto sol = detail::solve_secular(g, ls, delta);
  out.minimizer = x;
  for (std::size_t k = 0; k < idx.size(); ++k)
    out.minimizer(static_cast<Eigen::Index>(idx[k])) += q[k] * sol.shrink[k];
  out.distance = std::sqrt(sol.residual_sq + null_sq);
  return out;
}

// Distance only, no allocation beyond small vectors; the hot path of the
// diagonal J-set scan.
inline double diag_ball_distance(const double* log_w, const double* arg_w, const Complex* x,
                                 const Complex* y, std::size_t n, double delta) {
  static thread_local std::vector<double> g, ls;
  g.clear();
  ls.clear();
  const double floor_log = std::log(1e-250);
  double null_sq = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    if (log_w[l] < floor_log) {
      null_sq += std::norm(y[l]);
      continue;
    }
    const Complex ql = y[l] * std::polar(std::exp(-log_w[l]), -arg_w[l]) - x[l];
    g.push_back(std::abs(ql));
    ls.push_back(log_w[l]);
  }
  auto sol = detail::solve_secular(g, ls, delta);
  return std::sqrt(sol.residual_sq + null_sq);
}

}  // namespace hypercyc
