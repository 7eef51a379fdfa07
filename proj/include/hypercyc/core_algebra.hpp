#pragma once

// Dense complex linear algebra primitives shared by every other module:
// matrix/vector aliases, the commuting generator family, exponent words,
// the log-domain diagonal representation and word application.
//
// Matrix norms are Frobenius throughout.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hypercyc/errors.hpp"

namespace hypercyc {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

struct Tolerances {
  double comm = 1e-10;       // relative commutation residual
  double structure = 1e-9;   // absolute off-structure magnitude
  double saturation = 1e300; // linear-domain overflow guard
};

// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::remainder(a, two_pi);
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

inline double safe_arg(Complex z) {
  double a = std::arg(z);
  return a <= -std::numbers::pi ? std::numbers::pi : a;
}

inline bool all_finite(const ComplexMatrix& m) {
  return m.array().isFinite().all();
}

inline bool is_exactly_diagonal(const ComplexMatrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (i != j && m(i, j) != Complex(0.0, 0.0)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Word: exponent tuple (k1, ..., kp) addressing A1^k1 ... Ap^kp.

class Word {
 public:
  Word() = default;
  explicit Word(std::vector<std::uint32_t> exponents) : exponents_(std::move(exponents)) {
    degree_ = std::accumulate(exponents_.begin(), exponents_.end(), std::uint64_t{0});
  }
  static Word zero(std::size_t p) { return Word(std::vector<std::uint32_t>(p, 0)); }

  std::size_t size() const { return exponents_.size(); }
  std::uint32_t operator[](std::size_t i) const { return exponents_[i]; }
  const std::vector<std::uint32_t>& exponents() const { return exponents_; }
  std::uint64_t total_degree() const { return degree_; }

  Word operator+(const Word& other) const {
    if (other.size() != size())
      throw Error(ErrorCode::DimensionMismatch, "word lengths differ");
    std::vector<std::uint32_t> e(exponents_);
    for (std::size_t i = 0; i < e.size(); ++i) e[i] += other.exponents_[i];
    return Word(std::move(e));
  }
  bool operator==(const Word& other) const { return exponents_ == other.exponents_; }

 private:
  std::vector<std::uint32_t> exponents_;
  std::uint64_t degree_ = 0;
};

// True iff `a` comes strictly before `b` in the enumeration order:
// total degree ascending, then lexicographically descending exponents.
inline bool precedes(const Word& a, const Word& b) {
  if (a.total_degree() != b.total_degree()) return a.total_degree() < b.total_degree();
  return std::lexicographical_compare(b.exponents().begin(), b.exponents().end(),
                                      a.exponents().begin(), a.exponents().end());
}

// ---------------------------------------------------------------------------
// LogDiagonal: diag(l1, ..., ln) stored as (ln|li|, arg li). A zero entry has
// log-modulus -inf.

struct LogDiagonal {
  std::vector<double> log_moduli;
  std::vector<double> args;

  std::size_t size() const { return log_moduli.size(); }

  static LogDiagonal from_entries(const ComplexVector& d) {
    LogDiagonal out;
    out.log_moduli.resize(static_cast<std::size_t>(d.size()));
    out.args.resize(static_cast<std::size_t>(d.size()));
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      double m = std::abs(d(i));
      out.log_moduli[static_cast<std::size_t>(i)] =
          m == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(m);
      out.args[static_cast<std::size_t>(i)] = m == 0.0 ? 0.0 : safe_arg(d(i));
    }
    return out;
  }

  static LogDiagonal from_matrix(const ComplexMatrix& m) {
    if (m.rows() != m.cols() || !is_exactly_diagonal(m))
      throw Error(ErrorCode::InvalidArgument, "LogDiagonal requires a diagonal matrix");
    return from_entries(m.diagonal());
  }

  Complex entry(std::size_t i) const {
    if (std::isinf(log_moduli[i]) && log_moduli[i] < 0) return {0.0, 0.0};
    return std::polar(std::exp(log_moduli[i]), args[i]);
  }

  ComplexMatrix to_matrix() const {
    ComplexMatrix m = ComplexMatrix::Zero(static_cast<Eigen::Index>(size()),
                                          static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < size(); ++i)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = entry(i);
    return m;
  }

  bool has_zero() const {
    return std::any_of(log_moduli.begin(), log_moduli.end(),
                       [](double v) { return std::isinf(v) && v < 0; });
  }
};

// Vector stored coordinate-wise in the log domain; used when a word value is
// too large or too small for binary64.
struct LogVector {
  std::vector<double> log_moduli;  // -inf for an exact zero
  std::vector<double> args;

  std::size_t size() const { return log_moduli.size(); }

  ComplexVector to_linear(double saturation, bool* saturated = nullptr) const {
    ComplexVector v(static_cast<Eigen::Index>(size()));
    bool sat = false;
    const double cap = std::log(saturation);
    for (std::size_t i = 0; i < size(); ++i) {
      const double lm = log_moduli[i];
      if (std::isinf(lm) && lm < 0) {
        v(static_cast<Eigen::Index>(i)) = 0.0;
      } else if (lm > cap) {
        sat = true;
        v(static_cast<Eigen::Index>(i)) = Complex(std::numeric_limits<double>::infinity(), 0.0);
      } else {
        v(static_cast<Eigen::Index>(i)) = std::polar(std::exp(lm), args[i]);
      }
    }
    if (saturated) *saturated = sat;
    return v;
  }
};

// ---------------------------------------------------------------------------
// GeneratorFamily: a verified-commuting p-tuple of n x n matrices.

class GeneratorFamily {
 public:
  std::size_t dim() const { return n_; }
  std::size_t size() const { return generators_.size(); }
  const std::vector<ComplexMatrix>& generators() const { return generators_; }
  const ComplexMatrix& operator[](std::size_t j) const { return generators_[j]; }
  double commutation_residual() const { return residual_; }

  bool is_diagonal() const { return diagonal_; }
  // Diagonal families only.
  const std::vector<LogDiagonal>& log_diagonals() const { return log_diagonals_; }

  double max_norm() const {
    double m = 0.0;
    for (const auto& g : generators_) m = std::max(m, g.norm());
    return m;
  }

 private:
  friend GeneratorFamily verify_commuting(std::span<const ComplexMatrix>, const Tolerances&);
  friend GeneratorFamily make_family_unchecked(std::vector<ComplexMatrix>, double);

  std::size_t n_ = 0;
  std::vector<ComplexMatrix> generators_;
  double residual_ = 0.0;
  bool diagonal_ = false;
  std::vector<LogDiagonal> log_diagonals_;
};

inline double commutation_residual(const ComplexMatrix& a, const ComplexMatrix& b) {
  return (a * b - b * a).norm() / (a.norm() * b.norm() + 1.0);
}

inline GeneratorFamily make_family_unchecked(std::vector<ComplexMatrix> mats, double residual) {
  GeneratorFamily f;
  f.n_ = mats.empty() ? 0 : static_cast<std::size_t>(mats.front().rows());
  f.generators_ = std::move(mats);
  f.residual_ = residual;
  f.diagonal_ = std::all_of(f.generators_.begin(), f.generators_.end(),
                            [](const ComplexMatrix& m) { return is_exactly_diagonal(m); });
  if (f.diagonal_)
    for (const auto& g : f.generators_) f.log_diagonals_.push_back(LogDiagonal::from_matrix(g));
  return f;
}

// Accepts the list as an abelian family iff the worst pairwise residual
// ||AB - BA|| / (||A|| ||B|| + 1) is at most tol.comm.
inline GeneratorFamily verify_commuting(std::span<const ComplexMatrix> mats,
                                        const Tolerances& tol = {}) {
  if (mats.empty()) throw Error(ErrorCode::DimensionMismatch, "empty generator list");
  const Eigen::Index n = mats.front().rows();
  if (n == 0) throw Error(ErrorCode::DimensionMismatch, "zero-dimensional generator");
  for (std::size_t i = 0; i < mats.size(); ++i) {
    if (mats[i].rows() != n || mats[i].cols() != n)
      throw Error(ErrorCode::DimensionMismatch,
                  "matrix " + std::to_string(i + 1) + " is " + std::to_string(mats[i].rows()) +
                      "x" + std::to_string(mats[i].cols()) + ", expected " + std::to_string(n) +
                      "x" + std::to_string(n));
    if (!all_finite(mats[i]))
      throw Error(ErrorCode::InvalidArgument, "matrix " + std::to_string(i + 1) + " has non-finite entries");
  }
  double worst = 0.0;
  std::size_t wi = 0, wj = 0;
  for (std::size_t i = 0; i < mats.size(); ++i)
    for (std::size_t j = i + 1; j < mats.size(); ++j) {
      double r = commutation_residual(mats[i], mats[j]);
      if (r > worst) {
        worst = r;
        wi = i;
        wj = j;
      }
    }
  if (worst > tol.comm) throw NotCommutingError(wi, wj, worst);
  return make_family_unchecked(std::vector<ComplexMatrix>(mats.begin(), mats.end()), worst);
}

inline GeneratorFamily verify_commuting(const std::vector<ComplexMatrix>& mats,
                                        const Tolerances& tol = {}) {
  return verify_commuting(std::span<const ComplexMatrix>(mats.data(), mats.size()), tol);
}

// ---------------------------------------------------------------------------
// Structure membership: K_{eta,r} = T_{n1} (+) ... (+) T_{nr}, each block
// lower triangular with a constant diagonal.

struct StructureCheck {
  bool ok = false;
  double residual = 0.0;
};

inline void check_partition(std::span<const std::size_t> partition, std::size_t n) {
  std::size_t total = 0;
  for (auto s : partition) {
    if (s == 0) throw Error(ErrorCode::BadPartition, "partition has an empty block");
    total += s;
  }
  if (total != n)
    throw Error(ErrorCode::BadPartition, "partition sums to " + std::to_string(total) +
                                             " but dimension is " + std::to_string(n));
}

inline StructureCheck is_in_k(const ComplexMatrix& m, std::span<const std::size_t> partition,
                              double tol = Tolerances{}.structure) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::DimensionMismatch, "matrix is not square");
  const auto n = static_cast<std::size_t>(m.rows());
  check_partition(partition, n);
  std::vector<std::size_t> block_of(n), block_start(n);
  std::size_t pos = 0;
  for (std::size_t b = 0; b < partition.size(); ++b)
    for (std::size_t i = 0; i < partition[b]; ++i, ++pos) {
      block_of[pos] = b;
      block_start[pos] = pos - i;
    }
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const Complex v = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (block_of[i] != block_of[j] || j > i) {
        worst = std::max(worst, std::abs(v));
      } else if (i == j) {
        const std::size_t s = block_start[i];
        const Complex mu = m(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s));
        worst = std::max(worst, std::abs(v - mu));
      }
    }
  return {worst <= tol, worst};
}

// ---------------------------------------------------------------------------
// Word application.

struct WordApplyResult {
  ComplexVector value;
  bool saturated = false;
};

namespace detail {

inline bool exceeds(const ComplexMatrix& m, double cap) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const Complex v = m(i, j);
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()) ||
          std::abs(v.real()) > cap || std::abs(v.imag()) > cap)
        return true;
    }
  return false;
}

// Repeated squaring; sets `saturated` if any intermediate exceeds the cap.
inline ComplexMatrix matrix_power(const ComplexMatrix& a, std::uint64_t k, double cap,
                                  bool& saturated) {
  ComplexMatrix result = ComplexMatrix::Identity(a.rows(), a.cols());
  ComplexMatrix base = a;
  while (k > 0) {
    if (k & 1u) {
      result = result * base;
      if (exceeds(result, cap)) saturated = true;
    }
    k >>= 1u;
    if (k > 0) {
      base = base * base;
      if (exceeds(base, cap)) saturated = true;
    }
  }
  return result;
}

}  // namespace detail

inline ComplexMatrix matrix_power(const ComplexMatrix& a, std::uint64_t k) {
  bool sat = false;
  return detail::matrix_power(a, k, std::numeric_limits<double>::infinity(), sat);
}

// Log-domain application for diagonal families: never saturates internally.
inline LogVector word_apply_log(const GeneratorFamily& family, const Word& w,
                                const ComplexVector& v) {
  if (!family.is_diagonal())
    throw Error(ErrorCode::InvalidArgument, "log-domain word application needs a diagonal family");
  if (w.size() != family.size())
    throw Error(ErrorCode::DimensionMismatch, "word length differs from generator count");
  if (static_cast<std::size_t>(v.size()) != family.dim())
    throw Error(ErrorCode::DimensionMismatch, "vector length differs from dimension");
  const auto& logs = family.log_diagonals();
  LogVector out;
  out.log_moduli.resize(family.dim());
  out.args.resize(family.dim());
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < family.dim(); ++l) {
    const Complex vl = v(static_cast<Eigen::Index>(l));
    if (vl == Complex(0.0, 0.0)) {
      out.log_moduli[l] = neg_inf;
      out.args[l] = 0.0;
      continue;
    }
    double lm = std::log(std::abs(vl));
    double ph = safe_arg(vl);
    for (std::size_t j = 0; j < family.size(); ++j) {
      if (w[j] == 0) continue;
      const double g = logs[j].log_moduli[l];
      if (std::isinf(g) && g < 0) {
        lm = neg_inf;
        break;
      }
      lm += static_cast<double>(w[j]) * g;
      ph += static_cast<double>(w[j]) * logs[j].args[l];
    }
    out.log_moduli[l] = lm;
    out.args[l] = std::isinf(lm) ? 0.0 : wrap_angle(ph);
  }
  return out;
}

// Computes (A1^k1 ... Ap^kp) v. Diagonal families go through the log domain
// and only saturate when the output itself is not representable.
inline WordApplyResult word_apply(const GeneratorFamily& family, const Word& w,
                                  const ComplexVector& v, const Tolerances& tol = {}) {
  if (w.size() != family.size())
    throw Error(ErrorCode::DimensionMismatch, "word length differs from generator count");
  if (static_cast<std::size_t>(v.size()) != family.dim())
    throw Error(ErrorCode::DimensionMismatch, "vector length differs from dimension");
  WordApplyResult out;
  if (family.is_diagonal()) {
    // Linear products are exact for small results; the log route is used
    // only when some coordinate leaves [1e-290, 1e290].
    const LogVector lg = word_apply_log(family, w, v);
    const double hi = std::log(1e290);
    bool linear_ok = true;
    for (double lm : lg.log_moduli)
      if (!std::isinf(lm) && std::abs(lm) > hi) linear_ok = false;
    if (!linear_ok) {
      out.value = lg.to_linear(tol.saturation, &out.saturated);
      return out;
    }
    out.value = v;
    for (std::size_t j = 0; j < family.size(); ++j) {
      if (w[j] == 0) continue;
      for (Eigen::Index l = 0; l < v.size(); ++l) {
        Complex acc(1.0, 0.0), base = family[j](l, l);
        for (std::uint64_t k = w[j]; k > 0; k >>= 1u) {
          if (k & 1u) acc *= base;
          if (k > 1) base *= base;
        }
        out.value(l) *= acc;
      }
    }
    for (Eigen::Index l = 0; l < v.size(); ++l)
      if (!std::isfinite(out.value(l).real()) || !std::isfinite(out.value(l).imag()))
        out.value(l) = lg.to_linear(tol.saturation).coeff(l);
    return out;
  }
  ComplexVector x = v;
  bool sat = false;
  for (std::size_t j = family.size(); j-- > 0;) {
    if (w[j] == 0) continue;
    x = detail::matrix_power(family[j], w[j], tol.saturation, sat) * x;
    if (detail::exceeds(x, tol.saturation)) sat = true;
  }
  out.value = std::move(x);
  out.saturated = sat;
  return out;
}

// Full word matrix; saturation reported through the flag.
inline ComplexMatrix word_matrix(const GeneratorFamily& family, const Word& w, bool& saturated,
                                 const Tolerances& tol = {}) {
  ComplexMatrix m = ComplexMatrix::Identity(static_cast<Eigen::Index>(family.dim()),
                                            static_cast<Eigen::Index>(family.dim()));
  saturated = false;
  for (std::size_t j = 0; j < family.size(); ++j) {
    if (w[j] == 0) continue;
    m = m * detail::matrix_power(family[j], w[j], tol.saturation, saturated);
    if (detail::exceeds(m, tol.saturation)) saturated = true;
  }
  return m;
}

// Cache of generator powers A_j^k for k <= max_exponent, used by the word
// scanners so each word costs p matrix-vector products.
class PowerCache {
 public:
  PowerCache(const GeneratorFamily& family, std::uint32_t max_exponent,
             const Tolerances& tol = {}) {
    const auto n = static_cast<Eigen::Index>(family.dim());
    powers_.resize(family.size());
    saturated_.resize(family.size());
    for (std::size_t j = 0; j < family.size(); ++j) {
      powers_[j].reserve(max_exponent + 1u);
      saturated_[j].reserve(max_exponent + 1u);
      powers_[j].push_back(ComplexMatrix::Identity(n, n));
      saturated_[j].push_back(false);
      for (std::uint32_t k = 1; k <= max_exponent; ++k) {
        ComplexMatrix next = powers_[j].back() * family[j];
        bool sat = saturated_[j].back() || detail::exceeds(next, tol.saturation);
        powers_[j].push_back(std::move(next));
        saturated_[j].push_back(sat);
      }
    }
  }
  const ComplexMatrix& power(std::size_t j, std::uint32_t k) const { return powers_[j][k]; }
  bool saturated(std::size_t j, std::uint32_t k) const { return saturated_[j][k]; }

  WordApplyResult apply(const Word& w, const ComplexVector& v, double cap) const {
    WordApplyResult out;
    out.value = v;
    for (std::size_t j = powers_.size(); j-- > 0;) {
      if (w[j] == 0) continue;
      if (saturated_[j][w[j]]) out.saturated = true;
      out.value = powers_[j][w[j]] * out.value;
    }
    if (detail::exceeds(out.value, cap)) out.saturated = true;
    return out;
  }

  ComplexMatrix matrix(const Word& w, bool& saturated, double cap) const {
    const auto n = powers_.empty() ? 0 : powers_[0][0].rows();
    ComplexMatrix m = ComplexMatrix::Identity(n, n);
    saturated = false;
    for (std::size_t j = 0; j < powers_.size(); ++j) {
      if (w[j] == 0) continue;
      if (saturated_[j][w[j]]) saturated = true;
      m = m * powers_[j][w[j]];
    }
    if (detail::exceeds(m, cap)) saturated = true;
    return m;
  }

 private:
  std::vector<std::vector<ComplexMatrix>> powers_;
  std::vector<std::vector<bool>> saturated_;
};

}  // namespace hypercyc
