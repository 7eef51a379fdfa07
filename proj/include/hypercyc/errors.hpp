#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace hypercyc {

enum class ErrorCode {
  DimensionMismatch,
  NotCommuting,
  BadPartition,
  ClusteringAmbiguous,
  IllConditioned,
  NotTriangularForm,
  BudgetOverflow,
  GridTooLarge,
  NoBasisVectorInU,
  NoPairFound,
  BadDimension,
  ZeroCoordinate,
  ParseError,
  InvalidArgument,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotCommuting: return "NotCommuting";
    case ErrorCode::BadPartition: return "BadPartition";
    case ErrorCode::ClusteringAmbiguous: return "ClusteringAmbiguous";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::NotTriangularForm: return "NotTriangularForm";
    case ErrorCode::BudgetOverflow: return "BudgetOverflow";
    case ErrorCode::GridTooLarge: return "GridTooLarge";
    case ErrorCode::NoBasisVectorInU: return "NoBasisVectorInU";
    case ErrorCode::NoPairFound: return "NoPairFound";
    case ErrorCode::BadDimension: return "BadDimension";
    case ErrorCode::ZeroCoordinate: return "ZeroCoordinate";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

// Base of every error raised by the library. Verdicts such as
// "not hypercyclic" are values, not errors.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// worst_pair() is 0-based; the message numbers generators from 1.
class NotCommutingError : public Error {
 public:
  NotCommutingError(std::size_t i, std::size_t j, double residual)
      : Error(ErrorCode::NotCommuting,
              "generators " + std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                  " do not commute (residual " + std::to_string(residual) + ")"),
        pair_(i, j),
        residual_(residual) {}
  std::pair<std::size_t, std::size_t> worst_pair() const { return pair_; }
  double residual() const { return residual_; }

 private:
  std::pair<std::size_t, std::size_t> pair_;
  double residual_;
};

class NoPairFoundError : public Error {
 public:
  NoPairFoundError(double best_score, double best_rho, double best_theta)
      : Error(ErrorCode::NoPairFound,
              "no dense pair reached the target coverage (best " +
                  std::to_string(best_score) + ")"),
        best_score_(best_score),
        best_rho_(best_rho),
        best_theta_(best_theta) {}
  double best_score() const { return best_score_; }
  double best_rho() const { return best_rho_; }
  double best_theta() const { return best_theta_; }

 private:
  double best_score_;
  double best_rho_;
  double best_theta_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& field, const std::string& what)
      : Error(ErrorCode::ParseError, what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace hypercyc
