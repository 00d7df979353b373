// Numeric foundation: error type, vector/matrix aliases, probability
// distributions, softmax and the two symmetric linear-algebra contracts.
#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace prefk {

using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

enum class ErrorKind {
  InvalidInput,
  SingularMatrix,
  InfiniteDivergence,
  UseKLInstead,
  InvalidFunction,
  InvalidKernelForm,
  RangeUndefined,
  DegenerateRatio,
  NotDifferentiableHere,
  NumericalFailure,
  DegenerateTriplet,
  KurtosisUndefined,
  DegenerateClusters,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::SingularMatrix: return "SingularMatrix";
    case ErrorKind::InfiniteDivergence: return "InfiniteDivergence";
    case ErrorKind::UseKLInstead: return "UseKLInstead";
    case ErrorKind::InvalidFunction: return "InvalidFunction";
    case ErrorKind::InvalidKernelForm: return "InvalidKernelForm";
    case ErrorKind::RangeUndefined: return "RangeUndefined";
    case ErrorKind::DegenerateRatio: return "DegenerateRatio";
    case ErrorKind::NotDifferentiableHere: return "NotDifferentiableHere";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::DegenerateTriplet: return "DegenerateTriplet";
    case ErrorKind::KurtosisUndefined: return "KurtosisUndefined";
    case ErrorKind::DegenerateClusters: return "DegenerateClusters";
  }
  return "Unknown";
}

/// Every failure in the library is reported through this exception. `index()`
/// carries the offending element (pair, triplet, layer) when one exists.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), message_(what), index_(index) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// The description without the kind prefix carried by what().
  const std::string& message() const noexcept { return message_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  ErrorKind kind_;
  std::string message_;
  std::optional<std::size_t> index_;
};

struct RandomSeed {
  std::uint64_t value = 0;
};

inline bool all_finite(const RealVector& v) { return v.allFinite(); }
inline bool all_finite(const RealMatrix& m) { return m.allFinite(); }

inline RealVector make_vector(std::initializer_list<double> values) {
  RealVector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

/// A categorical distribution over C >= 2 outcomes. Construction renormalizes
/// inputs whose mass is within 1e-9 of one and rejects everything else.
class ProbabilityDistribution {
 public:
  static constexpr double kSumTolerance = 1e-9;

  explicit ProbabilityDistribution(RealVector probs) : probs_(std::move(probs)) {
    if (probs_.size() < 2) {
      throw Error(ErrorKind::InvalidInput, "distribution needs at least two outcomes");
    }
    if (!probs_.allFinite()) {
      throw Error(ErrorKind::InvalidInput, "distribution has non-finite entries");
    }
    if ((probs_.array() < 0.0).any()) {
      throw Error(ErrorKind::InvalidInput, "distribution has negative entries");
    }
    const double total = probs_.sum();
    if (std::abs(total - 1.0) > kSumTolerance) {
      throw Error(ErrorKind::InvalidInput, "distribution sums to " + std::to_string(total));
    }
    probs_ /= total;
  }

  ProbabilityDistribution(std::initializer_list<double> values)
      : ProbabilityDistribution(make_vector(values)) {}

  const RealVector& probs() const noexcept { return probs_; }
  Eigen::Index size() const noexcept { return probs_.size(); }
  double operator[](Eigen::Index i) const { return probs_(i); }

  friend bool operator==(const ProbabilityDistribution& a, const ProbabilityDistribution& b) {
    return a.probs_.size() == b.probs_.size() && a.probs_ == b.probs_;
  }

 private:
  RealVector probs_;
};

/// Max-shifted softmax; never overflows for finite scores.
inline RealVector softmax(const RealVector& scores) {
  if (scores.size() == 0 || !scores.allFinite()) {
    throw Error(ErrorKind::InvalidInput, "softmax needs a nonempty finite score vector");
  }
  const double shift = scores.maxCoeff();
  RealVector e = (scores.array() - shift).exp().matrix();
  return e / e.sum();
}

inline RealVector log_softmax(const RealVector& scores) {
  if (scores.size() == 0 || !scores.allFinite()) {
    throw Error(ErrorKind::InvalidInput, "log_softmax needs a nonempty finite score vector");
  }
  const double shift = scores.maxCoeff();
  const double lse = shift + std::log((scores.array() - shift).exp().sum());
  return (scores.array() - lse).matrix();
}

inline ProbabilityDistribution softmax_distribution(const RealVector& scores) {
  if (scores.size() < 2) {
    throw Error(ErrorKind::InvalidInput, "softmax distribution needs at least two scores");
  }
  return ProbabilityDistribution(softmax(scores));
}

namespace detail {

inline void require_symmetric(const RealMatrix& m, const char* who) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    throw Error(ErrorKind::InvalidInput, std::string(who) + ": matrix must be square and nonempty");
  }
  if (!m.allFinite()) {
    throw Error(ErrorKind::InvalidInput, std::string(who) + ": matrix has non-finite entries");
  }
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
    throw Error(ErrorKind::InvalidInput, std::string(who) + ": matrix is not symmetric");
  }
}

}  // namespace detail

/// Eigenvalues of a symmetric matrix in descending order. Values in
/// [-1e-9, 0) are treated as round-off and clamped to zero.
inline RealVector sym_spd_eigvals(const RealMatrix& m) {
  detail::require_symmetric(m, "sym_spd_eigvals");
  const RealMatrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<RealMatrix> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::NumericalFailure, "eigen decomposition did not converge");
  }
  RealVector ev = solver.eigenvalues().reverse();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < 0.0 && ev(i) >= -1e-9) ev(i) = 0.0;
  }
  return ev;
}

/// Cholesky factor of a symmetric positive-definite matrix, checked against a
/// minimum-eigenvalue floor of 1e-12.
class SpdFactor {
 public:
  static constexpr double kMinEigenvalue = 1e-12;

  explicit SpdFactor(const RealMatrix& sigma) {
    detail::require_symmetric(sigma, "SpdFactor");
    const RealMatrix sym = 0.5 * (sigma + sigma.transpose());
    Eigen::SelfAdjointEigenSolver<RealMatrix> eig(sym, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= kMinEigenvalue) {
      throw Error(ErrorKind::SingularMatrix, "matrix is singular or not positive definite");
    }
    min_eig_ = eig.eigenvalues().minCoeff();
    max_eig_ = eig.eigenvalues().maxCoeff();
    llt_.compute(sym);
    if (llt_.info() != Eigen::Success) {
      throw Error(ErrorKind::SingularMatrix, "Cholesky factorization failed");
    }
  }

  RealVector solve(const RealVector& v) const {
    if (v.size() != llt_.rows()) {
      throw Error(ErrorKind::InvalidInput, "solve: dimension mismatch");
    }
    return llt_.solve(v);
  }

  Eigen::Index dim() const noexcept { return llt_.rows(); }
  double min_eigenvalue() const noexcept { return min_eig_; }
  double max_eigenvalue() const noexcept { return max_eig_; }

 private:
  Eigen::LLT<RealMatrix> llt_;
  double min_eig_ = 0.0;
  double max_eig_ = 0.0;
};

inline RealVector solve_spd(const RealMatrix& sigma, const RealVector& v) {
  if (sigma.rows() != v.size()) {
    throw Error(ErrorKind::InvalidInput, "solve_spd: dimension mismatch");
  }
  if (!v.allFinite()) {
    throw Error(ErrorKind::InvalidInput, "solve_spd: non-finite right-hand side");
  }
  return SpdFactor(sigma).solve(v);
}

}  // namespace prefk
