#pragma once

// Shared matrix aliases, numeric thresholds, exception types and small
// spectral helpers used by every module.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sridge {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

/// Entries of a symmetric input may differ from their mirror by at most this.
inline constexpr double kSymmetryTolerance = 1e-12;
/// Smallest eigenvalue still accepted as positive semidefinite, for matrices
/// of unit scale; see psd_floor().
inline constexpr double kPsdFloor = -1e-10;
/// Reciprocal condition number below which a system counts as singular.
inline constexpr double kSingularRcond = 1e-12;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class DegenerateSampleError : public Error {
 public:
  using Error::Error;
};

class SingularSystemError : public Error {
 public:
  SingularSystemError(const std::string& what, double rcond)
      : Error(what + " (reciprocal condition number " + std::to_string(rcond) +
              ", condition number " +
              (rcond > 0 ? std::to_string(1.0 / rcond) : std::string("inf")) + ")"),
        rcond_(rcond) {}
  double reciprocal_condition() const noexcept { return rcond_; }

 private:
  double rcond_;
};

class InvalidCovarianceError : public Error {
 public:
  using Error::Error;
};

class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double worst_lo, double worst_hi)
      : Error(what), worst_lo_(worst_lo), worst_hi_(worst_hi) {}
  double worst_lo() const noexcept { return worst_lo_; }
  double worst_hi() const noexcept { return worst_hi_; }

 private:
  double worst_lo_;
  double worst_hi_;
};

/// A required hypothesis of a closed-form result does not hold for the input.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Two algebraically equivalent evaluations disagreed.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

template <typename Derived>
Matrix<typename Derived::Scalar> symmetrized(const Eigen::MatrixBase<Derived>& a) {
  return (a + a.transpose()) / typename Derived::Scalar(2);
}

template <typename Derived>
typename Derived::Scalar min_eigenvalue(const Eigen::MatrixBase<Derived>& sym) {
  using Scalar = typename Derived::Scalar;
  if (sym.rows() == 0) return Scalar(0);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

/// Ratio of the smallest to the largest absolute eigenvalue of a symmetric
/// matrix; 0 for the zero matrix.
template <typename Derived>
typename Derived::Scalar reciprocal_condition(const Eigen::MatrixBase<Derived>& sym) {
  using Scalar = typename Derived::Scalar;
  if (sym.rows() == 0) return Scalar(1);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(sym, Eigen::EigenvaluesOnly);
  const Scalar hi = eig.eigenvalues().cwiseAbs().maxCoeff();
  const Scalar lo = eig.eigenvalues().cwiseAbs().minCoeff();
  if (hi == Scalar(0)) return Scalar(0);
  return lo / hi;
}

template <typename Derived>
typename Derived::Scalar condition_number(const Eigen::MatrixBase<Derived>& sym) {
  using Scalar = typename Derived::Scalar;
  const Scalar rc = reciprocal_condition(sym);
  return rc > Scalar(0) ? Scalar(1) / rc : std::numeric_limits<Scalar>::infinity();
}

/// trace(a * b) without forming the product.
template <typename DA, typename DB>
typename DA::Scalar trace_of_product(const Eigen::MatrixBase<DA>& a,
                                     const Eigen::MatrixBase<DB>& b) {
  if (a.rows() != b.cols() || a.cols() != b.rows())
    throw DimensionError("trace_of_product: shapes do not compose");
  return a.cwiseProduct(b.transpose()).sum();
}

/// kPsdFloor scaled by max(1, largest |eigenvalue|), so rounding in matrices
/// with large entries is not mistaken for indefiniteness.
template <typename Scalar>
Scalar psd_floor(Scalar max_abs_eigenvalue) {
  return Scalar(kPsdFloor) * std::max(Scalar(1), max_abs_eigenvalue);
}

/// Returns (m + m^T)/2 after checking it is finite and PSD above the floor.
template <typename Derived>
Matrix<typename Derived::Scalar> validated_covariance(const Eigen::MatrixBase<Derived>& m,
                                                      const std::string& name) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() != m.cols())
    throw DimensionError(name + " must be square");
  if (!m.allFinite())
    throw InvalidCovarianceError(name + " has non-finite entries");
  Matrix<Scalar> s = symmetrized(m);
  if (s.rows() == 0) return s;
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(s, Eigen::EigenvaluesOnly);
  const Scalar lo = eig.eigenvalues().minCoeff();
  if (lo < psd_floor(eig.eigenvalues().cwiseAbs().maxCoeff()))
    throw InvalidCovarianceError(name + " is not positive semidefinite (smallest eigenvalue " +
                                 std::to_string(static_cast<double>(lo)) + ")");
  return s;
}

}  // namespace sridge
