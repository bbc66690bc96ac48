#pragma once

// Population moment containers, sample containers and the centered
// second-moment estimators.

#include "sridge/core.hpp"

#include <cstdint>
#include <optional>
#include <utility>

namespace sridge {

/// First and second central moments of a covariate/response pair (x in R^p,
/// y in R^q). Immutable; covariances are symmetrized and PSD-checked on
/// construction.
template <typename Scalar = double>
class MomentSpec {
 public:
  MomentSpec(Vector<Scalar> mu_x, Vector<Scalar> mu_y, const Matrix<Scalar>& sigma_x,
             const Matrix<Scalar>& sigma_y, Matrix<Scalar> sigma_xy)
      : mu_x_(std::move(mu_x)),
        mu_y_(std::move(mu_y)),
        sigma_x_(validated_covariance(sigma_x, "sigma_x")),
        sigma_y_(validated_covariance(sigma_y, "sigma_y")),
        sigma_xy_(std::move(sigma_xy)) {
    const auto p = mu_x_.size();
    const auto q = mu_y_.size();
    if (sigma_x_.rows() != p) throw DimensionError("sigma_x must be p x p with p = len(mu_x)");
    if (sigma_y_.rows() != q) throw DimensionError("sigma_y must be q x q with q = len(mu_y)");
    if (sigma_xy_.rows() != p || sigma_xy_.cols() != q)
      throw DimensionError("sigma_xy must be p x q");
    if (!mu_x_.allFinite() || !mu_y_.allFinite() || !sigma_xy_.allFinite())
      throw InvalidCovarianceError("moment entries must be finite");
  }

  Eigen::Index p() const noexcept { return mu_x_.size(); }
  Eigen::Index q() const noexcept { return mu_y_.size(); }

  const Vector<Scalar>& mu_x() const noexcept { return mu_x_; }
  const Vector<Scalar>& mu_y() const noexcept { return mu_y_; }
  const Matrix<Scalar>& sigma_x() const noexcept { return sigma_x_; }
  const Matrix<Scalar>& sigma_y() const noexcept { return sigma_y_; }
  const Matrix<Scalar>& sigma_xy() const noexcept { return sigma_xy_; }

  /// E[x x^T] = Sigma_x + mu_x mu_x^T.
  Matrix<Scalar> raw_second_moment_x() const { return sigma_x_ + mu_x_ * mu_x_.transpose(); }
  /// E[x y^T].
  Matrix<Scalar> raw_cross_moment() const { return sigma_xy_ + mu_x_ * mu_y_.transpose(); }
  /// E[y y^T].
  Matrix<Scalar> raw_second_moment_y() const { return sigma_y_ + mu_y_ * mu_y_.transpose(); }

 private:
  Vector<Scalar> mu_x_;
  Vector<Scalar> mu_y_;
  Matrix<Scalar> sigma_x_;
  Matrix<Scalar> sigma_y_;
  Matrix<Scalar> sigma_xy_;
};

/// Column-concatenated samples X (p x N) and Y (q x N).
template <typename Scalar = double>
class SamplePair {
 public:
  SamplePair(Matrix<Scalar> x, Matrix<Scalar> y, std::optional<std::uint64_t> seed = std::nullopt)
      : x_(std::move(x)), y_(std::move(y)), seed_(seed) {
    if (x_.cols() != y_.cols())
      throw DimensionError("X and Y must have the same number of columns");
    if (x_.cols() < 1) throw DimensionError("a sample needs at least one observation");
  }

  const Matrix<Scalar>& x() const noexcept { return x_; }
  const Matrix<Scalar>& y() const noexcept { return y_; }
  Eigen::Index n() const noexcept { return x_.cols(); }
  Eigen::Index p() const noexcept { return x_.rows(); }
  Eigen::Index q() const noexcept { return y_.rows(); }
  const std::optional<std::uint64_t>& seed() const noexcept { return seed_; }

  /// N = 1: the centering matrix is zero and every centered moment vanishes.
  bool degenerate() const noexcept { return x_.cols() < 2; }

 private:
  Matrix<Scalar> x_;
  Matrix<Scalar> y_;
  std::optional<std::uint64_t> seed_;
};

/// A_n = I_n - (1/n) 1 1^T. Only tests and small examples should need this;
/// the estimators below never form it.
template <typename Scalar = double>
Matrix<Scalar> centering_matrix(Eigen::Index n) {
  if (n < 1) throw DimensionError("centering_matrix: n must be positive");
  Matrix<Scalar> a = Matrix<Scalar>::Constant(n, n, -Scalar(1) / Scalar(n));
  a.diagonal().array() += Scalar(1);
  return a;
}

/// X with its row means removed, i.e. X A_N.
template <typename Derived>
Matrix<typename Derived::Scalar> centered_columns(const Eigen::MatrixBase<Derived>& x) {
  return x.colwise() - x.rowwise().mean();
}

/// X A_N Y^T, computed from explicitly centered copies.
template <typename DX, typename DY>
Matrix<typename DX::Scalar> centered_gram(const Eigen::MatrixBase<DX>& x,
                                          const Eigen::MatrixBase<DY>& y) {
  if (x.cols() != y.cols())
    throw DimensionError("centered_gram: column counts differ");
  return centered_columns(x) * centered_columns(y).transpose();
}

template <typename Derived>
Matrix<typename Derived::Scalar> centered_gram(const Eigen::MatrixBase<Derived>& x) {
  const auto xc = centered_columns(x);
  Matrix<typename Derived::Scalar> g = xc * xc.transpose();
  return symmetrized(g);
}

/// (1/N) X A_N X^T.
template <typename Scalar>
Matrix<Scalar> sample_cov_x(const SamplePair<Scalar>& sample) {
  if (sample.degenerate())
    throw DegenerateSampleError("sample_cov_x: at least two observations are required");
  return centered_gram(sample.x()) / Scalar(sample.n());
}

/// (1/N) X A_N Y^T.
template <typename Scalar>
Matrix<Scalar> sample_cross_cov(const SamplePair<Scalar>& sample) {
  if (sample.degenerate())
    throw DegenerateSampleError("sample_cross_cov: at least two observations are required");
  return centered_gram(sample.x(), sample.y()) / Scalar(sample.n());
}

}  // namespace sridge
