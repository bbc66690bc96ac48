#pragma once

// Matrix-variate normal laws, the conditional law of the ridge estimator,
// the E[D D^T] identity and the homoscedastic residual second-moment checks.

#include "sridge/ridge.hpp"

#include <algorithm>
#include <optional>
#include <random>
#include <vector>

namespace sridge {

/// MN(M, U, V): vec(Z) ~ N(vec(M), V kron U) for an m x n random matrix Z.
template <typename Scalar = double>
class MatrixNormalLaw {
 public:
  MatrixNormalLaw(Matrix<Scalar> mean, const Matrix<Scalar>& row_scale,
                  const Matrix<Scalar>& col_scale)
      : mean_(std::move(mean)),
        row_scale_(validated_covariance(row_scale, "row scale")),
        col_scale_(validated_covariance(col_scale, "column scale")) {
    if (row_scale_.rows() != mean_.rows() || col_scale_.rows() != mean_.cols())
      throw DimensionError("matrix normal scales do not match the mean shape");
  }

  const Matrix<Scalar>& mean() const noexcept { return mean_; }
  const Matrix<Scalar>& row_scale() const noexcept { return row_scale_; }
  const Matrix<Scalar>& col_scale() const noexcept { return col_scale_; }
  Eigen::Index rows() const noexcept { return mean_.rows(); }
  Eigen::Index cols() const noexcept { return mean_.cols(); }

  /// Covariance of the column-stacked vec(Z): V kron U.
  Matrix<Scalar> vec_covariance() const {
    const auto m = rows();
    const auto n = cols();
    Matrix<Scalar> k(m * n, m * n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index l = 0; l < n; ++l)
        k.block(j * m, l * m, m, m) = col_scale_(j, l) * row_scale_;
    return k;
  }

  MatrixNormalLaw transposed() const { return MatrixNormalLaw(mean_.transpose(), col_scale_, row_scale_); }

 private:
  Matrix<Scalar> mean_;
  Matrix<Scalar> row_scale_;
  Matrix<Scalar> col_scale_;
};

/// Symmetric square root by eigendecomposition; eigenvalues between the PSD
/// floor and zero are clipped to zero.
template <typename Scalar>
Matrix<Scalar> psd_sqrt(const Matrix<Scalar>& s) {
  if (s.rows() == 0) return s;
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(symmetrized(s));
  Vector<Scalar> ev = eig.eigenvalues();
  if (ev.minCoeff() < psd_floor(ev.cwiseAbs().maxCoeff()))
    throw InvalidCovarianceError("psd_sqrt: matrix is indefinite");
  ev = ev.cwiseMax(Scalar(0)).cwiseSqrt();
  return eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
}

/// Draws M + U^{1/2} G V^{1/2} with G iid standard normal. The square roots
/// are factored once; draw() is reentrant for distinct generators.
template <typename Scalar = double>
class MatrixNormalSampler {
 public:
  explicit MatrixNormalSampler(const MatrixNormalLaw<Scalar>& law)
      : mean_(law.mean()), row_root_(psd_sqrt(law.row_scale())), col_root_(psd_sqrt(law.col_scale())) {}

  template <typename Urbg>
  Matrix<Scalar> draw(Urbg& rng) const {
    std::normal_distribution<Scalar> normal;
    Matrix<Scalar> g(mean_.rows(), mean_.cols());
    for (Eigen::Index j = 0; j < g.cols(); ++j)
      for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = normal(rng);
    return mean_ + row_root_ * g * col_root_;
  }

 private:
  Matrix<Scalar> mean_;
  Matrix<Scalar> row_root_;
  Matrix<Scalar> col_root_;
};

template <typename Scalar, typename Urbg>
Matrix<Scalar> sample_matrix_normal(const MatrixNormalLaw<Scalar>& law, Urbg& rng) {
  return MatrixNormalSampler<Scalar>(law).draw(rng);
}

/// Conditional law of an estimator deviation D given the covariate sample.
template <typename Scalar = double>
struct EstimatorLaw {
  MatrixNormalLaw<Scalar> law;
  Matrix<Scalar> bias;        // mean of D
  Matrix<Scalar> resolvent;   // R
  Matrix<Scalar> shrink;      // Z
  /// Literal product Z R; equals the row scale R X A X^T R up to rounding.
  Matrix<Scalar> shrink_times_resolvent;
  /// Z (X A X^T)^{-1} Z when X A X^T is invertible (linear-model case only).
  std::optional<Matrix<Scalar>> row_scale_via_inverse_gram;
};

namespace detail {

template <typename Scalar>
void require_positive_lambda(Scalar lambda, const char* where) {
  if (!(lambda > Scalar(0)) || !std::isfinite(static_cast<double>(lambda)))
    throw ArgumentError(std::string(where) + ": lambda must be positive and finite");
}

// R X A X^T R, the manifestly symmetric row scale.
template <typename Scalar>
Matrix<Scalar> sandwich_row_scale(const ResolventFactors<Scalar>& f) {
  return symmetrized(f.resolvent * f.gram * f.resolvent);
}

}  // namespace detail

/// Law of (B_hat - B_lambda) | X for conditionally normal homoscedastic
/// residuals with conditional mean matrix `cond_resid_mean` (q x N) and
/// covariance `cond_resid_cov` (q x q):
///   MN(-lambda N R B_lambda + R X A M^T, Z R, Sigma).
template <typename Scalar>
EstimatorLaw<Scalar> estimator_conditional_law(const Matrix<Scalar>& x_sample,
                                               const Matrix<Scalar>& b_lambda,
                                               const Matrix<Scalar>& cond_resid_mean,
                                               const Matrix<Scalar>& cond_resid_cov,
                                               Scalar lambda) {
  detail::require_positive_lambda(lambda, "estimator_conditional_law");
  const auto p = x_sample.rows();
  const auto n = x_sample.cols();
  const auto q = b_lambda.cols();
  if (b_lambda.rows() != p) throw DimensionError("B_lambda must have p rows");
  if (cond_resid_mean.rows() != q || cond_resid_mean.cols() != n)
    throw DimensionError("conditional residual mean must be q x N");
  const Matrix<Scalar> sigma = validated_covariance(cond_resid_cov, "conditional residual covariance");
  if (sigma.rows() != q) throw DimensionError("conditional residual covariance must be q x q");

  const auto f = resolvent_factors(x_sample, lambda);
  const Scalar shift = lambda * Scalar(n);
  Matrix<Scalar> bias =
      -shift * f.resolvent * b_lambda + f.resolvent * centered_gram(x_sample, cond_resid_mean);
  Matrix<Scalar> row = detail::sandwich_row_scale(f);
  return EstimatorLaw<Scalar>{MatrixNormalLaw<Scalar>(bias, row, sigma), bias, f.resolvent,
                              f.shrink, f.shrink * f.resolvent, std::nullopt};
}

/// Linear-model case y = B^T x + eps, eps ~ N(0, Sigma_eps) independent of x:
/// law of (B_hat - B) | X = MN(-lambda N R B, Z R, Sigma_eps).
template <typename Scalar>
EstimatorLaw<Scalar> estimator_law_linear(const Matrix<Scalar>& x_sample,
                                             const Matrix<Scalar>& b,
                                             const Matrix<Scalar>& sigma_eps, Scalar lambda) {
  detail::require_positive_lambda(lambda, "estimator_law_linear");
  const auto p = x_sample.rows();
  const auto n = x_sample.cols();
  if (b.rows() != p) throw DimensionError("B must have p rows");
  const Matrix<Scalar> sigma = validated_covariance(sigma_eps, "Sigma_eps");
  if (sigma.rows() != b.cols()) throw DimensionError("Sigma_eps must be q x q");

  const auto f = resolvent_factors(x_sample, lambda);
  const Scalar shift = lambda * Scalar(n);
  Matrix<Scalar> bias = -shift * f.resolvent * b;
  Matrix<Scalar> row = detail::sandwich_row_scale(f);

  std::optional<Matrix<Scalar>> via_inverse;
  if (reciprocal_condition(f.gram) >= Scalar(kSingularRcond)) {
    const Matrix<Scalar> gram_inv =
        f.gram.ldlt().solve(Matrix<Scalar>::Identity(p, p));
    via_inverse = symmetrized(f.shrink * gram_inv * f.shrink);
  }
  return EstimatorLaw<Scalar>{MatrixNormalLaw<Scalar>(bias, row, sigma), bias, f.resolvent,
                              f.shrink, f.shrink * f.resolvent, std::move(via_inverse)};
}

/// E[D D^T] = trace(V) U + M M^T for D ~ MN(M, U, V).
template <typename Scalar>
Matrix<Scalar> second_moment_outer(const MatrixNormalLaw<Scalar>& law) {
  return law.col_scale().trace() * law.row_scale() + law.mean() * law.mean().transpose();
}

template <typename Scalar>
Matrix<Scalar> second_moment_outer(const EstimatorLaw<Scalar>& law) {
  return second_moment_outer(law.law);
}

/// Deviations of empirical residual second moments from the homoscedastic
/// identities E[E^T E] - M^T M = trace(Sigma) I_N and
/// E[E E^T] - M M^T = N Sigma, with per-entry standard errors.
template <typename Scalar = double>
struct ResidualGramReport {
  Matrix<Scalar> column_gram_deviation;  // N x N
  Matrix<Scalar> column_gram_se;
  Matrix<Scalar> row_gram_deviation;     // q x q
  Matrix<Scalar> row_gram_se;
  Scalar max_abs_column_deviation;
  Scalar max_abs_row_deviation;
  /// Largest |deviation| / SE over entries with positive SE.
  Scalar max_column_z;
  Scalar max_row_z;
};

namespace detail {

template <typename Scalar>
Scalar max_z(const Matrix<Scalar>& dev, const Matrix<Scalar>& se) {
  Scalar z = 0;
  for (Eigen::Index j = 0; j < dev.cols(); ++j)
    for (Eigen::Index i = 0; i < dev.rows(); ++i) {
      if (se(i, j) > Scalar(0)) z = std::max(z, std::abs(dev(i, j)) / se(i, j));
      else if (dev(i, j) != Scalar(0)) z = std::numeric_limits<Scalar>::infinity();
    }
  return z;
}

}  // namespace detail

template <typename Scalar>
ResidualGramReport<Scalar> residual_gram_identities(const std::vector<Matrix<Scalar>>& e_lambda_samples,
                                       const Matrix<Scalar>& cond_mean,
                                       const Matrix<Scalar>& cond_cov) {
  if (e_lambda_samples.empty()) throw ArgumentError("residual_gram_identities: no samples");
  const auto q = cond_mean.rows();
  const auto n = cond_mean.cols();
  if (cond_cov.rows() != q || cond_cov.cols() != q)
    throw DimensionError("residual_gram_identities: covariance must be q x q");
  const auto reps = static_cast<Scalar>(e_lambda_samples.size());

  Matrix<Scalar> sum_c = Matrix<Scalar>::Zero(n, n), sumsq_c = Matrix<Scalar>::Zero(n, n);
  Matrix<Scalar> sum_r = Matrix<Scalar>::Zero(q, q), sumsq_r = Matrix<Scalar>::Zero(q, q);
  for (const auto& e : e_lambda_samples) {
    if (e.rows() != q || e.cols() != n) throw DimensionError("residual_gram_identities: sample shape");
    const Matrix<Scalar> c = e.transpose() * e;
    const Matrix<Scalar> r = e * e.transpose();
    sum_c += c;
    sumsq_c += c.cwiseProduct(c);
    sum_r += r;
    sumsq_r += r.cwiseProduct(r);
  }
  const Matrix<Scalar> mean_c = sum_c / reps;
  const Matrix<Scalar> mean_r = sum_r / reps;
  const auto se_of = [&](const Matrix<Scalar>& mean, const Matrix<Scalar>& sumsq) {
    Matrix<Scalar> var = (sumsq / reps - mean.cwiseProduct(mean)) * (reps / std::max(reps - 1, Scalar(1)));
    return Matrix<Scalar>((var.cwiseMax(Scalar(0)) / reps).cwiseSqrt());
  };

  ResidualGramReport<Scalar> out;
  out.column_gram_deviation = mean_c - cond_mean.transpose() * cond_mean -
                              cond_cov.trace() * Matrix<Scalar>::Identity(n, n);
  out.row_gram_deviation = mean_r - cond_mean * cond_mean.transpose() - Scalar(n) * cond_cov;
  out.column_gram_se = se_of(mean_c, sumsq_c);
  out.row_gram_se = se_of(mean_r, sumsq_r);
  out.max_abs_column_deviation = out.column_gram_deviation.cwiseAbs().maxCoeff();
  out.max_abs_row_deviation = out.row_gram_deviation.cwiseAbs().maxCoeff();
  out.max_column_z = detail::max_z(out.column_gram_deviation, out.column_gram_se);
  out.max_row_z = detail::max_z(out.row_gram_deviation, out.row_gram_se);
  return out;
}

}  // namespace sridge
