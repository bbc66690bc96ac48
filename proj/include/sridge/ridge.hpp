#pragma once

// Population ridge matrix, finite-sample ridge estimator with its resolvent
// and shrink multiplier, and the ridge residuals.

#include "sridge/moments.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>

namespace sridge {

template <typename Scalar = double>
struct RidgeSolution {
  Matrix<Scalar> b_lambda;  // p x q
  Scalar lambda;
  MomentSpec<Scalar> moments;
};

/// Resolvent R = (X A X^T + lambda N I)^{-1} and shrink multiplier
/// Z = R X A X^T = I - lambda N R of a covariate sample.
template <typename Scalar = double>
struct ResolventFactors {
  Matrix<Scalar> gram;        // X A_N X^T
  Matrix<Scalar> resolvent;   // R
  Matrix<Scalar> shrink;      // Z, computed as I - lambda N R
  Scalar lambda;
  Eigen::Index n;
};

template <typename Scalar = double>
struct RidgeEstimate {
  Matrix<Scalar> b_hat;      // p x q
  Scalar lambda;
  Matrix<Scalar> resolvent;  // R
  Matrix<Scalar> shrink;     // Z
  Matrix<Scalar> gram;       // X A_N X^T
};

template <typename Scalar = double>
struct CovariatePoint {
  Vector<Scalar> x;
  /// Latent scalar generating the covariates, for models built from one.
  std::optional<Scalar> xi;
};

/// Unconditional residual moments plus optional conditional evaluators
/// (mean and covariance of the residual given a covariate point).
template <typename Scalar = double>
class ResidualLaw {
 public:
  using MeanFn = std::function<Vector<Scalar>(const CovariatePoint<Scalar>&)>;
  using CovFn = std::function<Matrix<Scalar>(const CovariatePoint<Scalar>&)>;

  ResidualLaw(Vector<Scalar> mu, const Matrix<Scalar>& sigma, MeanFn mean_fn = {},
              CovFn cov_fn = {})
      : mu_(std::move(mu)),
        sigma_(validated_covariance(sigma, "residual covariance")),
        mean_fn_(std::move(mean_fn)),
        cov_fn_(std::move(cov_fn)) {
    if (sigma_.rows() != mu_.size()) throw DimensionError("residual mean/covariance mismatch");
  }

  const Vector<Scalar>& mu() const noexcept { return mu_; }
  const Matrix<Scalar>& sigma() const noexcept { return sigma_; }
  Eigen::Index q() const noexcept { return mu_.size(); }

  bool has_conditional() const noexcept { return mean_fn_ && cov_fn_; }

  Vector<Scalar> conditional_mean(const CovariatePoint<Scalar>& at) const {
    if (!mean_fn_) throw ArgumentError("residual law has no conditional mean evaluator");
    return mean_fn_(at);
  }
  Matrix<Scalar> conditional_cov(const CovariatePoint<Scalar>& at) const {
    if (!cov_fn_) throw ArgumentError("residual law has no conditional covariance evaluator");
    return cov_fn_(at);
  }

  ResidualLaw with_conditional(MeanFn mean_fn, CovFn cov_fn) const {
    return ResidualLaw(mu_, sigma_, std::move(mean_fn), std::move(cov_fn));
  }

 private:
  Vector<Scalar> mu_;
  Matrix<Scalar> sigma_;
  MeanFn mean_fn_;
  CovFn cov_fn_;
};

namespace detail {

template <typename Scalar>
void require_nonnegative_lambda(Scalar lambda, const char* where) {
  if (!(lambda >= Scalar(0)) || !std::isfinite(static_cast<double>(lambda)))
    throw ArgumentError(std::string(where) + ": lambda must be finite and nonnegative");
}

// Solves the SPD system a * B = rhs after the rcond gate. LLT first; LDLT
// covers matrices that are PSD but lose definiteness to rounding.
template <typename Scalar>
Matrix<Scalar> solve_spd(const Matrix<Scalar>& a, const Matrix<Scalar>& rhs,
                         const std::string& what) {
  const Scalar rc = reciprocal_condition(a);
  if (rc < Scalar(kSingularRcond)) throw SingularSystemError(what, static_cast<double>(rc));
  Eigen::LLT<Matrix<Scalar>> llt(a);
  if (llt.info() == Eigen::Success) return llt.solve(rhs);
  Eigen::LDLT<Matrix<Scalar>> ldlt(a);
  if (ldlt.info() != Eigen::Success)
    throw SingularSystemError(what + ": factorization failed", static_cast<double>(rc));
  return ldlt.solve(rhs);
}

}  // namespace detail

/// B_lambda = (Sigma_x + lambda I)^{-1} Sigma_xy. lambda = 0 goes through the
/// same path and fails only when Sigma_x is numerically singular.
template <typename Scalar>
RidgeSolution<Scalar> ridge_matrix(const MomentSpec<Scalar>& moments, Scalar lambda) {
  detail::require_nonnegative_lambda(lambda, "ridge_matrix");
  Matrix<Scalar> a = moments.sigma_x();
  a.diagonal().array() += lambda;
  Matrix<Scalar> b = detail::solve_spd<Scalar>(
      a, moments.sigma_xy(), "ridge_matrix: Sigma_x + lambda I is singular");
  return RidgeSolution<Scalar>{std::move(b), lambda, moments};
}

/// Mean mu_y - B^T mu_x and covariance Sigma_y - B^T Sigma_xy - Sigma_xy^T B
/// + B^T Sigma_x B of eps = y - B^T x.
template <typename Scalar>
ResidualLaw<Scalar> residual_moments(const MomentSpec<Scalar>& moments,
                                     const RidgeSolution<Scalar>& solution) {
  const Matrix<Scalar>& b = solution.b_lambda;
  if (b.rows() != moments.p() || b.cols() != moments.q())
    throw DimensionError("residual_moments: B_lambda must be p x q");
  Vector<Scalar> mu = moments.mu_y() - b.transpose() * moments.mu_x();
  const Matrix<Scalar> bt_sxy = b.transpose() * moments.sigma_xy();
  Matrix<Scalar> sigma = moments.sigma_y() - bt_sxy - bt_sxy.transpose() +
                         b.transpose() * moments.sigma_x() * b;
  return ResidualLaw<Scalar>(std::move(mu), symmetrized(sigma));
}

/// Resolvent and shrink multiplier of a covariate sample (p x N).
template <typename Derived>
ResolventFactors<typename Derived::Scalar> resolvent_factors(const Eigen::MatrixBase<Derived>& x,
                                                             typename Derived::Scalar lambda) {
  using Scalar = typename Derived::Scalar;
  detail::require_nonnegative_lambda(lambda, "resolvent_factors");
  const auto p = x.rows();
  const auto n = x.cols();
  Matrix<Scalar> gram = centered_gram(x);
  Matrix<Scalar> k = gram;
  const Scalar shift = lambda * Scalar(n);
  k.diagonal().array() += shift;
  Matrix<Scalar> r = detail::solve_spd<Scalar>(
      k, Matrix<Scalar>::Identity(p, p), "X A X^T + lambda N I is singular");
  r = symmetrized(r);
  Matrix<Scalar> z = Matrix<Scalar>::Identity(p, p) - shift * r;
  return ResolventFactors<Scalar>{std::move(gram), std::move(r), std::move(z), lambda, n};
}

/// B_hat = (X A X^T + lambda N I)^{-1} X A Y^T, with R and Z.
template <typename Scalar>
RidgeEstimate<Scalar> ridge_estimate(const SamplePair<Scalar>& sample, Scalar lambda) {
  detail::require_nonnegative_lambda(lambda, "ridge_estimate");
  const auto p = sample.p();
  const Scalar shift = lambda * Scalar(sample.n());
  Matrix<Scalar> gram = centered_gram(sample.x());
  Matrix<Scalar> k = gram;
  k.diagonal().array() += shift;
  const Matrix<Scalar> xay = centered_gram(sample.x(), sample.y());
  // One factorization serves both the estimator and R.
  Matrix<Scalar> rhs(p, p + sample.q());
  rhs << Matrix<Scalar>::Identity(p, p), xay;
  const Matrix<Scalar> sol = detail::solve_spd<Scalar>(
      k, rhs, "ridge_estimate: X A X^T + lambda N I is singular");
  Matrix<Scalar> r = symmetrized(sol.leftCols(p));
  Matrix<Scalar> z = Matrix<Scalar>::Identity(p, p) - shift * r;
  return RidgeEstimate<Scalar>{sol.rightCols(sample.q()), lambda, std::move(r), std::move(z),
                               std::move(gram)};
}

/// Ordinary least squares (X A X^T)^{-1} X A Y^T. Singular X A X^T is an
/// error, never regularized away.
template <typename Scalar>
Matrix<Scalar> ols_estimate(const SamplePair<Scalar>& sample) {
  const Matrix<Scalar> gram = centered_gram(sample.x());
  const Scalar rc = reciprocal_condition(gram);
  if (rc < Scalar(kSingularRcond))
    throw SingularSystemError("ols_estimate: X A X^T is singular", static_cast<double>(rc));
  return ridge_estimate(sample, Scalar(0)).b_hat;
}

template <typename Scalar = double>
struct ShrinkForms {
  Matrix<Scalar> resolvent_times_gram;       // R X A X^T
  Matrix<Scalar> identity_minus_resolvent;   // I - lambda N R
  std::optional<Matrix<Scalar>> from_inverse_gram;  // (I + lambda N (X A X^T)^{-1})^{-1}
  bool gram_singular = false;
};

/// The three algebraic forms of the shrink multiplier Z. The third needs an
/// invertible X A X^T and is left empty (with the flag set) otherwise.
template <typename Scalar>
ShrinkForms<Scalar> shrink_multiplier_forms(const SamplePair<Scalar>& sample, Scalar lambda) {
  if (!(lambda > Scalar(0))) throw ArgumentError("shrink_multiplier_forms: lambda must be positive");
  const auto f = resolvent_factors(sample.x(), lambda);
  const auto p = sample.p();
  const Scalar shift = lambda * Scalar(sample.n());

  ShrinkForms<Scalar> out;
  out.resolvent_times_gram = f.resolvent * f.gram;
  out.identity_minus_resolvent = f.shrink;

  const Scalar rc = reciprocal_condition(f.gram);
  out.gram_singular = rc < Scalar(kSingularRcond);
  if (!out.gram_singular) {
    Eigen::LDLT<Matrix<Scalar>> gram_ldlt(f.gram);
    Matrix<Scalar> inner =
        Matrix<Scalar>::Identity(p, p) + shift * gram_ldlt.solve(Matrix<Scalar>::Identity(p, p));
    out.from_inverse_gram = inner.partialPivLu().inverse();
  }
  return out;
}

/// E_lambda = Y - B_lambda^T X.
template <typename Scalar>
Matrix<Scalar> residual_matrix(const SamplePair<Scalar>& sample,
                               const RidgeSolution<Scalar>& solution) {
  if (solution.b_lambda.rows() != sample.p() || solution.b_lambda.cols() != sample.q())
    throw DimensionError("residual_matrix: B_lambda must be p x q");
  return sample.y() - solution.b_lambda.transpose() * sample.x();
}

}  // namespace sridge
