#pragma once

// Characteristic, conditional training and conditional testing errors of
// ridge regression, each returned with its additive breakdown.

#include "sridge/estimator_law.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace sridge {

enum class ErrorKind { characteristic, conditional_characteristic, training, testing };

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::characteristic: return "characteristic";
    case ErrorKind::conditional_characteristic: return "conditional-characteristic";
    case ErrorKind::training: return "training";
    case ErrorKind::testing: return "testing";
  }
  return "unknown";
}

template <typename Scalar = double>
struct ErrorReport {
  Scalar value = 0;
  ErrorKind kind = ErrorKind::characteristic;
  Scalar lambda = 0;
  Eigen::Index p = 0;
  Eigen::Index n1 = 0;
  std::optional<Eigen::Index> n2;
  /// Named terms summing to value.
  std::vector<std::pair<std::string, Scalar>> breakdown;

  Scalar term(const std::string& name) const {
    for (const auto& [k, v] : breakdown)
      if (k == name) return v;
    throw ArgumentError("ErrorReport has no term named " + name);
  }
  Scalar breakdown_sum() const {
    Scalar s = 0;
    for (const auto& kv : breakdown) s += kv.second;
    return s;
  }
};

/// trace(Sigma + mu mu^T) of the residual law.
template <typename Scalar>
ErrorReport<Scalar> characteristic_error(const ResidualLaw<Scalar>& resid) {
  ErrorReport<Scalar> r;
  r.kind = ErrorKind::characteristic;
  const Scalar cov = resid.sigma().trace();
  const Scalar mean = resid.mu().squaredNorm();
  r.breakdown = {{"irreducible", cov}, {"residual_mean", mean}};
  r.value = cov + mean;
  return r;
}

/// trace(Sigma_{eps|x} + mu_{eps|x} mu_{eps|x}^T) at one covariate point.
template <typename Scalar>
ErrorReport<Scalar> conditional_characteristic_error(const ResidualLaw<Scalar>& resid,
                                                     const CovariatePoint<Scalar>& at) {
  const Vector<Scalar> mu = resid.conditional_mean(at);
  const Matrix<Scalar> sigma = resid.conditional_cov(at);
  if (mu.size() != resid.q() || sigma.rows() != resid.q() || sigma.cols() != resid.q())
    throw DimensionError("conditional residual moments have the wrong shape");
  ErrorReport<Scalar> r;
  r.kind = ErrorKind::conditional_characteristic;
  r.p = at.x.size();
  const Scalar cov = sigma.trace();
  const Scalar mean = mu.squaredNorm();
  r.breakdown = {{"irreducible", cov}, {"residual_mean", mean}};
  r.value = cov + mean;
  return r;
}

namespace detail {

template <typename Scalar>
void check_conditional_inputs(const Matrix<Scalar>& x, const Matrix<Scalar>& b_lambda,
                              const Matrix<Scalar>& cond_mean, const Matrix<Scalar>& cond_cov) {
  if (b_lambda.rows() != x.rows()) throw DimensionError("B_lambda must have p rows");
  if (cond_mean.rows() != b_lambda.cols() || cond_mean.cols() != x.cols())
    throw DimensionError("conditional residual mean must be q x N");
  if (cond_cov.rows() != b_lambda.cols() || cond_cov.cols() != b_lambda.cols())
    throw DimensionError("conditional residual covariance must be q x q");
}

}  // namespace detail

/// Conditional total training error given X. Both algebraic forms are
/// evaluated; a disagreement beyond 1e-10 relative is a ConsistencyError.
///
/// Short form (p x p reductions, Z = I - lambda N R):
///   tr S + (1/N){ tr S tr(Z(R X X^T - 2I)) + tr(M_D M_D^T X X^T)
///                - 2 tr((X^T R X A - I/2) M^T M) } + 2 lambda tr(X^T R B_lambda M)
/// Long form (literal N x N products, Z = R X A X^T): the last term is
///   -(2/N) tr((X^T R X A - I) X^T B_lambda M) inside the brace.
template <typename Scalar>
ErrorReport<Scalar> training_error(const Matrix<Scalar>& x_sample, const Matrix<Scalar>& b_lambda,
                                   const Matrix<Scalar>& cond_resid_mean,
                                   const Matrix<Scalar>& cond_resid_cov, Scalar lambda) {
  detail::require_positive_lambda(lambda, "training_error");
  detail::check_conditional_inputs(x_sample, b_lambda, cond_resid_mean, cond_resid_cov);
  const Matrix<Scalar> sigma = validated_covariance(cond_resid_cov, "conditional residual covariance");
  const auto p = x_sample.rows();
  const auto n = x_sample.cols();
  const Scalar nn = Scalar(n);
  const Matrix<Scalar>& m = cond_resid_mean;
  const Scalar tr_sigma = sigma.trace();

  const auto f = resolvent_factors(x_sample, lambda);
  const Matrix<Scalar>& r = f.resolvent;
  const Matrix<Scalar> xc = centered_columns(x_sample);             // X A
  const Matrix<Scalar> xxt = x_sample * x_sample.transpose();        // p x p
  const Matrix<Scalar> m_d = -lambda * nn * r * b_lambda + r * (xc * m.transpose());
  const Matrix<Scalar> i_p = Matrix<Scalar>::Identity(p, p);

  // Short form. tr((X^T R X A - I/2) M^T M) = tr(R (X A M^T)(M X^T)) - tr(M^T M)/2.
  const Matrix<Scalar> xam = xc * m.transpose();      // p x q
  const Matrix<Scalar> xm = x_sample * m.transpose();  // p x q
  const Scalar variance = tr_sigma + tr_sigma / nn * trace_of_product(f.shrink, Matrix<Scalar>(r * xxt - 2 * i_p));
  const Scalar bias = trace_of_product(Matrix<Scalar>(m_d * m_d.transpose()), xxt) / nn;
  const Scalar mm = m.squaredNorm();
  const Scalar resid_mean =
      -Scalar(2) / nn * (trace_of_product(Matrix<Scalar>(r * xam), Matrix<Scalar>(xm.transpose())) - mm / 2);
  const Scalar cross = Scalar(2) * lambda * trace_of_product(Matrix<Scalar>(r * b_lambda), Matrix<Scalar>(m * x_sample.transpose()));
  const Scalar short_form = variance + bias + resid_mean + cross;

  // Long form, literal N x N evaluation.
  const Matrix<Scalar> z_literal = r * f.gram;
  const Matrix<Scalar> xtrxa = x_sample.transpose() * r * xc;  // N x N, X^T R X A
  const Matrix<Scalar> i_n = Matrix<Scalar>::Identity(n, n);
  const Matrix<Scalar> mtm = m.transpose() * m;
  Scalar brace = tr_sigma * (z_literal * (r * xxt - 2 * i_p)).trace() +
                 (m_d * m_d.transpose() * xxt).trace() -
                 2 * trace_of_product(Matrix<Scalar>(xtrxa - i_n / 2), mtm) -
                 2 * trace_of_product(Matrix<Scalar>((xtrxa - i_n) * (x_sample.transpose() * b_lambda)), m);
  const Scalar long_form = tr_sigma + brace / nn;

  const Scalar scale = std::abs(tr_sigma) + std::abs(variance - tr_sigma) + std::abs(bias) +
                       std::abs(resid_mean) + std::abs(cross);
  if (!(std::abs(long_form - short_form) <= Scalar(1e-10) * scale))
    throw ConsistencyError("training_error: long and short forms disagree (" +
                           std::to_string(static_cast<double>(long_form)) + " vs " +
                           std::to_string(static_cast<double>(short_form)) + ")");

  ErrorReport<Scalar> out;
  out.kind = ErrorKind::training;
  out.lambda = lambda;
  out.p = p;
  out.n1 = n;
  out.breakdown = {{"irreducible", tr_sigma},
                   {"estimation_variance", variance - tr_sigma},
                   {"estimation_bias", bias},
                   {"cross", resid_mean + cross}};
  out.value = short_form;
  return out;
}

/// Training error for y = B^T x + eps with eps independent of x:
///   tr S + (1/N) tr S tr(Z(R X X^T - 2I)) + lambda^2 N tr(R B B^T R X X^T).
template <typename Scalar>
ErrorReport<Scalar> training_error_linear(const Matrix<Scalar>& x_sample, const Matrix<Scalar>& b,
                                             const Matrix<Scalar>& sigma_eps, Scalar lambda) {
  detail::require_positive_lambda(lambda, "training_error_linear");
  if (b.rows() != x_sample.rows()) throw DimensionError("B must have p rows");
  const Matrix<Scalar> sigma = validated_covariance(sigma_eps, "Sigma_eps");
  if (sigma.rows() != b.cols()) throw DimensionError("Sigma_eps must be q x q");
  const auto p = x_sample.rows();
  const auto n = x_sample.cols();
  const Scalar nn = Scalar(n);
  const auto f = resolvent_factors(x_sample, lambda);
  const Matrix<Scalar> xxt = x_sample * x_sample.transpose();
  const Scalar tr_sigma = sigma.trace();

  const Scalar variance =
      tr_sigma / nn *
      trace_of_product(f.shrink, Matrix<Scalar>(f.resolvent * xxt - 2 * Matrix<Scalar>::Identity(p, p)));
  const Matrix<Scalar> rb = f.resolvent * b;
  const Scalar bias = lambda * lambda * nn * trace_of_product(Matrix<Scalar>(rb * rb.transpose()), xxt);

  ErrorReport<Scalar> out;
  out.kind = ErrorKind::training;
  out.lambda = lambda;
  out.p = p;
  out.n1 = n;
  out.breakdown = {{"irreducible", tr_sigma},
                   {"estimation_variance", variance},
                   {"estimation_bias", bias},
                   {"cross", Scalar(0)}};
  out.value = tr_sigma + variance + bias;
  return out;
}

namespace detail {

template <typename Scalar>
ErrorReport<Scalar> testing_from_mean(const ResolventFactors<Scalar>& f, const Matrix<Scalar>& m_bhat,
                                      Scalar tr_sigma, const MomentSpec<Scalar>& test, Scalar lambda) {
  const auto p = m_bhat.rows();
  const auto q = m_bhat.cols();
  if (test.p() != p || test.q() != q)
    throw DimensionError("testing moments do not match the training dimensions");
  const Matrix<Scalar> sx = test.raw_second_moment_x();
  const Matrix<Scalar> sxy = test.raw_cross_moment();
  const Scalar target = test.raw_second_moment_y().trace();
  const Scalar cross = -Scalar(2) * trace_of_product(sxy, Matrix<Scalar>(m_bhat.transpose()));
  const Matrix<Scalar> row = sandwich_row_scale(f);  // Z R
  const Scalar variance = tr_sigma * trace_of_product(sx, row);
  const Scalar bias = trace_of_product(sx, Matrix<Scalar>(m_bhat * m_bhat.transpose()));

  ErrorReport<Scalar> out;
  out.kind = ErrorKind::testing;
  out.lambda = lambda;
  out.p = p;
  out.n1 = f.n;
  out.breakdown = {{"target_second_moment", target},
                   {"cross", cross},
                   {"estimation_variance", variance},
                   {"estimation_bias", bias}};
  out.value = target + cross + variance + bias;
  return out;
}

}  // namespace detail

/// Conditional total testing error given the training covariates X1, for a
/// testing pair with moments `testing_moments`:
///   tr E[y2 y2^T] - 2 tr(E[x2 y2^T] M^T) + tr(E[x2 x2^T](tr S Z R + M M^T)),
/// with M = B_lambda - lambda N R B_lambda + R X1 A M_{E|X1}^T the mean of B_hat.
/// The testing sample size does not enter.
template <typename Scalar>
ErrorReport<Scalar> testing_error(const Matrix<Scalar>& x1_sample, const Matrix<Scalar>& b_lambda,
                                  const Matrix<Scalar>& cond_resid_mean_1,
                                  const Matrix<Scalar>& cond_resid_cov_1,
                                  const MomentSpec<Scalar>& testing_moments, Scalar lambda) {
  detail::require_positive_lambda(lambda, "testing_error");
  detail::check_conditional_inputs(x1_sample, b_lambda, cond_resid_mean_1, cond_resid_cov_1);
  const Matrix<Scalar> sigma = validated_covariance(cond_resid_cov_1, "conditional residual covariance");
  const auto f = resolvent_factors(x1_sample, lambda);
  const Scalar shift = lambda * Scalar(x1_sample.cols());
  const Matrix<Scalar> m_bhat = b_lambda - shift * f.resolvent * b_lambda +
                                f.resolvent * centered_gram(x1_sample, cond_resid_mean_1);
  return detail::testing_from_mean(f, m_bhat, sigma.trace(), testing_moments, lambda);
}

/// Testing error for y = B^T x + eps; the estimator mean is Z B.
template <typename Scalar>
ErrorReport<Scalar> testing_error_linear(const Matrix<Scalar>& x1_sample, const Matrix<Scalar>& b,
                                            const Matrix<Scalar>& sigma_eps_1,
                                            const MomentSpec<Scalar>& testing_moments, Scalar lambda) {
  detail::require_positive_lambda(lambda, "testing_error_linear");
  if (b.rows() != x1_sample.rows()) throw DimensionError("B must have p rows");
  const Matrix<Scalar> sigma = validated_covariance(sigma_eps_1, "Sigma_eps");
  if (sigma.rows() != b.cols()) throw DimensionError("Sigma_eps must be q x q");
  const auto f = resolvent_factors(x1_sample, lambda);
  const Matrix<Scalar> m_bhat = f.shrink * b;
  return detail::testing_from_mean(f, m_bhat, sigma.trace(), testing_moments, lambda);
}

}  // namespace sridge
