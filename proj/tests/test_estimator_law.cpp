#include "sridge/estimator_law.hpp"

#include "sridge/models.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

using namespace sridge;

namespace {

struct LinearInstance {
  MatrixXd x, b, sigma, b_lambda;
};

LinearInstance linear_instance(std::mt19937_64& rng, int p, int q, int n, double lambda) {
  LinearInstance li;
  li.x = oracle::random_matrix(p, n, rng);
  li.b = oracle::random_matrix(p, q, rng);
  li.sigma = oracle::random_spd(q, rng);
  const MatrixXd sx = oracle::random_spd(p, rng);
  li.b_lambda = (sx + lambda * MatrixXd::Identity(p, p)).ldlt().solve(sx * li.b);
  return li;
}

}  // namespace

TEST(MatrixNormalLaw, Validation) {
  EXPECT_THROW(MatrixNormalLaw<double>(MatrixXd::Zero(2, 3), MatrixXd::Identity(3, 3), MatrixXd::Identity(3, 3)),
               DimensionError);
  MatrixXd indefinite = MatrixXd::Identity(2, 2);
  indefinite(1, 1) = -0.5;
  EXPECT_THROW(MatrixNormalLaw<double>(MatrixXd::Zero(2, 2), indefinite, MatrixXd::Identity(2, 2)),
               InvalidCovarianceError);
}

TEST(MatrixNormalLaw, KroneckerLayout) {
  MatrixXd u(2, 2), v(2, 2);
  u << 2, 0.5, 0.5, 1;
  v << 3, -1, -1, 4;
  const MatrixNormalLaw<double> law(MatrixXd::Zero(2, 2), u, v);
  const MatrixXd k = law.vec_covariance();
  for (int j = 0; j < 2; ++j)
    for (int l = 0; l < 2; ++l)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) EXPECT_EQ(k(j * 2 + a, l * 2 + b), v(j, l) * u(a, b));
}

TEST(MatrixNormalLaw, SecondMomentOuterHandCase) {
  const MatrixXd v = (VectorXd(3) << 1, 2, 3).finished().asDiagonal();
  const MatrixNormalLaw<double> centered(MatrixXd::Zero(2, 3), MatrixXd::Identity(2, 2), v);
  EXPECT_LE((second_moment_outer(centered) - 6 * MatrixXd::Identity(2, 2)).norm(), 1e-15);
  const MatrixXd m = (MatrixXd(2, 3) << 1, 0, 2, 0, 1, 0).finished();
  const MatrixNormalLaw<double> point(m, MatrixXd::Zero(2, 2), MatrixXd::Zero(3, 3));
  EXPECT_LE((second_moment_outer(point) - m * m.transpose()).norm(), 1e-15);
}

TEST(MatrixNormalSampler, MomentsConverge) {
  std::mt19937_64 rng(31);
  const MatrixXd mean = oracle::random_matrix(3, 2, rng);
  const MatrixNormalLaw<double> law(mean, oracle::random_spd(3, rng), oracle::random_spd(2, rng));
  const MatrixNormalSampler<double> sampler(law);
  constexpr int reps = 40000;
  MatrixXd draws(6, reps);
  MatrixXd outer = MatrixXd::Zero(3, 3);
  for (int r = 0; r < reps; ++r) {
    const MatrixXd d = sampler.draw(rng);
    draws.col(r) = Eigen::Map<const VectorXd>(d.data(), 6);
    outer += d * d.transpose();
  }
  outer /= reps;
  const VectorXd emp_mean = draws.rowwise().mean();
  const MatrixXd c = draws.colwise() - emp_mean;
  const MatrixXd emp_cov = c * c.transpose() / (reps - 1);
  const MatrixXd k = law.vec_covariance();
  for (int i = 0; i < 6; ++i)
    EXPECT_LE(std::abs(emp_mean(i) - mean.data()[i]), 4 * std::sqrt(k(i, i) / reps)) << i;
  EXPECT_LE((emp_cov - k).norm() / k.norm(), 0.03);
  const MatrixXd expected_outer = second_moment_outer(law);
  EXPECT_LE((outer - expected_outer).norm() / expected_outer.norm(), 0.03);
}

TEST(MatrixNormalSampler, TransposedLawMatchesTransposedDraws) {
  std::mt19937_64 rng(32);
  const MatrixNormalLaw<double> law(oracle::random_matrix(2, 3, rng), oracle::random_spd(2, rng),
                                    oracle::random_spd(3, rng));
  const auto t = law.transposed();
  EXPECT_EQ(t.mean(), law.mean().transpose());
  // vec(Z^T) is a permutation of vec(Z): entry (i, j) of Z sits at j*2+i in vec(Z), at i*3+j in vec(Z^T).
  const MatrixXd k = law.vec_covariance(), kt = t.vec_covariance();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 3; ++b) EXPECT_NEAR(k(j * 2 + i, b * 2 + a), kt(i * 3 + j, a * 3 + b), 1e-15);
}

TEST(MatrixNormalSampler, DegenerateScaleReturnsMean) {
  std::mt19937_64 rng(33);
  const MatrixXd mean = oracle::random_matrix(2, 2, rng);
  const MatrixNormalLaw<double> law(mean, MatrixXd::Zero(2, 2), MatrixXd::Identity(2, 2));
  for (int r = 0; r < 10; ++r) EXPECT_EQ(sample_matrix_normal(law, rng), mean);
}

TEST(MatrixNormalSampler, DeterministicForSeed) {
  const MatrixNormalLaw<double> law(MatrixXd::Zero(2, 2), MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2));
  std::mt19937_64 a(5), b(5);
  EXPECT_EQ(sample_matrix_normal(law, a), sample_matrix_normal(law, b));
}

TEST(EstimatorLaw, RowScaleFormsAgree) {
  std::mt19937_64 rng(34);
  for (double lambda : {0.1, 1.0, 10.0}) {
    const auto li = linear_instance(rng, 4, 2, 25, lambda);
    const auto law = estimator_law_linear<double>(li.x, li.b, li.sigma, lambda);
    const MatrixXd& row = law.law.row_scale();
    EXPECT_LE((row - law.shrink_times_resolvent).norm() / row.norm(), 1e-10);
    ASSERT_TRUE(law.row_scale_via_inverse_gram);
    EXPECT_LE((row - *law.row_scale_via_inverse_gram).norm() / row.norm(), 1e-10);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(row);
    EXPECT_GE(eig.eigenvalues().minCoeff(), psd_floor(eig.eigenvalues().cwiseAbs().maxCoeff()));
  }
}

TEST(EstimatorLaw, RowScalePsdWhenGramSingular) {
  std::mt19937_64 rng(35);
  const MatrixXd x = oracle::random_matrix(6, 4, rng);
  const auto law = estimator_law_linear<double>(x, oracle::random_matrix(6, 1, rng), MatrixXd::Ones(1, 1), 0.5);
  EXPECT_FALSE(law.row_scale_via_inverse_gram);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(law.law.row_scale());
  EXPECT_GE(eig.eigenvalues().minCoeff(), psd_floor(eig.eigenvalues().cwiseAbs().maxCoeff()));
  EXPECT_LE((law.law.row_scale() - law.shrink_times_resolvent).norm() / law.law.row_scale().norm(), 1e-10);
}

TEST(EstimatorLaw, GeneralLawSpecializesToLinearModel) {
  std::mt19937_64 rng(36);
  for (double lambda : {0.1, 1.0, 10.0}) {
    const auto li = linear_instance(rng, 3, 2, 15, lambda);
    const MatrixXd m = (li.b - li.b_lambda).transpose() * li.x;
    const auto general = estimator_conditional_law<double>(li.x, li.b_lambda, m, li.sigma, lambda);
    const auto example = estimator_law_linear<double>(li.x, li.b, li.sigma, lambda);
    // General law is for B_hat - B_lambda, the example for B_hat - B.
    const MatrixXd shifted = general.bias - (li.b - li.b_lambda);
    EXPECT_LE((shifted - example.bias).norm(), 1e-10 * std::max(1.0, example.bias.norm()));
    EXPECT_LE((general.law.row_scale() - example.law.row_scale()).norm(), 1e-12);
  }
}

TEST(EstimatorLaw, ExampleABiasHandValueAndLimit) {
  // One covariate, N = 2, x = (1, -1): X A X^T = 2, R = 1/(2 + 2 lambda).
  MatrixXd x(1, 2);
  x << 1, -1;
  const MatrixXd b = MatrixXd::Constant(1, 1, 3.0);
  const auto law = estimator_law_linear<double>(x, b, MatrixXd::Ones(1, 1), 0.5);
  EXPECT_NEAR(law.bias(0, 0), -0.5 * 2 / 3.0 * 3.0, 1e-15);
  EXPECT_NEAR(law.law.row_scale()(0, 0), 2 / 9.0, 1e-15);

  std::mt19937_64 rng(37);
  const auto li = linear_instance(rng, 3, 2, 20, 1.0);
  const auto big = estimator_law_linear<double>(li.x, li.b, li.sigma, 1e9);
  EXPECT_LE((big.bias + li.b).norm() / li.b.norm(), 1e-6);
  EXPECT_LE(big.law.row_scale().norm(), 1e-15);
}

TEST(EstimatorLaw, WhitenedDesignBiasIsPopulationShift) {
  // Rows orthogonal, centered, with squared norm N: X A X^T = N I, so the
  // bias is exactly B_lambda - B = -lambda/(1 + lambda) B for any N.
  std::mt19937_64 rng(38);
  const MatrixXd b = oracle::random_matrix(2, 1, rng);
  for (int n : {4, 40, 400}) {
    MatrixXd x(2, n);
    for (int j = 0; j < n; ++j) {
      x(0, j) = (j % 2) ? 1.0 : -1.0;
      x(1, j) = (j % 4 < 2) ? 1.0 : -1.0;
    }
    for (double lambda : {0.1, 1.0, 10.0}) {
      const auto law = estimator_law_linear<double>(x, b, MatrixXd::Ones(1, 1), lambda);
      EXPECT_LE((law.bias + lambda / (1 + lambda) * b).norm(), 1e-14) << n << " " << lambda;
      EXPECT_LE((law.law.row_scale() - MatrixXd::Identity(2, 2) / (n * (1 + lambda) * (1 + lambda))).norm(), 1e-15);
    }
  }
}

TEST(EstimatorLaw, RejectsNonPositiveLambda) {
  const MatrixXd x = MatrixXd::Ones(2, 3);
  EXPECT_THROW(estimator_law_linear<double>(x, MatrixXd::Ones(2, 1), MatrixXd::Ones(1, 1), 0.0), ArgumentError);
  EXPECT_THROW(estimator_conditional_law<double>(x, MatrixXd::Ones(2, 1), MatrixXd::Zero(1, 3), MatrixXd::Ones(1, 1),
                                                 -1.0),
               ArgumentError);
  EXPECT_THROW(estimator_conditional_law<double>(x, MatrixXd::Ones(2, 1), MatrixXd::Zero(1, 4), MatrixXd::Ones(1, 1),
                                                 1.0),
               DimensionError);
}

TEST(EstimatorLaw, MeanOfSimulatedEstimatorMatchesBias) {
  std::mt19937_64 rng(39);
  const auto li = linear_instance(rng, 3, 1, 12, 0.7);
  const auto law = estimator_law_linear<double>(li.x, li.b, li.sigma, 0.7);
  const MatrixNormalSampler<double> noise(MatrixNormalLaw<double>(MatrixXd::Zero(1, 12), li.sigma,
                                                                  MatrixXd::Identity(12, 12)));
  constexpr int reps = 20000;
  MatrixXd draws(3, reps);
  for (int r = 0; r < reps; ++r) {
    const MatrixXd y = li.b.transpose() * li.x + noise.draw(rng);
    draws.col(r) = ridge_estimate(SamplePair<double>(li.x, y), 0.7).b_hat - li.b;
  }
  const VectorXd mean = draws.rowwise().mean();
  const MatrixXd c = draws.colwise() - mean;
  const MatrixXd cov = c * c.transpose() / (reps - 1);
  for (int i = 0; i < 3; ++i) EXPECT_LE(std::abs(mean(i) - law.bias(i, 0)), 4 * std::sqrt(cov(i, i) / reps));
  EXPECT_LE((cov - law.law.vec_covariance()).norm() / cov.norm(), 0.04);
}

TEST(ResidualSecondMoments, HomoscedasticIdentitiesHold) {
  std::mt19937_64 rng(40);
  const int q = 2, n = 5;
  const MatrixXd m = oracle::random_matrix(q, n, rng);
  const MatrixXd sigma = oracle::random_spd(q, rng);
  const MatrixNormalSampler<double> sampler(MatrixNormalLaw<double>(m, sigma, MatrixXd::Identity(n, n)));
  std::vector<MatrixXd> samples;
  for (int r = 0; r < 20000; ++r) samples.push_back(sampler.draw(rng));
  const auto rep = residual_gram_identities(samples, m, sigma);
  EXPECT_LT(rep.max_column_z, 5.0);
  EXPECT_LT(rep.max_row_z, 5.0);
}

TEST(ResidualSecondMoments, HeteroscedasticColumnsAreDetected) {
  std::mt19937_64 rng(41);
  const int n = 4;
  const MatrixXd m = MatrixXd::Zero(1, n);
  const VectorXd scales = (VectorXd(n) << 0.2, 0.5, 1.0, 2.0).finished();
  std::normal_distribution<double> normal;
  std::vector<MatrixXd> samples;
  for (int r = 0; r < 20000; ++r) {
    MatrixXd e(1, n);
    for (int j = 0; j < n; ++j) e(0, j) = scales(j) * normal(rng);
    samples.push_back(e);
  }
  const MatrixXd avg = MatrixXd::Constant(1, 1, scales.squaredNorm() / n);
  const auto rep = residual_gram_identities(samples, m, avg);
  // Row sums still agree on average; the per-column diagonal does not.
  EXPECT_LT(rep.max_row_z, 5.0);
  EXPECT_GT(rep.max_column_z, 20.0);
}

TEST(EstimatorLaw, PolyExpDesignLawIsWellFormed) {
  const PolyExpInstance inst{3, 0.3};
  const Model model = inst.to_additive();
  const auto sol = ridge_matrix(poly_exp_population_moments(inst).moments, 0.9);
  std::mt19937_64 rng(42);
  const CovariateSample x1 = draw_covariates(model, 20, Branch::training, rng);
  const MatrixXd m = conditional_mean_matrix(model, sol.b_lambda, x1);
  const auto law = estimator_conditional_law<double>(x1.x, sol.b_lambda, m, MatrixXd::Constant(1, 1, 0.09), 0.9);
  EXPECT_EQ(law.law.rows(), 3);
  EXPECT_EQ(law.law.cols(), 1);
  EXPECT_LE((law.law.row_scale() - law.shrink_times_resolvent).norm() / law.law.row_scale().norm(), 1e-10);
}
