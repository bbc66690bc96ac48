#pragma once

// Data-generating processes: Gaussian linear model, additive and
// multiplicative noise around a scalar function of a latent xi, and the
// polynomial-exponential instance with closed-form moments.

#include "sridge/ridge.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace sridge {

using ScalarFn = std::function<double(double)>;

/// Distribution of the latent scalar on a bounded support.
struct XiDistribution {
  double lo = -1;
  double hi = 1;
  ScalarFn pdf;
  ScalarFn quantile;  // inverse CDF on (0, 1)
  bool uniform = false;

  static XiDistribution uniform_on(double lo, double hi);
  bool is_standard_uniform() const { return uniform && lo == -1.0 && hi == 1.0; }
  /// E[g(xi)] by quadrature.
  double expectation(const ScalarFn& g) const;
  template <typename Urbg>
  double draw(Urbg& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return quantile(u(rng));
  }
};

/// A named scalar function of xi.
struct NamedFunction {
  std::string name;
  ScalarFn fn;
  /// Polynomial coefficients c_0..c_d when name == "polynomial".
  std::vector<double> coefficients;

  double operator()(double v) const { return fn(v); }

  /// e^xi - k with k = (e - 1/e)/2, the mean of e^xi on U(-1, 1).
  static NamedFunction exp_minus_k();
  static NamedFunction identity();
  static NamedFunction polynomial(std::vector<double> coefficients);
  static NamedFunction constant(double c);
};

/// (e - 1/e)/2.
double poly_exp_k();

/// Standardized covariates x_i = (phi_i(xi) - m_i) / s_i, with m_i, s_i the
/// mean and standard deviation of phi_i under the training distribution.
class FeatureMap {
 public:
  /// phi_i(xi) = xi^i for i = 1..p. Constants are closed form on U(-1, 1)
  /// and computed by quadrature otherwise.
  static FeatureMap monomials(int p, const XiDistribution& training);
  static FeatureMap from_functions(std::vector<ScalarFn> generators, const XiDistribution& training);

  Eigen::Index size() const { return static_cast<Eigen::Index>(generators_.size()); }
  const VectorXd& means() const { return means_; }
  const VectorXd& scales() const { return scales_; }
  bool monomial() const { return monomial_; }

  VectorXd operator()(double xi) const;
  /// Columns x(xi_j).
  MatrixXd design(const VectorXd& xi) const;

 private:
  std::vector<ScalarFn> generators_;
  VectorXd means_;
  VectorXd scales_;
  bool monomial_ = false;
};

/// Closed-form E[xi^i] = ((-1)^i + 1) / (2(i + 1)) for xi ~ U(-1, 1).
double uniform_unit_moment(int i);
/// Closed-form standard deviation of xi^i for xi ~ U(-1, 1).
double uniform_unit_monomial_sd(int i);

/// y = B^T x + eps, x ~ N(mu_x, Sigma_x), eps ~ N(0, Sigma_eps) independent.
struct LinearModel {
  MatrixXd b;
  MatrixXd sigma_eps;
  VectorXd mu_x;
  MatrixXd sigma_x;

  Eigen::Index p() const { return b.rows(); }
  Eigen::Index q() const { return b.cols(); }
};

/// y = f(xi) + eps, eps ~ N(0, sigma_eps^2) independent of xi.
struct AdditiveModel {
  NamedFunction f;
  XiDistribution xi;
  FeatureMap features;
  double sigma_eps = 0;
  /// Distribution of xi for testing samples; features keep the training constants.
  std::optional<XiDistribution> test_xi;

  Eigen::Index p() const { return features.size(); }
  Eigen::Index q() const { return 1; }
};

/// y = f(xi) eps, eps ~ N(mu_eps, sigma_eps^2) independent of xi.
struct MultiplicativeModel {
  NamedFunction f;
  XiDistribution xi;
  FeatureMap features;
  double mu_eps = 0;
  double sigma_eps = 0;
  std::optional<XiDistribution> test_xi;

  Eigen::Index p() const { return features.size(); }
  Eigen::Index q() const { return 1; }
};

/// Monomial covariates of degree 1..p of xi ~ U(-1, 1), f = e^xi - k,
/// additive noise; testing xi ~ U(a, b).
struct PolyExpInstance {
  int p = 1;
  double sigma_eps = 0;
  double a = -1;
  double b = 1;

  AdditiveModel to_additive() const;
};

using Model = std::variant<LinearModel, AdditiveModel, MultiplicativeModel>;

Eigen::Index model_p(const Model& m);
Eigen::Index model_q(const Model& m);
const char* model_kind(const Model& m);

MomentSpec<double> population_moments_additive(const AdditiveModel& model);
MomentSpec<double> population_moments_multiplicative(const MultiplicativeModel& model);
MomentSpec<double> population_moments_linear(const LinearModel& model);
MomentSpec<double> population_moments(const Model& model);

/// Moments of the testing pair; empty when the model has no testing distribution.
std::optional<MomentSpec<double>> testing_moments(const Model& model);

struct PolyExpMoments {
  MomentSpec<double> moments;
  /// Condition number of Sigma_x.
  double cond_sigma_x;
};

/// Closed-form population moments of the polynomial-exponential instance.
PolyExpMoments poly_exp_population_moments(const PolyExpInstance& inst);
/// Testing-pair moments on U(a, b); covariates standardized with the training constants.
MomentSpec<double> poly_exp_testing_moments(const PolyExpInstance& inst);

enum class Branch { training, testing };

/// Covariates with the latent values that generated them (xi is empty for
/// the linear model).
struct CovariateSample {
  MatrixXd x;
  VectorXd xi;
};

struct DrawnSample {
  SamplePair<double> pair;
  VectorXd xi;
};

CovariateSample draw_covariates(const Model& model, Eigen::Index n, Branch which, std::mt19937_64& rng);
/// Y | X for fixed covariates.
MatrixXd draw_response(const Model& model, const CovariateSample& cov, std::mt19937_64& rng);
DrawnSample sample(const Model& model, Eigen::Index n, Branch which, std::uint64_t seed);
DrawnSample sample(const Model& model, Eigen::Index n, Branch which, std::mt19937_64& rng);

struct ConditionalMoments {
  VectorXd mean;
  MatrixXd cov;
};

/// Mean and covariance of eps_lambda = y - B_lambda^T x given the covariate
/// point. xi-driven models read point.xi; the linear model reads point.x.
ConditionalMoments conditional_residual_moments(const Model& model, const MatrixXd& b_lambda,
                                                const CovariatePoint<double>& point);
ConditionalMoments conditional_residual_moments(const Model& model, const MatrixXd& b_lambda,
                                                double xi);

/// Columns of E[E_lambda | X] (q x N) for a covariate sample.
MatrixXd conditional_mean_matrix(const Model& model, const MatrixXd& b_lambda, const CovariateSample& cov);

/// Unconditional residual moments with conditional evaluators attached.
ResidualLaw<double> residual_law(const Model& model, const RidgeSolution<double>& solution);

struct HomoscedasticityReport {
  bool homoscedastic = true;
  double max_relative_spread = 0;
  /// Conditional covariance shared by every grid point when homoscedastic.
  MatrixXd covariance;
};

inline constexpr int kDefaultHomoscedasticityGrid = 33;
inline constexpr double kDefaultHomoscedasticityTol = 1e-12;

/// Evaluates the conditional residual covariance on a grid of xi points
/// (33 equispaced points on the support when grid is empty). Spread is
/// max_g ||S_g - S_0||_F / max_g ||S_g||_F.
HomoscedasticityReport homoscedasticity_check(const Model& model, const MatrixXd& b_lambda,
                                              std::vector<double> grid = {},
                                              double tol = kDefaultHomoscedasticityTol);

}  // namespace sridge
