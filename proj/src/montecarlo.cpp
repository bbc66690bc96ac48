#include "sridge/montecarlo.hpp"

#include "sridge/prediction_error.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace sridge {
namespace {

constexpr double kRoundingSlack = 1e-10;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

McComparison entrywise(std::string quantity, const MatrixXd& formula, const MatrixXd& empirical,
                       const MatrixXd& se, double k) {
  McComparison c;
  c.quantity = std::move(quantity);
  c.formula = formula;
  c.empirical = empirical;
  c.standard_error = se;
  c.pass = true;
  for (Eigen::Index j = 0; j < formula.cols(); ++j)
    for (Eigen::Index i = 0; i < formula.rows(); ++i) {
      const double d = std::abs(formula(i, j) - empirical(i, j));
      const double slack = kRoundingSlack * std::max(1.0, std::abs(formula(i, j)));
      if (d > k * se(i, j) + slack) c.pass = false;
      if (se(i, j) > 0) c.max_z = std::max(c.max_z, d / se(i, j));
      else if (d > slack) c.max_z = std::numeric_limits<double>::infinity();
    }
  const double fn = formula.norm();
  c.relative_difference = fn > 0 ? (formula - empirical).norm() / fn : (formula - empirical).norm();
  c.criterion = "|formula - empirical| <= " + std::to_string(k) + " SE";
  return c;
}

McComparison relative_frobenius(std::string quantity, const MatrixXd& formula,
                                const MatrixXd& empirical, const MatrixXd& se, double tol) {
  McComparison c;
  c.quantity = std::move(quantity);
  c.formula = formula;
  c.empirical = empirical;
  c.standard_error = se;
  const double fn = formula.norm();
  const double diff = (formula - empirical).norm();
  c.relative_difference = fn > 0 ? diff / fn : diff;
  c.pass = fn > 0 ? c.relative_difference <= tol : diff <= kRoundingSlack;
  for (Eigen::Index j = 0; j < formula.cols(); ++j)
    for (Eigen::Index i = 0; i < formula.rows(); ++i)
      if (se(i, j) > 0) c.max_z = std::max(c.max_z, std::abs(formula(i, j) - empirical(i, j)) / se(i, j));
  c.criterion = "relative Frobenius difference <= " + std::to_string(tol);
  return c;
}

McComparison scalar(std::string quantity, double formula, const ScalarSummary& s, double k) {
  return entrywise(std::move(quantity), MatrixXd::Constant(1, 1, formula),
                   MatrixXd::Constant(1, 1, s.mean), MatrixXd::Constant(1, 1, s.standard_error), k);
}

Eigen::Map<const VectorXd> as_vec(const MatrixXd& m) { return {m.data(), m.size()}; }

}  // namespace

void McConfig::validate() const {
  if (replications < 100) throw ArgumentError("Monte Carlo needs at least 100 replications");
  if (!(se_multiplier > 0)) throw ArgumentError("se_multiplier must be positive");
  if (!(covariance_rel_tol > 0)) throw ArgumentError("covariance_rel_tol must be positive");
}

bool McReport::all_pass() const {
  return std::all_of(comparisons.begin(), comparisons.end(), [](const auto& c) { return c.pass; });
}

const McComparison& McReport::at(const std::string& quantity) const {
  for (const auto& c : comparisons)
    if (c.quantity == quantity) return c;
  throw ArgumentError("report has no quantity " + quantity);
}

std::uint64_t replication_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

void for_each_replication(std::size_t count, std::uint64_t master, unsigned workers,
                          const std::function<void(std::size_t, std::mt19937_64&)>& body) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(count, 1)));
  auto run = [&](unsigned w) {
    std::mt19937_64 rng;
    for (std::size_t i = w; i < count; i += workers) {
      rng.seed(replication_seed(master, i));
      body(i, rng);
    }
  };
  if (workers == 1) {
    run(0);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        run(w);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

ScalarSummary summarize(const std::vector<double>& values) {
  if (values.size() < 2) throw ArgumentError("summarize needs at least two values");
  const double n = static_cast<double>(values.size());
  double mean = 0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ScalarSummary{mean, std::sqrt(ss / (n - 1) / n)};
}

FixedDesign fixed_design(const Model& model, const CovariateSample& x1, double lambda) {
  if (x1.x.rows() != model_p(model)) throw DimensionError("covariate sample does not match the model");
  auto solution = ridge_matrix(population_moments(model), lambda);
  const auto homo = homoscedasticity_check(model, solution.b_lambda);
  if (!homo.homoscedastic)
    throw PreconditionError(
        "heteroscedastic residuals: conditional homoscedasticity hypothesis violated (relative spread " +
        std::to_string(homo.max_relative_spread) + ")");
  MatrixXd m = conditional_mean_matrix(model, solution.b_lambda, x1);
  return FixedDesign{std::move(solution), std::move(m), homo.covariance};
}

McReport verify_estimator_law(const Model& model, const CovariateSample& x1, double lambda,
                              const McConfig& cfg) {
  cfg.validate();
  const FixedDesign fd = fixed_design(model, x1, lambda);
  const MatrixXd& b_lambda = fd.solution.b_lambda;
  const auto law = estimator_conditional_law<double>(x1.x, b_lambda, fd.cond_mean, fd.cond_cov, lambda);
  const auto pq = b_lambda.size();

  MatrixXd draws(pq, static_cast<Eigen::Index>(cfg.replications));
  for_each_replication(cfg.replications, cfg.seed, cfg.workers, [&](std::size_t i, std::mt19937_64& rng) {
    const MatrixXd y = draw_response(model, x1, rng);
    const auto est = ridge_estimate(SamplePair<double>(x1.x, y), lambda);
    const MatrixXd d = est.b_hat - b_lambda;
    draws.col(static_cast<Eigen::Index>(i)) = as_vec(d);
  });

  const double n = static_cast<double>(cfg.replications);
  const VectorXd mean = draws.rowwise().mean();
  const MatrixXd centered = draws.colwise() - mean;
  const MatrixXd cov = centered * centered.transpose() / (n - 1);
  // SE of each covariance entry from the fourth-moment sample variance.
  MatrixXd cov_se(pq, pq);
  for (Eigen::Index a = 0; a < pq; ++a)
    for (Eigen::Index b = 0; b < pq; ++b) {
      const auto prod = centered.row(a).cwiseProduct(centered.row(b));
      const double m2 = (prod.array() - cov(a, b)).square().sum() / (n - 1);
      cov_se(a, b) = std::sqrt(m2 / n);
    }
  const VectorXd mean_se = (cov.diagonal() / n).cwiseSqrt();

  McReport report;
  report.replications = cfg.replications;
  report.seed = cfg.seed;
  const MatrixXd bias_formula = law.bias;
  const MatrixXd bias_emp = Eigen::Map<const MatrixXd>(mean.data(), b_lambda.rows(), b_lambda.cols());
  const MatrixXd bias_se = Eigen::Map<const MatrixXd>(mean_se.data(), b_lambda.rows(), b_lambda.cols());
  report.comparisons.push_back(entrywise("estimator_bias", bias_formula, bias_emp, bias_se, cfg.se_multiplier));
  report.comparisons.push_back(relative_frobenius("estimator_covariance", law.law.vec_covariance(), cov,
                                                  cov_se, cfg.covariance_rel_tol));
  return report;
}

McReport verify_training_error(const Model& model, const CovariateSample& x1, double lambda,
                               const McConfig& cfg) {
  cfg.validate();
  const FixedDesign fd = fixed_design(model, x1, lambda);
  const auto formula = training_error<double>(x1.x, fd.solution.b_lambda, fd.cond_mean, fd.cond_cov, lambda);
  const double n = static_cast<double>(x1.x.cols());

  std::vector<double> values(cfg.replications);
  for_each_replication(cfg.replications, cfg.seed, cfg.workers, [&](std::size_t i, std::mt19937_64& rng) {
    const MatrixXd y = draw_response(model, x1, rng);
    const auto est = ridge_estimate(SamplePair<double>(x1.x, y), lambda);
    values[i] = (y - est.b_hat.transpose() * x1.x).squaredNorm() / n;
  });

  McReport report;
  report.replications = cfg.replications;
  report.seed = cfg.seed;
  report.comparisons.push_back(scalar("training_error", formula.value, summarize(values), cfg.se_multiplier));
  return report;
}

McReport verify_testing_error(const Model& model, const CovariateSample& x1, double lambda,
                              Eigen::Index n2, const McConfig& cfg) {
  cfg.validate();
  if (n2 < 1) throw ArgumentError("testing sample size must be positive");
  const auto test_moments = testing_moments(model);
  if (!test_moments) throw ArgumentError("model has no testing distribution");
  const FixedDesign fd = fixed_design(model, x1, lambda);
  const auto formula = testing_error<double>(x1.x, fd.solution.b_lambda, fd.cond_mean, fd.cond_cov,
                                             *test_moments, lambda);

  std::vector<double> values(cfg.replications);
  for_each_replication(cfg.replications, cfg.seed, cfg.workers, [&](std::size_t i, std::mt19937_64& rng) {
    const MatrixXd y1 = draw_response(model, x1, rng);
    const auto est = ridge_estimate(SamplePair<double>(x1.x, y1), lambda);
    const CovariateSample x2 = draw_covariates(model, n2, Branch::testing, rng);
    const MatrixXd y2 = draw_response(model, x2, rng);
    values[i] = (y2 - est.b_hat.transpose() * x2.x).squaredNorm() / static_cast<double>(n2);
  });

  McReport report;
  report.replications = cfg.replications;
  report.seed = cfg.seed;
  report.comparisons.push_back(scalar("testing_error", formula.value, summarize(values), cfg.se_multiplier));
  return report;
}

}  // namespace sridge
