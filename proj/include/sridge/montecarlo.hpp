#pragma once

// Seeded simulation oracles for the estimator law and the conditional
// training and testing errors.

#include "sridge/models.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace sridge {

struct McConfig {
  std::size_t replications = 50000;
  std::uint64_t seed = 42;
  double se_multiplier = 3;
  /// Relative Frobenius bound for matrix comparisons.
  double covariance_rel_tol = 0.05;
  /// 0 selects std::thread::hardware_concurrency().
  unsigned workers = 0;

  void validate() const;
};

/// Formula vs empirical value of one quantity. Scalars and entrywise checks
/// pass when |formula - empirical| <= se_multiplier * SE (plus 1e-10 relative
/// rounding slack, so noiseless runs compare exactly); matrix-shaped
/// covariance checks pass on the relative Frobenius bound.
struct McComparison {
  std::string quantity;
  MatrixXd formula;
  MatrixXd empirical;
  MatrixXd standard_error;
  bool pass = false;
  /// Human-readable statement of the pass rule that was applied.
  std::string criterion;
  /// max |formula - empirical| / SE over entries (entrywise checks).
  double max_z = 0;
  /// ||formula - empirical||_F / ||formula||_F.
  double relative_difference = 0;
};

struct McReport {
  std::vector<McComparison> comparisons;
  std::size_t replications = 0;
  std::uint64_t seed = 0;

  bool all_pass() const;
  const McComparison& at(const std::string& quantity) const;
};

/// Seed of replication `index` derived from the master seed; streams do not
/// depend on scheduling or the worker count.
std::uint64_t replication_seed(std::uint64_t master, std::uint64_t index);

/// Runs body(index, rng) for index in [0, count) across workers, giving each
/// index its own generator seeded by replication_seed.
void for_each_replication(std::size_t count, std::uint64_t master, unsigned workers,
                          const std::function<void(std::size_t, std::mt19937_64&)>& body);

/// Mean and standard error of per-replication scalars, reduced in index order.
struct ScalarSummary {
  double mean = 0;
  double standard_error = 0;
};
ScalarSummary summarize(const std::vector<double>& values);

/// Conditional moments of the training residuals at fixed covariates, after
/// checking the model is conditionally homoscedastic. Throws PreconditionError
/// otherwise.
struct FixedDesign {
  RidgeSolution<double> solution;
  MatrixXd cond_mean;  // q x N
  MatrixXd cond_cov;   // q x q
};
FixedDesign fixed_design(const Model& model, const CovariateSample& x1, double lambda);

McReport verify_estimator_law(const Model& model, const CovariateSample& x1, double lambda,
                              const McConfig& cfg);
McReport verify_training_error(const Model& model, const CovariateSample& x1, double lambda,
                               const McConfig& cfg);
McReport verify_testing_error(const Model& model, const CovariateSample& x1, double lambda,
                              Eigen::Index n2, const McConfig& cfg);

}  // namespace sridge
