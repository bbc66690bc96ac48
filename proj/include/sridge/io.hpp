#pragma once

// File formats: JSON moment specs, run configs and Monte Carlo reports; CSV
// samples and error reports.

#include "sridge/montecarlo.hpp"
#include "sridge/prediction_error.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sridge {

MomentSpec<double> moment_spec_from_json_text(const std::string& text);
std::string moment_spec_to_json_text(const MomentSpec<double>& m);
MomentSpec<double> read_moment_spec(const std::string& path);
void write_moment_spec(const MomentSpec<double>& m, const std::string& path);

/// One observation per row: x_1..x_p,y_1..y_q, header required.
void write_sample_csv(const SamplePair<double>& s, std::ostream& out);
void write_sample_csv(const SamplePair<double>& s, const std::string& path);
SamplePair<double> read_sample_csv(std::istream& in, Eigen::Index p);
SamplePair<double> read_sample_csv(const std::string& path);

/// Rows kind,lambda,p,N1,N2,value followed by the union of breakdown terms.
void write_error_reports_csv(const std::vector<ErrorReport<double>>& reports, std::ostream& out);

std::string mc_report_to_json_text(const std::vector<McReport>& reports, bool all_pass);

/// A model plus the run parameters read from a config file.
struct RunConfig {
  Model model;
  double lambda = 0;
  Eigen::Index n1 = 0;
  Eigen::Index n2 = 0;
  std::uint64_t seed = 0;
  std::size_t replications = 0;
  /// Latent point for the conditional characteristic error.
  std::optional<double> xi_point;
  /// Covariate point for the linear model.
  std::optional<VectorXd> x_point;
  /// Polynomial degree when the covariates are monomials of xi.
  std::optional<int> degree;
};

/// Parses a run config. Throws ConfigError on malformed input.
RunConfig run_config_from_json_text(const std::string& text);
RunConfig read_run_config(const std::string& path);

/// Rebuilds the monomial features of an xi-driven model at degree p.
RunConfig with_degree(const RunConfig& cfg, int p);

/// "%.17g".
std::string format_double(double v);

}  // namespace sridge
