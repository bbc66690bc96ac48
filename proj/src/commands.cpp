#include "sridge/commands.hpp"

#include "sridge/io.hpp"
#include "sridge/montecarlo.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace sridge {
namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("write failed for " + path.string());
}

std::filesystem::path prepare_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec || !std::filesystem::is_directory(p)) throw Error("cannot create output directory " + dir);
  return p;
}

void print_comparison(const McComparison& c, std::ostream& out) {
  out << (c.pass ? "PASS " : "FAIL ") << c.quantity << ": ";
  if (c.formula.size() == 1)
    out << "formula " << format_double(c.formula(0, 0)) << ", empirical " << format_double(c.empirical(0, 0))
        << ", SE " << format_double(c.standard_error(0, 0));
  else
    out << "relative difference " << format_double(c.relative_difference) << ", max z " << c.max_z;
  out << " [" << c.criterion << "]\n";
}

void print_report(const ErrorReport<double>& r, std::ostream& out) {
  out << to_string(r.kind) << " " << format_double(r.value);
  for (const auto& [name, v] : r.breakdown) out << " " << name << "=" << format_double(v);
  out << "\n";
}

CovariatePoint<double> characteristic_point(const RunConfig& cfg) {
  if (const auto* lin = std::get_if<LinearModel>(&cfg.model)) {
    const VectorXd x = cfg.x_point ? *cfg.x_point : lin->mu_x;
    if (x.size() != lin->p()) throw ConfigError("x_point must have length p");
    return {x, std::nullopt};
  }
  const double xi = cfg.xi_point.value_or(0.0);
  const FeatureMap& features = std::holds_alternative<AdditiveModel>(cfg.model)
                                   ? std::get<AdditiveModel>(cfg.model).features
                                   : std::get<MultiplicativeModel>(cfg.model).features;
  return {features(xi), xi};
}

}  // namespace

int cmd_validate(const ValidateOptions& opts, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = read_run_config(opts.config);
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  }
  McConfig mc;
  mc.seed = opts.seed.value_or(cfg.seed);
  mc.replications = opts.replications.value_or(cfg.replications);
  mc.workers = opts.workers;
  try {
    mc.validate();
  } catch (const Error& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  std::vector<McReport> reports;
  try {
    std::mt19937_64 rng(mc.seed);
    const CovariateSample x1 = draw_covariates(cfg.model, cfg.n1, Branch::training, rng);
    reports.push_back(verify_estimator_law(cfg.model, x1, cfg.lambda, mc));
    reports.push_back(verify_training_error(cfg.model, x1, cfg.lambda, mc));
    if (testing_moments(cfg.model))
      reports.push_back(verify_testing_error(cfg.model, x1, cfg.lambda, cfg.n2, mc));
    else
      out << "notice: no testing distribution configured; testing error not verified\n";
  } catch (const PreconditionError& e) {
    err << e.what() << "\n";
    return kExitFail;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFail;
  }

  bool pass = true;
  for (const auto& r : reports)
    for (const auto& c : r.comparisons) {
      print_comparison(c, out);
      pass = pass && c.pass;
    }
  if (opts.out_dir) {
    try {
      write_text(prepare_dir(*opts.out_dir) / "validation.json", mc_report_to_json_text(reports, pass));
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      return kExitUsage;
    }
  }
  out << (pass ? "all checks passed" : "some checks failed") << "\n";
  return pass ? kExitPass : kExitFail;
}

int cmd_sweep(const SweepSpec& spec, const std::string& out_dir, std::ostream& out, std::ostream& err) {
  try {
    spec.validate();
  } catch (const Error& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }
  std::filesystem::path dir;
  try {
    dir = prepare_dir(out_dir);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  std::vector<SweepRow> rows;
  try {
    rows = run_sweep(spec);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFail;
  }
  std::ostringstream csv;
  write_sweep_csv(rows, csv);
  std::ostringstream title;
  title << spec.name << ": lambda=" << spec.lambda << ", N1=" << spec.n1 << ", N2=" << spec.n2 << ", test on ["
        << spec.a << ", " << spec.b << "], sigma_eps=" << spec.sigma_eps << ", seed=" << spec.seed;
  try {
    write_text(dir / (spec.name + ".csv"), csv.str());
    write_text(dir / (spec.name + ".svg"), render_sweep_svg(rows, title.str()));
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  const auto best = rows[testing_argmin(rows)];
  out << "wrote " << (dir / (spec.name + ".csv")).string() << " and " << (dir / (spec.name + ".svg")).string()
      << "\n";
  out << "testing minimum " << format_double(best.mse_testing) << " at p=" << best.p << "\n";
  return kExitPass;
}

int cmd_errors(const ErrorsOptions& opts, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = read_run_config(opts.config);
    if (opts.p) cfg = with_degree(cfg, *opts.p);
    if (opts.lambda) {
      if (!(*opts.lambda > 0)) throw ConfigError("--lambda must be positive");
      cfg.lambda = *opts.lambda;
    }
    if (opts.seed) cfg.seed = *opts.seed;
  } catch (const Error& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  std::vector<ErrorReport<double>> reports;
  int code = kExitPass;
  try {
    const auto solution = ridge_matrix(population_moments(cfg.model), cfg.lambda);
    const auto law = residual_law(cfg.model, solution);
    reports.push_back(characteristic_error(law));
    reports.back().lambda = cfg.lambda;
    reports.back().p = model_p(cfg.model);
    reports.push_back(conditional_characteristic_error(law, characteristic_point(cfg)));
    reports.back().lambda = cfg.lambda;

    std::mt19937_64 rng(cfg.seed);
    const CovariateSample x1 = draw_covariates(cfg.model, cfg.n1, Branch::training, rng);
    try {
      const FixedDesign fd = fixed_design(cfg.model, x1, cfg.lambda);
      reports.push_back(training_error<double>(x1.x, fd.solution.b_lambda, fd.cond_mean, fd.cond_cov, cfg.lambda));
      if (const auto tm = testing_moments(cfg.model)) {
        reports.push_back(
            testing_error<double>(x1.x, fd.solution.b_lambda, fd.cond_mean, fd.cond_cov, *tm, cfg.lambda));
        reports.back().n2 = cfg.n2;
      } else {
        out << "notice: no testing distribution configured; testing row omitted\n";
      }
    } catch (const PreconditionError& e) {
      err << e.what() << "; training and testing rows omitted\n";
      code = kExitFail;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFail;
  }

  for (const auto& r : reports) print_report(r, out);
  if (opts.out_dir) {
    try {
      std::ostringstream csv;
      write_error_reports_csv(reports, csv);
      write_text(prepare_dir(*opts.out_dir) / "errors.csv", csv.str());
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      return kExitUsage;
    }
  }
  return code;
}

}  // namespace sridge
