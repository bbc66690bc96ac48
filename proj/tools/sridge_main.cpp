#include "sridge/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace sridge;
  CLI::App app{"Ridge regression error formulas, Monte Carlo verification and degree sweeps"};
  app.require_subcommand(1);

  ValidateOptions vopts;
  auto* validate = app.add_subcommand("validate", "Check the closed forms against Monte Carlo");
  validate->add_option("--config", vopts.config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  validate->add_option("--out", vopts.out_dir, "Directory for validation.json");
  validate->add_option("--seed", vopts.seed, "Override the config seed");
  validate->add_option("--reps", vopts.replications, "Override the replication count");
  validate->add_option("--workers", vopts.workers, "Worker threads (0 = all cores)");

  std::string preset = "figure1";
  std::string sweep_out = ".";
  std::optional<std::uint64_t> sweep_seed;
  std::optional<int> p_min, p_max;
  std::optional<double> sweep_sigma;
  auto* sweep = app.add_subcommand("sweep", "Training and testing error over the polynomial degree");
  sweep->add_option("--preset", preset, "figure1 or figure2")->check(CLI::IsMember({"figure1", "figure2"}));
  sweep->add_option("--out", sweep_out, "Output directory");
  sweep->add_option("--seed", sweep_seed, "Seed of the training xi-sample");
  sweep->add_option("--p-min", p_min, "Smallest degree");
  sweep->add_option("--p-max", p_max, "Largest degree");
  sweep->add_option("--sigma-eps", sweep_sigma, "Noise standard deviation");

  ErrorsOptions eopts;
  auto* errors = app.add_subcommand("errors", "Print the error functionals for one configuration");
  errors->add_option("--config", eopts.config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  errors->add_option("--p", eopts.p, "Polynomial degree override");
  errors->add_option("--lambda", eopts.lambda, "Regularization strength override (> 0)");
  errors->add_option("--seed", eopts.seed, "Override the config seed");
  errors->add_option("--out", eopts.out_dir, "Directory for errors.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (*validate) return cmd_validate(vopts, std::cout, std::cerr);
  if (*errors) {
    if (eopts.lambda && !(*eopts.lambda > 0)) {
      std::cerr << "usage error: --lambda must be positive\n" << errors->help();
      return kExitUsage;
    }
    return cmd_errors(eopts, std::cout, std::cerr);
  }
  SweepSpec spec = SweepSpec::preset(preset);
  if (sweep_seed) spec.seed = *sweep_seed;
  if (p_min) spec.p_min = *p_min;
  if (p_max) spec.p_max = *p_max;
  if (sweep_sigma) spec.sigma_eps = *sweep_sigma;
  return cmd_sweep(spec, sweep_out, std::cout, std::cerr);
}
