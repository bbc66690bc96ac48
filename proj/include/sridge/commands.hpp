#pragma once

// Subcommand bodies shared by the command-line tool and the tests.

#include "sridge/sweep.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace sridge {

inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitUsage = 2;

struct ValidateOptions {
  std::string config;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replications;
  unsigned workers = 0;
};

struct ErrorsOptions {
  std::string config;
  std::optional<int> p;
  std::optional<double> lambda;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

/// Runs the three Monte Carlo verifiers. 0 when all pass, 1 on a failed
/// comparison or violated hypothesis, 2 on a config error.
int cmd_validate(const ValidateOptions& opts, std::ostream& out, std::ostream& err);

/// Writes <out_dir>/<name>.csv and <out_dir>/<name>.svg.
int cmd_sweep(const SweepSpec& spec, const std::string& out_dir, std::ostream& out, std::ostream& err);

/// Prints characteristic, conditional characteristic, training and testing errors.
int cmd_errors(const ErrorsOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace sridge
