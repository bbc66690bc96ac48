#pragma once

// Training/testing error curves over the polynomial degree for the
// polynomial-exponential instance, with CSV and SVG output.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace sridge {

struct SweepSpec {
  std::string name = "sweep";
  int p_min = 1;
  int p_max = 12;
  double lambda = 0.9;
  long n1 = 20;
  long n2 = 20;
  double a = -1;
  double b = 1;
  /// Noise level of the response; not fixed by the experiment description.
  double sigma_eps = 0.3;
  std::uint64_t seed = 42;

  void validate() const;

  /// lambda = 0.9, N1 = N2 = 20, testing on [-1, 1].
  static SweepSpec figure1();
  /// lambda = 1, N1 = 30, N2 = 40, testing on [1, 2].
  static SweepSpec figure2();
  static SweepSpec preset(const std::string& name);
};

struct SweepRow {
  int p = 0;
  double mse_training = 0;
  double mse_testing = 0;
  double cond_number_sigma_x = 0;
};

/// One xi-sample of size n1 is drawn from the seed; the degree-p design is
/// the first p standardized monomial rows of it, so designs are nested.
std::vector<SweepRow> run_sweep(const SweepSpec& spec);

inline constexpr const char* kSweepCsvHeader = "p,mse_training,mse_testing,cond_number_sigma_x";

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);
/// Line plot of both error series against p.
std::string render_sweep_svg(const std::vector<SweepRow>& rows, const std::string& title);

/// Index of the smallest testing error.
std::size_t testing_argmin(const std::vector<SweepRow>& rows);

}  // namespace sridge
