#include "sridge/commands.hpp"
#include "sridge/io.hpp"

#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

using namespace sridge;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sridge_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config(const std::string& name) { return std::string(SRIDGE_CONFIG_DIR) + "/" + name; }

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SRIDGE_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(MomentSpecJson, RoundTrip) {
  std::mt19937_64 rng(81);
  const MomentSpec<double> m(oracle::random_matrix(3, 1, rng).col(0), oracle::random_matrix(2, 1, rng).col(0),
                             oracle::random_spd(3, rng), oracle::random_spd(2, rng), oracle::random_matrix(3, 2, rng));
  const auto back = moment_spec_from_json_text(moment_spec_to_json_text(m));
  EXPECT_EQ(back.mu_x(), m.mu_x());
  EXPECT_EQ(back.sigma_x(), m.sigma_x());
  EXPECT_EQ(back.sigma_xy(), m.sigma_xy());
  EXPECT_EQ(back.sigma_y(), m.sigma_y());
  const auto dir = scratch("moments");
  write_moment_spec(m, (dir / "m.json").string());
  EXPECT_EQ(read_moment_spec((dir / "m.json").string()).sigma_xy(), m.sigma_xy());
}

TEST(MomentSpecJson, RejectsBadInput) {
  EXPECT_THROW(moment_spec_from_json_text("{"), ConfigError);
  EXPECT_THROW(moment_spec_from_json_text(R"({"mu_x": [0], "mu_y": [0]})"), ConfigError);
  EXPECT_THROW(moment_spec_from_json_text(
                   R"({"mu_x":[0],"mu_y":[0],"sigma_x":[[-1]],"sigma_y":[[1]],"sigma_xy":[[0]]})"),
               Error);
}

TEST(SampleCsv, RoundTripIsExact) {
  std::mt19937_64 rng(82);
  const SamplePair<double> s(oracle::random_matrix(3, 17, rng), oracle::random_matrix(2, 17, rng));
  std::stringstream buf;
  write_sample_csv(s, buf);
  EXPECT_EQ(buf.str().substr(0, buf.str().find('\n')), "x_1,x_2,x_3,y_1,y_2");
  const auto back = read_sample_csv(buf, -1);
  EXPECT_EQ(back.x(), s.x());
  EXPECT_EQ(back.y(), s.y());
  std::stringstream bad("x_1,y_1\n1,abc\n");
  EXPECT_THROW(read_sample_csv(bad, -1), ConfigError);
}

TEST(ErrorCsv, HeaderAndRows) {
  ErrorReport<double> a;
  a.kind = ErrorKind::training;
  a.lambda = 0.9;
  a.p = 3;
  a.n1 = 20;
  a.value = 0.5;
  a.breakdown = {{"irreducible", 0.25}, {"cross", 0.25}};
  ErrorReport<double> b = a;
  b.kind = ErrorKind::testing;
  b.n2 = 40;
  b.breakdown = {{"irreducible", 0.5}};
  std::ostringstream out;
  write_error_reports_csv({a, b}, out);
  std::istringstream in(out.str());
  std::string header, r1, r2;
  std::getline(in, header);
  std::getline(in, r1);
  std::getline(in, r2);
  EXPECT_EQ(header.rfind("kind,lambda,p,N1,N2,value", 0), 0u);
  EXPECT_NE(header.find("irreducible"), std::string::npos);
  EXPECT_NE(header.find("cross"), std::string::npos);
  EXPECT_EQ(r1.rfind("training,0.90000000000000002,3,20,,0.5", 0), 0u);
  EXPECT_EQ(r2.rfind("testing,0.90000000000000002,3,20,40,0.5", 0), 0u);
}

TEST(RunConfigFile, ParsesShippedConfigs) {
  const auto poly = read_run_config(config("poly_exp.json"));
  EXPECT_EQ(model_p(poly.model), 3);
  EXPECT_DOUBLE_EQ(poly.lambda, 0.9);
  EXPECT_EQ(poly.n1, 20);
  EXPECT_EQ(poly.seed, 42u);
  EXPECT_EQ(poly.replications, 50000u);
  EXPECT_STREQ(model_kind(read_run_config(config("multiplicative.json")).model), "multiplicative");
  EXPECT_STREQ(model_kind(read_run_config(config("linear.json")).model), "linear");
  EXPECT_THROW(read_run_config(config("malformed.json")), ConfigError);
  EXPECT_THROW(read_run_config(config("does_not_exist.json")), ConfigError);
  EXPECT_EQ(model_p(with_degree(poly, 7).model), 7);
}

TEST(RunConfigFile, RejectsBadValues) {
  EXPECT_THROW(run_config_from_json_text(R"({"model":{"kind":"poly_exp","p":3,"sigma_eps":0.3},"lambda":0})"),
               ConfigError);
  EXPECT_THROW(run_config_from_json_text(R"({"model":{"kind":"cubic"},"lambda":1})"), ConfigError);
  EXPECT_THROW(run_config_from_json_text(R"({"model":{"kind":"poly_exp","p":-2,"sigma_eps":0.3},"lambda":1})"),
               ConfigError);
}

TEST(FormatDouble, SeventeenDigits) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(2.0), "2");
}

TEST(Sweep, SingleDegreeGivesOneRow) {
  SweepSpec s = SweepSpec::figure1();
  s.p_min = s.p_max = 3;
  const auto rows = run_sweep(s);
  ASSERT_EQ(rows.size(), 1u);
  std::ostringstream out;
  write_sweep_csv(rows, out);
  std::istringstream in(out.str());
  std::string line;
  int count = 0;
  std::getline(in, line);
  EXPECT_EQ(line, "p,mse_training,mse_testing,cond_number_sigma_x");
  while (std::getline(in, line)) ++count;
  EXPECT_EQ(count, 1);
}

TEST(Sweep, NestedDesignMatchesDirectComputation) {
  SweepSpec s = SweepSpec::figure1();
  s.p_max = 4;
  const auto rows = run_sweep(s);
  // Recompute p = 4 by hand from the same xi draw.
  std::mt19937_64 rng(s.seed);
  const auto d = XiDistribution::uniform_on(-1, 1);
  VectorXd xi(s.n1);
  for (Eigen::Index j = 0; j < xi.size(); ++j) xi(j) = d.draw(rng);
  const PolyExpInstance inst{4, s.sigma_eps, s.a, s.b};
  const Model model = inst.to_additive();
  const CovariateSample x1{std::get<AdditiveModel>(model).features.design(xi), xi};
  const auto fd = fixed_design(model, x1, s.lambda);
  const auto train = training_error<double>(x1.x, fd.solution.b_lambda, fd.cond_mean, fd.cond_cov, s.lambda);
  EXPECT_NEAR(rows.back().mse_training, train.value, 1e-12);
  EXPECT_EQ(rows.back().p, 4);
}

TEST(Sweep, RejectsBadSpecs) {
  SweepSpec s;
  s.p_min = 0;
  EXPECT_THROW(run_sweep(s), ArgumentError);
  s = SweepSpec::figure2();
  s.a = 3;
  EXPECT_THROW(s.validate(), ArgumentError);
  EXPECT_THROW(SweepSpec::preset("figure3"), ArgumentError);
}

TEST(Sweep, SvgHasTwoSeries) {
  SweepSpec s = SweepSpec::figure1();
  s.p_max = 5;
  const std::string svg = render_sweep_svg(run_sweep(s), "a < b & c");
  std::size_t count = 0, pos = 0;
  while ((pos = svg.find("<polyline", pos)) != std::string::npos) ++count, ++pos;
  EXPECT_EQ(count, 2u);
  EXPECT_NE(svg.find("id=\"axes\""), std::string::npos);
  EXPECT_NE(svg.find("a &lt; b &amp; c"), std::string::npos);
}

TEST(CmdSweep, OutputIsBitIdenticalAcrossRuns) {
  const auto d1 = scratch("sweep1"), d2 = scratch("sweep2");
  std::ostringstream out, err;
  SweepSpec s = SweepSpec::figure2();
  ASSERT_EQ(cmd_sweep(s, d1.string(), out, err), kExitPass) << err.str();
  ASSERT_EQ(cmd_sweep(s, d2.string(), out, err), kExitPass) << err.str();
  EXPECT_EQ(slurp(d1 / "figure2.csv"), slurp(d2 / "figure2.csv"));
  EXPECT_EQ(slurp(d1 / "figure2.svg"), slurp(d2 / "figure2.svg"));
}

TEST(CmdValidate, ExitCodes) {
  std::ostringstream out, err;
  ValidateOptions o;
  o.config = config("poly_exp.json");
  o.replications = 3000;
  o.workers = 1;
  const auto dir = scratch("validate");
  o.out_dir = dir.string();
  EXPECT_EQ(cmd_validate(o, out, err), kExitPass) << out.str() << err.str();
  EXPECT_TRUE(fs::exists(dir / "validation.json"));

  o.config = config("multiplicative.json");
  std::ostringstream err2;
  EXPECT_EQ(cmd_validate(o, out, err2), kExitFail);
  EXPECT_NE(err2.str().find("heteroscedastic"), std::string::npos);

  o.config = config("malformed.json");
  EXPECT_EQ(cmd_validate(o, out, err), kExitUsage);
  o.config = config("poly_exp.json");
  o.replications = 5;
  EXPECT_EQ(cmd_validate(o, out, err), kExitUsage);
}

TEST(CmdValidate, WorkerCountDoesNotChangeReport) {
  ValidateOptions o;
  o.config = config("poly_exp.json");
  o.replications = 1000;
  const auto d1 = scratch("w1"), d3 = scratch("w3");
  std::ostringstream out, err;
  o.workers = 1;
  o.out_dir = d1.string();
  cmd_validate(o, out, err);
  o.workers = 3;
  o.out_dir = d3.string();
  cmd_validate(o, out, err);
  EXPECT_EQ(slurp(d1 / "validation.json"), slurp(d3 / "validation.json"));
}

TEST(CmdErrors, PrintsReportsConsistentWithLibrary) {
  std::ostringstream out, err;
  ErrorsOptions o;
  o.config = config("poly_exp.json");
  ASSERT_EQ(cmd_errors(o, out, err), kExitPass) << err.str();
  const RunConfig cfg = read_run_config(config("poly_exp.json"));
  const auto sol = ridge_matrix(population_moments(cfg.model), cfg.lambda);
  const double value = characteristic_error(residual_law(cfg.model, sol)).value;
  EXPECT_NE(out.str().find("characteristic " + format_double(value)), std::string::npos) << out.str();
  EXPECT_NE(out.str().find("\ntesting "), std::string::npos);

  std::ostringstream out2, err2;
  o.lambda = -1.0;
  EXPECT_EQ(cmd_errors(o, out2, err2), kExitUsage);
}

TEST(CmdErrors, MissingTestingIntervalOmitsRow) {
  const auto dir = scratch("notest");
  const auto path = dir / "cfg.json";
  std::ofstream(path) << R"({"model":{"kind":"poly_exp","p":2,"sigma_eps":0.3},"lambda":0.9,"n1":20,"seed":1})";
  std::ostringstream out, err;
  ErrorsOptions o;
  o.config = path.string();
  EXPECT_EQ(cmd_errors(o, out, err), kExitPass) << err.str();
  EXPECT_NE(out.str().find("notice"), std::string::npos);
  EXPECT_EQ(out.str().find("\ntesting "), std::string::npos);
}

TEST(CommandLine, ExitCodes) {
  const auto dir = scratch("cli");
  EXPECT_EQ(run_cli("errors --config " + config("poly_exp.json") + " --lambda 0"), 2);
  EXPECT_EQ(run_cli("errors --config " + config("poly_exp.json") + " --lambda -3"), 2);
  EXPECT_EQ(run_cli("validate --config " + config("malformed.json")), 2);
  EXPECT_EQ(run_cli("sweep --preset nope --out " + dir.string()), 2);
  EXPECT_EQ(run_cli("sweep --preset figure1 --p-min 3 --p-max 3 --out " + dir.string()), 0);
  EXPECT_EQ(run_cli("validate --config " + config("multiplicative.json") + " --reps 200"), 1);
  EXPECT_EQ(run_cli("frobnicate"), 2);
}
