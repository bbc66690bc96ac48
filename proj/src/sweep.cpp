#include "sridge/sweep.hpp"

#include "sridge/io.hpp"
#include "sridge/models.hpp"
#include "sridge/prediction_error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace sridge {

void SweepSpec::validate() const {
  if (p_min < 1 || p_max < p_min) throw ArgumentError("sweep needs 1 <= p_min <= p_max");
  if (!(lambda > 0) || !std::isfinite(lambda)) throw ArgumentError("sweep lambda must be positive");
  if (n1 < 2 || n2 < 1) throw ArgumentError("sweep needs n1 >= 2 and n2 >= 1");
  if (!(a < b)) throw ArgumentError("sweep testing interval needs a < b");
  if (!(sigma_eps >= 0)) throw ArgumentError("sweep sigma_eps must be nonnegative");
}

SweepSpec SweepSpec::figure1() {
  SweepSpec s;
  s.name = "figure1";
  return s;
}

SweepSpec SweepSpec::figure2() {
  SweepSpec s;
  s.name = "figure2";
  s.lambda = 1.0;
  s.n1 = 30;
  s.n2 = 40;
  s.a = 1;
  s.b = 2;
  return s;
}

SweepSpec SweepSpec::preset(const std::string& name) {
  if (name == "figure1") return figure1();
  if (name == "figure2") return figure2();
  throw ArgumentError("unknown preset \"" + name + "\" (expected figure1 or figure2)");
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const auto training = XiDistribution::uniform_on(-1, 1);
  VectorXd xi(spec.n1);
  for (Eigen::Index j = 0; j < xi.size(); ++j) xi(j) = training.draw(rng);

  std::vector<SweepRow> rows;
  for (int p = spec.p_min; p <= spec.p_max; ++p) {
    const PolyExpInstance inst{p, spec.sigma_eps, spec.a, spec.b};
    const PolyExpMoments pm = poly_exp_population_moments(inst);
    const auto solution = ridge_matrix(pm.moments, spec.lambda);
    const Model model = inst.to_additive();
    const CovariateSample x1{std::get<AdditiveModel>(model).features.design(xi), xi};
    const MatrixXd m = conditional_mean_matrix(model, solution.b_lambda, x1);
    const MatrixXd s = MatrixXd::Constant(1, 1, spec.sigma_eps * spec.sigma_eps);
    const auto train = training_error<double>(x1.x, solution.b_lambda, m, s, spec.lambda);
    const auto test = testing_error<double>(x1.x, solution.b_lambda, m, s, poly_exp_testing_moments(inst),
                                            spec.lambda);
    rows.push_back(SweepRow{p, train.value, test.value, pm.cond_sigma_x});
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << kSweepCsvHeader << "\n";
  for (const auto& r : rows)
    out << r.p << "," << format_double(r.mse_training) << "," << format_double(r.mse_testing) << ","
        << format_double(r.cond_number_sigma_x) << "\n";
}

std::size_t testing_argmin(const std::vector<SweepRow>& rows) {
  if (rows.empty()) throw ArgumentError("empty sweep");
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].mse_testing < rows[best].mse_testing) best = i;
  return best;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v, const char* f = "%.2f") {
  char buf[48];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::string render_sweep_svg(const std::vector<SweepRow>& rows, const std::string& title) {
  if (rows.empty()) throw ArgumentError("empty sweep");
  constexpr double width = 720, height = 440;
  constexpr double left = 80, right = 160, top = 50, bottom = 60;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  double lo = rows.front().mse_training, hi = lo;
  for (const auto& r : rows) {
    lo = std::min({lo, r.mse_training, r.mse_testing});
    hi = std::max({hi, r.mse_training, r.mse_testing});
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const int p0 = rows.front().p;
  const int p1 = rows.back().p;
  const double p_span = std::max(1, p1 - p0);
  auto sx = [&](double p) { return left + (p1 == p0 ? plot_w / 2 : (p - p0) / p_span * plot_w); };
  auto sy = [&](double v) { return top + (hi - v) / (hi - lo) * plot_h; };

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  o << "  <rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  o << "  <text x=\"" << left + plot_w / 2 << "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"16\">"
    << xml_escape(title) << "</text>\n";

  // Axes.
  o << "  <g id=\"axes\" stroke=\"black\" stroke-width=\"1\">\n";
  o << "    <line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\""
    << top + plot_h << "\"/>\n";
  o << "    <line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
    << "\"/>\n";
  for (const auto& r : rows)
    o << "    <line x1=\"" << fmt(sx(r.p)) << "\" y1=\"" << top + plot_h << "\" x2=\"" << fmt(sx(r.p))
      << "\" y2=\"" << top + plot_h + 5 << "\"/>\n";
  constexpr int y_ticks = 5;
  for (int t = 0; t <= y_ticks; ++t) {
    const double v = lo + (hi - lo) * t / y_ticks;
    o << "    <line x1=\"" << left - 5 << "\" y1=\"" << fmt(sy(v)) << "\" x2=\"" << left << "\" y2=\""
      << fmt(sy(v)) << "\"/>\n";
  }
  o << "  </g>\n";
  o << "  <g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (const auto& r : rows)
    o << "    <text x=\"" << fmt(sx(r.p)) << "\" y=\"" << top + plot_h + 20 << "\" text-anchor=\"middle\">" << r.p
      << "</text>\n";
  for (int t = 0; t <= y_ticks; ++t) {
    const double v = lo + (hi - lo) * t / y_ticks;
    o << "    <text x=\"" << left - 8 << "\" y=\"" << fmt(sy(v) + 4) << "\" text-anchor=\"end\">"
      << fmt(v, "%.3g") << "</text>\n";
  }
  o << "    <text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\">p</text>\n";
  o << "    <text x=\"20\" y=\"" << top + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
    << top + plot_h / 2 << ")\">mean squared error</text>\n";
  o << "  </g>\n";

  auto series = [&](const char* id, const char* color, auto value) {
    o << "  <polyline id=\"" << id << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < rows.size(); ++i)
      o << (i ? " " : "") << fmt(sx(rows[i].p)) << "," << fmt(sy(value(rows[i])));
    o << "\"/>\n";
  };
  series("training", "#1f77b4", [](const SweepRow& r) { return r.mse_training; });
  series("testing", "#d62728", [](const SweepRow& r) { return r.mse_testing; });

  const double lx = left + plot_w + 20;
  o << "  <g id=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "    <rect x=\"" << lx << "\" y=\"" << top << "\" width=\"24\" height=\"3\" fill=\"#1f77b4\"/>\n";
  o << "    <text x=\"" << lx + 30 << "\" y=\"" << top + 5 << "\">training</text>\n";
  o << "    <rect x=\"" << lx << "\" y=\"" << top + 20 << "\" width=\"24\" height=\"3\" fill=\"#d62728\"/>\n";
  o << "    <text x=\"" << lx + 30 << "\" y=\"" << top + 25 << "\">testing</text>\n";
  o << "  </g>\n";
  o << "</svg>\n";
  return o.str();
}

}  // namespace sridge
