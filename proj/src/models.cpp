#include "sridge/models.hpp"

#include "sridge/estimator_law.hpp"
#include "sridge/quadrature.hpp"

#include <cmath>
#include <utility>

namespace sridge {
namespace {

// Moment integrands are smooth on compact supports. The relative part takes
// over for large moments, where 1e-12 absolute is below rounding.
constexpr double kMomentTol = 1e-12;
constexpr double kMomentRelTol = 1e-13;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double integer_power(double v, int i) {
  double r = 1;
  for (int k = 0; k < i; ++k) r *= v;
  return r;
}

// Conditional first and second moments of a scalar response given xi.
struct ScalarResponse {
  ScalarFn mean;    // E[y | xi]
  ScalarFn second;  // E[y^2 | xi]
};

MomentSpec<double> xi_moments(const FeatureMap& features, const ScalarResponse& resp,
                              const XiDistribution& d) {
  const auto p = features.size();
  VectorXd mu_x(p);
  for (Eigen::Index i = 0; i < p; ++i)
    mu_x(i) = d.expectation([&, i](double z) { return features(z)(i); });
  const double mu_f = d.expectation(resp.mean);

  MatrixXd sigma_x(p, p);
  MatrixXd sigma_xy(p, 1);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = d.expectation([&, i, j](double z) {
        const VectorXd x = features(z);
        return (x(i) - mu_x(i)) * (x(j) - mu_x(j));
      });
      sigma_x(i, j) = v;
      sigma_x(j, i) = v;
    }
    sigma_xy(i, 0) = d.expectation(
        [&, i](double z) { return (features(z)(i) - mu_x(i)) * (resp.mean(z) - mu_f); });
  }
  // Var(y) = E[Var(y | xi)] + Var(E[y | xi]).
  const double var_mean = d.expectation([&](double z) {
    const double c = resp.mean(z) - mu_f;
    return c * c;
  });
  const double mean_var = d.expectation([&](double z) {
    const double m = resp.mean(z);
    return resp.second(z) - m * m;
  });
  MatrixXd sigma_y(1, 1);
  sigma_y(0, 0) = var_mean + mean_var;
  return MomentSpec<double>(mu_x, VectorXd::Constant(1, mu_f), sigma_x, sigma_y, sigma_xy);
}

ScalarResponse additive_response(const AdditiveModel& m) {
  const NamedFunction f = m.f;
  const double s2 = m.sigma_eps * m.sigma_eps;
  return {[f](double z) { return f(z); },
          [f, s2](double z) { return f(z) * f(z) + s2; }};
}

ScalarResponse multiplicative_response(const MultiplicativeModel& m) {
  const NamedFunction f = m.f;
  const double mu = m.mu_eps;
  const double raw = m.sigma_eps * m.sigma_eps + m.mu_eps * m.mu_eps;
  return {[f, mu](double z) { return mu * f(z); },
          [f, raw](double z) { return raw * f(z) * f(z); }};
}

double require_xi(const CovariatePoint<double>& point) {
  if (!point.xi) throw ArgumentError("this model needs the latent xi of the covariate point");
  return *point.xi;
}

}  // namespace

XiDistribution XiDistribution::uniform_on(double lo, double hi) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
    throw ArgumentError("uniform distribution needs finite lo < hi");
  XiDistribution d;
  d.lo = lo;
  d.hi = hi;
  const double w = hi - lo;
  d.pdf = [lo, hi, w](double z) { return (z >= lo && z <= hi) ? 1.0 / w : 0.0; };
  d.quantile = [lo, w](double u) { return lo + u * w; };
  d.uniform = true;
  return d;
}

double XiDistribution::expectation(const ScalarFn& g) const {
  return integrate([&](double z) { return g(z) * pdf(z); }, lo, hi, kMomentTol, kDefaultMaxPanels,
                   kMomentRelTol)
      .value;
}

double poly_exp_k() { return 0.5 * (std::exp(1.0) - std::exp(-1.0)); }

NamedFunction NamedFunction::exp_minus_k() {
  const double k = poly_exp_k();
  return {"exp-minus-k", [k](double z) { return std::exp(z) - k; }, {}};
}

NamedFunction NamedFunction::identity() { return {"identity", [](double z) { return z; }, {}}; }

NamedFunction NamedFunction::polynomial(std::vector<double> coefficients) {
  if (coefficients.empty()) throw ArgumentError("polynomial needs at least one coefficient");
  auto c = coefficients;
  return {"polynomial",
          [c](double z) {
            double r = 0;
            for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * z + *it;
            return r;
          },
          std::move(coefficients)};
}

NamedFunction NamedFunction::constant(double c) { return polynomial({c}); }

double uniform_unit_moment(int i) {
  if (i < 0) throw ArgumentError("moment order must be nonnegative");
  return (i % 2 == 0) ? 1.0 / (i + 1) : 0.0;
}

double uniform_unit_monomial_sd(int i) {
  if (i < 1) throw ArgumentError("monomial degree must be positive");
  const double m = uniform_unit_moment(i);
  return std::sqrt(1.0 / (2 * i + 1) - m * m);
}

FeatureMap FeatureMap::monomials(int p, const XiDistribution& training) {
  if (p < 1) throw ArgumentError("number of covariates must be positive");
  FeatureMap fm;
  fm.monomial_ = true;
  fm.means_.resize(p);
  fm.scales_.resize(p);
  const bool closed = training.is_standard_uniform();
  for (int i = 1; i <= p; ++i) {
    fm.generators_.push_back([i](double z) { return integer_power(z, i); });
    if (closed) {
      fm.means_(i - 1) = uniform_unit_moment(i);
      fm.scales_(i - 1) = uniform_unit_monomial_sd(i);
    } else {
      const double m = training.expectation([i](double z) { return integer_power(z, i); });
      const double v = training.expectation([i, m](double z) {
        const double c = integer_power(z, i) - m;
        return c * c;
      });
      fm.means_(i - 1) = m;
      fm.scales_(i - 1) = std::sqrt(v);
    }
  }
  return fm;
}

FeatureMap FeatureMap::from_functions(std::vector<ScalarFn> generators, const XiDistribution& training) {
  if (generators.empty()) throw ArgumentError("feature map needs at least one generator");
  FeatureMap fm;
  const auto p = static_cast<Eigen::Index>(generators.size());
  fm.means_.resize(p);
  fm.scales_.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const ScalarFn& g = generators[i];
    const double m = training.expectation(g);
    const double v = training.expectation([&g, m](double z) {
      const double c = g(z) - m;
      return c * c;
    });
    if (!(v > 0)) throw ArgumentError("feature generator is constant under the training distribution");
    fm.means_(i) = m;
    fm.scales_(i) = std::sqrt(v);
  }
  fm.generators_ = std::move(generators);
  return fm;
}

VectorXd FeatureMap::operator()(double xi) const {
  VectorXd x(size());
  for (Eigen::Index i = 0; i < size(); ++i) x(i) = (generators_[i](xi) - means_(i)) / scales_(i);
  return x;
}

MatrixXd FeatureMap::design(const VectorXd& xi) const {
  MatrixXd x(size(), xi.size());
  for (Eigen::Index j = 0; j < xi.size(); ++j) x.col(j) = (*this)(xi(j));
  return x;
}

AdditiveModel PolyExpInstance::to_additive() const {
  if (p < 1) throw ArgumentError("PolyExp degree must be positive");
  if (!(sigma_eps >= 0)) throw ArgumentError("sigma_eps must be nonnegative");
  const auto training = XiDistribution::uniform_on(-1, 1);
  return AdditiveModel{NamedFunction::exp_minus_k(), training, FeatureMap::monomials(p, training),
                       sigma_eps, XiDistribution::uniform_on(a, b)};
}

Eigen::Index model_p(const Model& m) {
  return std::visit([](const auto& v) { return v.p(); }, m);
}

Eigen::Index model_q(const Model& m) {
  return std::visit([](const auto& v) { return v.q(); }, m);
}

const char* model_kind(const Model& m) {
  return std::visit(Overloaded{[](const LinearModel&) { return "linear"; },
                               [](const AdditiveModel&) { return "additive"; },
                               [](const MultiplicativeModel&) { return "multiplicative"; }},
                    m);
}

MomentSpec<double> population_moments_additive(const AdditiveModel& model) {
  return xi_moments(model.features, additive_response(model), model.xi);
}

MomentSpec<double> population_moments_multiplicative(const MultiplicativeModel& model) {
  return xi_moments(model.features, multiplicative_response(model), model.xi);
}

MomentSpec<double> population_moments_linear(const LinearModel& model) {
  const auto q = model.q();
  if (model.mu_x.size() != model.p() || model.sigma_x.rows() != model.p() ||
      model.sigma_eps.rows() != q)
    throw DimensionError("linear model parts have inconsistent dimensions");
  const MatrixXd sxy = model.sigma_x * model.b;
  const MatrixXd sy = model.b.transpose() * model.sigma_x * model.b + model.sigma_eps;
  return MomentSpec<double>(model.mu_x, model.b.transpose() * model.mu_x, model.sigma_x, sy, sxy);
}

MomentSpec<double> population_moments(const Model& model) {
  return std::visit(Overloaded{[](const LinearModel& m) { return population_moments_linear(m); },
                               [](const AdditiveModel& m) { return population_moments_additive(m); },
                               [](const MultiplicativeModel& m) {
                                 return population_moments_multiplicative(m);
                               }},
                    model);
}

std::optional<MomentSpec<double>> testing_moments(const Model& model) {
  return std::visit(
      Overloaded{[](const LinearModel& m) -> std::optional<MomentSpec<double>> {
                   return population_moments_linear(m);
                 },
                 [](const AdditiveModel& m) -> std::optional<MomentSpec<double>> {
                   if (!m.test_xi) return std::nullopt;
                   return xi_moments(m.features, additive_response(m), *m.test_xi);
                 },
                 [](const MultiplicativeModel& m) -> std::optional<MomentSpec<double>> {
                   if (!m.test_xi) return std::nullopt;
                   return xi_moments(m.features, multiplicative_response(m), *m.test_xi);
                 }},
      model);
}

PolyExpMoments poly_exp_population_moments(const PolyExpInstance& inst) {
  const int p = inst.p;
  if (p < 1) throw ArgumentError("PolyExp degree must be positive");
  const double e = std::exp(1.0);
  const double einv = std::exp(-1.0);
  const double k = poly_exp_k();

  VectorXd m(p), s(p);
  for (int i = 1; i <= p; ++i) {
    m(i - 1) = uniform_unit_moment(i);
    s(i - 1) = uniform_unit_monomial_sd(i);
  }
  MatrixXd sigma_x(p, p);
  for (int i = 1; i <= p; ++i)
    for (int j = 1; j <= p; ++j)
      sigma_x(i - 1, j - 1) =
          (uniform_unit_moment(i + j) - m(i - 1) * m(j - 1)) / (s(i - 1) * s(j - 1));

  // E[xi^i e^xi] = (1/2) (-1)^i sum_{s=0}^{i} (i!/s!) ((-1)^s e - 1/e), with
  // i!/s! accumulated downward from s = i.
  MatrixXd sigma_xy(p, 1);
  for (int i = 1; i <= p; ++i) {
    double ratio = 1;  // i!/s! at s = i
    double sum = 0;
    for (int t = i; t >= 0; --t) {
      sum += ratio * ((t % 2 == 0 ? e : -e) - einv);
      ratio *= t;
    }
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
    sigma_xy(i - 1, 0) = (sign * sum - 2 * k * m(i - 1)) / (2 * s(i - 1));
  }
  MatrixXd sigma_y(1, 1);
  sigma_y(0, 0) = 0.5 * (1 - std::exp(-2.0)) + inst.sigma_eps * inst.sigma_eps;
  MomentSpec<double> spec(VectorXd::Zero(p), VectorXd::Zero(1), sigma_x, sigma_y, sigma_xy);
  return PolyExpMoments{spec, condition_number(spec.sigma_x())};
}

MomentSpec<double> poly_exp_testing_moments(const PolyExpInstance& inst) {
  const double a = inst.a;
  const double b = inst.b;
  if (!(a < b)) throw ArgumentError("testing interval needs a < b");
  const int p = inst.p;
  if (p < 1) throw ArgumentError("PolyExp degree must be positive");
  const double k = poly_exp_k();
  const double w = b - a;
  const auto train = XiDistribution::uniform_on(-1, 1);
  const FeatureMap features = FeatureMap::monomials(p, train);
  const auto test = XiDistribution::uniform_on(a, b);

  VectorXd mu_x(p);
  for (int i = 1; i <= p; ++i) {
    const double ez = (integer_power(b, i + 1) - integer_power(a, i + 1)) / ((i + 1) * w);
    mu_x(i - 1) = (ez - features.means()(i - 1)) / features.scales()(i - 1);
  }
  const double mu_y = (std::exp(b) - std::exp(a)) / w - k;

  MatrixXd sigma_x(p, p);
  MatrixXd sigma_xy(p, 1);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double v = test.expectation([&, i, j](double z) {
        const VectorXd x = features(z);
        return (x(i) - mu_x(i)) * (x(j) - mu_x(j));
      });
      sigma_x(i, j) = v;
      sigma_x(j, i) = v;
    }
    sigma_xy(i, 0) = test.expectation(
        [&, i](double z) { return (features(z)(i) - mu_x(i)) * (std::exp(z) - k - mu_y); });
  }
  const double ebar = (std::exp(b) - std::exp(a)) / w;
  MatrixXd sigma_y(1, 1);
  sigma_y(0, 0) = (std::exp(2 * b) - std::exp(2 * a)) / (2 * w) - ebar * ebar +
                  inst.sigma_eps * inst.sigma_eps;
  return MomentSpec<double>(mu_x, VectorXd::Constant(1, mu_y), sigma_x, sigma_y, sigma_xy);
}

CovariateSample draw_covariates(const Model& model, Eigen::Index n, Branch which, std::mt19937_64& rng) {
  if (n < 1) throw ArgumentError("sample size must be positive");
  return std::visit(
      Overloaded{[&](const LinearModel& m) {
                   const MatrixXd root = psd_sqrt<double>(m.sigma_x);
                   std::normal_distribution<double> normal;
                   MatrixXd g(m.p(), n);
                   for (Eigen::Index j = 0; j < n; ++j)
                     for (Eigen::Index i = 0; i < m.p(); ++i) g(i, j) = normal(rng);
                   MatrixXd x = (root * g).colwise() + m.mu_x;
                   return CovariateSample{std::move(x), VectorXd()};
                 },
                 [&](const auto& m) {
                   const XiDistribution& d =
                       (which == Branch::testing && m.test_xi) ? *m.test_xi : m.xi;
                   VectorXd xi(n);
                   for (Eigen::Index j = 0; j < n; ++j) xi(j) = d.draw(rng);
                   return CovariateSample{m.features.design(xi), std::move(xi)};
                 }},
      model);
}

MatrixXd draw_response(const Model& model, const CovariateSample& cov, std::mt19937_64& rng) {
  const auto n = cov.x.cols();
  std::normal_distribution<double> normal;
  return std::visit(
      Overloaded{[&](const LinearModel& m) {
                   const MatrixXd root = psd_sqrt<double>(m.sigma_eps);
                   MatrixXd g(m.q(), n);
                   for (Eigen::Index j = 0; j < n; ++j)
                     for (Eigen::Index i = 0; i < m.q(); ++i) g(i, j) = normal(rng);
                   return MatrixXd(m.b.transpose() * cov.x + root * g);
                 },
                 [&](const AdditiveModel& m) {
                   MatrixXd y(1, n);
                   for (Eigen::Index j = 0; j < n; ++j)
                     y(0, j) = m.f(cov.xi(j)) + m.sigma_eps * normal(rng);
                   return y;
                 },
                 [&](const MultiplicativeModel& m) {
                   MatrixXd y(1, n);
                   for (Eigen::Index j = 0; j < n; ++j)
                     y(0, j) = m.f(cov.xi(j)) * (m.mu_eps + m.sigma_eps * normal(rng));
                   return y;
                 }},
      model);
}

DrawnSample sample(const Model& model, Eigen::Index n, Branch which, std::mt19937_64& rng) {
  CovariateSample cov = draw_covariates(model, n, which, rng);
  MatrixXd y = draw_response(model, cov, rng);
  return DrawnSample{SamplePair<double>(std::move(cov.x), std::move(y)), std::move(cov.xi)};
}

DrawnSample sample(const Model& model, Eigen::Index n, Branch which, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  DrawnSample s = sample(model, n, which, rng);
  return DrawnSample{SamplePair<double>(s.pair.x(), s.pair.y(), seed), std::move(s.xi)};
}

ConditionalMoments conditional_residual_moments(const Model& model, const MatrixXd& b_lambda,
                                                const CovariatePoint<double>& point) {
  if (b_lambda.rows() != model_p(model) || b_lambda.cols() != model_q(model))
    throw DimensionError("B_lambda does not match the model dimensions");
  return std::visit(
      Overloaded{[&](const LinearModel& m) {
                   if (point.x.size() != m.p())
                     throw DimensionError("covariate point must have length p");
                   return ConditionalMoments{(m.b - b_lambda).transpose() * point.x, m.sigma_eps};
                 },
                 [&](const AdditiveModel& m) {
                   const double xi = require_xi(point);
                   const double mean = m.f(xi) - b_lambda.col(0).dot(m.features(xi));
                   return ConditionalMoments{VectorXd::Constant(1, mean),
                                             MatrixXd::Constant(1, 1, m.sigma_eps * m.sigma_eps)};
                 },
                 [&](const MultiplicativeModel& m) {
                   const double xi = require_xi(point);
                   const double f = m.f(xi);
                   const double mean = m.mu_eps * f - b_lambda.col(0).dot(m.features(xi));
                   return ConditionalMoments{
                       VectorXd::Constant(1, mean),
                       MatrixXd::Constant(1, 1, f * f * m.sigma_eps * m.sigma_eps)};
                 }},
      model);
}

ConditionalMoments conditional_residual_moments(const Model& model, const MatrixXd& b_lambda, double xi) {
  return conditional_residual_moments(model, b_lambda, CovariatePoint<double>{VectorXd(), xi});
}

MatrixXd conditional_mean_matrix(const Model& model, const MatrixXd& b_lambda, const CovariateSample& cov) {
  const auto n = cov.x.cols();
  MatrixXd m(model_q(model), n);
  const bool latent = !std::holds_alternative<LinearModel>(model);
  for (Eigen::Index j = 0; j < n; ++j) {
    CovariatePoint<double> pt{cov.x.col(j), latent ? std::optional<double>(cov.xi(j)) : std::nullopt};
    m.col(j) = conditional_residual_moments(model, b_lambda, pt).mean;
  }
  return m;
}

ResidualLaw<double> residual_law(const Model& model, const RidgeSolution<double>& solution) {
  const ResidualLaw<double> base = residual_moments(population_moments(model), solution);
  const MatrixXd b = solution.b_lambda;
  return base.with_conditional(
      [model, b](const CovariatePoint<double>& at) {
        return conditional_residual_moments(model, b, at).mean;
      },
      [model, b](const CovariatePoint<double>& at) {
        return conditional_residual_moments(model, b, at).cov;
      });
}

HomoscedasticityReport homoscedasticity_check(const Model& model, const MatrixXd& b_lambda,
                                              std::vector<double> grid, double tol) {
  if (!(tol >= 0)) throw ArgumentError("homoscedasticity tolerance must be nonnegative");
  std::vector<CovariatePoint<double>> points;
  if (const auto* lin = std::get_if<LinearModel>(&model)) {
    // The conditional covariance never depends on x; probe a few points anyway.
    points.push_back({lin->mu_x, std::nullopt});
    points.push_back({VectorXd::Zero(lin->p()), std::nullopt});
    points.push_back({VectorXd::Ones(lin->p()), std::nullopt});
  } else {
    const XiDistribution& d = std::holds_alternative<AdditiveModel>(model)
                                  ? std::get<AdditiveModel>(model).xi
                                  : std::get<MultiplicativeModel>(model).xi;
    if (grid.empty()) {
      const int g = kDefaultHomoscedasticityGrid;
      for (int i = 0; i < g; ++i) grid.push_back(d.lo + (d.hi - d.lo) * i / (g - 1));
    }
    for (double xi : grid) points.push_back({VectorXd(), xi});
  }
  if (points.empty()) throw ArgumentError("homoscedasticity grid is empty");

  HomoscedasticityReport out;
  out.covariance = conditional_residual_moments(model, b_lambda, points.front()).cov;
  double max_dev = 0;
  double max_norm = out.covariance.norm();
  for (const auto& pt : points) {
    const MatrixXd c = conditional_residual_moments(model, b_lambda, pt).cov;
    max_dev = std::max(max_dev, (c - out.covariance).norm());
    max_norm = std::max(max_norm, c.norm());
  }
  out.max_relative_spread = max_norm > 0 ? max_dev / max_norm : 0.0;
  out.homoscedastic = out.max_relative_spread <= tol;
  return out;
}

}  // namespace sridge
