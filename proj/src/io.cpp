#include "sridge/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <type_traits>
#include <variant>

namespace sridge {
namespace {

using nlohmann::json;

VectorXd vector_from(const json& j, const std::string& name) {
  if (!j.is_array()) throw ConfigError(name + " must be an array of numbers");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(name + " must contain numbers only");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

// Row-major nested arrays.
MatrixXd matrix_from(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty()) throw ConfigError(name + " must be a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array()) throw ConfigError(name + " rows must be arrays");
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const VectorXd row = vector_from(j[static_cast<std::size_t>(r)], name);
    if (row.size() != cols) throw ConfigError(name + " has ragged rows");
    m.row(r) = row.transpose();
  }
  return m;
}

json to_json(const VectorXd& v) {
  json j = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

json to_json(const MatrixXd& m) {
  json j = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) j.push_back(to_json(VectorXd(m.row(r).transpose())));
  return j;
}

const json& required(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string("missing key \"") + key + "\"");
  return j.at(key);
}

double number(const json& j, const char* key) {
  const json& v = required(j, key);
  if (!v.is_number()) throw ConfigError(std::string("\"") + key + "\" must be a number");
  return v.get<double>();
}

template <typename Int>
Int positive_integer(const json& j, const char* key) {
  const json& v = required(j, key);
  if (!v.is_number_integer() || v.get<long long>() < 1)
    throw ConfigError(std::string("\"") + key + "\" must be a positive integer");
  return static_cast<Int>(v.get<long long>());
}

std::pair<double, double> interval(const json& j, const char* name) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(std::string(name) + " must be [a, b]");
  const double a = j[0].get<double>();
  const double b = j[1].get<double>();
  if (!(a < b)) throw ConfigError(std::string(name) + " needs a < b");
  return {a, b};
}

NamedFunction function_from(const json& j) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "exp-minus-k") return NamedFunction::exp_minus_k();
    if (name == "identity") return NamedFunction::identity();
    throw ConfigError("unknown builtin function \"" + name + "\"");
  }
  if (j.is_object() && j.contains("polynomial")) {
    const VectorXd c = vector_from(j.at("polynomial"), "polynomial");
    if (c.size() == 0) throw ConfigError("polynomial needs coefficients");
    return NamedFunction::polynomial(std::vector<double>(c.data(), c.data() + c.size()));
  }
  throw ConfigError("\"f\" must be a builtin name or {\"polynomial\": [c0, c1, ...]}");
}

Model model_from(const json& m, std::optional<int>& degree) {
  const json& kind_j = required(m, "kind");
  if (!kind_j.is_string()) throw ConfigError("model kind must be a string");
  const auto kind = kind_j.get<std::string>();

  if (kind == "linear") {
    LinearModel lin{matrix_from(required(m, "b"), "b"), matrix_from(required(m, "sigma_eps"), "sigma_eps"),
                    vector_from(required(m, "mu_x"), "mu_x"), matrix_from(required(m, "sigma_x"), "sigma_x")};
    if (lin.mu_x.size() != lin.p() || lin.sigma_x.rows() != lin.p() || lin.sigma_x.cols() != lin.p() ||
        lin.sigma_eps.rows() != lin.q() || lin.sigma_eps.cols() != lin.q())
      throw ConfigError("linear model parts have inconsistent dimensions");
    try {
      validated_covariance(lin.sigma_x, "sigma_x");
      validated_covariance(lin.sigma_eps, "sigma_eps");
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    return lin;
  }

  const double sigma = number(m, "sigma_eps");
  if (!(sigma >= 0)) throw ConfigError("sigma_eps must be nonnegative");
  std::optional<XiDistribution> test_xi;
  if (m.contains("test_interval")) {
    const auto [a, b] = interval(m.at("test_interval"), "test_interval");
    test_xi = XiDistribution::uniform_on(a, b);
  }

  if (kind == "poly_exp") {
    const int p = positive_integer<int>(m, "p");
    degree = p;
    PolyExpInstance inst{p, sigma, -1, 1};
    AdditiveModel add = inst.to_additive();
    add.test_xi = test_xi;
    return add;
  }

  if (kind == "additive" || kind == "multiplicative") {
    XiDistribution xi = XiDistribution::uniform_on(-1, 1);
    if (m.contains("support")) {
      const auto [lo, hi] = interval(m.at("support"), "support");
      xi = XiDistribution::uniform_on(lo, hi);
    }
    const int p = positive_integer<int>(m, "p");
    degree = p;
    FeatureMap features = FeatureMap::monomials(p, xi);
    NamedFunction f = function_from(required(m, "f"));
    if (kind == "additive") return AdditiveModel{f, xi, features, sigma, test_xi};
    return MultiplicativeModel{f, xi, features, number(m, "mu_eps"), sigma, test_xi};
  }
  throw ConfigError("unknown model kind \"" + kind + "\"");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("write failed for " + path);
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

MomentSpec<double> moment_spec_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  try {
    return MomentSpec<double>(vector_from(required(j, "mu_x"), "mu_x"), vector_from(required(j, "mu_y"), "mu_y"),
                              matrix_from(required(j, "sigma_x"), "sigma_x"),
                              matrix_from(required(j, "sigma_y"), "sigma_y"),
                              matrix_from(required(j, "sigma_xy"), "sigma_xy"));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

std::string moment_spec_to_json_text(const MomentSpec<double>& m) {
  json j{{"mu_x", to_json(m.mu_x())},
         {"mu_y", to_json(m.mu_y())},
         {"sigma_x", to_json(m.sigma_x())},
         {"sigma_y", to_json(m.sigma_y())},
         {"sigma_xy", to_json(m.sigma_xy())}};
  return j.dump(2) + "\n";
}

MomentSpec<double> read_moment_spec(const std::string& path) {
  return moment_spec_from_json_text(read_file(path));
}

void write_moment_spec(const MomentSpec<double>& m, const std::string& path) {
  write_file(path, moment_spec_to_json_text(m));
}

void write_sample_csv(const SamplePair<double>& s, std::ostream& out) {
  for (Eigen::Index i = 0; i < s.p(); ++i) out << (i ? "," : "") << "x_" << i + 1;
  for (Eigen::Index i = 0; i < s.q(); ++i) out << ",y_" << i + 1;
  out << "\n";
  for (Eigen::Index j = 0; j < s.n(); ++j) {
    for (Eigen::Index i = 0; i < s.p(); ++i) out << (i ? "," : "") << format_double(s.x()(i, j));
    for (Eigen::Index i = 0; i < s.q(); ++i) out << "," << format_double(s.y()(i, j));
    out << "\n";
  }
}

void write_sample_csv(const SamplePair<double>& s, const std::string& path) {
  std::ostringstream ss;
  write_sample_csv(s, ss);
  write_file(path, ss.str());
}

SamplePair<double> read_sample_csv(std::istream& in, Eigen::Index p) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("sample CSV is empty");
  std::vector<std::string> header;
  {
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) header.push_back(cell);
  }
  if (p < 0) {
    p = 0;
    for (const auto& h : header)
      if (h.rfind("x_", 0) == 0) ++p;
  }
  const auto width = static_cast<Eigen::Index>(header.size());
  if (p < 1 || p >= width) throw ConfigError("sample CSV header must list x_1..x_p then y_1..y_q");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw ConfigError("bad number \"" + cell + "\"");
      } catch (const std::logic_error&) {
        throw ConfigError("bad number \"" + cell + "\" in sample CSV");
      }
    }
    if (static_cast<Eigen::Index>(row.size()) != width) throw ConfigError("sample CSV row has the wrong width");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("sample CSV has no observations");
  const auto n = static_cast<Eigen::Index>(rows.size());
  MatrixXd x(p, n), y(width - p, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < width; ++i) {
      const double v = rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
      if (i < p) x(i, j) = v;
      else y(i - p, j) = v;
    }
  return SamplePair<double>(std::move(x), std::move(y));
}

SamplePair<double> read_sample_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  return read_sample_csv(in, -1);
}

void write_error_reports_csv(const std::vector<ErrorReport<double>>& reports, std::ostream& out) {
  std::vector<std::string> terms;
  for (const auto& r : reports)
    for (const auto& [name, v] : r.breakdown)
      if (std::find(terms.begin(), terms.end(), name) == terms.end()) terms.push_back(name);
  out << "kind,lambda,p,N1,N2,value";
  for (const auto& t : terms) out << "," << t;
  out << "\n";
  for (const auto& r : reports) {
    out << to_string(r.kind) << "," << format_double(r.lambda) << "," << r.p << "," << r.n1 << ","
        << (r.n2 ? std::to_string(*r.n2) : std::string()) << "," << format_double(r.value);
    for (const auto& t : terms) {
      out << ",";
      for (const auto& [name, v] : r.breakdown)
        if (name == t) out << format_double(v);
    }
    out << "\n";
  }
}

std::string mc_report_to_json_text(const std::vector<McReport>& reports, bool all_pass) {
  json j;
  j["pass"] = all_pass;
  j["quantities"] = json::array();
  for (const auto& r : reports)
    for (const auto& c : r.comparisons) {
      j["quantities"].push_back({{"quantity", c.quantity},
                                 {"formula", to_json(c.formula)},
                                 {"empirical", to_json(c.empirical)},
                                 {"standard_error", to_json(c.standard_error)},
                                 {"max_z", std::isfinite(c.max_z) ? json(c.max_z) : json("inf")},
                                 {"relative_difference", c.relative_difference},
                                 {"criterion", c.criterion},
                                 {"replications", r.replications},
                                 {"seed", r.seed},
                                 {"pass", c.pass}});
    }
  return j.dump(2) + "\n";
}

RunConfig run_config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    std::optional<int> degree;
    Model model = model_from(required(j, "model"), degree);
    RunConfig cfg;
    cfg.model = std::move(model);
    cfg.degree = degree;
    cfg.lambda = number(j, "lambda");
    if (!(cfg.lambda > 0) || !std::isfinite(cfg.lambda)) throw ConfigError("\"lambda\" must be positive");
    cfg.n1 = positive_integer<Eigen::Index>(j, "n1");
    if (cfg.n1 < 2) throw ConfigError("\"n1\" must be at least 2");
    cfg.n2 = j.contains("n2") ? positive_integer<Eigen::Index>(j, "n2") : cfg.n1;
    cfg.seed = 0;
    if (j.contains("seed")) {
      if (!j.at("seed").is_number_unsigned()) throw ConfigError("\"seed\" must be an unsigned integer");
      cfg.seed = j.at("seed").get<std::uint64_t>();
    }
    cfg.replications = j.contains("replications") ? positive_integer<std::size_t>(j, "replications") : 50000;
    if (j.contains("xi_point")) cfg.xi_point = number(j, "xi_point");
    if (j.contains("x_point")) cfg.x_point = vector_from(j.at("x_point"), "x_point");
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

RunConfig read_run_config(const std::string& path) { return run_config_from_json_text(read_file(path)); }

RunConfig with_degree(const RunConfig& cfg, int p) {
  if (!cfg.degree) throw ConfigError("the covariate dimension of this model cannot be changed");
  if (p < 1) throw ConfigError("p must be positive");
  RunConfig out = cfg;
  out.degree = p;
  std::visit(
      [p](auto& m) {
        if constexpr (!std::is_same_v<std::decay_t<decltype(m)>, LinearModel>)
          m.features = FeatureMap::monomials(p, m.xi);
      },
      out.model);
  return out;
}

}  // namespace sridge
