#include "qerg/experiment.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "qerg/diagnostics.hpp"
#include "qerg/montecarlo.hpp"
#include "qerg/spectral.hpp"

namespace qerg {

namespace {

int line_of(const YAML::Node& node) { return node.Mark().line >= 0 ? node.Mark().line + 1 : -1; }

double as_number(const YAML::Node& node, const std::string& what) {
  if (!node.IsScalar()) throw ConfigError(what + " must be a number", line_of(node));
  const std::string s = node.Scalar();
  if (s == "inf" || s == "infinity" || s == ".inf" || s == "Infinity")
    return std::numeric_limits<double>::infinity();
  try {
    return node.as<double>();
  } catch (const YAML::Exception&) {
    throw ConfigError(what + " must be a number, got '" + s + "'", line_of(node));
  }
}

std::vector<double> as_numbers(const YAML::Node& node, const std::string& what) {
  std::vector<double> out;
  if (node.IsScalar()) return {as_number(node, what)};
  if (!node.IsSequence()) throw ConfigError(what + " must be a list of numbers", line_of(node));
  for (const auto& item : node) out.push_back(as_number(item, what));
  return out;
}

std::string as_string(const YAML::Node& node, const std::string& what) {
  if (!node.IsScalar()) throw ConfigError(what + " must be a scalar", line_of(node));
  return node.Scalar();
}

void reject_unknown(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& kv : map) {
    const std::string key = kv.first.Scalar();
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where, line_of(kv.first));
  }
}

Matrix as_matrix(const YAML::Node& node, const std::string& what) {
  if (!node.IsSequence() || node.size() == 0) throw ConfigError(what + " must be a list of rows", line_of(node));
  const auto n = static_cast<Index>(node.size());
  Matrix M(n, n);
  for (Index i = 0; i < n; ++i) {
    const auto row = as_numbers(node[static_cast<std::size_t>(i)], what);
    if (static_cast<Index>(row.size()) != n) throw ConfigError(what + " must be square", line_of(node[i]));
    for (Index j = 0; j < n; ++j) M(i, j) = row[static_cast<std::size_t>(j)];
  }
  return M;
}

Vector as_vector(const YAML::Node& node, const std::string& what) {
  const auto v = as_numbers(node, what);
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

std::string brief(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

std::string fmt_p(double p) { return std::isinf(p) ? "inf" : fmt(p); }

class CsvBuffer {
 public:
  explicit CsvBuffer(std::string header) : header_(std::move(header)) {}
  void row(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) body_ << (k ? "," : "") << cells[k];
    body_ << "\n";
  }
  void write(const std::filesystem::path& path, const std::string& what) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << timestamp_header(what) << "\n" << header_ << "\n" << body_.str();
  }

 private:
  std::string header_;
  std::ostringstream body_;
};

unsigned env_threads() {
  if (const char* v = std::getenv("QERG_THREADS")) {
    const int n = std::atoi(v);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  return 1;
}

template <typename F>
void parallel_for(std::size_t count, unsigned threads, F&& body) {
  threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), count));
  if (threads <= 1) {
    for (std::size_t k = 0; k < count; ++k) body(k);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (unsigned w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t k = w; k < count; k += threads) body(k);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

Index resolve_state(const StateSpace& space, const std::string& id, Index fallback) {
  if (id.empty()) return fallback;
  try {
    return space.index_of(id);
  } catch (const std::exception&) {
    throw ConfigError("unknown state id '" + id + "'");
  }
}

Index nearest_origin(const StateSpace& space) {
  if (space.dim() == 0) return 0;
  Index best = 0;
  space.coords().rowwise().norm().minCoeff(&best);
  return best;
}

}  // namespace

const std::vector<std::string>& diagnostic_names() {
  static const std::vector<std::string> names = {"heat_content", "kernel_convergence", "quasi_ergodic",
                                                 "projection",   "qsd",                "gsd_profile",
                                                 "kappa",        "uniqueness",         "eigen_residuals"};
  return names;
}

ExperimentConfig ExperimentConfig::parse(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, e.mark.line + 1);
  }
  if (!root.IsMap()) throw ConfigError("configuration must be a mapping", line_of(root));
  reject_unknown(root,
                 {"model", "t_grid", "physical_time", "t0", "diagnostics", "mc", "output_dir", "tolerances"},
                 "configuration");
  ExperimentConfig c;
  c.diagnostics.clear();

  if (const auto m = root["model"]) {
    if (m.IsScalar()) {
      c.model = m.Scalar();
    } else if (m.IsMap()) {
      reject_unknown(m, {"id", "Q", "mu", "V"}, "model");
      c.model = m["id"] ? as_string(m["id"], "model.id") : "custom";
      if (c.model != "custom") throw ConfigError("model maps describe custom models (id: custom)", line_of(m));
      if (!m["Q"] || !m["V"]) throw ConfigError("custom model needs Q and V", line_of(m));
      c.custom_Q = as_matrix(m["Q"], "model.Q");
      c.custom_V = as_vector(m["V"], "model.V");
      if (m["mu"]) c.custom_mu = as_vector(m["mu"], "model.mu");
    } else {
      throw ConfigError("model must be a zoo id or a mapping", line_of(m));
    }
    try {
      if (c.model != "custom") make_zoo_model(c.model);
    } catch (const ModelError& e) {
      throw ConfigError(e.what(), line_of(m));
    }
  }

  const auto grid = root["t_grid"];
  if (!grid) throw ConfigError("t_grid is required", line_of(root));
  if (grid.IsMap()) {
    reject_unknown(grid, {"start", "stop", "count"}, "t_grid");
    if (!grid["start"] || !grid["stop"] || !grid["count"])
      throw ConfigError("t_grid needs start, stop and count", line_of(grid));
    const double start = as_number(grid["start"], "t_grid.start");
    const double stop = as_number(grid["stop"], "t_grid.stop");
    const double count = as_number(grid["count"], "t_grid.count");
    if (count < 2 || count != std::floor(count)) throw ConfigError("t_grid.count must be an integer >= 2", line_of(grid));
    for (int k = 0; k < static_cast<int>(count); ++k) c.t_grid.push_back(start + (stop - start) * k / (count - 1));
  } else {
    c.t_grid = as_numbers(grid, "t_grid");
  }
  for (std::size_t k = 0; k < c.t_grid.size(); ++k)
    if (!(c.t_grid[k] > 0.0) || (k && !(c.t_grid[k] > c.t_grid[k - 1])))
      throw ConfigError("t_grid must be positive and strictly increasing", line_of(grid));

  if (root["physical_time"]) c.physical_time = root["physical_time"].as<bool>();
  if (root["t0"]) c.t0 = as_number(root["t0"], "t0");
  if (root["output_dir"]) c.output_dir = as_string(root["output_dir"], "output_dir");

  if (const auto tol = root["tolerances"]) {
    reject_unknown(tol,
                   {"qsd_residual", "find_qsd", "duality", "eigen_residual", "rate_rel", "tail_fraction",
                    "zero_floor", "mc_z"},
                   "tolerances");
    auto set = [&](const char* key, double& field) {
      if (tol[key]) field = as_number(tol[key], std::string("tolerances.") + key);
    };
    set("qsd_residual", c.tol.qsd_residual);
    set("find_qsd", c.tol.find_qsd);
    set("duality", c.tol.duality);
    set("eigen_residual", c.tol.eigen_residual);
    set("rate_rel", c.tol.rate_rel);
    set("tail_fraction", c.tol.tail_fraction);
    set("zero_floor", c.tol.zero_floor);
    set("mc_z", c.tol.mc_z);
  }

  if (const auto diags = root["diagnostics"]) {
    if (!diags.IsSequence()) throw ConfigError("diagnostics must be a list", line_of(diags));
    for (const auto& item : diags) {
      DiagnosticRequest d;
      d.line = line_of(item);
      if (item.IsScalar()) {
        d.name = item.Scalar();
      } else if (item.IsMap()) {
        reject_unknown(item, {"name", "p", "C", "a", "b", "base", "slope", "sigma"}, "diagnostic");
        if (!item["name"]) throw ConfigError("diagnostic entry needs a name", d.line);
        d.name = as_string(item["name"], "diagnostic name");
        if (item["p"]) d.p = as_numbers(item["p"], "p");
        if (item["C"]) d.C = as_numbers(item["C"], "C");
        if (item["a"]) d.a = as_number(item["a"], "a");
        if (item["b"]) d.b = as_number(item["b"], "b");
        if (item["base"]) d.base = as_string(item["base"], "base");
        if (item["slope"]) d.slope = as_number(item["slope"], "slope");
        if (item["sigma"]) d.sigma = as_string(item["sigma"], "sigma");
      } else {
        throw ConfigError("diagnostic entries are names or mappings", d.line);
      }
      c.diagnostics.push_back(std::move(d));
    }
  } else {
    for (const auto& name : diagnostic_names()) {
      DiagnosticRequest d;
      d.name = name;
      c.diagnostics.push_back(std::move(d));
    }
  }

  if (const auto mc = root["mc"]) {
    reject_unknown(mc, {"n", "seed", "x0"}, "mc");
    McConfig m;
    if (mc["n"]) m.n = static_cast<std::size_t>(as_number(mc["n"], "mc.n"));
    if (mc["seed"]) m.seed = mc["seed"].as<std::uint64_t>();
    if (mc["x0"]) m.x0 = as_string(mc["x0"], "mc.x0");
    c.mc = m;
  }

  for (auto& d : c.diagnostics) {
    if (d.name == "quasi_ergodic" && d.p.empty()) d.p = {1.0, 2.0, std::numeric_limits<double>::infinity()};
    if (d.name == "kappa" && d.p.empty()) d.p = {std::numeric_limits<double>::infinity()};
    if (d.name == "kappa" && std::isnan(d.a) && std::isnan(d.b)) d.a = d.b = 1.0 / 3.0;
    if (d.name == "gsd_profile" && d.C.empty()) d.C = {2.0, 10.0};
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

void ExperimentConfig::validate() const {
  if (t_grid.empty()) throw ConfigError("t_grid is empty");
  if (!(t0 > 0.0)) throw ConfigError("t0 must be positive");
  if (!(tol.tail_fraction > 0.0 && tol.tail_fraction <= 1.0)) throw ConfigError("tail_fraction must be in (0,1]");
  if (!(tol.rate_rel > 0.0)) throw ConfigError("rate_rel must be positive");
  const auto& names = diagnostic_names();
  for (const auto& d : diagnostics) {
    if (std::find(names.begin(), names.end(), d.name) == names.end())
      throw ConfigError("unknown diagnostic '" + d.name + "'", d.line);
    for (double p : d.p)
      if (!(p >= 1.0)) throw ConfigError("p must lie in [1, inf]", d.line);
    for (double C : d.C)
      if (!(C > 0.0)) throw ConfigError("C levels must be positive", d.line);
    if (!(d.slope > 0.0)) throw ConfigError("slope must be positive", d.line);
    if (d.name == "kappa") {
      if (std::isnan(d.a) || std::isnan(d.b)) throw ConfigError("kappa needs a and b", d.line);
      if (!(d.b > 0.0 && d.b < 0.5 && d.a > 0.0)) throw ConfigError("kappa needs a > 0 and b in (0, 1/2)", d.line);
    }
    if (!std::isnan(d.a) && !std::isnan(d.b) && std::abs(d.a + 2.0 * d.b - 1.0) > 1e-9)
      throw ConfigError("a + 2b must equal 1", d.line);
  }
  if (mc && mc->n < 2) throw ConfigError("mc.n must be at least 2");
}

std::string ExperimentConfig::to_yaml() const {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  if (model == "custom") {
    e << YAML::Key << "model" << YAML::Value << YAML::BeginMap << YAML::Key << "id" << YAML::Value << "custom";
    e << YAML::Key << "Q" << YAML::Value << YAML::BeginSeq;
    for (Index i = 0; i < custom_Q.rows(); ++i) {
      e << YAML::Flow << YAML::BeginSeq;
      for (Index j = 0; j < custom_Q.cols(); ++j) e << custom_Q(i, j);
      e << YAML::EndSeq;
    }
    e << YAML::EndSeq;
    const Vector mu = custom_mu.size() ? custom_mu : Vector::Ones(custom_Q.rows());
    e << YAML::Key << "mu" << YAML::Value << YAML::Flow << std::vector<double>(mu.data(), mu.data() + mu.size());
    e << YAML::Key << "V" << YAML::Value << YAML::Flow
      << std::vector<double>(custom_V.data(), custom_V.data() + custom_V.size());
    e << YAML::EndMap;
  } else {
    e << YAML::Key << "model" << YAML::Value << model;
  }
  e << YAML::Key << "t_grid" << YAML::Value << YAML::Flow << t_grid;
  e << YAML::Key << "physical_time" << YAML::Value << physical_time;
  e << YAML::Key << "t0" << YAML::Value << t0;
  e << YAML::Key << "output_dir" << YAML::Value << output_dir;
  e << YAML::Key << "tolerances" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "qsd_residual" << YAML::Value << tol.qsd_residual;
  e << YAML::Key << "find_qsd" << YAML::Value << tol.find_qsd;
  e << YAML::Key << "duality" << YAML::Value << tol.duality;
  e << YAML::Key << "eigen_residual" << YAML::Value << tol.eigen_residual;
  e << YAML::Key << "rate_rel" << YAML::Value << tol.rate_rel;
  e << YAML::Key << "tail_fraction" << YAML::Value << tol.tail_fraction;
  e << YAML::Key << "zero_floor" << YAML::Value << tol.zero_floor;
  e << YAML::Key << "mc_z" << YAML::Value << tol.mc_z;
  e << YAML::EndMap;
  e << YAML::Key << "diagnostics" << YAML::Value << YAML::BeginSeq;
  for (const auto& d : diagnostics) {
    e << YAML::BeginMap << YAML::Key << "name" << YAML::Value << d.name;
    if (!d.p.empty()) {
      e << YAML::Key << "p" << YAML::Value << YAML::Flow << YAML::BeginSeq;
      for (double p : d.p) e << fmt_p(p);
      e << YAML::EndSeq;
    }
    if (!d.C.empty()) e << YAML::Key << "C" << YAML::Value << YAML::Flow << d.C;
    if (!std::isnan(d.a)) e << YAML::Key << "a" << YAML::Value << d.a;
    if (!std::isnan(d.b)) e << YAML::Key << "b" << YAML::Value << d.b;
    if (!d.base.empty()) e << YAML::Key << "base" << YAML::Value << d.base;
    e << YAML::Key << "slope" << YAML::Value << d.slope;
    if (!d.sigma.empty()) e << YAML::Key << "sigma" << YAML::Value << d.sigma;
    e << YAML::EndMap;
  }
  e << YAML::EndSeq;
  if (mc) {
    e << YAML::Key << "mc" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "n" << YAML::Value << mc->n;
    e << YAML::Key << "seed" << YAML::Value << mc->seed;
    if (!mc->x0.empty()) e << YAML::Key << "x0" << YAML::Value << mc->x0;
    e << YAML::EndMap;
  }
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

MarkovModel build_config_model(const ExperimentConfig& config) {
  if (config.model != "custom") return make_zoo_model(config.model).model;
  const Index n = config.custom_Q.rows();
  if (config.custom_V.size() != n) throw ConfigError("custom model: V must have one entry per state");
  return build_ctmc_model(n, KernelRecipe::user(config.custom_Q), config.custom_mu,
                          PotentialSpec::custom(config.custom_V), "custom", false);
}

std::string timestamp_header(const std::string& what) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << "# qerg " << what << " generated " << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

ReportBundle run_experiment(ExperimentConfig config) {
  if (const char* dir = std::getenv("QERG_OUTPUT_DIR"); dir && *dir) config.output_dir = dir;
  const unsigned threads = env_threads();
  set_monte_carlo_threads(threads);
  config.validate();

  const MarkovModel model = build_config_model(config);
  const std::string id = model.id();
  const auto& space = model.space();
  const double scale = config.physical_time ? model.time_scale() : 1.0;
  const std::size_t T = config.t_grid.size();
  std::vector<double> tm(T);
  for (std::size_t k = 0; k < T; ++k) tm[k] = config.t_grid[k] * scale;

  namespace fs = std::filesystem;
  const fs::path dir(config.output_dir);
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "config.yaml");
    out << timestamp_header("config") << "\n" << config.to_yaml();
  }

  ReportBundle report;
  report.output_dir = dir.string();
  auto verdict = [&](std::string claim, bool pass, std::string detail) {
    report.verdicts.push_back({std::move(claim), pass, std::move(detail)});
  };
  CsvBuffer series("model_id,diagnostic,t,value,extra");
  CsvBuffer summary("model_id,diagnostic,rate,intercept,r2");
  CsvBuffer mc_csv("model_id,target,t,mean,stderr,n,seed");

  std::vector<std::optional<KernelOperator>> ops(T);
  parallel_for(T, threads, [&](std::size_t k) { ops[k].emplace(feynman_kac_operator(model, tm[k])); });

  auto finish = [&] {
    series.write(dir / "series.csv", "series");
    summary.write(dir / "summary.csv", "summary");
    if (config.mc) mc_csv.write(dir / "mc.csv", "mc");
    std::ofstream out(dir / "verdict.txt");
    out << timestamp_header("verdict") << "\n";
    bool all = true;
    for (const auto& v : report.verdicts) {
      out << (v.pass ? "PASS " : "FAIL ") << v.claim << " : " << v.detail << "\n";
      all = all && v.pass;
    }
    out << "overall " << (all ? "PASS" : "FAIL") << "\n";
    report.exit_code = all ? 0 : 2;
    return report;
  };

  if (!model.irreducible()) {
    for (std::size_t k = 0; k < T; ++k) {
      const auto search = find_qsd(*ops[k], config.tol.find_qsd);
      series.row({id, "qsd_separation", fmt(config.t_grid[k]), fmt(search.separation), ""});
      verdict("qsd_uniqueness t=" + fmt(config.t_grid[k]), search.unique,
              search.unique ? "dominant eigenvalue simple" : search.warning);
    }
    verdict("spectral", false, "jump matrix is reducible; principal triple not defined");
    return finish();
  }

  const SpectralData spec = principal_triple(model);
  {
    std::ofstream out(dir / "spectral.txt");
    out << timestamp_header("spectral") << "\n";
    out << "model " << id << "\ntime_scale " << fmt(model.time_scale()) << "\n";
    spec.write(out);
  }
  const double expected_rate = spec.gap * scale;
  const Vector ones = Vector::Ones(space.size());

  auto rate_check = [&](const std::string& name, const std::vector<double>& values) {
    DiagnosticSeries s(name);
    bool all_zero = true;
    for (std::size_t k = 0; k < T; ++k) {
      s.push(config.t_grid[k], values[k]);
      all_zero = all_zero && std::abs(values[k]) <= config.tol.zero_floor;
    }
    if (all_zero) {
      verdict(name + " decay rate", true, "series vanishes to " + brief(config.tol.zero_floor));
      return;
    }
    try {
      const auto fit = fit_exponential_rate(s, config.tol.tail_fraction);
      summary.row({id, name, fmt(fit.rate), fmt(fit.intercept), fmt(fit.r_squared)});
      const double rel = std::abs(-fit.rate - expected_rate) / expected_rate;
      verdict(name + " decay rate", rel <= config.tol.rate_rel,
              "fitted " + fmt(-fit.rate) + " vs gap " + fmt(expected_rate) + " (rel " + fmt(rel) + ")");
    } catch (const FitError& e) {
      verdict(name + " decay rate", false, e.what());
    }
  };

  for (const auto& d : config.diagnostics) {
    const Index sigma_state = resolve_state(space, d.sigma, 0);
    Vector point = Vector::Zero(space.size());
    point(sigma_state) = 1.0;

    if (d.name == "heat_content") {
      bool dual_ok = true, bound_ok = true, simple_ok = true;
      const bool invariant = model.dual_is_stochastic(1e-10);
      for (std::size_t k = 0; k < T; ++k) {
        const double Z = heat_content(*ops[k]);
        const double Zd = heat_content(adjoint(*ops[k]));
        const double bound = heat_content_upper_bound(model, tm[k]);
        const double simple = (-tm[k] * model.V().array()).exp().matrix().dot(space.mu());
        series.row({id, "heat_content", fmt(config.t_grid[k]), fmt(Z), "bound=" + fmt(bound)});
        dual_ok = dual_ok && std::abs(Z - Zd) <= config.tol.duality * std::max(1.0, Z);
        bound_ok = bound_ok && Z <= bound * (1.0 + 1e-10);
        simple_ok = simple_ok && Z <= simple * (1.0 + 1e-12);
      }
      verdict("heat content duality Z(op) = Z(adjoint)", dual_ok, "tolerance " + brief(config.tol.duality));
      verdict("heat content bound Z(t) <= (1/t) int_0^t <P_s exp(-tV), 1> ds", bound_ok, "all grid times");
      if (invariant) verdict("heat content bound Z(t) <= int exp(-tV) dmu", simple_ok, "mu is invariant for Q");
    } else if (d.name == "kernel_convergence") {
      std::vector<double> v(T);
      for (std::size_t k = 0; k < T; ++k) {
        v[k] = kernel_convergence_error(*ops[k], spec);
        series.row({id, "kernel_convergence", fmt(config.t_grid[k]), fmt(v[k]), ""});
      }
      rate_check("kernel_convergence", v);
    } else if (d.name == "quasi_ergodic") {
      std::vector<std::vector<double>> errs(d.p.size(), std::vector<double>(T));
      for (std::size_t j = 0; j < d.p.size(); ++j) {
        for (std::size_t k = 0; k < T; ++k) {
          errs[j][k] = quasi_ergodic_error(*ops[k], spec, point, d.p[j]);
          series.row({id, "quasi_ergodic", fmt(config.t_grid[k]), fmt(errs[j][k]),
                      "p=" + fmt_p(d.p[j]) + ";sigma=" + space.id(sigma_state)});
        }
        rate_check("quasi_ergodic p=" + fmt_p(d.p[j]), errs[j]);
      }
      // ||g||_{q1} <= mu(M)^{1/q1 - 1/q2} ||g||_{q2} for q1 <= q2, q the dual index of p.
      bool ordered = true;
      const double mass = space.total_mass();
      for (std::size_t i = 0; i < d.p.size(); ++i)
        for (std::size_t j = 0; j < d.p.size(); ++j) {
          const double qi = conjugate_exponent(d.p[i]), qj = conjugate_exponent(d.p[j]);
          if (!(qi < qj)) continue;
          const double factor = std::pow(mass, 1.0 / qi - (std::isinf(qj) ? 0.0 : 1.0 / qj));
          for (std::size_t k = 0; k < T; ++k)
            ordered = ordered && errs[i][k] <= factor * errs[j][k] * (1.0 + 1e-10) + 1e-300;
        }
      verdict("quasi_ergodic Holder ordering across p", ordered, "mu(M) = " + fmt(mass));
    } else if (d.name == "projection") {
      std::vector<double> v(T);
      for (std::size_t k = 0; k < T; ++k) {
        v[k] = asymptotic_projection_error(*ops[k], spec, space.mu(), ones);
        series.row({id, "projection", fmt(config.t_grid[k]), fmt(v[k]), "sigma=mu;f=1"});
      }
      rate_check("projection (heat content asymptotics)", v);
    } else if (d.name == "qsd") {
      const auto m = qsd_from_spectral(spec);
      double worst_res = 0.0, worst_gap = 0.0;
      std::string warning;
      for (std::size_t k = 0; k < T; ++k) {
        const double res = qsd_residual(m, *ops[k]);
        const auto search = find_qsd(*ops[k], config.tol.find_qsd);
        const double diff = (search.measure.weights - m.weights).cwiseAbs().maxCoeff();
        series.row({id, "qsd_residual", fmt(config.t_grid[k]), fmt(res), ""});
        series.row({id, "find_qsd_distance", fmt(config.t_grid[k]), fmt(diff), ""});
        worst_res = std::max(worst_res, res);
        worst_gap = std::max(worst_gap, diff);
        if (!search.unique) warning = search.warning;
      }
      verdict("qsd_residual(m) <= " + brief(config.tol.qsd_residual), worst_res <= config.tol.qsd_residual,
              "max " + fmt(worst_res));
      verdict("find_qsd agrees with psi0 mu", warning.empty() && worst_gap <= config.tol.find_qsd,
              warning.empty() ? "max " + fmt(worst_gap) : warning);
    } else if (d.name == "gsd_profile") {
      const Index base = d.base.empty() ? nearest_origin(space) : resolve_state(space, d.base, 0);
      const double floor = 1.0 / spec.phi0.maxCoeff();
      bool reverse_ok = true;
      for (std::size_t k = 0; k < T; ++k) {
        const Vector profile = gsd_profile(*ops[k], spec);
        series.row({id, "gsd_profile_sup", fmt(config.t_grid[k]), fmt(profile.maxCoeff()), ""});
        reverse_ok = reverse_ok && profile.minCoeff() >= floor * (1.0 - 1e-9);
        for (double C : d.C) {
          const auto r = pgsd_radius(profile, space, base, C);
          series.row({id, "pgsd_radius", fmt(config.t_grid[k]), fmt(r.value_or(0.0)),
                      "C=" + fmt(C) + (r ? "" : ";void")});
        }
      }
      verdict("gsd_profile reverse bound >= 1/sup phi0", reverse_ok, "floor " + fmt(floor));
    } else if (d.name == "kappa") {
      const Index base = d.base.empty() ? nearest_origin(space) : resolve_state(space, d.base, 0);
      const auto fam = ExhaustingFamily::linear(base, d.slope);
      const auto op0 = feynman_kac_operator(model, config.t0 * scale);
      std::vector<double> measured(T), bound(T);
      for (std::size_t k = 0; k < T; ++k) {
        double worst = 0.0;
        for (Index x : ball_indicator(space, fam, d.a * config.t_grid[k])) {
          Vector delta = Vector::Zero(space.size());
          delta(x) = 1.0;
          worst = std::max(worst, quasi_ergodic_error(*ops[k], spec, delta, d.p.front()));
        }
        measured[k] = worst;
        bound[k] = kappa_rate(op0, spec, fam, d.b, config.t_grid[k], expected_rate);
        series.row({id, "progressive_error", fmt(config.t_grid[k]), fmt(worst), "a=" + fmt(d.a)});
        series.row({id, "kappa_rate", fmt(config.t_grid[k]), fmt(bound[k]), "b=" + fmt(d.b)});
      }
      const auto dom = calibrated_domination(measured, bound);
      verdict("progressive error <= C kappa_b(t)", dom.dominated,
              "C = " + fmt(dom.C) +
                  (dom.dominated ? "" : ", first violation at t = " + fmt(config.t_grid[dom.first_violation])));
    } else if (d.name == "uniqueness") {
      const auto check = uniqueness_condition_check(model, spec, tm);
      for (std::size_t k = 0; k < T; ++k)
        series.row({id, "uniqueness_condition", fmt(config.t_grid[k]), fmt(check.values[k]), ""});
      verdict("uniqueness condition sup stabilizes", check.stable, "sup " + fmt(check.sup));
    } else if (d.name == "eigen_residuals") {
      double worst = 0.0;
      for (std::size_t k = 0; k < T; ++k) {
        const auto [r1, r2] = eigen_residuals(spec, *ops[k]);
        series.row({id, "eigen_residual_phi0", fmt(config.t_grid[k]), fmt(r1), ""});
        series.row({id, "eigen_residual_psi0", fmt(config.t_grid[k]), fmt(r2), ""});
        worst = std::max({worst, r1, r2});
      }
      verdict("eigen residuals <= " + brief(config.tol.eigen_residual), worst <= config.tol.eigen_residual,
              "max " + fmt(worst));
    }
  }

  if (config.mc) {
    const Index x0 = resolve_state(space, config.mc->x0, 0);
    const RngStream root(config.mc->seed);
    bool ok = true;
    double worst_z = 0.0;
    for (std::size_t k = 0; k < T; ++k) {
      const auto est = fk_estimate(model, x0, tm[k], ones, config.mc->n, root.split(k));
      const double exact = ops[k]->mass()(x0);
      mc_csv.row({id, "U_t1(" + space.id(x0) + ")", fmt(config.t_grid[k]), fmt(est.mean), fmt(est.std_error),
                  std::to_string(est.n), std::to_string(config.mc->seed)});
      const double dev = std::abs(est.mean - exact);
      const bool pass = est.std_error > 0.0 ? dev <= config.tol.mc_z * est.std_error : dev <= 1e-12;
      if (est.std_error > 0.0) worst_z = std::max(worst_z, dev / est.std_error);
      ok = ok && pass;
    }
    verdict("Monte Carlo U_t1 within " + brief(config.tol.mc_z) + " stderr of matrix value", ok,
            "max z " + fmt(worst_z));
  }
  return finish();
}

}  // namespace qerg
