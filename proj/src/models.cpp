#include "qerg/models.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "qerg/diagnostics.hpp"
#include "qerg/spectral.hpp"

namespace qerg {

double PotentialSpec::operator()(double r) const {
  switch (kind) {
    case Kind::log_power:
      return scale * std::pow(std::max(1.0, std::log(r)), beta);
    case Kind::power:
      return scale * std::pow(std::max(1.0, r), beta);
    case Kind::constant:
      return scale;
    case Kind::custom_table:
      break;
  }
  throw DomainError("PotentialSpec: custom tables have no radial form");
}

Vector PotentialSpec::sample(const StateSpace& space) const {
  validate();
  if (kind == Kind::custom_table) {
    if (table.size() != space.size()) throw ModelError("PotentialSpec: table size does not match the state space");
    return table;
  }
  Vector v(space.size());
  for (Index i = 0; i < space.size(); ++i) v(i) = (*this)(space.dim() ? space.coords().row(i).norm() : 0.0);
  return v;
}

void PotentialSpec::validate() const {
  if ((kind == Kind::log_power || kind == Kind::power) && !(beta > 0.0 && scale > 0.0))
    throw ModelError("PotentialSpec: confining kinds need beta > 0 and scale > 0");
  if (kind == Kind::constant && !std::isfinite(scale)) throw ModelError("PotentialSpec: constant must be finite");
  if (kind == Kind::custom_table && !table.allFinite()) throw ModelError("PotentialSpec: table must be finite");
}

std::string PotentialSpec::describe() const {
  std::ostringstream s;
  switch (kind) {
    case Kind::log_power: s << "log-power(beta=" << beta << ",scale=" << scale << ")"; break;
    case Kind::power: s << "power(beta=" << beta << ",scale=" << scale << ")"; break;
    case Kind::constant: s << "constant(" << scale << ")"; break;
    case Kind::custom_table: s << "table(" << table.size() << ")"; break;
  }
  return s.str();
}

double stable_levy_constant(double alpha) {
  return alpha * std::pow(2.0, alpha - 1.0) * std::tgamma((1.0 + alpha) / 2.0) /
         (std::sqrt(std::numbers::pi) * std::tgamma(1.0 - alpha / 2.0));
}

double LevyProfile::operator()(double z) const {
  const double r = std::abs(z);
  if (r == 0.0) throw DomainError("LevyProfile: density undefined at 0");
  const double c = stable_levy_constant(alpha);
  if (kind == Kind::polynomial) return c * std::pow(r, -1.0 - alpha) * std::pow(std::max(std::numbers::e, r), -delta);
  return c * std::exp(-m * r) * std::pow(std::min(1.0, r), -1.0 - alpha) * std::pow(std::max(1.0, r), -delta);
}

void LevyProfile::validate() const {
  if (!(alpha > 0.0 && alpha < 2.0)) throw ModelError("LevyProfile: alpha must lie in (0,2)");
  if (!(delta >= 0.0)) throw ModelError("LevyProfile: delta must be nonnegative");
  if (kind == Kind::exponential) {
    if (!(m > 0.0)) throw ModelError("LevyProfile: exponential decay rate m must be positive");
    if (!(delta > 1.0)) throw ModelError("LevyProfile: exponential profiles need delta > (d+1)/2 = 1");
  }
}

std::string LevyProfile::describe() const {
  std::ostringstream s;
  s << (kind == Kind::polynomial ? "polynomial" : "exponential") << "(alpha=" << alpha << ",delta=" << delta;
  if (kind == Kind::exponential) s << ",m=" << m;
  s << ")";
  return s.str();
}

namespace {

Matrix box_coords(Index side, int dim) {
  Index count = 1;
  for (int k = 0; k < dim; ++k) count *= side;
  Matrix coords(count, dim);
  for (Index i = 0; i < count; ++i) {
    Index rest = i;
    for (int k = 0; k < dim; ++k) {
      coords(i, k) = static_cast<double>(rest % side) - 0.5 * static_cast<double>(side - 1);
      rest /= side;
    }
  }
  return coords;
}

}  // namespace

MarkovModel build_ctmc_model(Index n, const KernelRecipe& recipe, const Vector& mu, const PotentialSpec& V,
                             std::string id, bool require_irreducible) {
  if (n < 1) throw ModelError("build_ctmc_model: need at least one state");
  Matrix coords;
  Matrix Q;
  switch (recipe.kind) {
    case KernelRecipe::Kind::birth_death: {
      if (n < 2) throw ModelError("birth-death recipe needs n >= 2");
      const double p = recipe.p_up;
      if (!(p > 0.0 && p < 1.0)) throw ModelError("birth-death recipe needs p_up in (0,1)");
      Q = Matrix::Zero(n, n);
      for (Index k = 0; k < n; ++k) {
        Q(k, std::min(k + 1, n - 1)) += p;
        Q(k, std::max<Index>(k - 1, 0)) += 1.0 - p;
      }
      break;
    }
    case KernelRecipe::Kind::box: {
      if (recipe.dim < 1) throw ModelError("box recipe needs dim >= 1");
      coords = box_coords(n, recipe.dim);
      const Index count = coords.rows();
      Q = Matrix::Zero(count, count);
      const double step = 1.0 / (2.0 * recipe.dim);
      for (Index i = 0; i < count; ++i)
        for (Index j = 0; j < count; ++j)
          if (i != j && std::abs((coords.row(i) - coords.row(j)).lpNorm<1>() - 1.0) < 1e-12) Q(i, j) = step;
      for (Index i = 0; i < count; ++i) Q(i, i) = std::max(0.0, 1.0 - Q.row(i).sum());
      break;
    }
    case KernelRecipe::Kind::complete:
      if (n < 2) throw ModelError("complete recipe needs n >= 2");
      Q = Matrix::Constant(n, n, 1.0 / static_cast<double>(n - 1));
      Q.diagonal().setZero();
      break;
    case KernelRecipe::Kind::user:
      if (recipe.matrix.rows() != n || recipe.matrix.cols() != n)
        throw ModelError("user recipe: matrix must be n x n");
      Q = recipe.matrix;
      break;
  }
  const Index count = Q.rows();
  if (coords.size() == 0) {
    coords.resize(count, 1);
    for (Index k = 0; k < count; ++k) coords(k, 0) = static_cast<double>(k);
  }
  std::vector<std::string> ids;
  for (Index k = 0; k < count; ++k) ids.push_back(std::to_string(k));
  const Vector weights = mu.size() ? mu : Vector::Ones(count);
  if (weights.size() != count) throw ModelError("build_ctmc_model: mu has the wrong length");
  auto space = std::make_shared<const StateSpace>(std::move(ids), std::move(coords), weights);
  MarkovModel model(space, std::move(Q), V.sample(*space), std::move(id));
  if (require_irreducible && !model.irreducible()) throw ModelError("build_ctmc_model: Q is reducible");
  return model;
}

Index Lattice1D::half_count() const {
  if (!(h > 0.0 && R > 0.0)) throw ModelError("Lattice1D: h and R must be positive");
  const auto n = static_cast<Index>(std::llround(R / h));
  if (2 * n + 1 > 2001) throw ModelError("Lattice1D: more than 2001 states");
  return n;
}

StateSpace Lattice1D::space() const { return StateSpace::lattice_1d(h, half_count()); }

MarkovModel build_fractional_model(const Lattice1D& grid, const LevyProfile& levy, const PotentialSpec& V,
                                   std::string id) {
  levy.validate();
  auto space = std::make_shared<const StateSpace>(grid.space());
  const Index n = space->size();
  Matrix W = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (i != j) W(i, j) = levy(static_cast<double>(j - i) * grid.h) * grid.h;
  const double rate = W.rowwise().sum().maxCoeff();
  Matrix Q = W / rate;
  for (Index i = 0; i < n; ++i) Q(i, i) = std::max(0.0, 1.0 - Q.row(i).sum());
  return MarkovModel(space, std::move(Q), V.sample(*space) / rate, std::move(id), rate);
}

DjpResult check_djp(const std::function<double(double)>& f, double h, double R) {
  if (!(h > 0.0 && R > h)) throw DomainError("check_djp: need 0 < h < R");
  DjpResult out;
  for (double range : {R, 2.0 * R}) {
    const auto n = static_cast<Index>(std::llround(range / h));
    Vector f1(2 * n + 1);
    for (Index k = -n; k <= n; ++k) f1(k + n) = std::min(1.0, f(static_cast<double>(k == 0 ? 1 : std::abs(k)) * h));
    double ratio = 0.0;
    for (Index x = -n; x <= n; ++x) {
      if (!(f1(x + n) > std::numeric_limits<double>::min())) continue;
      double conv = 0.0;
      for (Index y = -n; y <= n; ++y)
        if (std::abs(x - y) <= n) conv += f1(y + n) * f1(x - y + n);
      ratio = std::max(ratio, conv * h / f1(x + n));
    }
    out.ranges.push_back(range);
    out.ratios.push_back(ratio);
  }
  out.stable = std::isfinite(out.ratios[1]) && out.ratios[1] <= 1.1 * out.ratios[0];
  return out;
}

DjpResult check_djp(const LevyProfile& levy, const Lattice1D& grid) {
  levy.validate();
  return check_djp([&](double z) { return levy(z); }, grid.h, grid.R);
}

KernelOperator build_ho_discretization(const Lattice1D& grid, double t) {
  auto space = std::make_shared<const StateSpace>(grid.space());
  const Index n = space->size();
  Matrix density(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) density(i, j) = mehler_kernel(t, space->coords()(i, 0), space->coords()(j, 0));
  return KernelOperator(t, std::move(density), space, {"mehler", 0, 0.0});
}

MarkovModel build_ho_model(const Lattice1D& grid) {
  auto space = std::make_shared<const StateSpace>(grid.space());
  const Index n = space->size();
  const double rate = 2.0 / (grid.h * grid.h);
  Matrix Q = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    Q(i, std::max<Index>(i - 1, 0)) += 0.5;
    Q(i, std::min(i + 1, n - 1)) += 0.5;
  }
  const Vector V = space->coords().col(0).array().square() / rate;
  return MarkovModel(space, std::move(Q), V, "ho", rate);
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::aGSD: return "aGSD";
    case Regime::non_aGSD_finite_Z: return "non-aGSD-finite-Z";
    case Regime::non_aGSD_infinite_Z: return "non-aGSD-infinite-Z";
  }
  return "?";
}

Regime regime_classifier(const LevyProfile& levy, const PotentialSpec& V) {
  using K = PotentialSpec::Kind;
  if (V.kind == K::custom_table) throw ClassifierError("regime_classifier: custom potential tables are not classifiable");
  // Growth orders as |x| -> inf: V ~ (log|x|)^beta, |x|^beta or 1; |log nu| ~ log|x| or |x|.
  const bool heavy = levy.kind == LevyProfile::Kind::polynomial;
  auto finite_heat_content = [&] {
    if (V.kind == K::constant) return false;
    if (V.kind == K::power) return true;
    return V.beta >= 1.0;
  };
  if (V.kind == K::constant) return Regime::non_aGSD_infinite_Z;
  if (heavy) {
    if (V.kind == K::power || V.beta >= 1.0) return Regime::aGSD;
  } else if (V.kind == K::power && V.beta >= 1.0) {
    return Regime::aGSD;
  }
  return finite_heat_content() ? Regime::non_aGSD_finite_Z : Regime::non_aGSD_infinite_Z;
}

RegimeMeasurement measure_regime(const LevyProfile& levy, const PotentialSpec& V, double h,
                                 const std::vector<double>& windows, double t) {
  if (windows.size() < 2) throw DomainError("measure_regime: need at least two windows");
  RegimeMeasurement out;
  out.windows = windows;
  for (double R : windows) {
    const auto model = build_fractional_model({h, R}, levy, V);
    const auto spec = principal_triple(model);
    const auto op = feynman_kac_operator(model, t * model.time_scale());
    out.sups.push_back(gsd_profile(op, spec).maxCoeff());
  }
  out.growth = out.sups.back() / out.sups.front();
  if (out.growth > 2.0)
    out.verdict = RegimeMeasurement::Verdict::growing;
  else if (out.growth < 1.25)
    out.verdict = RegimeMeasurement::Verdict::bounded;
  return out;
}

namespace {

struct Schema {
  std::string name;
  std::vector<std::pair<std::string, std::string>> params;  // key, default
  std::string summary;
};

const std::vector<Schema>& schemas() {
  static const std::vector<Schema> s = {
      {"swap2", {{"v", "1"}}, "two states swapping at rate 1, mu = (1,1), V = (0, v)"},
      {"birthdeath", {{"n", "20"}, {"p", "0.4"}}, "path 0..n-1, up-probability p, holding at the ends, V(k) = 4 (1 v k)^2 / n^2"},
      {"box", {{"d", "2"}, {"n", "5"}}, "nearest-neighbour walk on a centered box of side n in Z^d, reflecting, V = 4 (1 v |x|)^2 / n^2"},
      {"complete", {{"n", "4"}}, "complete graph on n states, V(k) = (1 v k) / n"},
      {"ho", {{"R", "8"}, {"h", "0.05"}}, "finite-difference harmonic oscillator Delta - x^2 on [-R, R]"},
      {"frac",
       {{"alpha", "1"}, {"delta", "auto"}, {"beta", "2"}, {"kind", "log-power"}, {"h", "0.5"}, {"R", "16"},
        {"levy", "auto"}, {"m", "1"}},
       "fractional Schrodinger model on [-R, R]; levy=auto pairs log-power V with a polynomial profile "
       "(delta 0) and power V with an exponential profile (delta 1.5)"},
  };
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

double to_number(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ModelError("zoo model: parameter '" + key + "' expects a number, got '" + value + "'");
  }
}

Index to_count(const std::string& key, const std::string& value) {
  const double v = to_number(key, value);
  if (v < 1 || v != std::floor(v)) throw ModelError("zoo model: parameter '" + key + "' expects a positive integer");
  return static_cast<Index>(v);
}

}  // namespace

ZooModel make_zoo_model(const std::string& spec) {
  std::string text;
  for (char c : spec)
    if (c != ' ' && c != '\t') text += c;
  const auto open = text.find('(');
  const std::string name = text.substr(0, open);
  std::string body;
  if (open != std::string::npos) {
    if (text.back() != ')') throw ModelError("zoo model '" + spec + "': missing ')'");
    body = text.substr(open + 1, text.size() - open - 2);
  }
  const auto it = std::find_if(schemas().begin(), schemas().end(), [&](const Schema& s) { return s.name == name; });
  if (it == schemas().end()) throw ModelError("unknown zoo model '" + name + "'");

  std::map<std::string, std::string> args;
  for (const auto& [key, def] : it->params) args[key] = def;
  std::size_t position = 0;
  std::stringstream items(body);
  for (std::string item; std::getline(items, item, ',');) {
    item = trim(item);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      if (position >= it->params.size()) throw ModelError("zoo model '" + name + "': too many arguments");
      args[it->params[position++].first] = item;
    } else {
      const std::string key = item.substr(0, eq);
      if (!args.count(key)) throw ModelError("zoo model '" + name + "': unknown parameter '" + key + "'");
      args[key] = item.substr(eq + 1);
    }
  }

  ZooModel out{text, MarkovModel(std::make_shared<const StateSpace>(StateSpace::path(1)), Matrix::Ones(1, 1),
                                 Vector::Zero(1)),
               std::nullopt, std::nullopt, std::nullopt};
  if (name == "swap2") {
    Vector V(2);
    V << 0.0, to_number("v", args["v"]);
    out.potential = PotentialSpec::custom(V);
    out.model = build_ctmc_model(2, KernelRecipe::complete(), {}, *out.potential, text);
  } else if (name == "birthdeath") {
    const Index n = to_count("n", args["n"]);
    out.potential = PotentialSpec::power(2.0, 4.0 / static_cast<double>(n * n));
    out.model = build_ctmc_model(n, KernelRecipe::birth_death(to_number("p", args["p"])), {}, *out.potential, text);
  } else if (name == "box") {
    const Index d = to_count("d", args["d"]);
    const Index n = to_count("n", args["n"]);
    out.potential = PotentialSpec::power(2.0, 4.0 / static_cast<double>(n * n));
    out.model = build_ctmc_model(n, KernelRecipe::box(static_cast<int>(d)), {}, *out.potential, text);
  } else if (name == "complete") {
    const Index n = to_count("n", args["n"]);
    out.potential = PotentialSpec::power(1.0, 1.0 / static_cast<double>(n));
    out.model = build_ctmc_model(n, KernelRecipe::complete(), {}, *out.potential, text);
  } else if (name == "ho") {
    out.lattice = Lattice1D{to_number("h", args["h"]), to_number("R", args["R"])};
    out.model = build_ho_model(*out.lattice);
  } else {
    const std::string kind = args["kind"];
    const double beta = to_number("beta", args["beta"]);
    if (kind == "log-power")
      out.potential = PotentialSpec::log_power(beta);
    else if (kind == "power")
      out.potential = PotentialSpec::power(beta);
    else
      throw ModelError("frac: kind must be log-power or power, got '" + kind + "'");
    LevyProfile levy;
    const std::string lk = args["levy"];
    if (lk == "polynomial" || (lk == "auto" && kind == "log-power"))
      levy.kind = LevyProfile::Kind::polynomial;
    else if (lk == "exponential" || lk == "auto")
      levy.kind = LevyProfile::Kind::exponential;
    else
      throw ModelError("frac: levy must be auto, polynomial or exponential, got '" + lk + "'");
    levy.alpha = to_number("alpha", args["alpha"]);
    levy.m = to_number("m", args["m"]);
    levy.delta = args["delta"] == "auto" ? (levy.kind == LevyProfile::Kind::polynomial ? 0.0 : 1.5)
                                         : to_number("delta", args["delta"]);
    out.levy = levy;
    out.lattice = Lattice1D{to_number("h", args["h"]), to_number("R", args["R"])};
    out.model = build_fractional_model(*out.lattice, levy, *out.potential, text);
  }
  return out;
}

std::string list_models() {
  std::ostringstream s;
  for (const auto& schema : schemas()) {
    s << schema.name << "(";
    for (std::size_t k = 0; k < schema.params.size(); ++k)
      s << (k ? ", " : "") << schema.params[k].first << "=" << schema.params[k].second;
    s << ")\n    " << schema.summary << "\n";
  }
  return s.str();
}

}  // namespace qerg
