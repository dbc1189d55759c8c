#include "qerg/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qerg/quadrature.hpp"

namespace qerg {

namespace {

void require_size(const Vector& v, Index n, const char* where) {
  if (v.size() != n)
    throw DomainError(std::string(where) + ": vector has " + std::to_string(v.size()) + " entries, expected " +
                      std::to_string(n));
}

}  // namespace

void DiagnosticSeries::push(double t, double value) {
  if (!t_.empty() && !(t > t_.back())) throw DomainError("DiagnosticSeries '" + name_ + "': times must increase");
  if (!std::isfinite(value)) throw DomainError("DiagnosticSeries '" + name_ + "': non-finite value");
  t_.push_back(t);
  v_.push_back(value);
}

ExponentialFit fit_exponential_rate(const DiagnosticSeries& series, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw FitError("fit_exponential_rate: tail_fraction must be in (0,1]");
  const std::size_t n = series.size();
  const auto window = static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(n)));
  if (window < 4) throw FitError("fit_exponential_rate: fewer than 4 samples in the tail window of '" + series.name() + "'");
  const std::size_t first = n - window;
  double st = 0, sy = 0;
  for (std::size_t k = first; k < n; ++k) {
    if (!(series.values()[k] > 0.0)) throw FitError("fit_exponential_rate: nonpositive value in '" + series.name() + "'");
    st += series.times()[k];
    sy += std::log(series.values()[k]);
  }
  const double w = static_cast<double>(window);
  const double tbar = st / w, ybar = sy / w;
  double stt = 0, sty = 0, syy = 0;
  for (std::size_t k = first; k < n; ++k) {
    const double dt = series.times()[k] - tbar;
    const double dy = std::log(series.values()[k]) - ybar;
    stt += dt * dt;
    sty += dt * dy;
    syy += dy * dy;
  }
  ExponentialFit fit;
  fit.rate = sty / stt;
  fit.intercept = ybar - fit.rate * tbar;
  const double ss_res = std::max(0.0, syy - fit.rate * sty);
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

QuasiStationaryMeasure QuasiStationaryMeasure::user(Vector weights) {
  if ((weights.array() < 0.0).any()) throw DomainError("QuasiStationaryMeasure: negative weight");
  if (std::abs(weights.sum() - 1.0) > 1e-12) throw DomainError("QuasiStationaryMeasure: weights must sum to 1");
  return {std::move(weights), Source::user};
}

double heat_content(const KernelOperator& op) { return op.mass().dot(op.space().mu()); }

double heat_content_upper_bound(const MarkovModel& model, double t) {
  if (!(t > 0.0)) throw DomainError("heat_content_upper_bound: t must be positive");
  const Vector g = (-t * model.V().array()).exp();
  const Vector& mu = model.space().mu();
  return integrate<double>([&](double s) { return uniformized_apply(model, s, g).dot(mu); }, 0.0, t, 1e-12) / t;
}

QuasiStationaryMeasure qsd_from_spectral(const SpectralData& spec, bool adjoint) {
  Vector w = (adjoint ? spec.phi0 : spec.psi0).cwiseProduct(spec.mu());
  w /= w.sum();
  return {std::move(w), QuasiStationaryMeasure::Source::from_psi0};
}

double qsd_residual(const QuasiStationaryMeasure& sigma, const KernelOperator& op) {
  require_size(sigma.weights, op.size(), "qsd_residual");
  const double survival = sigma.weights.dot(op.mass());
  if (!(survival > 0.0)) throw DegenerateSupportError("qsd_residual: sigma(U_t 1) = 0");
  const Vector evolved = (op.density().transpose() * sigma.weights).cwiseProduct(op.space().mu()) / survival;
  return (evolved - sigma.weights).cwiseAbs().sum();
}

QsdSearch find_qsd(const KernelOperator& op, double tol) {
  const Matrix Pt = op.transition().transpose();
  Eigen::EigenSolver<Matrix> es(Pt, true);
  const Eigen::VectorXcd vals = es.eigenvalues();
  const Index n = vals.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return std::abs(vals(a)) > std::abs(vals(b)); });

  QsdSearch out;
  const Index top = order[0];
  out.separation = n > 1 ? 1.0 - std::abs(vals(order[1])) / std::abs(vals(top)) : 1.0;
  out.unique = out.separation > tol;
  Vector v = es.eigenvectors().col(top).real();
  if (v.sum() < 0.0) v = -v;
  if (out.unique) {
    v = v.cwiseMax(0.0);
  } else {
    v = v.cwiseAbs();
    out.warning = "NonuniquenessWarning: dominant eigenvalue of the transition matrix is not simple (separation " +
                  std::to_string(out.separation) + ")";
  }
  out.measure = {v / v.sum(), QuasiStationaryMeasure::Source::from_fixed_point};
  return out;
}

Matrix kernel_convergence_field(const KernelOperator& op, const SpectralData& spec) {
  require_size(spec.phi0, op.size(), "kernel_convergence_field");
  return (std::exp(spec.lambda0 * op.t()) * op.density() - spec.phi0 * spec.psi0.transpose() / spec.Lambda).cwiseAbs();
}

double kernel_convergence_error(const KernelOperator& op, const SpectralData& spec) {
  return kernel_convergence_field(op, spec).maxCoeff();
}

Matrix refined_convergence_kappa(const SpectralData& spec, const KernelOperator* op_s, const KernelOperator* op_r,
                                 double t, double gamma) {
  const Index n = spec.phi0.size();
  const double s = op_s ? op_s->t() : 0.0;
  const double r = op_r ? op_r->t() : 0.0;
  const Vector fwd = op_s ? Vector(std::exp(spec.lambda0 * s) * op_s->mass()) : Vector::Ones(n);
  const Vector bwd = op_r ? Vector(std::exp(spec.lambda0 * r) * op_r->adjoint_mass()) : Vector::Ones(n);
  return std::exp(-gamma * (t - s - r)) * fwd * bwd.transpose();
}

double conjugate_exponent(double p) {
  if (!(p >= 1.0)) throw DomainError("conjugate_exponent: p must be in [1, inf]");
  if (std::isinf(p)) return 1.0;
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  return p / (p - 1.0);
}

double lp_norm(const Vector& g, const Vector& mu, double p) {
  if (!(p >= 1.0)) throw DomainError("lp_norm: p must be in [1, inf]");
  if (std::isinf(p)) return g.cwiseAbs().maxCoeff();
  if (p == 1.0) return g.cwiseAbs().dot(mu);
  return std::pow((g.cwiseAbs().array().pow(p) * mu.array()).sum(), 1.0 / p);
}

double quasi_ergodic_error(const KernelOperator& op, const SpectralData& spec, const Vector& sigma, double p) {
  require_size(sigma, op.size(), "quasi_ergodic_error");
  require_size(spec.psi0, op.size(), "quasi_ergodic_error");
  const double survival = sigma.dot(op.mass());
  if (!(survival > 0.0)) throw DegenerateSupportError("quasi_ergodic_error: sigma(U_t 1) = 0");
  const Vector g = op.density().transpose() * sigma / survival - spec.psi0 / spec.psi0_l1();
  return lp_norm(g, spec.mu(), conjugate_exponent(p));
}

double asymptotic_projection_error(const KernelOperator& op, const SpectralData& spec, const Vector& sigma,
                                   const Vector& f, double p) {
  require_size(sigma, op.size(), "asymptotic_projection_error");
  require_size(f, op.size(), "asymptotic_projection_error");
  require_size(spec.phi0, op.size(), "asymptotic_projection_error");
  const double evolved = std::exp(spec.lambda0 * op.t()) * sigma.dot(op.apply(f));
  const double limit = sigma.dot(spec.phi0) * inner(f, spec.psi0, spec.mu()) / spec.Lambda;
  const double norm = lp_norm(f, spec.mu(), p);
  if (!(norm > 0.0)) throw DomainError("asymptotic_projection_error: f vanishes");
  return std::abs(evolved - limit) / norm;
}

Vector gsd_profile(const KernelOperator& op, const SpectralData& spec) {
  require_size(spec.phi0, op.size(), "gsd_profile");
  return std::exp(spec.lambda0 * op.t()) * op.mass().cwiseQuotient(spec.phi0);
}

std::optional<double> pgsd_radius(const Vector& profile, const StateSpace& space, Index base, double C) {
  std::vector<Index> order(static_cast<std::size_t>(space.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return space.distance(base, a) < space.distance(base, b); });
  std::optional<double> radius;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (profile(order[k]) > C) break;
    const double r = space.distance(base, order[k]);
    const bool level_done = k + 1 == order.size() || space.distance(base, order[k + 1]) > r;
    if (level_done) radius = r;
  }
  return radius;
}

std::optional<double> ho_pgsd_radius(double t, double C, int d) {
  if (!(t > 0.0)) throw DomainError("ho_pgsd_radius: t must be positive");
  if (!(C > 0.0) || d < 1) throw DomainError("ho_pgsd_radius: need C > 0 and d >= 1");
  const double half_d = 0.5 * d;
  const double inner_term =
      std::log(C) - half_d * std::log(2.0 * std::sqrt(std::numbers::pi)) + half_d * std::log1p(std::exp(-4.0 * t));
  if (inner_term < 0.0) return std::nullopt;
  return std::sqrt((std::exp(4.0 * t) + 1.0) * inner_term);
}

double ground_state_floor(const SpectralData& spec, const StateSpace& space, const ExhaustingFamily& fam, double s) {
  const auto mask = ball_mask(space, fam, s);
  double h = std::numeric_limits<double>::infinity();
  for (Index x = 0; x < space.size(); ++x)
    if (mask[x]) h = std::min({h, spec.phi0(x), spec.psi0(x)});
  return h;
}

double eta_function(const SpectralData& spec, const StateSpace& space, const ExhaustingFamily& fam, double gamma,
                    double t, double resolution) {
  const double threshold = std::exp(-gamma * t);
  auto h = [&](double s) { return ground_state_floor(spec, space, fam, s); };
  if (h(fam.t_min) < threshold * (1.0 - 1e-12))
    throw DomainError("eta_function: t below -log(h(t_min))/gamma");
  const double s_exh = exhaustion_time(space, fam, resolution);
  if (h(s_exh) >= threshold) return s_exh;
  double lo = fam.t_min, hi = s_exh;
  while (hi - lo > resolution) {
    const double mid = 0.5 * (lo + hi);
    (h(mid) >= threshold ? lo : hi) = mid;
  }
  return lo;
}

double kappa_rate(const KernelOperator& op_t0, const SpectralData& spec, const ExhaustingFamily& fam, double b,
                  double t, double gamma) {
  const auto inside = ball_mask(op_t0.space(), fam, b * t);
  const Vector fwd = op_t0.mass();
  const Vector bwd = op_t0.adjoint_mass();
  double sup_fwd = 0.0, sup_bwd = 0.0;
  for (Index x = 0; x < fwd.size(); ++x)
    if (!inside[x]) {
      sup_fwd = std::max(sup_fwd, fwd(x));
      sup_bwd = std::max(sup_bwd, bwd(x));
    }
  (void)spec;
  return std::exp(-gamma * b * t) + sup_fwd + sup_bwd;
}

double kappa_rate(const MarkovModel& model, const SpectralData& spec, const ExhaustingFamily& fam, double t0, double b,
                  double t) {
  return kappa_rate(feynman_kac_operator(model, t0), spec, fam, b, t, spec.gap);
}

UniquenessCheck uniqueness_condition_check(const MarkovModel& model, const SpectralData& spec,
                                           const std::vector<double>& t_grid) {
  UniquenessCheck out;
  double previous = 0.0;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    const auto op = feynman_kac_operator(model, t_grid[k]);
    const double v = std::exp(spec.lambda0 * op.t()) * (op.mass() + op.adjoint_mass()).maxCoeff();
    out.values.push_back(v);
    previous = out.sup;
    out.sup = std::max(out.sup, v);
  }
  out.stable = t_grid.size() >= 2 && out.sup <= previous * (1.0 + 1e-3);
  return out;
}

DominationCheck calibrated_domination(const std::vector<double>& measured, const std::vector<double>& bound) {
  if (measured.empty() || measured.size() != bound.size()) throw DomainError("calibrated_domination: size mismatch");
  if (!(bound[0] > 0.0)) throw DomainError("calibrated_domination: calibration bound must be positive");
  DominationCheck out;
  out.C = measured[0] / bound[0];
  for (std::size_t k = 1; k < measured.size(); ++k)
    if (measured[k] > out.C * bound[k] * (1.0 + 1e-12)) {
      out.dominated = false;
      out.first_violation = k;
      break;
    }
  return out;
}

SpectralData adjoint_spectral(const SpectralData& spec) {
  SpectralData out = spec;
  std::swap(out.phi0, out.psi0);
  out.spectrum = spec.spectrum.conjugate();
  return out;
}

}  // namespace qerg
