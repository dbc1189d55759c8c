#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qerg/operators.hpp"
#include "qerg/spectral.hpp"
#include "qerg/statespace.hpp"

namespace qerg {

struct ExponentialFit {
  double rate = 0.0;       // slope of log(value) against t
  double intercept = 0.0;  // log(value) at t = 0
  double r_squared = 0.0;
};

/// (t, value) samples of one diagnostic.
class DiagnosticSeries {
 public:
  explicit DiagnosticSeries(std::string name = {}) : name_(std::move(name)) {}

  /// Throws DomainError unless t exceeds the last sample time and value is finite.
  void push(double t, double value);

  const std::string& name() const { return name_; }
  const std::vector<double>& times() const { return t_; }
  const std::vector<double>& values() const { return v_; }
  std::size_t size() const { return t_.size(); }

  std::optional<ExponentialFit> fit;

 private:
  std::string name_;
  std::vector<double> t_;
  std::vector<double> v_;
};

/// Least-squares fit of log(value) against t over the final `tail_fraction` of
/// the samples. Needs at least four samples in the window, all positive.
ExponentialFit fit_exponential_rate(const DiagnosticSeries& series, double tail_fraction);

struct QuasiStationaryMeasure {
  enum class Source { from_psi0, from_fixed_point, user };
  Vector weights;
  Source source = Source::user;

  /// Validates weights >= 0 and total 1 within 1e-12.
  static QuasiStationaryMeasure user(Vector weights);
  double operator()(const Vector& f) const { return weights.dot(f); }
};

/// Z(t) = sum_x (U_t 1)(x) mu(x).
double heat_content(const KernelOperator& op);

/// Jensen upper bound (1/t) int_0^t <P_s e^{-tV}, 1>_mu ds on Z(t), P_s the
/// semigroup without killing. Equals int e^{-tV} dmu when mu is invariant for Q.
double heat_content_upper_bound(const MarkovModel& model, double t);

/// m = psi0 mu / sum psi0 mu, or m* = phi0 mu / sum phi0 mu when `adjoint`.
QuasiStationaryMeasure qsd_from_spectral(const SpectralData& spec, bool adjoint = false);

/// Total-variation distance between sigma and its survival-conditioned one-step
/// evolution; equals the sup over ||f||_inf <= 1 in the defining identity.
/// Throws DegenerateSupportError if sigma(U_t 1) == 0.
double qsd_residual(const QuasiStationaryMeasure& sigma, const KernelOperator& op);

struct QsdSearch {
  QuasiStationaryMeasure measure;
  bool unique = true;
  /// 1 - |second eigenvalue| / |first eigenvalue| of the transition matrix.
  double separation = 0.0;
  std::string warning;  // "NonuniquenessWarning: ..." when not unique
};

/// Normalized positive left eigenvector of the transition matrix P_t for its
/// dominant eigenvalue. Non-simple dominant eigenvalue (relative separation
/// below `tol`) is reported through `unique`/`warning`, not thrown.
QsdSearch find_qsd(const KernelOperator& op, double tol = 1e-8);

/// sup_{x,y} |e^{lambda0 t} u_t(x,y) - phi0(x) psi0(y) / Lambda|.
double kernel_convergence_error(const KernelOperator& op, const SpectralData& spec);

/// Pointwise reference function of the refined convergence bound with time
/// offsets s (forward) and r (adjoint), on the grid of (x, y):
/// e^{-gamma (t-s-r)} [e^{lambda0 s} U_s 1(x)] [e^{lambda0 r} U*_r 1(y)], with
/// the bracket replaced by 1 when the corresponding offset is zero.
Matrix refined_convergence_kappa(const SpectralData& spec, const KernelOperator* op_s, const KernelOperator* op_r,
                                 double t, double gamma);

/// Pointwise |e^{lambda0 t} u_t(x,y) - phi0(x) psi0(y) / Lambda|.
Matrix kernel_convergence_field(const KernelOperator& op, const SpectralData& spec);

/// Dual exponent of p in [1, inf] (inf is std::numeric_limits<double>::infinity()).
double conjugate_exponent(double p);
/// ||g||_{L^p(mu)}.
double lp_norm(const Vector& g, const Vector& mu, double p);

/// sup over ||f||_{L^p(mu)} <= 1 of |sigma(U_t f)/sigma(U_t 1) - m(f)|, evaluated
/// as the dual L^q(mu) norm. `sigma` holds point masses per state.
double quasi_ergodic_error(const KernelOperator& op, const SpectralData& spec, const Vector& sigma, double p);

/// |e^{lambda0 t} sigma(U_t f) - sigma(phi0) <f, psi0>_mu / Lambda| / ||f||_{L^p(mu)}.
/// With p = inf and f = 1 this is the unnormalized heat-content asymptotic error
/// when sigma = mu.
double asymptotic_projection_error(const KernelOperator& op, const SpectralData& spec, const Vector& sigma,
                                   const Vector& f, double p = std::numeric_limits<double>::infinity());

/// x -> e^{lambda0 t} (U_t 1)(x) / phi0(x).
Vector gsd_profile(const KernelOperator& op, const SpectralData& spec);

/// Largest radius r (among distances from `base`) such that the profile is <= C on
/// the closed ball B_r(base); nullopt if it already fails at the base point.
std::optional<double> pgsd_radius(const Vector& profile, const StateSpace& space, Index base, double C);

/// Closed-form harmonic-oscillator radius: the set of x with
/// U_t 1(x) <= C e^{-d t} phi0(x) is the ball of the returned radius, or empty
/// (nullopt) when the expression under the square root is negative.
std::optional<double> ho_pgsd_radius(double t, double C, int d);

/// h(s) = min(inf_{K_s} phi0, inf_{K_s} psi0).
double ground_state_floor(const SpectralData& spec, const StateSpace& space, const ExhaustingFamily& fam, double s);

/// Generalized inverse eta(t) = inf{s >= t_min : h(s) < e^{-gamma t}} resolved to
/// `resolution`; returns the last parameter with h >= e^{-gamma t}. When h never
/// drops below the threshold the exhaustion time of the family is returned.
/// Throws DomainError for t < -log(h(t_min)) / gamma.
double eta_function(const SpectralData& spec, const StateSpace& space, const ExhaustingFamily& fam, double gamma,
                    double t, double resolution = 1e-6);

/// kappa_b(t) = e^{-gamma b t} + sup_{x outside K_{bt}} U_{t0}1(x) + sup_{x outside K_{bt}} U*_{t0}1(x);
/// empty sups are 0. gamma defaults to the spectral gap.
double kappa_rate(const MarkovModel& model, const SpectralData& spec, const ExhaustingFamily& fam, double t0, double b,
                  double t);
double kappa_rate(const KernelOperator& op_t0, const SpectralData& spec, const ExhaustingFamily& fam, double b,
                  double t, double gamma);

struct UniquenessCheck {
  double sup = 0.0;
  bool stable = false;
  std::vector<double> values;  // e^{lambda0 t} sup_x (U_t1 + U*_t1) per grid time
};

/// Supremum over `t_grid` of e^{lambda0 t} sup_x (U_t 1(x) + U*_t 1(x)); stable when
/// the running supremum grew by less than a factor 1 + 1e-3 at the last grid time.
UniquenessCheck uniqueness_condition_check(const MarkovModel& model, const SpectralData& spec,
                                           const std::vector<double>& t_grid);

struct DominationCheck {
  double C = 0.0;
  bool dominated = true;
  std::size_t first_violation = 0;  // index into the series when !dominated
};

/// Calibrate C = measured[0] / bound[0] and require measured[k] <= C bound[k] for all k.
DominationCheck calibrated_domination(const std::vector<double>& measured, const std::vector<double>& bound);

/// Same triple with the roles of phi0 and psi0 exchanged (spectral data of U*).
SpectralData adjoint_spectral(const SpectralData& spec);

}  // namespace qerg
