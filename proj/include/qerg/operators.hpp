#pragma once

#include <cmath>
#include <iosfwd>
#include <memory>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "qerg/errors.hpp"
#include "qerg/statespace.hpp"

namespace qerg {

/// Generator data of a Feynman-Kac semigroup on a finite state space.
///
/// The semigroup acting on functions is U_t = exp(t G) with G = Q - I - diag(V)
/// (unit total jump rate). `time_scale` records the jump rate that was folded
/// out of Q when the model was built from a physical generator: physical time s
/// corresponds to model time time_scale * s, and V is stored in model units.
class MarkovModel {
 public:
  /// Validates stochasticity of Q, finiteness of V, and derives
  /// Q_dual(y,x) = mu(x) Q(x,y) / mu(y). Throws ModelError.
  MarkovModel(std::shared_ptr<const StateSpace> space, Matrix Q, Vector V, std::string id = "custom",
              double time_scale = 1.0);

  const StateSpace& space() const { return *space_; }
  const std::shared_ptr<const StateSpace>& space_ptr() const { return space_; }
  const Matrix& Q() const { return Q_; }
  const Matrix& Q_dual() const { return Q_dual_; }
  const Vector& V() const { return V_; }
  const std::string& id() const { return id_; }
  double time_scale() const { return time_scale_; }
  Index size() const { return V_.size(); }

  /// ||V_-||_inf.
  double negative_part_sup() const { return std::max(0.0, -V_.minCoeff()); }

  /// G = Q - I - diag(V).
  Matrix generator() const;
  /// L^2(mu)-adjoint generator Q_dual - I - diag(V) = diag(mu)^{-1} G^T diag(mu).
  Matrix dual_generator() const;

  /// Reachability scan over the support of Q.
  bool irreducible() const;
  /// Largest |mu(x) Q(x,y) - mu(y) Q_dual(y,x)|.
  double duality_defect() const;
  /// True when Q_dual is itself row-stochastic (mu is Q-invariant).
  bool dual_is_stochastic(double tol = 1e-12) const;

  MarkovModel with_potential(Vector V) const;
  /// Same dynamics on the space with mu scaled by c.
  MarkovModel with_scaled_mu(double c) const;

 private:
  std::shared_ptr<const StateSpace> space_;
  Matrix Q_;
  Matrix Q_dual_;
  Vector V_;
  std::string id_;
  double time_scale_;
};

/// Provenance of a computed kernel.
struct KernelMetadata {
  std::string method;
  int terms = 0;            // Poisson terms or Trotter steps
  double tail_mass = 0.0;   // neglected Poisson mass (uniformization only)
};

/// Kernel density u_t(x,y) of U_t with respect to mu, plus provenance.
///
/// U_t f(x) = sum_y u(x,y) f(y) mu(y); U*_t g(y) = sum_x u(x,y) g(x) mu(x).
class KernelOperator {
 public:
  using Metadata = KernelMetadata;

  KernelOperator(double t, Matrix density, std::shared_ptr<const StateSpace> space, Metadata meta = {});

  /// t = 0 element: density diag(1/mu).
  static KernelOperator identity(std::shared_ptr<const StateSpace> space);

  double t() const { return t_; }
  const Matrix& density() const { return density_; }
  const StateSpace& space() const { return *space_; }
  const std::shared_ptr<const StateSpace>& space_ptr() const { return space_; }
  const Metadata& metadata() const { return meta_; }
  Index size() const { return density_.rows(); }

  /// Transition form P(x,y) = u(x,y) mu(y); this is the matrix acting on functions.
  Matrix transition() const;
  Vector apply(const Vector& f) const;
  Vector apply_adjoint(const Vector& g) const;
  /// U_t 1.
  Vector mass() const;
  /// U*_t 1.
  Vector adjoint_mass() const;

  /// Text format: line `t n`, then n rows of n densities.
  void write(std::ostream& out) const;
  static KernelOperator read(std::istream& in, std::shared_ptr<const StateSpace> space);

 private:
  double t_;
  Matrix density_;
  std::shared_ptr<const StateSpace> space_;
  Metadata meta_;
};

enum class ExpMethod { exact, trotter };

/// P_t = e^{-t} sum_{n<=N} t^n/n! Q^n with N the first index whose Poisson(t)
/// tail mass is below eps. V is ignored. Throws DomainError for t <= 0 or eps <= 0.
KernelOperator uniformized_transition(const MarkovModel& model, double t, double eps = 1e-14);

/// P_t f via the same Poisson series, using only matrix-vector products.
Vector uniformized_apply(const MarkovModel& model, double t, const Vector& f, double eps = 1e-14);

/// U_t = exp(t G). `exact` uses Pade scaling-and-squaring; `trotter` uses
/// (exp((t/k)(Q - I)) exp(-(t/k) V))^k with k = steps.
KernelOperator feynman_kac_operator(const MarkovModel& model, double t, ExpMethod method = ExpMethod::exact,
                                    int steps = 0);

/// exp(t G_dual), the semigroup generated by (Q_dual, V).
KernelOperator dual_feynman_kac_operator(const MarkovModel& model, double t);

/// Operator with density u*(x,y) = u(y,x).
KernelOperator adjoint(const KernelOperator& op);

/// Chapman-Kolmogorov product: time s+t, density sum_z u_s(x,z) u_t(z,y) mu(z).
KernelOperator compose(const KernelOperator& op_s, const KernelOperator& op_t);

/// <f, g>_mu.
inline double inner(const Vector& f, const Vector& g, const Vector& mu) {
  return (f.array() * g.array() * mu.array()).sum();
}

/// Harmonic-oscillator (H = -Laplace + |x|^2) heat kernel on R^d.
template <typename Scalar, typename VecX, typename VecY>
Scalar mehler_kernel(Scalar t, const VecX& x, const VecY& y) {
  if (!(t > Scalar(0))) throw DomainError("mehler_kernel: t must be positive");
  using std::exp, std::pow, std::sinh, std::tanh;
  const auto d = static_cast<Scalar>(x.size());
  const Scalar plus = (x + y).squaredNorm();
  const Scalar minus = (x - y).squaredNorm();
  const Scalar th = tanh(t);
  return pow(Scalar(2) * std::numbers::pi_v<Scalar> * sinh(Scalar(2) * t), -d / Scalar(2)) *
         exp(-(th * plus + minus / th) / Scalar(4));
}

/// One-dimensional mehler_kernel.
template <typename Scalar>
Scalar mehler_kernel(Scalar t, Scalar x, Scalar y) {
  using Vec1 = Eigen::Matrix<Scalar, 1, 1>;
  return mehler_kernel(t, Vec1(x), Vec1(y));
}

/// log of mehler_kernel, usable far out in the tails where the kernel underflows.
template <typename Scalar>
Scalar log_mehler_kernel(Scalar t, Scalar x, Scalar y, int d = 1) {
  if (!(t > Scalar(0))) throw DomainError("mehler_kernel: t must be positive");
  using std::log, std::sinh, std::tanh;
  const Scalar th = tanh(t);
  return -Scalar(d) / Scalar(2) * log(Scalar(2) * std::numbers::pi_v<Scalar> * sinh(Scalar(2) * t)) -
         (th * (x + y) * (x + y) + (x - y) * (x - y) / th) / Scalar(4);
}

/// U_t 1(x) for the harmonic oscillator: (cosh 2t)^{-d/2} exp(-|x|^2 / (2 coth 2t)).
template <typename Scalar, typename VecX>
Scalar ho_survival(Scalar t, const VecX& x) {
  if (!(t > Scalar(0))) throw DomainError("ho_survival: t must be positive");
  using std::cosh, std::exp, std::pow, std::tanh;
  const auto d = static_cast<Scalar>(x.size());
  return pow(cosh(Scalar(2) * t), -d / Scalar(2)) * exp(-x.squaredNorm() * tanh(Scalar(2) * t) / Scalar(2));
}

template <typename Scalar>
Scalar ho_survival(Scalar t, Scalar x) {
  return ho_survival(t, Eigen::Matrix<Scalar, 1, 1>(x));
}

/// log ho_survival for |x| large; d is the dimension, r2 = |x|^2.
template <typename Scalar>
Scalar log_ho_survival(Scalar t, Scalar r2, int d = 1) {
  if (!(t > Scalar(0))) throw DomainError("ho_survival: t must be positive");
  using std::cosh, std::log, std::tanh;
  return -Scalar(d) / Scalar(2) * log(cosh(Scalar(2) * t)) - r2 * tanh(Scalar(2) * t) / Scalar(2);
}

/// Harmonic-oscillator ground state pi^{-d/4} exp(-|x|^2/2); eigenvalue d.
template <typename Scalar, typename VecX>
Scalar ho_ground_state(const VecX& x) {
  using std::exp, std::pow;
  const auto d = static_cast<Scalar>(x.size());
  return pow(std::numbers::pi_v<Scalar>, -d / Scalar(4)) * exp(-x.squaredNorm() / Scalar(2));
}

template <typename Scalar>
Scalar ho_ground_state(Scalar x) {
  return ho_ground_state<Scalar>(Eigen::Matrix<Scalar, 1, 1>(x));
}

}  // namespace qerg
