#include "qerg/operators.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <istream>
#include <ostream>
#include <queue>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

namespace qerg {

namespace {

constexpr double kStochasticTol = 1e-12;

bool same_space(const StateSpace& a, const StateSpace& b) {
  return &a == &b || (a.size() == b.size() && a.mu() == b.mu() && a.ids() == b.ids());
}

// Padé rounding can leave entries of order -1e-17 * ||exp(tG)|| in a matrix that
// is nonnegative in exact arithmetic.
void clamp_roundoff(Matrix& m) {
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * m.cwiseAbs().maxCoeff();
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (m(i, j) < 0.0 && m(i, j) > -floor) m(i, j) = 0.0;
}

Matrix matrix_power(Matrix base, int k) {
  Matrix result = Matrix::Identity(base.rows(), base.cols());
  while (k > 0) {
    if (k & 1) result = result * base;
    k >>= 1;
    if (k) base = base * base;
  }
  return result;
}

}  // namespace

MarkovModel::MarkovModel(std::shared_ptr<const StateSpace> space, Matrix Q, Vector V, std::string id,
                         double time_scale)
    : space_(std::move(space)), Q_(std::move(Q)), V_(std::move(V)), id_(std::move(id)), time_scale_(time_scale) {
  if (!space_) throw ModelError("MarkovModel: null state space");
  const Index n = space_->size();
  if (Q_.rows() != n || Q_.cols() != n) throw ModelError("MarkovModel: Q must be " + std::to_string(n) + "x" + std::to_string(n));
  if (V_.size() != n) throw ModelError("MarkovModel: V has wrong length");
  if ((Q_.array() < 0.0).any()) throw ModelError("MarkovModel: Q has negative entries");
  for (Index x = 0; x < n; ++x) {
    const double row = Q_.row(x).sum();
    if (std::abs(row - 1.0) > kStochasticTol)
      throw ModelError("MarkovModel: row " + std::to_string(x) + " of Q sums to " + std::to_string(row));
  }
  if (!V_.allFinite()) throw ModelError("MarkovModel: V must be finite");
  if (!(time_scale_ > 0.0)) throw ModelError("MarkovModel: time_scale must be positive");
  const Vector& mu = space_->mu();
  Q_dual_ = mu.cwiseInverse().asDiagonal() * Q_.transpose() * mu.asDiagonal();
}

Matrix MarkovModel::generator() const {
  Matrix G = Q_;
  G.diagonal().array() -= 1.0 + V_.array();
  return G;
}

Matrix MarkovModel::dual_generator() const {
  Matrix G = Q_dual_;
  G.diagonal().array() -= 1.0 + V_.array();
  return G;
}

bool MarkovModel::irreducible() const {
  const Index n = size();
  auto reaches_all = [n](const Matrix& A) {
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::queue<Index> todo;
    todo.push(0);
    seen[0] = true;
    Index count = 1;
    while (!todo.empty()) {
      const Index x = todo.front();
      todo.pop();
      for (Index y = 0; y < n; ++y)
        if (A(x, y) > 0.0 && !seen[y]) {
          seen[y] = true;
          ++count;
          todo.push(y);
        }
    }
    return count == n;
  };
  // Strong connectivity: 0 reaches everything forward and backward.
  return reaches_all(Q_) && reaches_all(Q_.transpose());
}

double MarkovModel::duality_defect() const {
  const Vector& mu = space_->mu();
  return (mu.asDiagonal() * Q_ - (mu.asDiagonal() * Q_dual_).transpose()).cwiseAbs().maxCoeff();
}

bool MarkovModel::dual_is_stochastic(double tol) const {
  return ((Q_dual_.rowwise().sum().array() - 1.0).abs() <= tol).all();
}

MarkovModel MarkovModel::with_potential(Vector V) const {
  return MarkovModel(space_, Q_, std::move(V), id_, time_scale_);
}

MarkovModel MarkovModel::with_scaled_mu(double c) const {
  return MarkovModel(std::make_shared<const StateSpace>(space_->with_scaled_mu(c)), Q_, V_, id_, time_scale_);
}

KernelOperator::KernelOperator(double t, Matrix density, std::shared_ptr<const StateSpace> space, Metadata meta)
    : t_(t), density_(std::move(density)), space_(std::move(space)), meta_(std::move(meta)) {
  if (!space_) throw DomainError("KernelOperator: null state space");
  if (density_.rows() != space_->size() || density_.cols() != space_->size())
    throw DomainError("KernelOperator: density shape does not match the state space");
  if (t_ < 0.0) throw DomainError("KernelOperator: negative time");
}

KernelOperator KernelOperator::identity(std::shared_ptr<const StateSpace> space) {
  Matrix d = space->mu().cwiseInverse().asDiagonal();
  return KernelOperator(0.0, std::move(d), std::move(space), {"identity", 0, 0.0});
}

Matrix KernelOperator::transition() const { return density_ * space_->mu().asDiagonal(); }

Vector KernelOperator::apply(const Vector& f) const {
  return density_ * (f.array() * space_->mu().array()).matrix();
}

Vector KernelOperator::apply_adjoint(const Vector& g) const {
  return density_.transpose() * (g.array() * space_->mu().array()).matrix();
}

Vector KernelOperator::mass() const { return density_ * space_->mu(); }

Vector KernelOperator::adjoint_mass() const { return density_.transpose() * space_->mu(); }

void KernelOperator::write(std::ostream& out) const {
  out << std::setprecision(17) << t_ << ' ' << size() << '\n';
  for (Index i = 0; i < size(); ++i) {
    for (Index j = 0; j < size(); ++j) out << (j ? " " : "") << density_(i, j);
    out << '\n';
  }
}

KernelOperator KernelOperator::read(std::istream& in, std::shared_ptr<const StateSpace> space) {
  double t;
  Index n;
  if (!(in >> t >> n)) throw ConfigError("kernel operator: missing header `t n`");
  if (n != space->size()) throw ConfigError("kernel operator: size does not match the state space");
  Matrix d(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (!(in >> d(i, j))) throw ConfigError("kernel operator: truncated matrix body");
  return KernelOperator(t, std::move(d), std::move(space), {"read", 0, 0.0});
}

KernelOperator uniformized_transition(const MarkovModel& model, double t, double eps) {
  if (!(t > 0.0)) throw DomainError("uniformized_transition: t must be positive");
  if (!(eps > 0.0)) throw DomainError("uniformized_transition: eps must be positive");
  const Index n = model.size();
  const Matrix& Q = model.Q();
  Matrix power = Matrix::Identity(n, n);
  Matrix P = Matrix::Zero(n, n);
  const double log_t = std::log(t);
  double tail = 1.0;
  int k = 0;
  for (;; ++k) {
    const double w = std::exp(-t + k * log_t - std::lgamma(k + 1.0));
    P.noalias() += w * power;
    // Sum of the remaining Poisson weights, bounded by a geometric series once k+2 > t.
    const double next = w * t / (k + 1.0);
    const double ratio = t / (k + 2.0);
    tail = ratio < 1.0 ? next / (1.0 - ratio) : 1.0;
    if (tail < eps) break;
    power = power * Q;
  }
  Matrix density = P * model.space().mu().cwiseInverse().asDiagonal();
  return KernelOperator(t, std::move(density), model.space_ptr(), {"uniformization", k + 1, tail});
}

Vector uniformized_apply(const MarkovModel& model, double t, const Vector& f, double eps) {
  if (!(t > 0.0)) throw DomainError("uniformized_apply: t must be positive");
  if (!(eps > 0.0)) throw DomainError("uniformized_apply: eps must be positive");
  Vector term = f;
  Vector out = Vector::Zero(f.size());
  const double log_t = std::log(t);
  for (int k = 0;; ++k) {
    const double w = std::exp(-t + k * log_t - std::lgamma(k + 1.0));
    out.noalias() += w * term;
    const double ratio = t / (k + 2.0);
    if (ratio < 1.0 && w * t / (k + 1.0) / (1.0 - ratio) < eps) break;
    term = model.Q() * term;
  }
  return out;
}

KernelOperator feynman_kac_operator(const MarkovModel& model, double t, ExpMethod method, int steps) {
  if (!(t > 0.0)) throw DomainError("feynman_kac_operator: t must be positive");
  Matrix U;
  KernelOperator::Metadata meta;
  if (method == ExpMethod::exact) {
    U = (t * model.generator()).exp();
    meta = {"exact", 0, 0.0};
  } else {
    if (steps <= 0) throw DomainError("feynman_kac_operator: trotter steps must be positive");
    const double dt = t / steps;
    Matrix free = model.Q();
    free.diagonal().array() -= 1.0;
    Matrix jump = (dt * free).exp();
    const Vector kill = (-dt * model.V().array()).exp();
    U = matrix_power(jump * kill.asDiagonal(), steps);
    meta = {"trotter", steps, 0.0};
  }
  clamp_roundoff(U);
  Matrix density = U * model.space().mu().cwiseInverse().asDiagonal();
  return KernelOperator(t, std::move(density), model.space_ptr(), meta);
}

KernelOperator dual_feynman_kac_operator(const MarkovModel& model, double t) {
  if (!(t > 0.0)) throw DomainError("dual_feynman_kac_operator: t must be positive");
  Matrix U = (t * model.dual_generator()).exp();
  clamp_roundoff(U);
  Matrix density = U * model.space().mu().cwiseInverse().asDiagonal();
  return KernelOperator(t, std::move(density), model.space_ptr(), {"exact-dual", 0, 0.0});
}

KernelOperator adjoint(const KernelOperator& op) {
  auto meta = op.metadata();
  meta.method += "-adjoint";
  return KernelOperator(op.t(), op.density().transpose(), op.space_ptr(), meta);
}

KernelOperator compose(const KernelOperator& op_s, const KernelOperator& op_t) {
  if (!same_space(op_s.space(), op_t.space())) throw DomainError("compose: operators live on different state spaces");
  Matrix density = op_s.density() * op_s.space().mu().asDiagonal() * op_t.density();
  return KernelOperator(op_s.t() + op_t.t(), std::move(density), op_s.space_ptr(), {"composed", 0, 0.0});
}

}  // namespace qerg
