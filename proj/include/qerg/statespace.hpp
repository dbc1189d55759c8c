#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qerg {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Finite measure space (M, mu) with a metric.
///
/// Points are addressed by index; identifiers are kept for I/O. The metric is
/// materialized as a dense distance matrix at construction, which is fine for
/// the state counts handled here (a few thousand at most).
class StateSpace {
 public:
  /// Euclidean metric on `coords` (one row per point). `coords` may have zero
  /// columns, in which case `distances` must be supplied through the other
  /// constructor.
  StateSpace(std::vector<std::string> ids, Matrix coords, Vector mu);

  /// Explicit metric. `coords` may be empty (0 columns).
  StateSpace(std::vector<std::string> ids, Matrix coords, Vector mu, Matrix distances);

  /// Points k*h, k = -n..n, with lattice-spacing weights mu = h.
  static StateSpace lattice_1d(double h, Index half_count);
  /// Points 0..n-1 on a line with unit weights.
  static StateSpace path(Index n);

  Index size() const { return mu_.size(); }
  Index dim() const { return coords_.cols(); }
  const std::string& id(Index i) const { return ids_[static_cast<std::size_t>(i)]; }
  const std::vector<std::string>& ids() const { return ids_; }
  const Matrix& coords() const { return coords_; }
  const Vector& mu() const { return mu_; }
  double total_mass() const { return mu_.sum(); }
  double distance(Index i, Index j) const { return dist_(i, j); }
  const Matrix& distances() const { return dist_; }
  double diameter() const { return dist_.size() ? dist_.maxCoeff() : 0.0; }
  /// Smallest positive pairwise distance; 1 for a one-point space.
  double min_separation() const;
  /// Throws std::out_of_range for an unknown identifier.
  Index index_of(const std::string& id) const;

  /// Copy with mu scaled by `c` (metric and identifiers unchanged).
  StateSpace with_scaled_mu(double c) const;

  /// Whitespace-separated table: one row per point, columns `id coord... mu`.
  /// Lines starting with '#' are ignored. All rows must have the same width.
  static StateSpace load_table(std::istream& in);
  void save_table(std::ostream& out) const;

 private:
  void validate() const;

  std::vector<std::string> ids_;
  Matrix coords_;
  Vector mu_;
  Matrix dist_;
};

/// Exhausting family K_t = closed ball of radius r(t) around `base`, t >= t_min.
struct ExhaustingFamily {
  Index base = 0;
  std::function<double(double)> radius;
  double t_min = 0.0;

  /// r(t) = slope * t.
  static ExhaustingFamily linear(Index base, double slope, double t_min = 0.0);
};

/// Indices x with metric(x, base) <= r(t), in increasing order.
std::vector<Index> ball_indicator(const StateSpace& space, const ExhaustingFamily& fam, double t);
/// Boolean mask form of ball_indicator.
std::vector<bool> ball_mask(const StateSpace& space, const ExhaustingFamily& fam, double t);
/// First family parameter (to resolution `dt`) at which K_t is the whole space.
double exhaustion_time(const StateSpace& space, const ExhaustingFamily& fam, double dt = 1e-3);

/// sup over centers x and radii r in the set of positive pairwise distances of
/// mu(B_r(x)) / r^{d_M}. A one-point space uses r = 1.
double frostman_constant(const StateSpace& space, double d_M);

}  // namespace qerg
