#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qerg/operators.hpp"
#include "qerg/statespace.hpp"

namespace qerg {

/// Potential profile V(x) = scale * g(|x|).
struct PotentialSpec {
  enum class Kind { log_power, power, constant, custom_table };

  Kind kind = Kind::constant;
  double beta = 1.0;
  double scale = 1.0;
  Vector table;  // per-point values, custom_table only

  static PotentialSpec log_power(double beta, double scale = 1.0) { return {Kind::log_power, beta, scale, {}}; }
  static PotentialSpec power(double beta, double scale = 1.0) { return {Kind::power, beta, scale, {}}; }
  static PotentialSpec constant(double c) { return {Kind::constant, 0.0, c, {}}; }
  static PotentialSpec custom(Vector values) { return {Kind::custom_table, 0.0, 1.0, std::move(values)}; }

  /// log_power: scale (1 v log r)^beta; power: scale (1 v r)^beta; constant: scale.
  double operator()(double r) const;
  /// Values at the points of `space` (r = Euclidean norm of the coordinates).
  Vector sample(const StateSpace& space) const;
  void validate() const;
  std::string describe() const;
};

/// One-dimensional symmetric Levy density nu(z), z != 0.
struct LevyProfile {
  enum class Kind { polynomial, exponential };

  Kind kind = Kind::polynomial;
  double alpha = 1.0;
  double delta = 0.0;
  double m = 1.0;

  /// polynomial: c |z|^{-1-alpha} (e v |z|)^{-delta};
  /// exponential: c e^{-m|z|} (1 ^ |z|)^{-1-alpha} (1 v |z|)^{-delta};
  /// c is the normalizing constant of the 1-D alpha-stable Levy measure.
  double operator()(double z) const;
  void validate() const;
  std::string describe() const;
};

/// c_{1,alpha} = alpha 2^{alpha-1} Gamma((1+alpha)/2) / (sqrt(pi) Gamma(1-alpha/2)).
double stable_levy_constant(double alpha);

struct KernelRecipe {
  enum class Kind { birth_death, box, complete, user };

  Kind kind = Kind::birth_death;
  double p_up = 0.5;  // birth-death
  int dim = 1;        // box
  Matrix matrix;      // user

  static KernelRecipe birth_death(double p_up = 0.5) { return {Kind::birth_death, p_up, 1, {}}; }
  static KernelRecipe box(int dim) { return {Kind::box, 0.5, dim, {}}; }
  static KernelRecipe complete() { return {Kind::complete, 0.5, 1, {}}; }
  static KernelRecipe user(Matrix Q) { return {Kind::user, 0.5, 1, std::move(Q)}; }
};

/// CTMC with unit jump rate. For `box`, n is the side length and the space has
/// n^dim points centered at the origin; otherwise points are 0..n-1 on a line.
/// Empty `mu` means uniform weights. Throws ModelError for non-stochastic Q or,
/// when `require_irreducible`, reducible Q.
MarkovModel build_ctmc_model(Index n, const KernelRecipe& recipe, const Vector& mu, const PotentialSpec& V,
                             std::string id = "ctmc", bool require_irreducible = true);

struct Lattice1D {
  double h = 0.5;
  double R = 16.0;
  Index half_count() const;
  StateSpace space() const;
};

/// Discretized fractional Schrodinger model on the window [-R, R]: jump weights
/// w(x,y) = nu(y-x) h, the largest row total r becomes the time scale, and each
/// row keeps its missing mass 1 - sum_y w(x,y)/r as a self-loop. V is sampled at
/// the lattice points and stored as V/r.
MarkovModel build_fractional_model(const Lattice1D& grid, const LevyProfile& levy, const PotentialSpec& V,
                                   std::string id = "frac");

struct DjpResult {
  std::vector<double> ranges;
  std::vector<double> ratios;  // sup_x (f1*f1)(x) / f1(x) on each range
  bool stable = false;         // consecutive ratios within 10%
  std::optional<double> constant() const {
    return stable ? std::optional<double>(ratios.back()) : std::nullopt;
  }
};

/// Direct jump property scan of f1 = f ^ 1 on lattices of spacing h over the
/// ranges R and 2R.
DjpResult check_djp(const std::function<double(double)>& f, double h, double R);
DjpResult check_djp(const LevyProfile& levy, const Lattice1D& grid);

/// Density matrix mehler_kernel(t, x, y) on the grid (mu = spacing weights).
KernelOperator build_ho_discretization(const Lattice1D& grid, double t);

/// Finite-difference generator of Delta - |x|^2 on [-R, R]: nearest-neighbour
/// jumps at rate 2/h^2, reflecting ends, V = x^2 / rate.
MarkovModel build_ho_model(const Lattice1D& grid);

enum class Regime { aGSD, non_aGSD_finite_Z, non_aGSD_infinite_Z };
std::string to_string(Regime r);

/// Symbolic criteria: liminf V/|log nu| > 0 gives aGSD, otherwise
/// liminf V/log|x| > 0 gives finite heat content. Throws ClassifierError for
/// custom tables.
Regime regime_classifier(const LevyProfile& levy, const PotentialSpec& V);

struct RegimeMeasurement {
  std::vector<double> windows;
  std::vector<double> sups;  // sup_x gsd_profile at physical time t per window
  double growth = 0.0;       // sups.back() / sups.front()
  enum class Verdict { bounded, growing, inconclusive } verdict = Verdict::inconclusive;
};

/// Window-refinement test of ground-state domination: the gsd_profile sup at
/// fixed physical time t stays put on a aGSD model and grows with R otherwise.
/// Bounded when growth < 1.25, growing when growth > 2.
RegimeMeasurement measure_regime(const LevyProfile& levy, const PotentialSpec& V, double h,
                                 const std::vector<double>& windows, double t);

struct ZooModel {
  std::string id;
  MarkovModel model;
  std::optional<LevyProfile> levy;
  std::optional<PotentialSpec> potential;
  std::optional<Lattice1D> lattice;
};

/// Parses "name(args)" with positional or key=value arguments, e.g.
/// "birthdeath(20)", "frac(alpha=1,delta=0,beta=2,kind=log-power)".
ZooModel make_zoo_model(const std::string& spec);
std::string list_models();

}  // namespace qerg
