#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "qerg/models.hpp"
#include "qerg/operators.hpp"

namespace qerg {

/// Seeded 64-bit Mersenne Twister stream; split() derives independent children.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  /// Child stream number `index`; depends only on (seed, index).
  RngStream split(std::uint64_t index) const;

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double exponential() { return std::exponential_distribution<double>(1.0)(engine_); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

struct PathSample {
  std::vector<double> jump_times;
  std::vector<Index> states;  // jump_times.size() + 1 entries
  double weight = 1.0;        // exp(-int_0^t V(X_s) ds)
};

struct EstimateWithError {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

/// Worker threads used by the estimators (default 1). Results do not depend on it.
void set_monte_carlo_threads(unsigned threads);
unsigned monte_carlo_threads();

/// Rate-1 Poisson clock, jumps drawn from the rows of Q, exact holding-time weight.
PathSample sample_ctmc_path(const MarkovModel& model, Index x0, double t, RngStream& rng);

/// Mean of weight * f(X_t) started at x0; estimates (U_t f)(x0). Needs n >= 2.
EstimateWithError fk_estimate(const MarkovModel& model, Index x0, double t, const Vector& f, std::size_t n,
                              const RngStream& rng);

/// sigma(U_t f) / sigma(U_t 1) for a probability vector sigma, as a ratio
/// estimator with delta-method standard error.
EstimateWithError fk_ratio_estimate(const MarkovModel& model, const Vector& sigma, double t, const Vector& f,
                                    std::size_t n, const RngStream& rng);

/// P^{x0}(t <= exit time of the closed ball of `radius` around x0), V ignored.
EstimateWithError exit_probability(const MarkovModel& model, Index x0, double t, double radius, std::size_t n,
                                   const RngStream& rng);

struct MassSandwich {
  EstimateWithError lower;  // e^{-t sup_B V_+} P(t <= tau_B)
  double mass = 0.0;        // (U_t 1)(x0) from the matrix exponential
  double upper = 0.0;       // (1/t) int_0^t P_s(e^{-tV})(x0) ds by quadrature
};

MassSandwich mass_sandwich(const MarkovModel& model, Index x0, double t, double radius, std::size_t n,
                           const RngStream& rng);

/// Symmetric alpha-stable draw with characteristic function exp(-dt |xi|^alpha)
/// (Chambers-Mallows-Stuck). Throws DomainError for alpha outside (0, 2] or dt <= 0.
double sample_stable_increment(double alpha, double dt, RngStream& rng);

/// Euler scheme for exp(-int_0^t V(X_s) ds) along an alpha-stable path from x0
/// with a left-endpoint Riemann sum over n_steps; estimates (U_t 1)(x0).
EstimateWithError fk_estimate_levy(double alpha, const PotentialSpec& V, double x0, double t, int n_steps,
                                   std::size_t n, const RngStream& rng);

}  // namespace qerg
