#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qerg/montecarlo.hpp"

using namespace qerg;

namespace {

MarkovModel frozen_model() {
  Vector V(3);
  V << 0.5, 1.0, 2.0;
  return build_ctmc_model(3, KernelRecipe::user(Matrix::Identity(3, 3)), {}, PotentialSpec::custom(V), "frozen", false);
}

bool within(double estimate, double exact, double se, double z = 3.0) { return std::abs(estimate - exact) <= z * se; }

}  // namespace

TEST_CASE("random streams") {
  RngStream a(7), b(7);
  for (int k = 0; k < 5; ++k) CHECK(a.uniform() == b.uniform());
  const RngStream base(7);
  RngStream c1 = base.split(3), c2 = RngStream(7).split(3), c3 = base.split(4);
  const double u1 = c1.uniform();
  CHECK(u1 == c2.uniform());
  CHECK(u1 != c3.uniform());
  CHECK(base.split(0).seed() != base.seed());
}

TEST_CASE("paths of a frozen chain") {
  const auto model = frozen_model();
  RngStream rng(11);
  double jumps = 0.0;
  const int n = 20000;
  const double t = 2.5;
  for (int k = 0; k < n; ++k) {
    const auto path = sample_ctmc_path(model, 1, t, rng);
    CHECK(path.states.size() == path.jump_times.size() + 1);
    for (Index s : path.states) REQUIRE(s == 1);
    REQUIRE(path.weight == doctest::Approx(std::exp(-t)).epsilon(1e-14));
    for (double tau : path.jump_times) REQUIRE((tau > 0.0 && tau < t));
    jumps += static_cast<double>(path.jump_times.size());
  }
  CHECK(within(jumps / n, t, std::sqrt(t / n)));
}

TEST_CASE("final-state law matches the uniformized transition matrix") {
  const auto model = make_zoo_model("birthdeath(5)").model;
  const double t = 1.7;
  const Matrix P = uniformized_transition(model.with_potential(Vector::Zero(5)), t).transition();
  RngStream rng(12);
  const int n = 40000;
  Vector counts = Vector::Zero(5);
  for (int k = 0; k < n; ++k) counts(sample_ctmc_path(model, 2, t, rng).states.back()) += 1.0;
  for (Index y = 0; y < 5; ++y) {
    const double p = P(2, y);
    CHECK(within(counts(y) / n, p, std::sqrt(p * (1 - p) / n), 4.0));
  }
}

TEST_CASE("Feynman-Kac estimates") {
  SUBCASE("no killing is exact") {
    const auto model = make_zoo_model("birthdeath(6)").model.with_potential(Vector::Zero(6));
    const auto e = fk_estimate(model, 3, 2.0, Vector::Ones(6), 1000, RngStream(1));
    CHECK(e.mean == 1.0);
    CHECK(e.std_error == 0.0);
    CHECK(e.n == 1000);
  }
  SUBCASE("constant killing is exact") {
    const auto model = make_zoo_model("box(2,3)").model.with_potential(Vector::Constant(9, 0.7));
    const auto e = fk_estimate(model, 0, 1.5, Vector::Ones(9), 1000, RngStream(2));
    CHECK(e.mean == doctest::Approx(std::exp(-1.05)).epsilon(1e-14));
    CHECK(e.std_error <= 1e-15);
  }
  SUBCASE("birth-death chain within three standard errors") {
    const auto model = make_zoo_model("birthdeath(20)").model;
    Vector f(20);
    for (Index k = 0; k < 20; ++k) f(k) = 1.0 + 0.1 * static_cast<double>(k);
    for (double t : {0.5, 3.0}) {
      CAPTURE(t);
      const auto e = fk_estimate(model, 15, t, f, 50000, RngStream(3));
      const double exact = feynman_kac_operator(model, t).apply(f)(15);
      CHECK(e.std_error > 0.0);
      CHECK(within(e.mean, exact, e.std_error));
    }
  }
  SUBCASE("ratio estimator") {
    const auto model = make_zoo_model("birthdeath(10)").model;
    Vector sigma = Vector::Zero(10);
    sigma(2) = 0.25;
    sigma(8) = 0.75;
    Vector f = Vector::Zero(10);
    f.tail(5).setOnes();
    const auto op = feynman_kac_operator(model, 2.0);
    const double exact = sigma.dot(op.apply(f)) / sigma.dot(op.mass());
    const auto e = fk_ratio_estimate(model, sigma, 2.0, f, 50000, RngStream(4));
    CHECK(within(e.mean, exact, e.std_error));
    CHECK_THROWS_AS(fk_ratio_estimate(model, 2.0 * sigma, 2.0, f, 100, RngStream(4)), DomainError);
  }
  SUBCASE("argument checks") {
    const auto model = make_zoo_model("swap2").model;
    CHECK_THROWS_AS(fk_estimate(model, 0, 1.0, Vector::Ones(2), 1, RngStream(1)), DomainError);
    CHECK_THROWS_AS(fk_estimate(model, 5, 1.0, Vector::Ones(2), 10, RngStream(1)), DomainError);
    CHECK_THROWS_AS(fk_estimate(model, 0, 0.0, Vector::Ones(2), 10, RngStream(1)), DomainError);
    CHECK_THROWS_AS(fk_estimate(model, 0, 1.0, Vector::Ones(3), 10, RngStream(1)), DomainError);
  }
}

TEST_CASE("exit probabilities") {
  const auto bd = make_zoo_model("birthdeath(8)").model;
  const auto all = exit_probability(bd, 3, 5.0, bd.space().diameter(), 500, RngStream(5));
  CHECK(all.mean == 1.0);
  CHECK(all.std_error == 0.0);
  CHECK(exit_probability(frozen_model(), 0, 5.0, 0.0, 500, RngStream(5)).mean == 1.0);
  // From the left end only up-moves (probability 0.4) leave the point.
  const auto stay = exit_probability(bd, 0, 1.5, 0.0, 40000, RngStream(6));
  CHECK(within(stay.mean, std::exp(-0.4 * 1.5), stay.std_error));
}

TEST_CASE("mass sandwich") {
  const auto model = make_zoo_model("birthdeath(20)").model;
  for (double t : {0.5, 2.0}) {
    CAPTURE(t);
    const auto s = mass_sandwich(model, 10, t, 3.0, 40000, RngStream(7));
    CHECK(s.lower.mean - 3.0 * s.lower.std_error <= s.mass);
    CHECK(s.mass <= s.upper + 1e-12);
    CHECK(s.lower.mean > 0.0);
  }
}

TEST_CASE("stable increments") {
  const int n = 200000;
  SUBCASE("alpha = 2 is Gaussian with variance 2 dt") {
    RngStream rng(8);
    double s1 = 0.0, s2 = 0.0;
    for (int k = 0; k < n; ++k) {
      const double x = sample_stable_increment(2.0, 0.3, rng);
      s1 += x;
      s2 += x * x;
    }
    const double var = s2 / n - (s1 / n) * (s1 / n);
    CHECK(within(var, 0.6, 0.6 * std::sqrt(2.0 / n)));
  }
  SUBCASE("alpha = 1 has median |X| = dt") {
    RngStream rng(9);
    int inside = 0;
    for (int k = 0; k < n; ++k) inside += std::abs(sample_stable_increment(1.0, 0.4, rng)) <= 0.4;
    CHECK(within(static_cast<double>(inside) / n, 0.5, std::sqrt(0.25 / n)));
  }
  SUBCASE("characteristic function at alpha = 1.5") {
    RngStream rng(10);
    for (double xi : {0.5, 1.0, 2.0}) {
      CAPTURE(xi);
      double s1 = 0.0, s2 = 0.0;
      for (int k = 0; k < n; ++k) {
        const double c = std::cos(xi * sample_stable_increment(1.5, 0.5, rng));
        s1 += c;
        s2 += c * c;
      }
      const double mean = s1 / n;
      const double se = std::sqrt((s2 / n - mean * mean) / n);
      CHECK(within(mean, std::exp(-0.5 * std::pow(xi, 1.5)), se));
    }
  }
  SUBCASE("domain") {
    RngStream rng(1);
    CHECK_THROWS_AS(sample_stable_increment(2.5, 1.0, rng), DomainError);
    CHECK_THROWS_AS(sample_stable_increment(1.0, 0.0, rng), DomainError);
  }
}

TEST_CASE("Levy path estimator") {
  const auto flat = fk_estimate_levy(1.0, PotentialSpec::constant(0.4), 0.0, 2.0, 8, 1000, RngStream(13));
  CHECK(flat.mean == doctest::Approx(std::exp(-0.8)).epsilon(1e-14));
  CHECK(flat.std_error <= 1e-15);
  // Against the discretized fractional model with the same Cauchy profile and V = 1 v |x|.
  const auto V = PotentialSpec::power(1.0);
  const Lattice1D grid{0.25, 24.0};
  const auto model = build_fractional_model(grid, LevyProfile{}, V);
  const double t = 1.0;
  const double exact = feynman_kac_operator(model, t * model.time_scale()).mass()(grid.half_count());
  const auto e = fk_estimate_levy(1.0, V, 0.0, t, 200, 40000, RngStream(14));
  CHECK(std::abs(e.mean - exact) <= std::max(3.0 * e.std_error, 0.05 * exact));
}

TEST_CASE("reproducibility and error scaling") {
  const auto model = make_zoo_model("birthdeath(20)").model;
  const Vector f = Vector::Ones(20);
  set_monte_carlo_threads(1);
  const auto a = fk_estimate(model, 4, 2.0, f, 30000, RngStream(99));
  const auto b = fk_estimate(model, 4, 2.0, f, 30000, RngStream(99));
  set_monte_carlo_threads(4);
  const auto c = fk_estimate(model, 4, 2.0, f, 30000, RngStream(99));
  CHECK(monte_carlo_threads() == 4);
  set_monte_carlo_threads(1);
  CHECK(a.mean == b.mean);
  CHECK(a.mean == c.mean);
  CHECK(a.std_error == c.std_error);
  CHECK(a.seed == 99);
  CHECK(fk_estimate(model, 4, 2.0, f, 30000, RngStream(100)).mean != a.mean);

  const auto small = fk_estimate(model, 4, 2.0, f, 4 * 4096, RngStream(5));
  const auto large = fk_estimate(model, 4, 2.0, f, 64 * 4096, RngStream(5));
  CHECK(small.std_error / large.std_error == doctest::Approx(4.0).epsilon(0.10));
}
