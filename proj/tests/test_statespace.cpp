#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "qerg/errors.hpp"
#include "qerg/statespace.hpp"

using namespace qerg;

namespace {

StateSpace grid(int lo, int hi, std::function<double(int)> weight = [](int) { return 1.0; }) {
  std::vector<std::string> ids;
  Matrix coords(hi - lo + 1, 1);
  Vector mu(hi - lo + 1);
  for (int k = lo; k <= hi; ++k) {
    ids.push_back(std::to_string(k));
    coords(k - lo, 0) = k;
    mu(k - lo) = weight(k);
  }
  return StateSpace(ids, coords, mu);
}

// Brute force over every center and every radius in the distance set.
double frostman_scan(const StateSpace& s, double d_M) {
  double best = 0.0;
  for (Index x = 0; x < s.size(); ++x)
    for (Index z = 0; z < s.size(); ++z) {
      const double r = s.distance(x, z);
      if (r <= 0.0) continue;
      double mass = 0.0;
      for (Index y = 0; y < s.size(); ++y)
        if (s.distance(x, y) <= r) mass += s.mu()(y);
      best = std::max(best, mass / std::pow(r, d_M));
    }
  return best;
}

}  // namespace

TEST_CASE("ball_indicator on a five point line") {
  const auto s = grid(-2, 2);
  const Index base = s.index_of("0");
  CHECK(ball_indicator(s, ExhaustingFamily::linear(base, 0.0), 1.0) == std::vector<Index>{base});
  CHECK(ball_indicator(s, ExhaustingFamily::linear(base, 1.0), 1.0) == std::vector<Index>{1, 2, 3});
  CHECK(ball_indicator(s, ExhaustingFamily::linear(base, 1.0), 10.0).size() == 5);
}

TEST_CASE("balls are nested and reject t below t_min") {
  const auto s = grid(-6, 9);
  const auto fam = ExhaustingFamily::linear(4, 0.7, 0.5);
  CHECK_THROWS_AS(ball_indicator(s, fam, 0.4), DomainError);
  std::size_t previous = 0;
  for (double t = 0.5; t < 30.0; t += 0.37) {
    const auto ball = ball_indicator(s, fam, t);
    CHECK(ball.size() >= previous);
    for (Index x : ball_indicator(s, fam, std::max(0.5, t - 0.37)))
      CHECK(std::find(ball.begin(), ball.end(), x) != ball.end());
    previous = ball.size();
  }
  CHECK(previous == 16);
}

TEST_CASE("exhaustion time of a linear family") {
  const auto s = grid(0, 10);
  const double t = exhaustion_time(s, ExhaustingFamily::linear(0, 2.0), 1e-6);
  CHECK(t == doctest::Approx(5.0).epsilon(1e-5));
  CHECK(ball_indicator(s, ExhaustingFamily::linear(0, 2.0), t).size() == 11);
}

TEST_CASE("frostman constant") {
  SUBCASE("unit grid stays in [1, 3]") {
    for (int n : {1, 2, 5, 20, 60}) {
      const auto s = grid(0, n);
      const double c = frostman_constant(s, 1.0);
      CHECK(c >= 1.0);
      CHECK(c <= 3.0);
      CHECK(c == doctest::Approx(frostman_scan(s, 1.0)).epsilon(1e-14));
    }
  }
  SUBCASE("doubling weights grow with n") {
    double previous = 0.0;
    for (int n : {4, 8, 16}) {
      const auto s = grid(0, n, [](int k) { return std::pow(2.0, k); });
      const double c = frostman_constant(s, 1.0);
      CHECK(c == doctest::Approx(frostman_scan(s, 1.0)));
      CHECK(c > 4.0 * previous);
      previous = c;
    }
  }
  SUBCASE("single point") {
    const StateSpace s({"a"}, Matrix::Zero(1, 2), Vector::Constant(1, 0.3));
    CHECK(frostman_constant(s, 2.0) == doctest::Approx(0.3));
  }
  SUBCASE("nonincreasing in the exponent on a unit-spaced set") {
    const auto s = grid(0, 12, [](int k) { return 1.0 + 0.1 * k; });
    double previous = frostman_constant(s, 0.25);
    for (double d : {0.5, 1.0, 2.0, 3.0}) {
      const double c = frostman_constant(s, d);
      CHECK(c <= previous);
      previous = c;
    }
  }
}

TEST_CASE("state space invariants") {
  CHECK_THROWS_AS(StateSpace({"a", "a"}, Matrix::Zero(2, 1), Vector::Ones(2)), ModelError);
  CHECK_THROWS_AS(StateSpace({"a", "b"}, Matrix::Identity(2, 1), Vector(Vector::Zero(2))), ModelError);
  Matrix bad(2, 2);
  bad << 0, 1, 2, 0;
  CHECK_THROWS_AS(StateSpace({"a", "b"}, Matrix(), Vector::Ones(2), bad), ModelError);
}

TEST_CASE("plain-text table round trip") {
  std::istringstream in("# id x y mu\np 0 0 0.5\nq 3 4 1.5\n\nr 0 1 2\n");
  const auto s = StateSpace::load_table(in);
  REQUIRE(s.size() == 3);
  CHECK(s.dim() == 2);
  CHECK(s.distance(0, 1) == doctest::Approx(5.0));
  CHECK(s.total_mass() == doctest::Approx(4.0));
  std::ostringstream out;
  s.save_table(out);
  std::istringstream again(out.str());
  const auto t = StateSpace::load_table(again);
  CHECK(t.ids() == s.ids());
  CHECK(t.mu() == s.mu());
  CHECK(t.distances().isApprox(s.distances()));

  std::istringstream discrete("a 1\nb 2\nc 3\n");
  const auto d = StateSpace::load_table(discrete);
  CHECK(d.distance(0, 2) == 1.0);
  CHECK(d.dim() == 0);

  std::istringstream broken("a 0 1\nb 1\n");
  CHECK_THROWS_AS(StateSpace::load_table(broken), ConfigError);
}

TEST_CASE("lattice and scaling helpers") {
  const auto s = StateSpace::lattice_1d(0.25, 4);
  CHECK(s.size() == 9);
  CHECK(s.coords()(0, 0) == doctest::Approx(-1.0));
  CHECK(s.mu()(3) == 0.25);
  CHECK(s.min_separation() == doctest::Approx(0.25));
  CHECK(s.with_scaled_mu(4.0).total_mass() == doctest::Approx(9.0));
}
