#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "qerg/models.hpp"
#include "qerg/operators.hpp"
#include "qerg/quadrature.hpp"

using namespace qerg;

namespace {

MarkovModel swap_model(double v) {
  Vector V(2);
  V << 0.0, v;
  return build_ctmc_model(2, KernelRecipe::complete(), {}, PotentialSpec::custom(V), "swap");
}

// exp(tG) for a real symmetric 2x2 G = [[a, b], [b, d]].
Matrix exp_sym2(double t, double a, double b, double d) {
  const double m = 0.5 * (a + d);
  const double delta = std::sqrt(0.25 * (a - d) * (a - d) + b * b);
  Matrix N(2, 2);
  N << a - m, b, b, d - m;
  return std::exp(t * m) * (std::cosh(t * delta) * Matrix::Identity(2, 2) + std::sinh(t * delta) / delta * N);
}

MarkovModel random_model(std::mt19937_64& rng, Index n) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Matrix Q(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) Q(i, j) = u(rng);
  for (Index i = 0; i < n; ++i) Q.row(i) /= Q.row(i).sum();
  Vector mu(n), V(n);
  for (Index i = 0; i < n; ++i) {
    mu(i) = u(rng) * 3.0;
    V(i) = u(rng) - 0.3;
  }
  return build_ctmc_model(n, KernelRecipe::user(Q), mu, PotentialSpec::custom(V), "random");
}

std::vector<MarkovModel> zoo() {
  std::vector<MarkovModel> out;
  for (const char* id : {"swap2", "birthdeath(20)", "box(2,4)", "complete(5)", "frac(alpha=1,beta=2,R=8)",
                         "frac(alpha=0.5,beta=0.5,kind=power,R=6)", "ho(R=4,h=0.2)"})
    out.push_back(make_zoo_model(id).model);
  return out;
}

}  // namespace

TEST_CASE("uniformized transition") {
  SUBCASE("identity jump matrix") {
    const auto model = build_ctmc_model(3, KernelRecipe::user(Matrix::Identity(3, 3)), {},
                                        PotentialSpec::constant(0.0), "id", false);
    for (double t : {0.1, 1.0, 7.0}) CHECK(uniformized_transition(model, t).transition().isIdentity(1e-14));
  }
  SUBCASE("swap closed form") {
    const auto model = swap_model(0.0);
    for (double t : {0.05, 0.5, 2.0, 9.0}) {
      const auto P = uniformized_transition(model, t).transition();
      CHECK(P(0, 0) == doctest::Approx((1.0 + std::exp(-2.0 * t)) / 2.0).epsilon(1e-13));
      CHECK(P(0, 1) == doctest::Approx((1.0 - std::exp(-2.0 * t)) / 2.0).epsilon(1e-13));
    }
  }
  SUBCASE("rows sum to one within eps and metadata is recorded") {
    const auto model = make_zoo_model("birthdeath(20)").model;
    const auto op = uniformized_transition(model, 30.0, 1e-12);
    CHECK((op.transition().rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
    CHECK(op.metadata().tail_mass < 1e-12);
    CHECK(op.metadata().terms > 30);
    CHECK(op.metadata().method == "uniformization");
  }
  SUBCASE("apply matches the matrix") {
    const auto model = make_zoo_model("complete(6)").model;
    Vector f = Vector::LinSpaced(6, -1.0, 2.0);
    CHECK((uniformized_apply(model, 2.5, f) - uniformized_transition(model, 2.5).transition() * f)
              .cwiseAbs()
              .maxCoeff() < 1e-13);
  }
  CHECK_THROWS_AS(uniformized_transition(swap_model(0.0), 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(uniformized_transition(swap_model(0.0), 0.0), DomainError);
}

TEST_CASE("Feynman-Kac operator") {
  SUBCASE("V = 0 coincides with uniformization") {
    const auto model = make_zoo_model("box(2,4)").model.with_potential(Vector::Zero(16));
    for (double t : {0.3, 2.0, 11.0})
      CHECK((feynman_kac_operator(model, t).density() - uniformized_transition(model, t).density())
                .cwiseAbs()
                .maxCoeff() <= 1e-10);
  }
  SUBCASE("constant V scales the free semigroup") {
    const auto base = make_zoo_model("birthdeath(8)").model;
    const auto model = base.with_potential(Vector::Constant(8, 0.7));
    const double t = 1.9;
    const Matrix expected = std::exp(-0.7 * t) * uniformized_transition(base, t).density();
    CHECK((feynman_kac_operator(model, t).density() - expected).cwiseAbs().maxCoeff() <= 1e-13);
  }
  SUBCASE("2x2 closed form") {
    for (double v : {0.0, 0.5, 3.0})
      for (double t : {0.1, 1.0, 4.0}) {
        const Matrix expected = exp_sym2(t, -1.0, 1.0, -1.0 - v);
        CHECK((feynman_kac_operator(swap_model(v), t).transition() - expected).cwiseAbs().maxCoeff() <= 1e-13);
      }
  }
  SUBCASE("Trotter error at least halves as the step count doubles") {
    const auto model = make_zoo_model("birthdeath(10)").model;
    const auto exact = feynman_kac_operator(model, 2.0);
    double previous = 0.0;
    for (int k : {4, 8, 16, 32, 64}) {
      const double err =
          (feynman_kac_operator(model, 2.0, ExpMethod::trotter, k).density() - exact.density()).cwiseAbs().maxCoeff();
      if (previous > 0.0) CHECK(err <= 0.55 * previous);
      previous = err;
    }
    CHECK_THROWS_AS(feynman_kac_operator(model, 1.0, ExpMethod::trotter, 0), DomainError);
  }
  SUBCASE("positivity and mass bound") {
    for (const auto& model : zoo()) {
      const auto op = feynman_kac_operator(model, 0.5);
      CHECK(op.density().minCoeff() > 0.0);
      CHECK(op.mass().maxCoeff() <= std::exp(0.5 * model.negative_part_sup()) * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("adjoint") {
  std::mt19937_64 rng(7);
  const auto model = random_model(rng, 3);
  const auto op = feynman_kac_operator(model, 0.8);
  const auto adj = adjoint(op);
  std::normal_distribution<double> g;
  for (int k = 0; k < 10; ++k) {
    Vector f(3), h(3);
    for (Index i = 0; i < 3; ++i) {
      f(i) = g(rng);
      h(i) = g(rng);
    }
    const double lhs = inner(op.apply(f), h, model.space().mu());
    const double rhs = inner(f, adj.apply(h), model.space().mu());
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    CHECK((adj.apply(h) - op.apply_adjoint(h)).cwiseAbs().maxCoeff() <= 1e-14);
  }
  CHECK(adjoint(adjoint(op)).density() == op.density());
  const auto sym = feynman_kac_operator(swap_model(1.0), 1.3);
  CHECK(adjoint(sym).density().isApprox(sym.density(), 1e-14));
}

TEST_CASE("compose") {
  SUBCASE("identity element") {
    const auto model = make_zoo_model("birthdeath(7)").model;
    const auto op = feynman_kac_operator(model, 0.9);
    const auto id = KernelOperator::identity(model.space_ptr());
    CHECK(compose(id, op).density().isApprox(op.density(), 1e-14));
    CHECK(compose(op, id).density().isApprox(op.density(), 1e-14));
  }
  SUBCASE("semigroup law on the zoo") {
    for (const auto& model : zoo())
      for (double s : {0.25, 0.5, 1.0})
        for (double t : {0.25, 0.5, 1.0}) {
          const auto lhs = compose(feynman_kac_operator(model, s), feynman_kac_operator(model, t));
          const auto rhs = feynman_kac_operator(model, s + t);
          CHECK(lhs.t() == doctest::Approx(s + t));
          CHECK((lhs.density() - rhs.density()).cwiseAbs().maxCoeff() <= 1e-9);
        }
  }
  SUBCASE("associativity") {
    std::mt19937_64 rng(11);
    const auto model = random_model(rng, 4);
    const auto a = feynman_kac_operator(model, 0.3), b = feynman_kac_operator(model, 0.7),
               c = feynman_kac_operator(model, 1.1);
    CHECK((compose(compose(a, b), c).density() - compose(a, compose(b, c)).density()).cwiseAbs().maxCoeff() <= 1e-10);
  }
  SUBCASE("mismatched spaces") {
    const auto a = feynman_kac_operator(make_zoo_model("complete(3)").model, 1.0);
    const auto b = feynman_kac_operator(make_zoo_model("complete(4)").model, 1.0);
    CHECK_THROWS_AS(compose(a, b), DomainError);
    const auto c = feynman_kac_operator(make_zoo_model("complete(3)").model.with_scaled_mu(2.0), 1.0);
    CHECK_THROWS_AS(compose(a, c), DomainError);
  }
}

TEST_CASE("duality between the model and its dual") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 3; ++trial) {
    const auto model = random_model(rng, 5);
    CHECK(model.duality_defect() <= 1e-12);
    for (double t : {0.4, 2.0}) {
      const auto u = feynman_kac_operator(model, t).density();
      const auto dual = dual_feynman_kac_operator(model, t).density();
      CHECK((u - dual.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
  Vector mu(4);
  mu << 1.0, 0.5, 0.25, 0.125;
  const auto path = build_ctmc_model(4, KernelRecipe::birth_death(0.5), mu, PotentialSpec::constant(0.0), "path");
  for (Index x = 0; x < 4; ++x)
    for (Index y = 0; y < 4; ++y)
      CHECK(mu(x) * path.Q()(x, y) == doctest::Approx(mu(y) * path.Q_dual()(y, x)).epsilon(1e-15));
  CHECK_FALSE(path.dual_is_stochastic());
}

TEST_CASE("model validation") {
  Matrix Q(2, 2);
  Q << 0.5, 0.4, 0.0, 1.0;
  CHECK_THROWS_AS(build_ctmc_model(2, KernelRecipe::user(Q), {}, PotentialSpec::constant(0.0)), ModelError);
  Q << 1.0, 0.0, 0.0, 1.0;
  CHECK_THROWS_AS(build_ctmc_model(2, KernelRecipe::user(Q), {}, PotentialSpec::constant(0.0)), ModelError);
  Vector V(2);
  V << 0.0, std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(build_ctmc_model(2, KernelRecipe::complete(), {}, PotentialSpec::custom(V)), ModelError);
}

TEST_CASE("text serialization round trip") {
  const auto model = make_zoo_model("birthdeath(5)").model;
  const auto op = feynman_kac_operator(model, 1.25);
  std::stringstream io;
  op.write(io);
  const auto back = KernelOperator::read(io, model.space_ptr());
  CHECK(back.t() == 1.25);
  CHECK(back.density() == op.density());
}

TEST_CASE("Mehler kernel") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 20; ++k) {
    const double t = 0.1 + std::abs(u(rng)), x = u(rng), y = u(rng);
    CHECK(mehler_kernel(t, x, y) == doctest::Approx(mehler_kernel(t, y, x)).epsilon(1e-15));
    CHECK(std::log(mehler_kernel(t, x, y)) == doctest::Approx(log_mehler_kernel(t, x, y)).epsilon(1e-12));
  }
  CHECK(mehler_kernel(1.0, 0.0, 0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi * std::sinh(2.0))));
  CHECK_THROWS_AS(mehler_kernel(0.0, 0.0, 0.0), DomainError);
  CHECK_THROWS_AS(ho_survival(-1.0, 0.0), DomainError);

  SUBCASE("Chapman-Kolmogorov by quadrature") {
    for (auto [s, t, x, y] : {std::array{0.5, 0.5, 0.3, -0.7}, std::array{0.2, 1.1, 1.5, 0.4}}) {
      const double lhs = integrate<double>(
          [&](double z) { return mehler_kernel(s, x, z) * mehler_kernel(t, z, y); },
          -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity());
      CHECK(std::abs(lhs - mehler_kernel(s + t, x, y)) <= 1e-8);
    }
  }
  SUBCASE("survival matches the kernel integral") {
    const double inf = std::numeric_limits<double>::infinity();
    for (auto [t, x] : {std::pair{1.0, 1.5}, std::pair{0.3, 0.0}, std::pair{2.0, -2.5}}) {
      const double q = integrate<double>([&](double y) { return mehler_kernel(t, x, y); }, -inf, inf);
      CHECK(std::abs(q - ho_survival(t, x)) <= 1e-8);
    }
    for (double t : {0.2, 1.0, 3.0}) CHECK(ho_survival(t, 0.0) == doctest::Approx(std::pow(std::cosh(2 * t), -0.5)));
  }
  SUBCASE("ground state eigen-identity") {
    const double inf = std::numeric_limits<double>::infinity();
    for (double x : {0.0, 0.8, -2.0}) {
      const double lhs = integrate<double>(
          [&](double y) { return mehler_kernel(1.0, x, y) * ho_ground_state(y); }, -inf, inf);
      CHECK(std::abs(lhs - std::exp(-1.0) * ho_ground_state(x)) <= 1e-8);
    }
  }
  SUBCASE("d = 2 factorizes") {
    Eigen::Vector2d x(0.3, -1.0), y(1.2, 0.4);
    CHECK(mehler_kernel(0.7, x, y) ==
          doctest::Approx(mehler_kernel(0.7, x(0), y(0)) * mehler_kernel(0.7, x(1), y(1))).epsilon(1e-14));
    CHECK(ho_survival(0.7, x) == doctest::Approx(ho_survival(0.7, x(0)) * ho_survival(0.7, x(1))).epsilon(1e-14));
  }
}
