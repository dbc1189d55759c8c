#include <CLI11.hpp>

#include <iomanip>
#include <iostream>

#include "qerg/experiment.hpp"
#include "qerg/montecarlo.hpp"
#include "qerg/spectral.hpp"

using namespace qerg;

int main(int argc, char** argv) {
  CLI::App app{"Quasi-ergodicity laboratory for finite Feynman-Kac semigroups"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment config and write the report bundle");
  run->add_option("config", config_path, "YAML experiment file")->required();

  auto* list = app.add_subcommand("list-models", "List zoo model ids and parameters");

  std::string model_id;
  auto* spectral = app.add_subcommand("spectral", "Print the principal triple of a zoo model");
  spectral->add_option("model", model_id, "zoo id, e.g. birthdeath(20)")->required();

  std::string mc_model, x0;
  double t = 1.0;
  std::size_t n = 100000;
  std::uint64_t seed = 20261016;
  auto* mc = app.add_subcommand("mc", "Monte Carlo estimate of U_t1(x0) next to the matrix value");
  mc->add_option("model", mc_model, "zoo id")->required();
  mc->add_option("--x0", x0, "start state id (default: first state)");
  mc->add_option("--t", t, "model time")->check(CLI::PositiveNumber);
  mc->add_option("--n", n, "sample count")->check(CLI::Range(2ul, std::numeric_limits<std::size_t>::max()));
  mc->add_option("--seed", seed, "RNG seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto report = run_experiment(ExperimentConfig::load(config_path));
      for (const auto& v : report.verdicts)
        std::cout << (v.pass ? "PASS " : "FAIL ") << v.claim << " : " << v.detail << "\n";
      std::cout << "report written to " << report.output_dir << "\n";
      return report.exit_code;
    }
    if (*list) {
      std::cout << list_models();
      return 0;
    }
    if (*spectral) {
      const auto zoo = make_zoo_model(model_id);
      std::cout << "model " << zoo.id << "\ntime_scale " << zoo.model.time_scale() << "\n";
      principal_triple(zoo.model).write(std::cout);
      return 0;
    }
    if (*mc) {
      if (const char* threads = std::getenv("QERG_THREADS")) set_monte_carlo_threads(std::max(1, std::atoi(threads)));
      const auto zoo = make_zoo_model(mc_model);
      const auto& space = zoo.model.space();
      const Index start = x0.empty() ? 0 : space.index_of(x0);
      const auto est = fk_estimate(zoo.model, start, t, Vector::Ones(space.size()), n, RngStream(seed));
      const double exact = feynman_kac_operator(zoo.model, t).mass()(start);
      std::cout << std::setprecision(17) << "model_id,target,t,mean,stderr,n,seed,matrix\n"
                << zoo.id << ",U_t1(" << space.id(start) << ")," << t << "," << est.mean << "," << est.std_error
                << "," << est.n << "," << seed << "," << exact << "\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
