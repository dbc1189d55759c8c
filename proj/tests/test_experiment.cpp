#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qerg/experiment.hpp"

using namespace qerg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("qerg-test-" + name);
  fs::remove_all(dir);
  return dir;
}

std::string read(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string body(const fs::path& p) {
  const std::string text = read(p);
  return text.substr(text.find('\n') + 1);
}

int config_error_line(const std::string& yaml) {
  try {
    ExperimentConfig::parse(yaml);
  } catch (const ConfigError& e) {
    return e.line;
  }
  return -2;
}

const char* kSwap = R"(model: swap2
t_grid: {start: 0.5, stop: 6, count: 12}
mc: {n: 20000}
)";

}  // namespace

TEST_CASE("parsing and defaults") {
  const auto c = ExperimentConfig::parse(kSwap);
  CHECK(c.model == "swap2");
  REQUIRE(c.t_grid.size() == 12);
  CHECK(c.t_grid.front() == 0.5);
  CHECK(c.t_grid.back() == doctest::Approx(6.0));
  CHECK(c.diagnostics.size() == diagnostic_names().size());
  REQUIRE(c.mc.has_value());
  CHECK(c.mc->seed == 20261016);
  for (const auto& d : c.diagnostics) {
    if (d.name == "quasi_ergodic") CHECK(d.p.size() == 3);
    if (d.name == "kappa") CHECK(d.a + 2.0 * d.b == doctest::Approx(1.0));
  }
  const auto again = ExperimentConfig::parse(c.to_yaml());
  CHECK(again.to_yaml() == c.to_yaml());

  const auto custom = ExperimentConfig::parse(R"(model:
  id: custom
  Q: [[0, 1], [1, 0]]
  V: [0, 1]
t_grid: [1, 2, 3]
diagnostics:
  - name: quasi_ergodic
    p: [1, inf]
)");
  CHECK(custom.model == "custom");
  CHECK(custom.custom_Q(0, 1) == 1.0);
  CHECK(std::isinf(custom.diagnostics[0].p[1]));
}

TEST_CASE("configuration errors carry line numbers") {
  CHECK(config_error_line(R"(model: swap2
t_grid: [1, 2, 3, 4]
diagnostics:
  - qsd
  - name: kappa
    a: 0.5
    b: 0.3
)") == 5);
  CHECK(config_error_line("model: swap2\nt_grid: [1, 2]\ncolour: blue\n") == 3);
  CHECK(config_error_line("model: swap2\nt_grid: [1, 2]\ndiagnostics:\n  - nonsense\n") == 4);
  CHECK(config_error_line("model: swap2\nt_grid: [1, x]\n") == 2);
  CHECK_THROWS_AS(ExperimentConfig::parse("model: torus\nt_grid: [1]\n"), std::exception);
  CHECK_THROWS_AS(ExperimentConfig::parse("model: swap2\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/config.yaml"), ConfigError);
}

TEST_CASE("full suite on the swap chain passes") {
  auto c = ExperimentConfig::parse(kSwap);
  c.output_dir = scratch("swap").string();
  const auto report = run_experiment(c);
  for (const auto& v : report.verdicts) {
    CAPTURE(v.claim);
    CAPTURE(v.detail);
    CHECK(v.pass);
  }
  CHECK(report.exit_code == 0);
  for (const char* f : {"config.yaml", "series.csv", "summary.csv", "spectral.txt", "verdict.txt", "mc.csv"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(fs::path(c.output_dir) / f));
    CHECK(read(fs::path(c.output_dir) / f).rfind("# qerg ", 0) == 0);
  }
  CHECK(read(fs::path(c.output_dir) / "verdict.txt").find("overall PASS") != std::string::npos);
  CHECK(body(fs::path(c.output_dir) / "series.csv").rfind("model_id,diagnostic,t,value,extra\n", 0) == 0);
  const auto reload = ExperimentConfig::load((fs::path(c.output_dir) / "config.yaml").string());
  CHECK(reload.t_grid == c.t_grid);
}

TEST_CASE("reducible custom model reports nonuniqueness") {
  auto c = ExperimentConfig::parse(R"(model:
  id: custom
  Q: [[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]
  V: [0.5, 0.5, 0.5, 0.5]
t_grid: [0.5, 1, 2]
)");
  c.output_dir = scratch("split").string();
  const auto report = run_experiment(c);
  CHECK(report.exit_code == 2);
  const std::string verdicts = read(fs::path(c.output_dir) / "verdict.txt");
  CHECK(verdicts.find("NonuniquenessWarning") != std::string::npos);
  CHECK(verdicts.find("overall FAIL") != std::string::npos);
}

TEST_CASE("identical seeds give identical bodies") {
  auto c = ExperimentConfig::parse(R"(model: birthdeath(8)
t_grid: {start: 1, stop: 10, count: 10}
mc: {n: 5000, seed: 11}
)");
  c.output_dir = scratch("det-a").string();
  run_experiment(c);
  c.output_dir = scratch("det-b").string();
  run_experiment(c);
  const fs::path a = fs::temp_directory_path() / "qerg-test-det-a";
  const fs::path b = fs::temp_directory_path() / "qerg-test-det-b";
  for (const char* f : {"series.csv", "summary.csv", "mc.csv", "spectral.txt", "verdict.txt"}) {
    CAPTURE(f);
    CHECK(body(a / f).size() > 0);
    CHECK(body(a / f) == body(b / f));
  }
}

TEST_CASE("environment overrides") {
  auto c = ExperimentConfig::parse(R"(model: birthdeath(6)
t_grid: [1, 2, 3, 4, 5]
diagnostics: [qsd, eigen_residuals]
mc: {n: 9000, seed: 3}
)");
  c.output_dir = scratch("env-ignored").string();
  const fs::path target = scratch("env-target");
  setenv("QERG_OUTPUT_DIR", target.c_str(), 1);
  setenv("QERG_THREADS", "3", 1);
  const auto report = run_experiment(c);
  unsetenv("QERG_OUTPUT_DIR");
  unsetenv("QERG_THREADS");
  CHECK(report.output_dir == target.string());
  CHECK(fs::exists(target / "verdict.txt"));
  CHECK_FALSE(fs::exists(c.output_dir));
  const std::string threaded = body(target / "mc.csv");
  const auto single = run_experiment(c);
  CHECK(body(fs::path(single.output_dir) / "mc.csv") == threaded);
}
