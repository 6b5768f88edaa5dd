#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "contactopt/config.hpp"
#include "contactopt/errors.hpp"
#include "contactopt/runner.hpp"

using namespace contactopt;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("contactopt-test-" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

config::RunConfig quick(const std::string& scenario, const std::string& method, const fs::path& out) {
  config::RunConfig c;
  c.scenario = scenario;
  c.method = method;
  c.output_dir = out.string();
  c.n_candidates = 500;
  c.budget = 4;
  return c;
}

std::string expect_usage_error(const std::string& ini) {
  try {
    config::parse_ini(ini);
  } catch (const UsageError& e) {
    return e.what();
  }
  FAIL("expected UsageError");
  return {};
}

}  // namespace

TEST_CASE("config: INI and JSON round trips") {
  config::RunConfig c;
  c.scenario = "clamp-lite";
  c.method = "cbo";
  c.seed = 17;
  c.xi = 0.125;
  c.clamp_initial = {0.36, 0.33, 0.45, 0.4};
  c.polish = true;
  CHECK(config::parse_ini(config::to_ini(c)) == c);
  CHECK(config::from_json(config::to_json(c)) == c);
  CHECK(config::parse_json(config::to_json(c).dump()) == c);
  CHECK(config::parse_ini("") == config::RunConfig{});
  CHECK(!config::schema().empty());
}

TEST_CASE("config: diagnostics") {
  const std::string unknown = expect_usage_error("[run]\nscenario = wedge\nbogus = 1\n");
  CHECK(unknown.find("line 3") != std::string::npos);
  CHECK(unknown.find("bogus") != std::string::npos);
  CHECK(expect_usage_error("[cbo]\nbudget = many\n").find("budget") != std::string::npos);
  CHECK(expect_usage_error("[nosuch]\nkey = 1\n").find("nosuch") != std::string::npos);
  CHECK_THROWS_AS(config::parse_json(R"({"run": {"scenario": 3}})"), UsageError);
  CHECK_THROWS_AS(config::parse_json("{"), UsageError);

  config::RunConfig bad;
  bad.scenario = "bridge";
  CHECK_THROWS_AS(config::validate(bad), UsageError);
  bad = {};
  bad.wedge_initial = {1, 2};
  CHECK_THROWS_AS(config::validate(bad), UsageError);
  CHECK_THROWS_AS(config::load("/nonexistent/config.ini"), UsageError);
}

TEST_CASE("run: gradient outputs and byte-identical reruns") {
  const fs::path base = scratch_dir("gradient");
  auto cfg = quick("quadratic", "gradient", base / "a");
  std::ostringstream log;
  const auto r1 = runner::run(cfg, log);
  CHECK(r1.exit_code == 0);
  for (const char* f : {"manifest.json", "iterates.csv", "summary.json", "profile_initial.csv",
                        "profile_final.csv"})
    CHECK(fs::exists(r1.dir / f));
  const auto summary = nlohmann::json::parse(slurp(r1.dir / "summary.json"));
  CHECK(summary["converged"] == true);
  CHECK(summary["rho"][0].get<double>() == doctest::Approx(2.0).epsilon(1e-6));

  const auto csv = slurp(r1.dir / "iterates.csv");
  const auto again = runner::run(cfg, log);
  CHECK(slurp(again.dir / "iterates.csv") == csv);

  // The manifest reproduces the run.
  auto reloaded = config::load(r1.dir / "manifest.json");
  CHECK(reloaded == cfg);
  reloaded.output_dir = (base / "b").string();
  runner::run(reloaded, log);
  CHECK(slurp(base / "b" / "iterates.csv") == csv);
}

TEST_CASE("run: budget-0 cbo echoes the feasible seed") {
  const fs::path base = scratch_dir("cbo0");
  auto cfg = quick("wedge", "cbo", base);
  cfg.budget = 0;
  std::ostringstream log;
  const auto r = runner::run(cfg, log);
  CHECK(r.exit_code == 0);
  const auto summary = nlohmann::json::parse(slurp(base / "summary.json"));
  CHECK(summary["rho"].get<std::vector<double>>() == cfg.wedge_seed);
  CHECK(summary["objective"].get<double>() == cfg.wedge_seed[2]);
  CHECK(slurp(base / "samples.csv").rfind("iter,rho0,rho1,rho2,objective,c0,", 0) == 0);
}

TEST_CASE("run: cbo on an analytic problem is reproducible") {
  const fs::path base = scratch_dir("cbo");
  auto cfg = quick("quadratic-1d", "cbo", base / "a");
  std::ostringstream log;
  runner::run(cfg, log);
  cfg.output_dir = (base / "b").string();
  runner::run(cfg, log);
  CHECK(slurp(base / "a" / "samples.csv") == slurp(base / "b" / "samples.csv"));
}

TEST_CASE("compare") {
  const fs::path base = scratch_dir("compare");
  std::ostringstream log;
  for (int k = 0; k < 3; ++k) runner::run(quick("quadratic", "gradient", base / "reps" / std::to_string(k)), log);
  const auto rep = runner::compare({base / "reps"}, base / "reps" / "0");
  CHECK(rep.runs.size() == 3);
  CHECK(rep.scenario == "quadratic");
  CHECK(rep.stddev.norm() == 0.0);
  CHECK(rep.relative_error.norm() == 0.0);
  const auto j = rep.to_json();
  CHECK(j["stddev"][0] == 0.0);

  runner::run(quick("circle", "gradient", base / "circle"), log);
  CHECK_THROWS_AS(runner::compare({base / "reps" / "0", base / "circle"}), UsageError);
  CHECK_THROWS_AS(runner::compare({base / "nothing-here"}), UsageError);
}

TEST_CASE("output root from the environment") {
  config::RunConfig c;
  c.scenario = "circle";
  c.seed = 4;
  CHECK(runner::resolve_output_dir(c) == fs::path("runs/circle-gradient-seed4"));
  ::setenv(runner::kOutputRootEnv, "/tmp/root", 1);
  CHECK(runner::resolve_output_dir(c) == fs::path("/tmp/root/runs/circle-gradient-seed4"));
  c.output_dir = "/abs/dir";
  CHECK(runner::resolve_output_dir(c) == fs::path("/abs/dir"));
  ::unsetenv(runner::kOutputRootEnv);
}

TEST_CASE("library errors become an error status") {
  const fs::path base = scratch_dir("error");
  auto cfg = quick("wedge", "gradient", base);
  cfg.wedge_initial = {39, 41, 1};
  cfg.wedge_youngs = -5;  // rejected when the scenario is built
  std::ostringstream log;
  bool threw = false;
  try {
    const auto r = runner::run(cfg, log);
    CHECK(r.exit_code == 2);
    CHECK(r.status.rfind("error", 0) == 0);
  } catch (const UsageError&) {
    threw = true;
  }
  CHECK((threw || fs::exists(base / "summary.json")));
}
