#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "contactopt/config.hpp"
#include "contactopt/errors.hpp"
#include "contactopt/runner.hpp"

namespace fs = std::filesystem;
using namespace contactopt;

namespace {

int do_run(const std::string& config_path, std::optional<std::uint64_t> seed, int repeats,
           const std::string& out) {
  config::RunConfig cfg = config::load(config_path);
  if (seed) cfg.seed = *seed;
  if (!out.empty()) cfg.output_dir = out;
  if (repeats <= 1) return runner::run(cfg, std::cout).exit_code;

  // Repeats go to <dir>/seed-<k> with consecutive seeds.
  const fs::path base = cfg.output_dir.empty()
                            ? fs::path("runs") / (cfg.scenario + "-" + cfg.method)
                            : fs::path(cfg.output_dir);
  const std::uint64_t first = cfg.seed;
  int code = 0;
  for (int k = 0; k < repeats; ++k) {
    config::RunConfig c = cfg;
    c.seed = first + static_cast<std::uint64_t>(k);
    c.output_dir = (base / ("seed-" + std::to_string(c.seed))).string();
    code = std::max(code, runner::run(c, std::cout).exit_code);
  }
  return code;
}

int do_compare(const std::vector<std::string>& dirs, const std::string& reference,
               const std::string& out) {
  std::vector<fs::path> paths(dirs.begin(), dirs.end());
  std::optional<fs::path> ref;
  if (!reference.empty()) ref = reference;
  const auto rep = runner::compare(paths, ref);
  const std::string text = rep.to_json().dump(2) + "\n";
  std::cout << text;
  if (!out.empty()) {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw UsageError("cannot write '" + out + "'");
    f << text;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contact-pressure design optimization with gradient and Bayesian drivers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(runner::kVersion));

  auto* run = app.add_subcommand("run", "Run one optimization from a config file (INI or JSON)");
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int repeats = 1;
  std::string out;
  run->add_option("config", config_path, "Config file (.ini, or .json incl. a run manifest)")->required();
  run->add_option("--seed", seed, "Override run.seed");
  run->add_option("--repeats", repeats, "Run N times with consecutive seeds")->check(CLI::PositiveNumber);
  run->add_option("--out", out, "Override run.output_dir");

  auto* cmp = app.add_subcommand("compare", "Mean and spread of final designs over runs");
  std::vector<std::string> dirs;
  std::string reference, cmp_out;
  cmp->add_option("dirs", dirs, "Run directories (or parents of repeat runs)")->required();
  cmp->add_option("--reference", reference, "Run directory used as the reference design");
  cmp->add_option("--out", cmp_out, "Also write the report to this JSON file");

  auto* defaults = app.add_subcommand("defaults", "Print the default config as INI");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) return do_run(config_path, seed, repeats, out);
    if (*cmp) return do_compare(dirs, reference, cmp_out);
    if (*defaults) {
      std::cout << config::to_ini(config::RunConfig{});
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
