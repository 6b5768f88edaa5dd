#include "contactopt/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "contactopt/bayesopt.hpp"
#include "contactopt/errors.hpp"
#include "contactopt/nlpopt.hpp"

namespace contactopt::runner {

namespace fs = std::filesystem;
using Vector = Eigen::VectorXd;

namespace {

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

template <std::size_t N>
std::array<double, N> to_array(const std::vector<double>& v) {
  std::array<double, N> a{};
  std::copy_n(v.begin(), N, a.begin());
  return a;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << content;
}

void write_profile(const scenarios::Scenario& s, const Vector& rho, const fs::path& path,
                   std::ostream& log) {
  std::ostringstream os;
  try {
    s.write_profile(rho, os);
  } catch (const Error& ex) {
    log << "warning: no pressure profile for " << path.filename().string() << ": " << ex.what() << '\n';
    os.str("");
    scenarios::Scenario::write_profile_header(os);
  }
  write_file(path, os.str());
}

nlohmann::json read_summary(const fs::path& dir) {
  std::ifstream in(dir / "summary.json");
  if (!in) throw UsageError("no summary.json in '" + dir.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& ex) {
    throw UsageError("'" + (dir / "summary.json").string() + "': " + ex.what());
  }
}

}  // namespace

std::unique_ptr<scenarios::Scenario> make_scenario(const config::RunConfig& c) {
  config::validate(c);
  if (c.scenario == "wedge") {
    scenarios::WedgeParams p;
    p.geometry.theta_min = c.wedge_theta_min;
    p.geometry.theta_max = c.wedge_theta_max;
    p.geometry.resolution.left_along = c.wedge_left_along;
    p.geometry.resolution.right_along = c.wedge_right_along;
    p.geometry.resolution.left_across = c.wedge_across;
    p.geometry.resolution.right_across = c.wedge_across;
    p.material = {c.wedge_youngs, c.wedge_poisson};
    p.support_stiffness = c.wedge_support_stiffness;
    p.p2 = c.wedge_p2;
    p.lambda_lower = c.wedge_lambda_lower;
    p.lambda_upper = c.wedge_lambda_upper;
    p.n_lower_segments = c.wedge_lower_segments;
    p.p1_min = c.wedge_p1_min;
    p.p1_max = c.wedge_p1_max;
    p.initial = to_vector(c.wedge_initial);
    p.seed = to_vector(c.wedge_seed);
    return std::make_unique<scenarios::WedgeScenario>(p);
  }
  if (c.scenario == "clamp-lite") {
    scenarios::ClampLiteParams p;
    p.geometry.lower = to_array<4>(c.clamp_lower);
    p.geometry.upper = to_array<4>(c.clamp_upper);
    p.geometry.resolution.flange_along = c.clamp_flange_along;
    p.geometry.resolution.retainer_along = c.clamp_retainer_along;
    p.material = {c.clamp_youngs, c.clamp_poisson};
    p.band_stiffness = c.clamp_band_stiffness;
    p.seal_min = c.clamp_seal_min;
    p.element_lower = c.clamp_element_lower;
    p.element_upper = c.clamp_element_upper;
    p.p_norm = c.clamp_p_norm;
    p.gradient_aggregation =
        c.clamp_aggregation == "max" ? scenarios::Aggregation::ExactMax : scenarios::Aggregation::PNorm;
    p.initial = to_vector(c.clamp_initial);
    p.seed = to_vector(c.clamp_seed);
    return std::make_unique<scenarios::ClampLiteScenario>(p);
  }
  return std::make_unique<scenarios::AnalyticScenario>(c.scenario);
}

fs::path resolve_output_dir(const config::RunConfig& cfg) {
  fs::path dir = cfg.output_dir.empty()
                     ? fs::path("runs") / (cfg.scenario + "-" + cfg.method + "-seed" + std::to_string(cfg.seed))
                     : fs::path(cfg.output_dir);
  if (dir.is_relative()) {
    if (const char* root = std::getenv(kOutputRootEnv); root && *root) dir = fs::path(root) / dir;
  }
  return dir;
}

RunResult run(const config::RunConfig& cfg, std::ostream& log) {
  const auto scenario = make_scenario(cfg);
  RunResult res;
  res.dir = resolve_output_dir(cfg);
  fs::create_directories(res.dir);

  nlohmann::json manifest;
  manifest["tool"] = kToolName;
  manifest["version"] = kVersion;
  manifest["csv_schema"] = kCsvSchemaVersion;
  manifest["seed"] = cfg.seed;
  manifest["config"] = config::to_json(cfg);
  write_file(res.dir / "manifest.json", manifest.dump(2) + "\n");

  nlohmann::json summary;
  summary["scenario"] = cfg.scenario;
  summary["method"] = cfg.method;
  summary["seed"] = cfg.seed;

  Vector start, final_rho;
  try {
    if (cfg.method == "gradient") {
      nlpopt::NlpOptions opts;
      opts.max_iter = cfg.max_iter;
      opts.dual_tol = cfg.dual_tol;
      opts.compl_tol = cfg.compl_tol;
      opts.viol_tol = cfg.viol_tol;
      opts.mu_init = cfg.mu_init;
      opts.seed = cfg.seed;
      start = scenario->initial();
      log << "gradient run on " << cfg.scenario << " from " << start.transpose() << '\n';
      const nlpopt::NlpResult r = nlpopt::solve_nlp(scenario->nlp_problem(), start, opts);
      std::ostringstream csv;
      r.log.write_csv(csv);
      write_file(res.dir / "iterates.csv", csv.str());
      final_rho = r.rho;
      const bool feasible = r.violation <= cfg.viol_tol;
      res.status = nlpopt::to_string(r.status);
      res.exit_code = r.status == nlpopt::NlpStatus::Converged ? 0 : 2;
      summary["status"] = res.status;
      summary["converged"] = r.status == nlpopt::NlpStatus::Converged;
      summary["feasible"] = feasible;
      summary["rho"] = to_std(r.rho);
      summary["objective"] = r.objective;
      summary["violation"] = r.violation;
      summary["dual_optimality"] = r.dual_opt;
      summary["complementarity"] = r.complementarity;
      summary["iterations"] = r.iterations;
      summary["evaluations"] = r.evaluations;
      summary["multipliers"] = to_std(r.multipliers);
    } else {
      bayesopt::CboOptions opts;
      opts.n_init = cfg.n_init;
      opts.budget = cfg.budget;
      opts.n_candidates = cfg.n_candidates;
      opts.xi = cfg.xi;
      opts.polish = cfg.polish;
      opts.seed = cfg.seed;
      const auto seed = scenario->feasible_seed();
      log << "cbo run on " << cfg.scenario << ", budget " << cfg.budget << '\n';
      const bayesopt::CboResult r = bayesopt::run_cbo(scenario->cbo_problem(), seed, opts);
      std::ostringstream csv;
      r.write_csv(csv);
      write_file(res.dir / "samples.csv", csv.str());
      start = seed ? *seed : (r.samples.empty() ? scenario->initial() : r.samples.front().rho);
      int n_feasible = 0;
      for (const auto& s : r.samples) n_feasible += s.feasible ? 1 : 0;
      summary["samples"] = r.samples.size();
      summary["feasible_samples"] = n_feasible;
      if (r.best) {
        const auto& b = r.samples[*r.best];
        final_rho = b.rho;
        res.status = "feasible";
        res.exit_code = 0;
        summary["rho"] = to_std(b.rho);
        summary["objective"] = b.a;
        summary["best_iter"] = b.iter;
        summary["best_sample"] = *r.best;
      } else {
        final_rho = start;
        res.status = "no_feasible_sample";
        res.exit_code = 2;
        summary["rho"] = nullptr;
        summary["objective"] = nullptr;
      }
      summary["status"] = res.status;
      summary["converged"] = r.best.has_value();
      summary["feasible"] = r.best.has_value();
      if (seed) {
        const auto it = std::find_if(r.samples.begin(), r.samples.end(),
                                     [&](const bayesopt::Sample& s) { return s.rho == *seed; });
        if (it != r.samples.end() && !it->failed) summary["seed_objective"] = it->a;
      }
    }
  } catch (const UsageError&) {
    throw;
  } catch (const Error& ex) {
    res.status = std::string("error: ") + ex.what();
    res.exit_code = 2;
    summary["status"] = res.status;
    summary["converged"] = false;
    summary["feasible"] = false;
    log << res.status << '\n';
  }

  if (start.size() > 0) write_profile(*scenario, start, res.dir / "profile_initial.csv", log);
  if (final_rho.size() > 0) write_profile(*scenario, final_rho, res.dir / "profile_final.csv", log);
  write_file(res.dir / "summary.json", summary.dump(2) + "\n");
  log << "status " << res.status << ", outputs in " << res.dir.string() << '\n';
  return res;
}

nlohmann::json CompareReport::to_json() const {
  nlohmann::json j;
  j["scenario"] = scenario;
  std::vector<std::string> names;
  for (const auto& r : runs) names.push_back(r.string());
  j["runs"] = names;
  j["mean"] = to_std(mean);
  j["stddev"] = to_std(stddev);
  if (reference_run) {
    j["reference_run"] = reference_run->string();
    j["reference"] = to_std(reference);
    j["relative_error"] = to_std(relative_error);
  }
  return j;
}

CompareReport compare(const std::vector<fs::path>& dirs, const std::optional<fs::path>& reference) {
  if (dirs.empty()) throw UsageError("compare: no run directories given");
  CompareReport rep;
  for (const auto& d : dirs) {
    if (fs::exists(d / "summary.json")) {
      rep.runs.push_back(d);
      continue;
    }
    if (!fs::is_directory(d)) throw UsageError("compare: '" + d.string() + "' is not a run directory");
    std::vector<fs::path> sub;
    for (const auto& e : fs::directory_iterator(d))
      if (e.is_directory() && fs::exists(e.path() / "summary.json")) sub.push_back(e.path());
    if (sub.empty()) throw UsageError("compare: no summary.json in or below '" + d.string() + "'");
    std::sort(sub.begin(), sub.end());
    rep.runs.insert(rep.runs.end(), sub.begin(), sub.end());
  }

  std::vector<Vector> designs;
  for (const auto& r : rep.runs) {
    const auto s = read_summary(r);
    const std::string sc = s.value("scenario", "");
    if (rep.scenario.empty()) rep.scenario = sc;
    if (sc != rep.scenario) {
      throw UsageError("compare: scenario mismatch ('" + rep.scenario + "' vs '" + sc + "' in " + r.string() + ")");
    }
    if (!s.contains("rho") || !s["rho"].is_array()) {
      throw UsageError("compare: run '" + r.string() + "' has no final design");
    }
    designs.push_back(to_vector(s["rho"].get<std::vector<double>>()));
    if (designs.back().size() != designs.front().size()) throw UsageError("compare: design sizes differ");
  }
  const auto n = static_cast<double>(designs.size());
  rep.mean = Vector::Zero(designs.front().size());
  for (const auto& d : designs) rep.mean += d;
  rep.mean /= n;
  rep.stddev = Vector::Zero(rep.mean.size());
  if (designs.size() > 1) {
    for (const auto& d : designs) rep.stddev += (d - rep.mean).cwiseAbs2();
    rep.stddev = (rep.stddev / (n - 1.0)).cwiseSqrt();
  }

  if (reference) {
    const auto s = read_summary(*reference);
    if (s.value("scenario", "") != rep.scenario) throw UsageError("compare: reference scenario mismatch");
    if (!s.contains("rho") || !s["rho"].is_array()) throw UsageError("compare: reference has no final design");
    rep.reference_run = *reference;
    rep.reference = to_vector(s["rho"].get<std::vector<double>>());
    if (rep.reference.size() != rep.mean.size()) throw UsageError("compare: reference design size differs");
    rep.relative_error = (rep.mean - rep.reference).cwiseAbs().cwiseQuotient(
        rep.reference.cwiseAbs().cwiseMax(std::numeric_limits<double>::min()));
  }
  return rep;
}

}  // namespace contactopt::runner
