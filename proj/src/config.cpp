#include "contactopt/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "contactopt/errors.hpp"
#include "contactopt/scenarios.hpp"

namespace contactopt::config {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// ---- string conversions (shortest round-trip form for doubles)

std::string to_text(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}
std::string to_text(int v) { return std::to_string(v); }
std::string to_text(std::uint64_t v) { return std::to_string(v); }
std::string to_text(bool v) { return v ? "true" : "false"; }
std::string to_text(const std::string& v) { return v; }
std::string to_text(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + to_text(v[i]);
  return out;
}

template <class T>
T parse_number(const std::string& raw, const std::string& what) {
  const std::string s = trim(raw);
  T v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw UsageError(what + ": expected a number, got '" + raw + "'");
  }
  return v;
}

void from_text(const std::string& s, double& v, const std::string& what) { v = parse_number<double>(s, what); }
void from_text(const std::string& s, int& v, const std::string& what) { v = parse_number<int>(s, what); }
void from_text(const std::string& s, std::uint64_t& v, const std::string& what) {
  v = parse_number<std::uint64_t>(s, what);
}
void from_text(const std::string& s, bool& v, const std::string& what) {
  const std::string t = trim(s);
  if (t == "true" || t == "1") {
    v = true;
  } else if (t == "false" || t == "0") {
    v = false;
  } else {
    throw UsageError(what + ": expected true or false, got '" + s + "'");
  }
}
void from_text(const std::string& s, std::string& v, const std::string&) { v = trim(s); }
void from_text(const std::string& s, std::vector<double>& v, const std::string& what) {
  v.clear();
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) v.push_back(parse_number<double>(item, what));
}

// ---- schema

struct Entry {
  KeyInfo info;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<nlohmann::json(const RunConfig&)> get_json;
  std::function<void(RunConfig&, const nlohmann::json&)> set_json;
};

template <class T>
Entry entry(std::string section, std::string key, T RunConfig::*field, std::string doc) {
  Entry e;
  const std::string what = section + "." + key;
  e.get = [field](const RunConfig& c) { return to_text(c.*field); };
  e.set = [field, what](RunConfig& c, const std::string& s) { from_text(s, c.*field, what); };
  e.get_json = [field](const RunConfig& c) { return nlohmann::json(c.*field); };
  e.set_json = [field, what](RunConfig& c, const nlohmann::json& j) {
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!j.is_number()) throw UsageError(what + ": expected a number");
      } else if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::uint64_t>) {
        if (!j.is_number_integer()) throw UsageError(what + ": expected an integer");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!j.is_boolean()) throw UsageError(what + ": expected true or false");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!j.is_string()) throw UsageError(what + ": expected a string");
      } else {
        if (!j.is_array()) throw UsageError(what + ": expected an array of numbers");
      }
      c.*field = j.get<T>();
    } catch (const nlohmann::json::exception& ex) {
      throw UsageError(what + ": " + ex.what());
    }
  };
  e.info = {std::move(section), std::move(key), e.get(RunConfig{}), std::move(doc)};
  return e;
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      entry("run", "scenario", &RunConfig::scenario, "wedge | clamp-lite | quadratic | circle | quadratic-1d"),
      entry("run", "method", &RunConfig::method, "gradient | cbo"),
      entry("run", "seed", &RunConfig::seed, "RNG seed (LHS, candidates, retry perturbations)"),
      entry("run", "output_dir", &RunConfig::output_dir,
            "output directory; empty means runs/<scenario>-<method>-seed<seed>"),
      entry("gradient", "max_iter", &RunConfig::max_iter, "outer iterations"),
      entry("gradient", "dual_tol", &RunConfig::dual_tol, "scaled dual optimality tolerance"),
      entry("gradient", "compl_tol", &RunConfig::compl_tol, "complementarity tolerance"),
      entry("gradient", "viol_tol", &RunConfig::viol_tol, "constraint violation tolerance"),
      entry("gradient", "mu_init", &RunConfig::mu_init, "initial barrier parameter"),
      entry("cbo", "budget", &RunConfig::budget, "acquisition iterations after the initial samples"),
      entry("cbo", "n_init", &RunConfig::n_init, "Latin hypercube samples"),
      entry("cbo", "n_candidates", &RunConfig::n_candidates, "random candidates per acquisition"),
      entry("cbo", "xi", &RunConfig::xi, "EI trade-off parameter (standardized units)"),
      entry("cbo", "polish", &RunConfig::polish, "local ascent on the acquisition after random search"),
      entry("wedge", "theta_min", &RunConfig::wedge_theta_min, "lower angle bound [deg]"),
      entry("wedge", "theta_max", &RunConfig::wedge_theta_max, "upper angle bound [deg]"),
      entry("wedge", "p1_min", &RunConfig::wedge_p1_min, "lower bound on P1"),
      entry("wedge", "p1_max", &RunConfig::wedge_p1_max, "upper bound on P1"),
      entry("wedge", "lambda_lower", &RunConfig::wedge_lambda_lower, "segment pressure lower bound (top segments)"),
      entry("wedge", "lambda_upper", &RunConfig::wedge_lambda_upper, "segment pressure upper bound"),
      entry("wedge", "lower_segments", &RunConfig::wedge_lower_segments, "number of top segments with the lower bound"),
      entry("wedge", "p2", &RunConfig::wedge_p2, "load on the left wedge top in snapshot 2"),
      entry("wedge", "support_stiffness", &RunConfig::wedge_support_stiffness, "support spring stiffness per length"),
      entry("wedge", "youngs", &RunConfig::wedge_youngs, "Young's modulus"),
      entry("wedge", "poisson", &RunConfig::wedge_poisson, "Poisson ratio"),
      entry("wedge", "left_along", &RunConfig::wedge_left_along, "elements along the left wedge incline"),
      entry("wedge", "right_along", &RunConfig::wedge_right_along, "elements along the right wedge incline (even)"),
      entry("wedge", "across", &RunConfig::wedge_across, "elements across each wedge"),
      entry("wedge", "initial", &RunConfig::wedge_initial, "gradient start (theta1, theta2, P1)"),
      entry("wedge", "seed", &RunConfig::wedge_seed, "feasible seed sample for cbo"),
      entry("clamp-lite", "lower", &RunConfig::clamp_lower, "lower design bounds"),
      entry("clamp-lite", "upper", &RunConfig::clamp_upper, "upper design bounds"),
      entry("clamp-lite", "seal_min", &RunConfig::clamp_seal_min, "lower bound on the seal pressure sum"),
      entry("clamp-lite", "element_lower", &RunConfig::clamp_element_lower, "lower bound on the largest element pressure"),
      entry("clamp-lite", "element_upper", &RunConfig::clamp_element_upper, "upper bound on every element pressure"),
      entry("clamp-lite", "p_norm", &RunConfig::clamp_p_norm, "p-norm exponent for the max aggregate"),
      entry("clamp-lite", "aggregation", &RunConfig::clamp_aggregation, "gradient path max aggregate: pnorm | max"),
      entry("clamp-lite", "band_stiffness", &RunConfig::clamp_band_stiffness, "band spring stiffness per length"),
      entry("clamp-lite", "youngs", &RunConfig::clamp_youngs, "Young's modulus"),
      entry("clamp-lite", "poisson", &RunConfig::clamp_poisson, "Poisson ratio"),
      entry("clamp-lite", "flange_along", &RunConfig::clamp_flange_along, "elements along the flange top"),
      entry("clamp-lite", "retainer_along", &RunConfig::clamp_retainer_along, "elements along the retainer bottom"),
      entry("clamp-lite", "initial", &RunConfig::clamp_initial, "gradient start"),
      entry("clamp-lite", "seed", &RunConfig::clamp_seed, "feasible seed sample for cbo"),
  };
  return table;
}

const Entry* find_entry(const std::string& section, const std::string& key) {
  for (const auto& e : entries())
    if (e.info.section == section && e.info.key == key) return &e;
  return nullptr;
}

bool known_section(const std::string& section) {
  return std::any_of(entries().begin(), entries().end(),
                     [&](const Entry& e) { return e.info.section == section; });
}

// 1-based line of `key` inside [section] (or of the section header when key
// is empty); 0 when not found.
int find_line(const std::string& text, const std::string& section, const std::string& key) {
  std::istringstream in(text);
  std::string line, current;
  for (int n = 1; std::getline(in, line); ++n) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == ';' || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      current = trim(t.substr(1, t.size() - 2));
      if (key.empty() && current == section) return n;
      continue;
    }
    const auto eq = t.find('=');
    if (!key.empty() && current == section && eq != std::string::npos && trim(t.substr(0, eq)) == key) {
      return n;
    }
  }
  return 0;
}

std::string at_line(int line) { return line > 0 ? "line " + std::to_string(line) + ": " : ""; }

}  // namespace

std::vector<KeyInfo> schema() {
  std::vector<KeyInfo> out;
  for (const auto& e : entries()) out.push_back(e.info);
  return out;
}

RunConfig parse_ini(const std::string& text) {
  boost::property_tree::ptree tree;
  try {
    std::istringstream in(text);
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& ex) {
    throw UsageError("line " + std::to_string(ex.line()) + ": " + ex.message());
  }
  RunConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty() && find_line(text, section, "") == 0) {
      throw UsageError(at_line(find_line(text, "", section)) + "key '" + section +
                       "' outside of a section");
    }
    if (!known_section(section)) {
      throw UsageError(at_line(find_line(text, section, "")) + "unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      const int line = find_line(text, section, key);
      const Entry* e = find_entry(section, key);
      if (!e) throw UsageError(at_line(line) + "unknown key '" + key + "' in [" + section + "]");
      try {
        e->set(cfg, value.data());
      } catch (const UsageError& ex) {
        throw UsageError(at_line(line) + ex.what());
      }
    }
  }
  validate(cfg);
  return cfg;
}

RunConfig from_json(const nlohmann::json& j_in) {
  const nlohmann::json& j = j_in.contains("config") ? j_in.at("config") : j_in;
  if (!j.is_object()) throw UsageError("config: expected a JSON object");
  RunConfig cfg;
  for (const auto& [section, body] : j.items()) {
    if (!known_section(section)) throw UsageError("unknown section '" + section + "'");
    if (!body.is_object()) throw UsageError("section '" + section + "' must be an object");
    for (const auto& [key, value] : body.items()) {
      const Entry* e = find_entry(section, key);
      if (!e) throw UsageError("unknown key '" + section + "." + key + "'");
      e->set_json(cfg, value);
    }
  }
  validate(cfg);
  return cfg;
}

RunConfig parse_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& ex) {
    throw UsageError(std::string("JSON: ") + ex.what());
  }
  return from_json(j);
}

RunConfig load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return path.extension() == ".json" ? parse_json(ss.str()) : parse_ini(ss.str());
  } catch (const UsageError& ex) {
    throw UsageError(path.string() + ": " + ex.what());
  }
}

std::string to_ini(const RunConfig& cfg) {
  std::ostringstream os;
  std::string section;
  for (const auto& e : entries()) {
    if (e.info.section != section) {
      if (!section.empty()) os << '\n';
      section = e.info.section;
      os << '[' << section << "]\n";
    }
    os << e.info.key << " = " << e.get(cfg) << '\n';
  }
  return os.str();
}

nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& e : entries()) j[e.info.section][e.info.key] = e.get_json(cfg);
  return j;
}

void validate(const RunConfig& c) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw UsageError(msg);
  };
  const auto ids = scenarios::scenario_ids();
  require(std::find(ids.begin(), ids.end(), c.scenario) != ids.end(),
          "run.scenario: unknown scenario '" + c.scenario + "'");
  require(c.method == "gradient" || c.method == "cbo", "run.method: expected gradient or cbo");
  require(c.max_iter >= 1, "gradient.max_iter must be >= 1");
  require(c.dual_tol > 0 && c.compl_tol > 0 && c.viol_tol > 0, "gradient tolerances must be positive");
  require(c.mu_init > 0, "gradient.mu_init must be positive");
  require(c.budget >= 0, "cbo.budget must be >= 0");
  require(c.n_init >= 0, "cbo.n_init must be >= 0");
  require(c.n_candidates >= 1, "cbo.n_candidates must be >= 1");
  require(c.xi >= 0, "cbo.xi must be >= 0");
  require(c.wedge_theta_min < c.wedge_theta_max, "wedge: theta_min must be below theta_max");
  require(c.wedge_p1_min < c.wedge_p1_max, "wedge: p1_min must be below p1_max");
  require(c.wedge_lambda_lower < c.wedge_lambda_upper, "wedge: lambda_lower must be below lambda_upper");
  require(c.wedge_lower_segments >= 0, "wedge.lower_segments must be >= 0");
  require(c.wedge_youngs > 0 && c.wedge_poisson > -1 && c.wedge_poisson < 0.5, "wedge: invalid material");
  require(c.wedge_left_along >= 1 && c.wedge_across >= 1, "wedge: resolution must be positive");
  require(c.wedge_right_along >= 2 && c.wedge_right_along % 2 == 0, "wedge.right_along must be even");
  require(c.wedge_initial.size() == 3, "wedge.initial needs 3 values");
  require(c.wedge_seed.size() == 3, "wedge.seed needs 3 values");
  require(c.clamp_lower.size() == 4 && c.clamp_upper.size() == 4, "clamp-lite bounds need 4 values");
  for (int i = 0; i < static_cast<int>(c.clamp_lower.size()) && i < 4; ++i)
    require(c.clamp_lower[i] <= c.clamp_upper[i], "clamp-lite: lower bound above upper bound");
  require(c.clamp_initial.size() == 4, "clamp-lite.initial needs 4 values");
  require(c.clamp_seed.size() == 4, "clamp-lite.seed needs 4 values");
  require(c.clamp_aggregation == "pnorm" || c.clamp_aggregation == "max",
          "clamp-lite.aggregation: expected pnorm or max");
  require(c.clamp_p_norm >= 1, "clamp-lite.p_norm must be >= 1");
  require(c.clamp_youngs > 0 && c.clamp_poisson > -1 && c.clamp_poisson < 0.5, "clamp-lite: invalid material");
  require(c.clamp_flange_along >= 2 && c.clamp_retainer_along >= 2, "clamp-lite: resolution too small");
}

}  // namespace contactopt::config
