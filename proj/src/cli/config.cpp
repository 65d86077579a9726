#include "akcy/cli/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace akcy::cli {

namespace {

void reject_unknown(const YAML::Node &node, const std::string &where, const std::set<std::string> &known) {
  if (!node.IsMap()) throw ConfigError("'" + where + "' must be a mapping");
  for (const auto &kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!known.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T> T get(const YAML::Node &node, const std::string &where) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception &) {
    throw ConfigError("cannot read '" + where + "'");
  }
}

template <typename T> void read(const YAML::Node &map, const char *key, const std::string &where, T &out) {
  if (const auto v = map[key]) out = get<T>(v, where + "." + key);
}

/// A scalar applies to all four axes; a list gives one value per axis.
template <typename T> std::array<T, 4> per_axis(const YAML::Node &node, const std::string &where) {
  std::array<T, 4> out{};
  if (node.IsScalar()) {
    out.fill(get<T>(node, where));
  } else if (node.IsSequence() && node.size() == 4) {
    for (int k = 0; k < 4; ++k) out[k] = get<T>(node[k], where);
  } else {
    throw ConfigError("'" + where + "' needs a number or a list of four");
  }
  return out;
}

void read_grid(const YAML::Node &node, RunConfig &c) {
  reject_unknown(node, "grid", {"n", "periods"});
  if (node["n"]) c.n = per_axis<int>(node["n"], "grid.n");
  if (node["periods"]) c.periods = per_axis<double>(node["periods"], "grid.periods");
  try {
    (void)c.grid();
  } catch (const InvalidGrid &e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
}

void read_scenario(const YAML::Node &node, RunConfig &c) {
  reject_unknown(node, "scenario", {"type", "epsilon", "corrupt_j", "F"});
  if (node["type"]) {
    const auto t = get<std::string>(node["type"], "scenario.type");
    if (t == "kahler") c.scenario = Scenario::kahler;
    else if (t == "perturbed") c.scenario = Scenario::perturbed;
    else throw ConfigError("scenario.type must be kahler or perturbed, got '" + t + "'");
  }
  read(node, "epsilon", "scenario", c.epsilon);
  read(node, "corrupt_j", "scenario", c.corrupt_j);
  if (!(c.epsilon >= 0)) throw ConfigError("scenario.epsilon must be non-negative");
  if (const auto f = node["F"]) {
    if (!f.IsSequence()) throw ConfigError("scenario.F must be a list of terms");
    for (std::size_t i = 0; i < f.size(); ++i) {
      const std::string where = "scenario.F[" + std::to_string(i) + "]";
      reject_unknown(f[i], where, {"k", "amplitude", "phase"});
      FourierTerm term;
      if (!f[i]["k"] || !f[i]["k"].IsSequence() || f[i]["k"].size() != 4)
        throw ConfigError(where + ".k needs four integers");
      for (int a = 0; a < 4; ++a) term.k[a] = get<int>(f[i]["k"][a], where + ".k");
      read(f[i], "amplitude", where, term.amplitude);
      read(f[i], "phase", where, term.phase);
      for (int a = 0; a < 4; ++a)
        if (2 * std::abs(term.k[a]) >= c.n[a])
          throw ConfigError(where + ".k is not below the Nyquist mode of axis " + std::to_string(a + 1));
      c.f_terms.push_back(term);
    }
  }
}

void read_solver(const YAML::Node &node, SolverConfig &s) {
  reject_unknown(node, "solver",
                 {"newton_tol", "newton_max_iter", "backtrack_factor", "max_backtracks", "p", "claim_threshold",
                  "adaptive", "t_steps", "dt_initial", "dt_min", "dt_max", "class_mode", "linear_tol",
                  "linear_max_iter"});
  read(node, "newton_tol", "solver", s.newton_tol);
  read(node, "newton_max_iter", "solver", s.newton_max_iter);
  read(node, "backtrack_factor", "solver", s.backtrack_factor);
  read(node, "max_backtracks", "solver", s.max_backtracks);
  read(node, "p", "solver", s.p);
  read(node, "claim_threshold", "solver", s.claim_threshold);
  read(node, "adaptive", "solver", s.adaptive);
  read(node, "t_steps", "solver", s.t_steps);
  read(node, "dt_initial", "solver", s.dt_initial);
  read(node, "dt_min", "solver", s.dt_min);
  read(node, "dt_max", "solver", s.dt_max);
  read(node, "linear_tol", "solver", s.linear_tol);
  read(node, "linear_max_iter", "solver", s.linear_max_iter);
  if (node["class_mode"]) {
    const auto m = get<std::string>(node["class_mode"], "solver.class_mode");
    if (m == "fixed") s.class_mode = ClassMode::fixed;
    else if (m == "drifting") s.class_mode = ClassMode::drifting;
    else throw ConfigError("solver.class_mode must be fixed or drifting, got '" + m + "'");
  }
  s.validate();
}

void read_outputs(const YAML::Node &node, RunConfig &c) {
  reject_unknown(node, "outputs", {"directory", "dump", "log_level"});
  read(node, "directory", "outputs", c.output_dir);
  read(node, "dump", "outputs", c.dump);
  if (node["log_level"]) {
    const auto l = get<std::string>(node["log_level"], "outputs.log_level");
    if (l == "quiet") c.log_level = LogLevel::quiet;
    else if (l == "info") c.log_level = LogLevel::info;
    else if (l == "debug") c.log_level = LogLevel::debug;
    else throw ConfigError("outputs.log_level must be quiet, info or debug, got '" + l + "'");
  }
  if (c.output_dir.empty()) throw ConfigError("outputs.directory must not be empty");
}

void read_uniqueness(const YAML::Node &node, UniquenessConfig &u) {
  reject_unknown(node, "uniqueness", {"enabled", "seeds", "amplitude"});
  read(node, "enabled", "uniqueness", u.enabled);
  read(node, "amplitude", "uniqueness", u.amplitude);
  if (const auto s = node["seeds"]) {
    if (!s.IsSequence() || s.size() != 2) throw ConfigError("uniqueness.seeds needs two integers");
    u.seeds = {get<std::uint64_t>(s[0], "uniqueness.seeds"), get<std::uint64_t>(s[1], "uniqueness.seeds")};
  }
  if (u.seeds[0] == u.seeds[1]) throw ConfigError("uniqueness.seeds must differ");
  if (!(u.amplitude > 0)) throw ConfigError("uniqueness.amplitude must be positive");
}

} // namespace

std::string to_string(Scenario s) { return s == Scenario::kahler ? "kahler" : "perturbed"; }

RunConfig parse_config(const std::string &yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception &e) {
    throw ConfigError(std::string("malformed YAML: ") + e.what());
  }
  RunConfig c;
  if (root.IsNull()) return c;
  reject_unknown(root, "the document", {"grid", "scenario", "solver", "uniqueness", "outputs", "seed"});
  // The grid comes first since the F terms are checked against it.
  if (root["grid"]) read_grid(root["grid"], c);
  if (root["scenario"]) read_scenario(root["scenario"], c);
  if (root["solver"]) read_solver(root["solver"], c.solver);
  if (root["uniqueness"]) read_uniqueness(root["uniqueness"], c.uniqueness);
  if (root["outputs"]) read_outputs(root["outputs"], c);
  read(root, "seed", "", c.seed);
  return c;
}

RunConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

nlohmann::json to_json(const RunConfig &c) {
  using nlohmann::json;
  json f = json::array();
  for (const auto &t : c.f_terms) f.push_back({{"k", t.k}, {"amplitude", t.amplitude}, {"phase", t.phase}});
  const auto &s = c.solver;
  const char *levels[] = {"quiet", "info", "debug"};
  return {
      {"grid", {{"n", c.n}, {"periods", c.periods}}},
      {"scenario",
       {{"type", to_string(c.scenario)}, {"epsilon", c.epsilon}, {"corrupt_j", c.corrupt_j}, {"F", f}}},
      {"solver",
       {{"newton_tol", s.newton_tol},
        {"newton_max_iter", s.newton_max_iter},
        {"backtrack_factor", s.backtrack_factor},
        {"max_backtracks", s.max_backtracks},
        {"p", s.p},
        {"claim_threshold", s.claim_threshold},
        {"adaptive", s.adaptive},
        {"t_steps", s.t_steps},
        {"dt_initial", s.dt_initial},
        {"dt_min", s.dt_min},
        {"dt_max", s.dt_max},
        {"class_mode", s.class_mode == ClassMode::fixed ? "fixed" : "drifting"},
        {"linear_tol", s.linear_tol},
        {"linear_max_iter", s.linear_max_iter}}},
      {"uniqueness",
       {{"enabled", c.uniqueness.enabled}, {"seeds", c.uniqueness.seeds}, {"amplitude", c.uniqueness.amplitude}}},
      {"outputs", {{"directory", c.output_dir}, {"dump", c.dump}, {"log_level", levels[int(c.log_level)]}}},
      {"seed", c.seed},
  };
}

} // namespace akcy::cli
