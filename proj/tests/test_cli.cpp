#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "akcy/cli/commands.hpp"

using namespace akcy;
using namespace akcy::cli;
using nlohmann::json;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

fs::path scratch(const std::string &name) {
  const auto p = fs::temp_directory_path() / ("akcy_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Coarse sine source on the flat torus at n = 8.
std::string coarse_yaml(const fs::path &out, const std::string &scenario = "kahler", const std::string &extra = "") {
  return "grid: {n: 8}\n"
         "scenario:\n"
         "  type: " + scenario + "\n"
         "  epsilon: 1.0e-3\n"
         "  F:\n"
         "    - {k: [1, -1, 0, 0], amplitude: 0.05}\n"
         "    - {k: [1, 1, 0, 0], amplitude: -0.05}\n"
         "solver: {newton_tol: 1.0e-7}\n"
         "outputs: {directory: " + out.string() + ", dump: true, log_level: quiet}\n"
         "seed: 3\n" + extra;
}

/// Minimal JSON-schema check covering type, required, properties and items.
bool conforms(const json &v, const json &schema, std::string &why, const std::string &at = "$") {
  if (schema.contains("type")) {
    std::vector<std::string> types;
    if (schema["type"].is_array())
      for (const auto &t : schema["type"]) types.push_back(t);
    else
      types.push_back(schema["type"]);
    bool ok = false;
    for (const auto &t : types)
      ok = ok || (t == "object" && v.is_object()) || (t == "array" && v.is_array()) ||
           (t == "string" && v.is_string()) || (t == "number" && v.is_number()) ||
           (t == "integer" && v.is_number_integer()) || (t == "boolean" && v.is_boolean()) ||
           (t == "null" && v.is_null());
    if (!ok) {
      why = at + " has the wrong type";
      return false;
    }
  }
  if (schema.contains("required"))
    for (const auto &k : schema["required"])
      if (!v.contains(k.get<std::string>())) {
        why = at + " lacks " + k.get<std::string>();
        return false;
      }
  if (schema.contains("properties") && v.is_object())
    for (const auto &[k, sub] : schema["properties"].items())
      if (v.contains(k) && !conforms(v[k], sub, why, at + "." + k)) return false;
  if (schema.contains("items") && v.is_array())
    for (std::size_t i = 0; i < v.size(); ++i)
      if (!conforms(v[i], schema["items"], why, at + "[" + std::to_string(i) + "]")) return false;
  return true;
}

void check_schema(const RunReport &r) {
  const auto schema = json::parse(slurp(fs::path(AKCY_SOURCE_DIR) / "tests" / "report_schema.json"));
  const auto j = json::parse(r.to_json().dump()); // round trip through text
  std::string why;
  CHECK_MESSAGE(conforms(j, schema, why), why);
}

} // namespace

TEST_CASE("config parsing") {
  SUBCASE("defaults") {
    const auto c = parse_config("");
    CHECK(c.n == std::array<int, 4>{16, 16, 16, 16});
    CHECK(c.scenario == Scenario::kahler);
    CHECK(c.f_terms.empty());
    CHECK(c.solver.newton_tol == 1e-10);
  }
  SUBCASE("full document") {
    const auto c = parse_config(
        "grid: {n: [8, 8, 12, 12], periods: 2}\n"
        "scenario: {type: perturbed, epsilon: 0.01, F: [{k: [1, 0, 0, 2], amplitude: 0.1, phase: 0.5}]}\n"
        "solver: {newton_tol: 1.0e-9, class_mode: fixed, adaptive: false, t_steps: 8}\n"
        "uniqueness: {enabled: true, seeds: [4, 5]}\n"
        "outputs: {directory: here, dump: true, log_level: debug}\n"
        "seed: 42\n");
    CHECK(c.n[2] == 12);
    CHECK(c.periods[0] == 2);
    CHECK(c.scenario == Scenario::perturbed);
    CHECK(c.epsilon == 0.01);
    REQUIRE(c.f_terms.size() == 1);
    CHECK(c.f_terms[0].k[3] == 2);
    CHECK(c.f_terms[0].phase == 0.5);
    CHECK(c.solver.class_mode == ClassMode::fixed);
    CHECK_FALSE(c.solver.adaptive);
    CHECK(c.uniqueness.seeds[1] == 5);
    CHECK(c.dump);
    CHECK(c.log_level == LogLevel::debug);
    CHECK(c.seed == 42);
    // The echo parses back to the same configuration.
    CHECK(to_json(c)["grid"]["n"][3] == 12);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(parse_config("grid: {n: 8, m: 3}"), ConfigError);
    CHECK_THROWS_AS(parse_config("solvr: {}"), ConfigError);
    CHECK_THROWS_AS(parse_config("grid: {n: 7}"), ConfigError);
    CHECK_THROWS_AS(parse_config("grid: {n: [8, 8]}"), ConfigError);
    CHECK_THROWS_AS(parse_config("scenario: {type: round}"), ConfigError);
    CHECK_THROWS_AS(parse_config("scenario: {epsilon: -1}"), ConfigError);
    CHECK_THROWS_AS(parse_config("grid: {n: 8}\nscenario: {F: [{k: [4, 0, 0, 0], amplitude: 1}]}"), ConfigError);
    CHECK_THROWS_AS(parse_config("solver: {p: 2}"), ConfigError);
    CHECK_THROWS_AS(parse_config("solver: {newton_tol: fast}"), ConfigError);
    CHECK_THROWS_AS(parse_config("uniqueness: {seeds: [1, 1]}"), ConfigError);
    CHECK_THROWS_AS(parse_config("grid: [unclosed"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/akcy.yaml"), ConfigError);
  }
}

TEST_CASE("build_scenario") {
  const auto out = scratch("scenario");
  SUBCASE("kahler") {
    const auto sc = build_scenario(parse_config(coarse_yaml(out)));
    const auto r = check_compatibility(sc.triple.omega, sc.triple.j);
    CHECK(r.j_squared < 1e-12);
    CHECK(r.j_invariance < 1e-12);
    CHECK(r.d_omega < 1e-12);
    // The two cosine terms are 0.1 sin(2 pi x1) sin(2 pi x2) up to the normalizing constant.
    const auto target = sample<double>(sc.F.grid(), [](double x, double y, double, double) {
      return 0.1 * std::sin(2 * pi * x) * std::sin(2 * pi * y);
    });
    const double shift = sc.F.data()(0, 0) - target.data()(0, 0);
    CHECK((sc.F.data() - target.data() - shift).abs().maxCoeff() < 1e-14);
  }
  SUBCASE("empty F") {
    auto c = parse_config(coarse_yaml(out));
    c.f_terms.clear();
    CHECK(build_scenario(c).F.max_abs() == 0);
  }
  SUBCASE("perturbed is deterministic and sized by epsilon") {
    auto c = parse_config(coarse_yaml(out, "perturbed"));
    c.epsilon = 1e-2;
    const auto a = build_scenario(c), b = build_scenario(c);
    CHECK((a.triple.j.data() - b.triple.j.data()).abs().maxCoeff() == 0);
    const double n0 = norms_12(nijenhuis(a.triple.j), a.triple.g).c0;
    CHECK(n0 >= 1e-3);
    CHECK(n0 <= 1e-1);
  }
  SUBCASE("invalid") {
    auto c = parse_config(coarse_yaml(out, "perturbed"));
    c.epsilon = 50;
    CHECK_THROWS_AS(build_scenario(c), ScenarioInvalid);
  }
}

TEST_CASE("run with zero source succeeds immediately") {
  const auto out = scratch("zero");
  auto c = parse_config(coarse_yaml(out));
  c.f_terms.clear();
  auto r = run(c);
  CHECK(r.exit_code == exit_success);
  CHECK(r.final_residuals["combined"] == 0.0);
  const auto path = write_report(r, c.output_dir);
  check_schema(r);
  const auto back = json::parse(slurp(path));
  CHECK(back["status"] == "success");
  const auto csv = slurp(out / "convergence.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  CHECK(csv.rfind("t,newton_iters,res_volume,res_selfdual,res_gauge,min_eig_gprime,osc_phi1,osc_phi_half,tr_min,"
                  "tr_max,claim_quantity,class_term_Lp,nij_L1,nij_Lp,s0,s1,s2,c_hat,fitted_A\n",
                  0) == 0);
}

TEST_CASE("run is deterministic and diagnose reproduces the final record") {
  const auto a = scratch("det_a"), b = scratch("det_b");
  const auto ra = run(parse_config(coarse_yaml(a)));
  const auto rb = run(parse_config(coarse_yaml(b)));
  REQUIRE(ra.exit_code == exit_success);
  REQUIRE(rb.exit_code == exit_success);
  check_schema(ra);
  CHECK(slurp(a / "convergence.csv") == slurp(b / "convergence.csv"));
  CHECK(slurp(a / "omega_prime_final.akf") == slurp(b / "omega_prime_final.akf"));
  CHECK(ra.artifacts["dumps"].size() == ra.extra["accepted_steps"].get<std::size_t>() + 1);

  const auto d = diagnose((a / "omega_prime_final.akf").string(), parse_config(coarse_yaml(a)));
  REQUIRE(d.exit_code == exit_success);
  check_schema(d);
  const auto &fin = ra.extra["final"];
  const auto &rec = d.extra["diagnostics"];
  CHECK(rec["volume_residual"].get<double>() == doctest::Approx(fin["volume_residual"].get<double>()).epsilon(1e-6));
  CHECK(rec["claim_quantity"].get<double>() ==
        doctest::Approx(fin["claim_quantity"].get<double>()).epsilon(1e-6).scale(1e-12));
  CHECK(rec["tr_min"].get<double>() == doctest::Approx(fin["tr_min"].get<double>()).epsilon(1e-12));

  // A dump on another grid is a format error.
  auto other = parse_config(coarse_yaml(a));
  other.n = {12, 12, 12, 12};
  const auto bad = diagnose((a / "omega_prime_final.akf").string(), other);
  CHECK(bad.exit_code == exit_config_error);
  CHECK(bad.failed_stage == "load_dump");
}

TEST_CASE("solver failure yields a report naming the stage") {
  const auto out = scratch("fail");
  auto c = parse_config(coarse_yaml(out, "kahler", ""));
  c.solver.adaptive = false;
  c.solver.t_steps = 1;
  c.solver.newton_max_iter = 1;
  auto r = run(c);
  CHECK(r.exit_code == exit_solver_failure);
  CHECK(r.failed_stage == "continuity_path");
  CHECK(r.error.find("PathStalled") != std::string::npos);
  write_report(r, c.output_dir);
  check_schema(r);
  const auto back = json::parse(slurp(out / "run_report.json"));
  CHECK(back["status"] == "failure");
  CHECK(back["failed_stage"] == "continuity_path");
}

TEST_CASE("check reports a corrupted structure") {
  const auto out = scratch("corrupt");
  auto c = parse_config(coarse_yaml(out, "perturbed"));
  c.corrupt_j = 1e-3;
  const auto r = check(c);
  CHECK(r.exit_code == exit_invariant_failure);
  check_schema(r);
  bool structure_failed = false;
  for (const auto &s : r.criteria)
    if (s.name == "structure") structure_failed = !s.passed;
  CHECK(structure_failed);
}

TEST_CASE("sweep measures linear growth of the Nijenhuis tensor") {
  const auto out = scratch("sweep");
  const auto r = sweep(parse_config(coarse_yaml(out, "perturbed")), {1e-4, 1e-3, 1e-2}, false);
  CHECK(r.exit_code == exit_success);
  check_schema(r);
  REQUIRE(r.criteria.size() == 1);
  CHECK(r.criteria[0].value == doctest::Approx(1.0).epsilon(0.01));
  const auto csv = slurp(out / "sweep.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(sweep(parse_config(coarse_yaml(out)), {}, false).exit_code == exit_config_error);
}
