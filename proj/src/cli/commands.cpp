#include "akcy/cli/commands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>

#include "akcy/field_io.hpp"

namespace akcy::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Log {
public:
  explicit Log(LogLevel level) : level_(level) {}
  void info(const std::string &msg) const {
    if (level_ != LogLevel::quiet) std::cerr << "[akcy] " << msg << std::endl;
  }
  void debug(const std::string &msg) const {
    if (level_ == LogLevel::debug) std::cerr << "[akcy] " << msg << std::endl;
  }

private:
  LogLevel level_;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Runs one named stage. The stage stays recorded as failing unless `body`
/// returns normally.
template <typename F> auto timed(RunReport &r, const std::string &stage, F &&body) {
  r.failed_stage = stage;
  const auto start = std::chrono::steady_clock::now();
  auto finish = [&] {
    r.timings.emplace_back(stage, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    r.failed_stage.clear();
  };
  if constexpr (std::is_void_v<decltype(body())>) {
    body();
    finish();
  } else {
    auto out = body();
    finish();
    return out;
  }
}

/// Maps the error raised by a command body onto the exit code.
template <typename F> RunReport guarded(const std::string &command, const RunConfig &c, F &&body) {
  RunReport r;
  r.command = command;
  r.config = to_json(c);
  try {
    body(r);
  } catch (const ConfigError &e) {
    r.exit_code = exit_config_error;
    r.error = e.what();
  } catch (const ScenarioInvalid &e) {
    r.exit_code = exit_config_error;
    r.error = e.what();
  } catch (const FormatError &e) {
    r.exit_code = exit_config_error;
    r.error = e.what();
  } catch (const std::exception &e) {
    r.exit_code = exit_solver_failure;
    r.error = e.what();
  }
  return r;
}

json suite_json(const SuiteResult &s) {
  return {{"name", s.name}, {"passed", s.passed}, {"value", s.value}, {"threshold", s.threshold}, {"detail", s.detail}};
}

/// Runs a suite, turning an exception into a failed entry.
template <typename F> SuiteResult attempt(RunReport &r, const std::string &name, F &&body) {
  const auto start = std::chrono::steady_clock::now();
  SuiteResult s;
  try {
    s = body();
  } catch (const std::exception &e) {
    s = {name, false, std::numeric_limits<double>::quiet_NaN(), 0, std::string("raised ") + e.what()};
  }
  r.timings.emplace_back(s.name, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  return s;
}

/// F_t = t F + c_t with c_t making int e^{F_t} omega^2 = int omega^2.
ScalarField<double> source_at(const ScalarField<double> &f, const TwoForm<double> &omega, double t) {
  const auto vol = square_density(omega);
  ScalarField<double> f_t = f;
  f_t *= t;
  f_t.data() += std::log(vol.data().sum() / ((f_t.data().exp()) * vol.data()).sum());
  return f_t;
}

json record_json(const DiagnosticsRecord<double> &r) {
  json j = {{"t", r.t},
            {"newton_iters", r.newton_iters},
            {"res_volume", r.residuals.volume},
            {"res_selfdual", r.residuals.selfdual},
            {"res_gauge", r.residuals.gauge},
            {"min_eig_gprime", r.min_eig_gprime},
            {"osc_phi1", r.osc_phi1},
            {"osc_phi_half", r.osc_phi_half},
            {"tr_min", r.tr_min},
            {"tr_max", r.tr_max},
            {"tr_inv_min", r.tr_inv_min},
            {"tr_inv_max", r.tr_inv_max},
            {"lower_bound", r.lower_bound},
            {"trace_identity_residual", r.trace_identity_residual},
            {"volume_residual", r.volume_residual},
            {"selfdual_c0", r.selfdual_c0},
            {"claim_quantity", r.claim_quantity},
            {"class_term_Lp", r.class_term_lp},
            {"claim_exceeded", r.claim_exceeded},
            {"nij_L1", r.nij_l1},
            {"nij_Lp", r.nij_lp},
            {"nij_C0", r.nij_c0},
            {"s", r.s},
            {"c_hat", r.c_hat}};
  j["fitted_A"] = r.fitted_a ? json(*r.fitted_a) : json(nullptr);
  return j;
}

AKTriple<double> corrupted(const AKTriple<double> &t, double amount) {
  ACStructure<double> j = t.j;
  for (int c : {0, 5, 10, 15}) j.data().col(c) += amount;
  return AKTriple<double>{t.omega, std::move(j), t.g};
}

Grid halved(const Grid &g) {
  std::array<int, 4> n = g.shape();
  for (auto &v : n) v /= 2;
  return Grid(n, g.periods());
}

bool can_halve(const Grid &g) {
  for (int v : g.shape())
    if (v / 2 < 4 || (v / 2) % 2 != 0) return false;
  return true;
}

} // namespace

// ---------------------------------------------------------------------------

ScalarField<double> build_source(const Grid &grid, const std::vector<FourierTerm> &terms) {
  ScalarField<double> f(grid);
  for (Eigen::Index p = 0; p < grid.size(); ++p) {
    const auto x = grid.coordinates(p);
    double v = 0;
    for (const auto &t : terms) {
      double arg = -t.phase;
      for (int a = 0; a < 4; ++a) arg += t.k[a] * grid.fundamental(a) * x[a];
      v += t.amplitude * std::cos(arg);
    }
    f.data()(p, 0) = v;
  }
  return f;
}

ScenarioData build_scenario(const RunConfig &c) {
  try {
    const Grid grid = c.grid();
    if (c.scenario == Scenario::perturbed) {
      Metric<double> h = flat_metric(grid);
      h += c.epsilon * random_symmetric_bump(grid, c.seed);
      for (Eigen::Index p = 0; p < grid.size(); ++p) {
        Eigen::SelfAdjointEigenSolver<Mat4<double>> es(mat4(h, p), Eigen::EigenvaluesOnly);
        if (!(es.eigenvalues()(0) > 0))
          throw ScenarioInvalid("h = delta + epsilon B is not positive definite at point " + std::to_string(p) +
                                " (eigenvalue " + std::to_string(es.eigenvalues()(0)) + ")");
      }
    }
    AKTriple<double> t = c.scenario == Scenario::kahler ? AKTriple<double>::standard(grid)
                                                        : perturbed_triple(grid, c.epsilon, c.seed);
    const auto rep = check_compatibility(t.omega, t.j);
    if (rep.j_squared > 1e-10) throw ScenarioInvalid("J^2 + Id deviates by " + std::to_string(rep.j_squared));
    if (rep.j_invariance > 1e-10)
      throw ScenarioInvalid("omega(J., J.) - omega deviates by " + std::to_string(rep.j_invariance));
    if (rep.d_omega > 1e-8) throw ScenarioInvalid("d omega deviates by " + std::to_string(rep.d_omega));
    if (!(rep.min_eigenvalue > 0)) throw ScenarioInvalid("g is not positive definite");
    auto f = build_source(grid, c.f_terms);
    if (!f.all_finite()) throw ScenarioInvalid("F is not finite");
    f = normalize_F(f, t.omega);
    return {std::move(t), std::move(f)};
  } catch (const ScenarioInvalid &) {
    throw;
  } catch (const InvalidGrid &e) {
    throw ConfigError(e.what());
  } catch (const Error &e) {
    throw ScenarioInvalid(e.what());
  }
}

const std::vector<std::string> &csv_columns() {
  static const std::vector<std::string> cols = {
      "t",        "newton_iters", "res_volume", "res_selfdual",   "res_gauge", "min_eig_gprime", "osc_phi1",
      "osc_phi_half", "tr_min",   "tr_max",     "claim_quantity", "class_term_Lp", "nij_L1",     "nij_Lp",
      "s0",       "s1",           "s2",         "c_hat",          "fitted_A"};
  return cols;
}

std::string csv_row(const DiagnosticsRecord<double> &r) {
  const double vals[] = {r.t,          r.residuals.volume, r.residuals.selfdual, r.residuals.gauge,
                         r.min_eig_gprime, r.osc_phi1,     r.osc_phi_half,       r.tr_min,
                         r.tr_max,     r.claim_quantity,   r.class_term_lp,      r.nij_l1,
                         r.nij_lp,     r.s[0],             r.s[1],               r.s[2],
                         r.c_hat};
  std::string row = fmt(vals[0]) + "," + std::to_string(r.newton_iters);
  for (std::size_t k = 1; k < std::size(vals); ++k) row += "," + fmt(vals[k]);
  row += "," + (r.fitted_a ? fmt(*r.fitted_a) : std::string());
  return row;
}

json RunReport::to_json() const {
  json crit = json::array(), log = json::array(), times = json::object();
  for (const auto &s : criteria) crit.push_back(suite_json(s));
  for (const auto &s : logged) log.push_back(suite_json(s));
  double total = 0;
  for (const auto &[k, v] : timings) {
    times[k] = v;
    total += v;
  }
  times["total"] = total;
  bool all = true;
  for (const auto &s : criteria) all = all && s.passed;
  return {{"command", command},
          {"status", success() ? "success" : "failure"},
          {"exit_code", exit_code},
          {"failed_stage", failed_stage.empty() ? json(nullptr) : json(failed_stage)},
          {"error", error.empty() ? json(nullptr) : json(error)},
          {"config", config},
          {"criteria", crit},
          {"all_criteria_passed", all},
          {"logged", log},
          {"final_residuals", final_residuals},
          {"artifacts", artifacts},
          {"results", extra},
          {"timings_seconds", times}};
}

std::string write_report(RunReport &r, const std::string &output_dir) {
  fs::create_directories(output_dir);
  const std::string path = (fs::path(output_dir) / (r.command + "_report.json")).string();
  r.artifacts["report"] = path;
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write report '" + path + "'");
  out << r.to_json().dump(2) << "\n";
  return path;
}

// ---------------------------------------------------------------------------

RunReport run(const RunConfig &c) {
  const Log log(c.log_level);
  return guarded("run", c, [&](RunReport &r) {
    fs::create_directories(c.output_dir);
    const auto sc = timed(r, "build_scenario", [&] { return build_scenario(c); });
    const auto pr = timed(r, "class_basis", [&] { return ContinuityProblem<double>::make(sc.triple, sc.F); });

    const std::string csv_path = (fs::path(c.output_dir) / "convergence.csv").string();
    std::ofstream csv(csv_path);
    if (!csv) throw FormatError("cannot write '" + csv_path + "'");
    for (std::size_t k = 0; k < csv_columns().size(); ++k) csv << (k ? "," : "") << csv_columns()[k];
    csv << "\n";
    r.artifacts["log"] = csv_path;
    r.artifacts["dumps"] = json::array();

    double worst_claim = 0, worst_bound = std::numeric_limits<double>::infinity();
    json exceeded = json::array();
    int step = 0;
    const auto path = timed(r, "continuity_path", [&] {
      return continuity_path<double>(
          pr, c.solver, [&](const DiagnosticsRecord<double> &rec, const SolverState<double> &st) {
            csv << csv_row(rec) << "\n";
            csv.flush();
            worst_claim = std::max(worst_claim, rec.claim_quantity);
            worst_bound = std::min(worst_bound, rec.tr_min - rec.lower_bound);
            if (rec.claim_quantity >= c.solver.claim_threshold) exceeded.push_back(rec.t);
            if (c.dump) {
              char name[64];
              std::snprintf(name, sizeof name, "omega_prime_step_%03d.akf", step);
              const auto p = (fs::path(c.output_dir) / name).string();
              save_field(p, st.omega_prime);
              r.artifacts["dumps"].push_back(p);
            }
            ++step;
            log.info("t = " + fmt(rec.t) + "  newton " + std::to_string(rec.newton_iters) + "  residual " +
                     fmt(rec.residuals.combined()) + "  claim " + fmt(rec.claim_quantity));
          });
    });
    const auto &last = path.records.back();
    r.final_residuals = {{"combined", last.residuals.combined()},
                         {"volume", last.residuals.volume},
                         {"selfdual", last.residuals.selfdual},
                         {"gauge", last.residuals.gauge},
                         {"volume_pointwise", last.volume_residual},
                         {"selfdual_c0", last.selfdual_c0},
                         {"trace_identity", last.trace_identity_residual}};
    r.extra["final"] = record_json(last);
    r.extra["accepted_steps"] = int(path.records.size()) - 1;
    r.extra["rejected_steps"] = path.rejected_steps;
    r.extra["claim_exceeded_at_t"] = exceeded;
    if (c.dump) {
      const auto p = (fs::path(c.output_dir) / "omega_prime_final.akf").string();
      save_field(p, path.state.omega_prime);
      r.artifacts["final_dump"] = p;
    }

    const double vol_tol = c.scenario == Scenario::kahler ? 1e-8 : 1e-7;
    r.criteria.push_back({"path_completed", last.t == 1, last.t, 1, ""});
    r.criteria.push_back({"volume_residual", last.volume_residual < vol_tol, last.volume_residual, vol_tol,
                          "max |omega'^2 - e^F omega^2| / omega^2"});
    r.criteria.push_back({"selfdual_c0", last.selfdual_c0 < 1e-8, last.selfdual_c0, 1e-8, "max |P omega'|"});
    r.criteria.push_back({"trace_identity", last.trace_identity_residual < 1e-7, last.trace_identity_residual, 1e-7,
                          "max |tr_g g' - e^F tr_g' g|"});
    r.criteria.push_back({"trace_lower_bound", worst_bound >= -1e-7, worst_bound, -1e-7,
                          "min over steps of min tr_g g' - 4 exp(inf F_t / 2)"});
    r.criteria.push_back({"claim_below_threshold", worst_claim < c.solver.claim_threshold, worst_claim,
                          c.solver.claim_threshold, "largest claim quantity over the path"});

    if (c.uniqueness.enabled) {
      const auto u = timed(r, "uniqueness", [&] {
        return uniqueness_test(pr, c.solver, c.uniqueness.seeds, c.uniqueness.amplitude);
      });
      r.criteria.push_back({"uniqueness", u.difference < 1e-6, u.difference, 1e-6,
                            "L2 distance of solutions from two perturbed initial guesses"});
      r.extra["uniqueness"] = {{"difference", u.difference},
                               {"volume_mechanism", u.volume_mechanism},
                               {"p_mechanism", u.p_mechanism}};
    }
  });
}

RunReport check(const RunConfig &c) {
  const Log log(c.log_level);
  return guarded("check", c, [&](RunReport &r) {
    const auto sc = timed(r, "build_scenario", [&] { return build_scenario(c); });
    const auto t = c.corrupt_j != 0 ? corrupted(sc.triple, c.corrupt_j) : sc.triple;
    const Grid grid = t.grid();
    auto add = [&](SuiteResult s) {
      log.info(std::string(s.passed ? "PASS " : "FAIL ") + s.name + "  " + s.detail);
      r.criteria.push_back(std::move(s));
    };
    r.failed_stage = "property_suites";
    add(attempt(r, "field_core", [&] { return field_core_suite(grid); }));
    add(attempt(r, "structure", [&] { return structure_suite(t, c.seed); }));
    add(attempt(r, "hodge_identity", [&] { return hodge_identity_suite(t, c.seed); }));
    add(attempt(r, "nijenhuis_equivalence", [&] { return nijenhuis_suite(t); }));
    add(attempt(r, "nijenhuis_constant_j", [&] { return nijenhuis_constant_suite(grid); }));
    if (can_halve(grid)) {
      const double eps = c.scenario == Scenario::kahler ? 0.0 : c.epsilon;
      add(attempt(r, "harmonicity_refinement",
                  [&] { return harmonicity_refinement_suite<double>(eps, c.seed, {halved(grid), grid}); }));
    }
    add(attempt(r, "first_order_identities_integrable", [&] { return identities_integrable_suite(grid, c.seed); }));
    add(attempt(r, "first_order_identities_scenario", [&] { return identities_suite(t, t.g, "scenario"); }));
    add(attempt(r, "kernel", [&] { return kernel_suite(t.g, "scenario"); }));
    add(attempt(r, "linearization", [&] { return linearization_suite(t, sc.F, c.seed); }));
    r.failed_stage.clear();

    // Refinement of the identity residuals, reported only.
    if (can_halve(grid) && c.corrupt_j == 0) {
      const auto start = std::chrono::steady_clock::now();
      try {
        RunConfig coarse = c;
        coarse.n = halved(grid).shape();
        const auto tc = build_scenario(coarse).triple;
        const auto rc = first_order_identities(tc, tc.g), rf = first_order_identities(t, t.g);
        const double ec = std::max(rc.alpha_residual, rc.beta_residual);
        const double ef = std::max(rf.alpha_residual, rf.beta_residual);
        r.logged.push_back({"identity_residual_refinement_ratio", ec / ef >= 4, ec / ef, 4,
                            "n=" + std::to_string(halved(grid).n(0)) + " " + fmt(ec) + ", n=" +
                                std::to_string(grid.n(0)) + " " + fmt(ef)});
      } catch (const std::exception &e) {
        r.logged.push_back({"identity_residual_refinement_ratio", false, 0, 4, std::string("raised ") + e.what()});
      }
      r.timings.emplace_back("identity_refinement",
                             std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }

    for (const auto &s : r.criteria)
      if (!s.passed) {
        r.exit_code = exit_invariant_failure;
        r.failed_stage = "property_suites";
        r.error = "suite '" + s.name + "' failed";
        break;
      }
  });
}

RunReport diagnose(const std::string &dump_path, const RunConfig &c, double t) {
  return guarded("diagnose", c, [&](RunReport &r) {
    if (!(t >= 0 && t <= 1)) throw ConfigError("t must lie in [0, 1]");
    const auto sc = timed(r, "build_scenario", [&] { return build_scenario(c); });
    const auto omega_prime = timed(r, "load_dump", [&] {
      const auto f = load_field(dump_path);
      if (f.grid() != sc.triple.grid()) throw FormatError("dump grid differs from the configured grid");
      if (f.variance() != TwoForm<double>::signature()) throw FormatError("dump is not a 2-form");
      return TwoForm<double>(f);
    });
    r.artifacts["dump"] = dump_path;
    const auto rec = timed(r, "diagnostics", [&] {
      const auto basis = ContinuityProblem<double>::class_basis_of(sc.triple.g, sc.triple.omega);
      const auto nij = norms_12(nijenhuis(sc.triple.j), sc.triple.g, c.solver.p);
      auto d = diagnostics(sc.triple, omega_prime, source_at(sc.F, sc.triple.omega, t), c.solver.p, basis, nij);
      d.t = t;
      return d;
    });
    r.extra["diagnostics"] = record_json(rec);
    r.final_residuals = {{"volume_pointwise", rec.volume_residual},
                         {"selfdual_c0", rec.selfdual_c0},
                         {"trace_identity", rec.trace_identity_residual}};
    fs::create_directories(c.output_dir);
    const std::string csv_path = (fs::path(c.output_dir) / "diagnose.csv").string();
    std::ofstream csv(csv_path);
    for (std::size_t k = 0; k < csv_columns().size(); ++k) csv << (k ? "," : "") << csv_columns()[k];
    csv << "\n" << csv_row(rec) << "\n";
    r.artifacts["log"] = csv_path;
  });
}

RunReport sweep(const RunConfig &c, const std::vector<double> &eps, bool solve) {
  const Log log(c.log_level);
  return guarded("sweep", c, [&](RunReport &r) {
    if (eps.empty()) throw ConfigError("--eps needs at least one value");
    for (double e : eps)
      if (!(e >= 0)) throw ConfigError("every epsilon must be non-negative");
    fs::create_directories(c.output_dir);
    const std::string csv_path = (fs::path(c.output_dir) / "sweep.csv").string();
    std::ofstream csv(csv_path);
    if (!csv) throw FormatError("cannot write '" + csv_path + "'");
    csv << "epsilon,nij_C0,nij_L1,nij_Lp,solved,solver_success,accepted_steps,final_residual,volume_residual,"
           "max_claim,failed_stage\n";
    r.artifacts["log"] = csv_path;
    json points = json::array();
    std::vector<double> xs, ys;
    for (double e : eps) {
      RunConfig ce = c;
      ce.scenario = Scenario::perturbed;
      ce.epsilon = e;
      const std::string stage = "epsilon=" + fmt(e);
      const auto sc = timed(r, stage + " build", [&] { return build_scenario(ce); });
      const auto nij = norms_12(nijenhuis(sc.triple.j), sc.triple.g, c.solver.p);
      if (e > 0 && nij.c0 > 0) {
        xs.push_back(std::log(e));
        ys.push_back(std::log(nij.c0));
      }
      json point = {{"epsilon", e}, {"nij_C0", nij.c0}, {"nij_L1", nij.l1}, {"nij_Lp", nij.lp}, {"solved", solve}};
      bool ok = false;
      int steps = 0;
      double residual = 0, volume = 0, claim = 0;
      std::string failed;
      if (solve) {
        const auto start = std::chrono::steady_clock::now();
        try {
          const auto pr = ContinuityProblem<double>::make(sc.triple, sc.F);
          const auto path = continuity_path(pr, c.solver);
          const auto &last = path.records.back();
          ok = last.t == 1;
          steps = int(path.records.size()) - 1;
          residual = last.residuals.combined();
          volume = last.volume_residual;
          for (const auto &rec : path.records) claim = std::max(claim, rec.claim_quantity);
        } catch (const std::exception &ex) {
          failed = ex.what();
        }
        r.timings.emplace_back(stage + " solve",
                               std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
        point["solver_success"] = ok;
        point["accepted_steps"] = steps;
        point["final_residual"] = residual;
        point["volume_residual"] = volume;
        point["max_claim"] = claim;
        point["error"] = failed.empty() ? json(nullptr) : json(failed);
      }
      // Failure messages may contain commas; keep only the error class in the CSV.
      const std::string failed_class = failed.substr(0, failed.find(':'));
      csv << fmt(e) << "," << fmt(nij.c0) << "," << fmt(nij.l1) << "," << fmt(nij.lp) << "," << (solve ? 1 : 0) << ","
          << (ok ? 1 : 0) << "," << steps << "," << fmt(residual) << "," << fmt(volume) << "," << fmt(claim) << ","
          << failed_class << "\n";
      csv.flush();
      log.info(stage + "  |N|_C0 " + fmt(nij.c0) + (solve ? std::string(ok ? "  solved" : "  failed ") + failed_class : ""));
      points.push_back(point);
    }
    r.extra["points"] = points;
    if (xs.size() >= 2) {
      const Eigen::Index m = Eigen::Index(xs.size());
      Eigen::MatrixXd a(m, 2);
      Eigen::VectorXd b(m);
      for (Eigen::Index i = 0; i < m; ++i) {
        a(i, 0) = xs[std::size_t(i)];
        a(i, 1) = 1;
        b(i) = ys[std::size_t(i)];
      }
      const Eigen::Vector2d fit = a.colPivHouseholderQr().solve(b);
      const bool ok = std::abs(fit(0) - 1) <= 0.1;
      r.criteria.push_back({"nijenhuis_linear_in_epsilon", ok, fit(0), 1, "log-log slope of |N(J)|_C0, tolerance 0.1"});
      if (!ok) {
        r.exit_code = exit_invariant_failure;
        r.error = "Nijenhuis norm does not scale linearly in epsilon";
      }
    }
  });
}

} // namespace akcy::cli
