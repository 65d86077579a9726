// Acceptance run: one PASS/FAIL line per criterion. Criterion numbers given
// on the command line select a subset; the default runs all of them.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "akcy/suites.hpp"

using namespace akcy;
using std::numbers::pi;

namespace {

constexpr int n_main = 16;

struct Outcome {
  bool passed = false;
  std::string summary;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ScalarField<double> sine_source(const Grid &grid) {
  return sample<double>(grid, [](double x, double y, double, double) {
    return 0.1 * std::sin(2 * pi * x) * std::sin(2 * pi * y);
  });
}

SolverConfig path_config() {
  SolverConfig cfg;
  cfg.newton_tol = 1e-10;
  return cfg;
}

double max_diff(const ScalarField<double> &a, const ScalarField<double> &b) {
  return (a.data() - b.data()).abs().maxCoeff();
}

double oscillation_of(const ScalarField<double> &f) { return f.data().maxCoeff() - f.data().minCoeff(); }

Outcome join(const std::vector<SuiteResult> &parts) {
  Outcome o{true, ""};
  for (const auto &s : parts) {
    o.passed = o.passed && s.passed;
    o.summary += (o.summary.empty() ? "" : "; ") + s.name + " " + fmt(s.value) + " vs " + fmt(s.threshold) +
                 (s.detail.empty() ? "" : " (" + s.detail + ")");
  }
  return o;
}

/// Perturbed solves shared by the solver criteria and the sweep.
struct Solves {
  std::map<double, PathResult<double>> perturbed;
  std::map<double, std::string> failure;

  const PathResult<double> *at(double eps) {
    if (perturbed.count(eps)) return &perturbed.at(eps);
    if (failure.count(eps)) return nullptr;
    const Grid grid = Grid::cube(n_main);
    try {
      const auto t = perturbed_triple(grid, eps, 1);
      const auto pr = ContinuityProblem<double>::make(t, normalize_F(sine_source(grid), t.omega));
      return &perturbed.emplace(eps, continuity_path(pr, path_config())).first->second;
    } catch (const Error &e) {
      failure[eps] = e.what();
      return nullptr;
    }
  }
};

Solves solves;

Outcome structure_projectors() {
  const auto t0 = std::chrono::steady_clock::now();
  const Grid grid = Grid::cube(n_main);
  const auto a = structure_suite(AKTriple<double>::standard(grid), 1);
  const auto b = structure_suite(perturbed_triple(grid, 1e-2, 1), 2);
  const double secs = seconds_since(t0);
  auto o = join({a, b});
  o.passed = o.passed && secs < 30;
  o.summary = "flat and eps=1e-2: " + o.summary + "; runtime " + fmt(secs) + " s vs 30 s";
  return o;
}

Outcome hodge_identity() {
  const Grid grid = Grid::cube(n_main);
  return join({hodge_identity_suite(AKTriple<double>::standard(grid), 100, 20),
               hodge_identity_suite(perturbed_triple(grid, 1e-2, 1), 200, 20)});
}

Outcome harmonicity_order() {
  using L = long double;
  const std::vector<Grid4<L>> grids{Grid4<L>::cube(8), Grid4<L>::cube(16), Grid4<L>::cube(32)};
  auto o = join({harmonicity_refinement_suite<L>(L(1e-2), 1, grids, 2.0)});
  o.summary += " [extended precision]";
  return o;
}

Outcome nijenhuis_equivalence() {
  const auto coarse = nijenhuis_suite(perturbed_triple(Grid::cube(8), 1e-2, 1));
  const auto fine = nijenhuis_suite(perturbed_triple(Grid::cube(n_main), 1e-2, 1));
  const auto constant = nijenhuis_constant_suite(Grid::cube(n_main));
  auto o = join({fine, constant});
  const bool improving = fine.value <= coarse.value;
  o.passed = o.passed && improving;
  o.summary += "; n=8 " + fmt(coarse.value) + " -> n=16 " + fmt(fine.value) + (improving ? "" : " not improving");
  return o;
}

Outcome identities_on_compatible_forms() {
  const Grid grid = Grid::cube(n_main);
  const auto t = perturbed_triple(grid, 1e-2, 1);
  const auto wp = random_compatible_form(t, 17);
  const auto g_prime = metric_from_pair(wp, t.j);
  return join({identities_suite(t, g_prime, "perturbed", 1e-6), identities_integrable_suite(grid, 5, 1e-10)});
}

Outcome kernel() {
  const Grid grid = Grid::cube(n_main);
  return join({kernel_suite(AKTriple<double>::standard(grid).g, "flat"),
               kernel_suite(perturbed_triple(grid, 1e-2, 1).g, "perturbed")});
}

Outcome kahler_solve() {
  const auto t0 = std::chrono::steady_clock::now();
  const Grid grid = Grid::cube(n_main);
  const auto t = AKTriple<double>::standard(grid);
  const auto pr = ContinuityProblem<double>::make(t, normalize_F(sine_source(grid), t.omega));
  const auto res = continuity_path(pr, path_config());
  const auto &last = res.records.back();
  const auto &w = res.state.omega_prime;
  const auto p0 = solve_potential(t.omega, w, t.j, 0.0, ClassMode::drifting).phi;
  const auto ph = solve_potential(t.omega, w, t.j, 0.5, ClassMode::drifting).phi;
  const auto p1 = solve_potential(t.omega, w, t.j, 1.0, ClassMode::drifting).phi;
  const double osc = oscillation_of(p1);
  const double spread = std::max({max_diff(p0, ph), max_diff(p0, p1), max_diff(ph, p1)}) / osc;
  const auto dec = decompose(t.omega, w, t.j, 1.0, ClassMode::drifting, pr.class_basis);
  const MetricInfo<double> g(t.g);
  const auto da = exterior_d(dec.a);
  const double da_l2 = std::sqrt(l2_inner2(g, da, da));
  const double secs = seconds_since(t0);
  Outcome o;
  o.passed = last.t == 1 && last.volume_residual < 1e-8 && spread < 1e-6 && da_l2 < 1e-8 && secs < 600;
  o.summary = "volume " + fmt(last.volume_residual) + " vs 1e-8; potentials " + fmt(spread) +
              " vs 1e-6 (osc " + fmt(osc) + "); |d a_1| " + fmt(da_l2) + " vs 1e-8; runtime " + fmt(secs) +
              " s vs 600 s";
  return o;
}

Outcome perturbed_solve() {
  const auto *res = solves.at(1e-3);
  if (!res) return {false, "path failed: " + solves.failure.at(1e-3)};
  const auto &last = res->records.back();
  double worst_bound = std::numeric_limits<double>::infinity(), worst_claim = 0;
  for (const auto &r : res->records) {
    worst_bound = std::min(worst_bound, r.tr_min - r.lower_bound);
    worst_claim = std::max(worst_claim, r.claim_quantity);
  }
  Outcome o;
  o.passed = last.t == 1 && last.volume_residual < 1e-7 && last.selfdual_c0 < 1e-8 &&
             last.trace_identity_residual < 1e-7 && worst_bound >= -1e-7 && worst_claim < 1;
  o.summary = "path completed in " + std::to_string(res->records.size() - 1) + " steps; volume " +
              fmt(last.volume_residual) + " vs 1e-7; |P omega'| " + fmt(last.selfdual_c0) +
              " vs 1e-8; trace identity " + fmt(last.trace_identity_residual) + " vs 1e-7; min tr - bound " +
              fmt(worst_bound) + " vs -1e-7; max claim " + fmt(worst_claim) + " vs 1";
  return o;
}

Outcome uniqueness() {
  const Grid grid = Grid::cube(n_main);
  Outcome o{true, ""};
  for (const double eps : {0.0, 1e-3}) {
    const auto t = eps == 0 ? AKTriple<double>::standard(grid) : perturbed_triple(grid, eps, 1);
    const auto pr = ContinuityProblem<double>::make(t, normalize_F(sine_source(grid), t.omega));
    const auto rep = uniqueness_test(pr, path_config(), {1, 2}, 1e-2);
    o.passed = o.passed && rep.difference < 1e-6;
    o.summary += std::string(o.summary.empty() ? "" : "; ") + (eps == 0 ? "kahler " : "perturbed ") +
                 fmt(rep.difference) + " vs 1e-6";
  }
  return o;
}

Outcome linearization() {
  const Grid grid = Grid::cube(n_main);
  const auto t = perturbed_triple(grid, 1e-2, 1);
  return join({linearization_suite(t, normalize_F(sine_source(grid), t.omega), 31, 10, 1e-6)});
}

Outcome epsilon_sweep() {
  const Grid grid = Grid::cube(n_main);
  const std::vector<double> eps{1e-4, 3e-4, 1e-3, 3e-3, 1e-2};
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::ostringstream os;
  for (const double e : eps) {
    const auto t = perturbed_triple(grid, e, 1);
    const double c0 = norms_12(nijenhuis(t.j), t.g).c0;
    const double x = std::log(e), y = std::log(c0);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    const auto *res = solves.at(e);
    os << "eps " << fmt(e) << " |N| " << fmt(c0) << " solver " << (res ? "ok" : "failed") << "; ";
  }
  const double m = double(eps.size());
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return {std::abs(slope - 1) <= 0.1, os.str() + "slope " + fmt(slope) + " vs 1 +- 0.1"};
}

} // namespace

int main(int argc, char **argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"structure and projectors", structure_projectors},
      {"self-dual projection identity", hodge_identity},
      {"harmonicity defect refinement order", harmonicity_order},
      {"Nijenhuis equivalence", nijenhuis_equivalence},
      {"first-order identities", identities_on_compatible_forms},
      {"kernel of (d+, d*)", kernel},
      {"Kahler solve", kahler_solve},
      {"perturbed solve", perturbed_solve},
      {"uniqueness", uniqueness},
      {"linearization of Phi", linearization},
      {"epsilon sweep", epsilon_sweep},
  };
  std::set<int> selected;
  for (int k = 1; k < argc; ++k) selected.insert(std::atoi(argv[k]));

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = int(k) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception &e) {
      o = {false, std::string("raised: ") + e.what()};
    }
    failed += !o.passed;
    std::printf("%s [%d] %s: %s [%.1f s]\n", o.passed ? "PASS" : "FAIL", id, criteria[k].first.c_str(),
                o.summary.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
