#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "akcy/field_io.hpp"
#include "akcy/identities.hpp"
#include "akcy/solver.hpp"

namespace akcy {

/// Outcome of one property suite. `value` is the measured quantity and
/// `threshold` the bound it is compared against.
struct SuiteResult {
  std::string name;
  bool passed = false;
  double value = 0;
  double threshold = 0;
  std::string detail;
};

namespace suite_detail {

inline std::string describe(std::initializer_list<std::pair<const char *, double>> items) {
  std::ostringstream os;
  os.precision(4);
  bool first = true;
  for (const auto &[k, v] : items) {
    os << (first ? "" : ", ") << k << " " << v;
    first = false;
  }
  return os.str();
}

/// Pointwise random (0,2)-tensor, not band-limited.
template <typename S> TensorField<S> random_two_tensor(const Grid4<S> &grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TensorField<S> f(grid, {Slot::lower, Slot::lower});
  for (Eigen::Index i = 0; i < f.data().size(); ++i) f.data().data()[i] = S(unit_normal(rng));
  return f;
}

template <typename S> TwoForm<S> random_two_form(const Grid4<S> &grid, std::uint64_t seed) {
  const auto t = random_two_tensor(grid, seed);
  TwoForm<S> f(grid);
  for (Eigen::Index p = 0; p < grid.size(); ++p) {
    const Mat4<S> m = mat4(t, p);
    set_mat4<S>(f, p, Mat4<S>(m - m.transpose()));
  }
  return f;
}

template <typename S> double max_abs_diff(const TensorField<S> &a, const TensorField<S> &b) {
  return double((a.data() - b.data()).abs().maxCoeff());
}

} // namespace suite_detail

/// Spectral derivative of a trigonometric polynomial, quadrature of a
/// constant and a bit-exact dump round trip.
template <typename S> SuiteResult field_core_suite(const Grid4<S> &grid, double tol = 1e-10) {
  const S k = grid.fundamental(0);
  const auto f = sample<S>(grid, [k](S x, S y, S, S) { return std::sin(k * x) * std::cos(k * y); });
  const auto df = sample<S>(grid, [k](S x, S y, S, S) { return k * std::cos(k * x) * std::cos(k * y); });
  const double deriv = suite_detail::max_abs_diff<S>(partial_derivative(f, 0), df) / double(k);
  ScalarField<S> one(grid);
  one.data().setOnes();
  const double quad = std::abs(double(integrate(one, one)) - double(grid.volume())) / double(grid.volume());
  double io = 0;
  if constexpr (std::is_same_v<S, double>) {
    std::stringstream buf;
    write_field(buf, f);
    io = suite_detail::max_abs_diff<double>(read_field(buf), f);
  }
  const double worst = std::max({deriv, quad, io});
  return {"field_core", worst < tol, worst, tol,
          suite_detail::describe({{"derivative", deriv}, {"quadrature", quad}, {"dump round trip", io}})};
}

/// P + Q = Id, P^2 = P, P g = 0, P omega = 0, J^2 = -Id and
/// omega(J., J.) = omega, all pointwise on a random (0,2)-tensor.
template <typename S> SuiteResult structure_suite(const AKTriple<S> &t, std::uint64_t seed, double tol = 1e-10) {
  const auto x = suite_detail::random_two_tensor(t.grid(), seed);
  const auto pr = projectors(t.j);
  const auto px = pr.p(x), qx = pr.q(x);
  TensorField<S> sum = px;
  sum.data() += qx.data();
  const double split = suite_detail::max_abs_diff(sum, x);
  const double idem = suite_detail::max_abs_diff(pr.p(px), px);
  const double pg = double(pr.p(static_cast<const TensorField<S> &>(t.g)).max_abs());
  const double pw = double(pr.p(t.omega).max_abs());
  double jsq = 0, jinv = 0;
  for (Eigen::Index p = 0; p < t.j.points(); ++p) {
    const Mat4<S> j = mat4(t.j, p), w = mat4(t.omega, p);
    jsq = std::max(jsq, double((j * j + Mat4<S>::Identity()).cwiseAbs().maxCoeff()));
    jinv = std::max(jinv, double((pointwise::pullback<S>(j, w) - w).cwiseAbs().maxCoeff()));
  }
  const double worst = std::max({split, idem, pg, pw, jsq, jinv});
  return {"structure", worst < tol, worst, tol,
          suite_detail::describe({{"P+Q-Id", split}, {"P^2-P", idem}, {"Pg", pg}, {"P omega", pw},
                                  {"J^2+Id", jsq}, {"omega(J,J)-omega", jinv}})};
}

/// 1/2 (1 + *) chi = (omega ^ chi / omega^2) omega + P chi for random chi.
template <typename S>
SuiteResult hodge_identity_suite(const AKTriple<S> &t, std::uint64_t seed, int trials = 20, double tol = 1e-9) {
  const MetricInfo<S> info(t.g);
  const auto om2 = wedge(t.omega, t.omega);
  double worst = 0;
  for (int k = 0; k < trials; ++k) {
    const auto chi = suite_detail::random_two_form(t.grid(), seed + std::uint64_t(k));
    const auto lhs = self_dual_part(info, chi);
    auto rhs = apply_p(t.j, chi);
    const auto ratio = wedge(t.omega, chi);
    for (Eigen::Index p = 0; p < rhs.points(); ++p)
      set_mat4<S>(rhs, p, Mat4<S>(mat4(rhs, p) + ratio.data()(p, 0) / om2.data()(p, 0) * mat4(t.omega, p)));
    worst = std::max(worst, double((lhs - rhs).max_abs()));
  }
  return {"hodge_identity", worst < tol, worst, tol, std::to_string(trials) + " random forms"};
}

/// Coordinate Nijenhuis tensor against 2 (nabla^i J_j^l) J_kl.
template <typename S> SuiteResult nijenhuis_suite(const AKTriple<S> &t, double tol = 1e-6) {
  const auto a = nijenhuis(t.j);
  const double gap = suite_detail::max_abs_diff<S>(a, nijenhuis_ak_form(t));
  return {"nijenhuis_equivalence", gap < tol, gap, tol,
          suite_detail::describe({{"|N|_max", double(a.max_abs())}})};
}

/// Both Nijenhuis formulas on a constant non-standard J, where each vanishes.
template <typename S> SuiteResult nijenhuis_constant_suite(const Grid4<S> &grid, double tol = 1e-12) {
  Mat4<S> a;
  a << 1, 0.2, 0, 0.1, 0, 1.1, 0.3, 0, 0.1, 0, 0.9, 0, 0, 0.2, 0, 1;
  const Mat4<S> jc = a.inverse() * standard_j_matrix<S>() * a;
  const Mat4<S> w0 = mat4(standard_omega(grid), 0);
  const Mat4<S> w = a.inverse() * w0 * a.inverse().transpose();
  const auto t = AKTriple<S>::make(
      constant_two_form<S>(grid, w),
      ACStructure<S>(constant_field<S>(grid, ACStructure<S>::signature(), jc.template reshaped<Eigen::RowMajor>())));
  const double worst = std::max(double(nijenhuis(t.j).max_abs()), double(nijenhuis_ak_form(t).max_abs()));
  return {"nijenhuis_constant_j", worst < tol, worst, tol, "constant conjugate of J0"};
}

/// Observed order log(e_coarse / e_fine) / log(n_fine / n_coarse) of the
/// harmonicity defect |nabla_i J_j^i|_C0 over a sequence of refined grids,
/// each perturbed triple built and released in turn.
template <typename S>
SuiteResult harmonicity_refinement_suite(S eps, std::uint64_t seed, const std::vector<Grid4<S>> &grids,
                                         double min_order = 2) {
  std::vector<double> err;
  for (const auto &grid : grids) {
    const auto t = perturbed_triple(grid, eps, seed);
    err.push_back(double(harmonicity_defect(t.g, t.j).max_abs()));
  }
  double order = std::numeric_limits<double>::infinity();
  std::ostringstream os;
  os.precision(4);
  for (std::size_t k = 0; k < grids.size(); ++k) os << (k ? ", " : "") << "n=" << grids[k].n(0) << " " << err[k];
  for (std::size_t k = 1; k < grids.size(); ++k) {
    const double o = std::log(err[k - 1] / err[k]) / std::log(double(grids[k].n(0)) / grids[k - 1].n(0));
    order = std::min(order, std::isnan(o) ? -std::numeric_limits<double>::infinity() : o);
    os << ", order " << o;
  }
  // A defect at roundoff on every grid (constant J) has no order to observe.
  if (*std::max_element(err.begin(), err.end()) < 1e-14)
    return {"harmonicity_refinement", true, order, min_order, os.str() + ", identically zero"};
  return {"harmonicity_refinement", order >= min_order, order, min_order, os.str()};
}

/// First-order identities relating nabla g' to nabla J for the metric of a
/// closed compatible form.
template <typename S>
SuiteResult identities_suite(const AKTriple<S> &t, const Metric<S> &g_prime, const std::string &label,
                             double tol = 1e-6) {
  const auto r = first_order_identities(t, g_prime);
  const double worst = std::max(r.alpha_residual, r.beta_residual);
  return {"first_order_identities_" + label, worst < tol, worst, tol,
          suite_detail::describe({{"alpha residual", r.alpha_residual}, {"beta residual", r.beta_residual},
                                  {"|alpha|", r.alpha_max}, {"|beta|", r.beta_max}})};
}

/// In the integrable flat case with omega' = omega0 - 1/2 d(J0 d phi) both
/// alpha and beta vanish identically.
template <typename S>
SuiteResult identities_integrable_suite(const Grid4<S> &grid, std::uint64_t seed, double tol = 1e-10) {
  const auto flat = AKTriple<S>::standard(grid);
  auto phi = random_band_limited_scalar(grid, seed);
  phi *= S(0.002);
  TwoForm<S> wp = flat.omega;
  auto dd = exterior_d(apply_j(flat.j, exterior_d(phi)));
  dd *= S(-0.5);
  wp += dd;
  const auto r = first_order_identities(flat, metric_from_pair(wp, flat.j));
  const double worst = std::max({r.alpha_residual, r.beta_residual, r.alpha_max, r.beta_max});
  return {"first_order_identities_integrable", worst < tol, worst, tol,
          suite_detail::describe({{"alpha residual", r.alpha_residual}, {"beta residual", r.beta_residual},
                                  {"|alpha|", r.alpha_max}, {"|beta|", r.beta_max}})};
}

/// A randomized closed J-compatible form: the solution of the continuity
/// problem for a small random band-limited F.
template <typename S>
TwoForm<S> random_compatible_form(const AKTriple<S> &t, std::uint64_t seed, double amplitude = 0.02,
                                  double newton_tol = 1e-10) {
  auto f = random_band_limited_scalar(t.grid(), seed, 1);
  f *= S(amplitude) / f.max_abs();
  const auto pr = ContinuityProblem<S>::make(t, normalize_F(f, t.omega));
  SolverConfig cfg;
  cfg.newton_tol = newton_tol;
  return continuity_path(pr, cfg).state.omega_prime;
}

/// Four smallest singular values of (d+, d*) below `tol`, the fifth above `gap_tol`.
template <typename S>
SuiteResult kernel_suite(const Metric<S> &g, const std::string &label, double tol = 1e-10, double gap_tol = 1e-3) {
  const auto k = kernel_spectrum(g);
  double worst = 0;
  for (double s : k.kernel) worst = std::max(worst, s);
  const bool ok = k.converged && worst < tol && k.gap > gap_tol;
  return {"kernel_" + label, ok, worst, tol,
          suite_detail::describe({{"sigma_1", k.kernel[0]}, {"sigma_4", k.kernel[3]}, {"sigma_5", k.gap},
                                  {"iterations", double(k.iterations)}}) +
              (k.converged ? "" : ", not converged")};
}

/// Central differences of Phi at the anchor in random exact directions
/// d b against d+ b.
template <typename S>
SuiteResult linearization_suite(const AKTriple<S> &t, const ScalarField<S> &f, std::uint64_t seed, int directions = 10,
                                double tol = 1e-6) {
  const Grid4<S> &grid = t.grid();
  const auto pr = ContinuityProblem<S>::make(t, f);
  const auto anchor = Anchor<S>::make(t.omega, S(0), t.j);
  const DenseVector<S> s0 = DenseVector<S>::Zero(2);
  const S h = S(1e-5);
  double worst = 0;
  for (int k = 0; k < directions; ++k) {
    OneForm<S> b(grid);
    for (int c = 0; c < 4; ++c)
      b.data().col(c) = random_band_limited_scalar(grid, seed + 4 * std::uint64_t(k) + std::uint64_t(c)).data().col(0);
    OneForm<S> bp = b, bm = b;
    bp *= h;
    bm *= -h;
    TwoForm<S> fd = phi_map(bp, s0, S(0), anchor, pr).phi;
    fd -= phi_map(bm, s0, S(0), anchor, pr).phi;
    fd *= S(1) / (S(2) * h);
    const auto exact = d_plus(anchor.metric, b);
    worst = std::max(worst, double((fd - exact).max_abs() / exact.max_abs()));
  }
  return {"linearization", worst < tol, worst, tol, std::to_string(directions) + " random directions"};
}

} // namespace akcy
