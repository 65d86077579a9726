#include <doctest.h>

#include <cmath>
#include <numbers>

#include "akcy/connection.hpp"
#include "akcy/scenario.hpp"

using namespace akcy;
using std::numbers::pi;

namespace {

/// Pointwise random antisymmetric field (not band-limited).
TwoForm<double> random_two_form(const Grid &grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TwoForm<double> f(grid);
  for (Eigen::Index p = 0; p < grid.size(); ++p) {
    Mat4<double> m;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) m(i, j) = unit_normal(rng);
    set_mat4<double>(f, p, m - m.transpose());
  }
  return f;
}

TensorField<double> random_two_tensor(const Grid &grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TensorField<double> f(grid, {Slot::lower, Slot::lower});
  for (Eigen::Index i = 0; i < f.data().size(); ++i) f.data().data()[i] = unit_normal(rng);
  return f;
}

OneForm<double> smooth_one_form(const Grid &grid, std::uint64_t seed) {
  OneForm<double> a(grid);
  for (int c = 0; c < 4; ++c)
    a.data().col(c) = random_band_limited_scalar(grid, seed + 17 * c, 2, 6).data().col(0);
  return a;
}

TwoForm<double> smooth_two_form(const Grid &grid, std::uint64_t seed) {
  TwoForm<double> f(grid);
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      const auto s = random_band_limited_scalar(grid, seed + 7 * (4 * i + j), 2, 6);
      f.data().col(4 * i + j) = s.data().col(0);
      f.data().col(4 * j + i) = -s.data().col(0);
    }
  return f;
}

double max_nijenhuis_gap(const AKTriple<double> &t) {
  const auto a = nijenhuis(t.j);
  const auto b = nijenhuis_ak_form(t);
  return (a.data() - b.data()).abs().maxCoeff();
}

} // namespace

TEST_CASE("standard pair gives the Euclidean metric") {
  const Grid grid = Grid::cube(4);
  const auto g = metric_from_pair(standard_omega(grid), standard_j(grid));
  for (Eigen::Index p = 0; p < grid.size(); ++p)
    CHECK((mat4(g, p) - Mat4<double>::Identity()).cwiseAbs().maxCoeff() == 0.0);
  ACStructure<double> minus = standard_j(grid);
  minus *= -1.0;
  CHECK_THROWS_AS(metric_from_pair(standard_omega(grid), minus), NotTaming);

  const auto r = check_compatibility(standard_omega(grid), standard_j(grid));
  CHECK(r.j_squared < 1e-12);
  CHECK(r.d_omega < 1e-12);
  CHECK(r.g_symmetry < 1e-12);
  CHECK(r.j_invariance < 1e-12);
  CHECK(r.min_eigenvalue == doctest::Approx(1.0));
}

TEST_CASE("symplectic orientation: omega0 squared is twice the reference volume") {
  const Grid grid = Grid::cube(4);
  const auto w = standard_omega(grid);
  CHECK(wedge(w, w).data().col(0).minCoeff() == doctest::Approx(2.0));
  CHECK(levi_civita(0, 2, 1, 3) == 1);
  CHECK(levi_civita(0, 1, 2, 3) == -1);
}

TEST_CASE("compatible J from a metric") {
  const Grid grid = Grid::cube(8);
  const auto j0 = compatible_j_from_metric(standard_omega(grid), flat_metric(grid));
  CHECK((j0.data() - standard_j(grid).data()).abs().maxCoeff() < 1e-15);

  const auto t = perturbed_triple(grid, 1e-2, 5);
  const auto r = check_compatibility(t.omega, t.j);
  CHECK(r.j_squared < 1e-12);
  CHECK(r.j_invariance < 1e-12);
  CHECK(r.g_symmetry < 1e-12);
  CHECK(r.min_eigenvalue > 0.5);

  TwoForm<double> degenerate(grid);
  CHECK_THROWS_AS(compatible_j_from_metric(degenerate, flat_metric(grid)), Degenerate);

  // A non-closed omega is reported by the compatibility check.
  auto bent = standard_omega(grid);
  const auto s = sample<double>(grid, [](double x1, double, double, double) {
    return 0.1 * std::sin(2 * pi * x1);
  });
  bent.data().col(4 * 1 + 2) += s.data().col(0);
  bent.data().col(4 * 2 + 1) -= s.data().col(0);
  CHECK(check_compatibility(bent, standard_j(grid)).d_omega > 1e-2);
}

TEST_CASE("Hodge star conventions") {
  const Grid grid = Grid::cube(4);
  const MetricInfo<double> flat(flat_metric(grid));
  auto star_of = [&](int i, int j) {
    return mat4(hodge_star2(flat, constant_two_form<double>(grid, {{i, j, 1.0}})), 0);
  };
  const Mat4<double> s13 = star_of(0, 2);
  CHECK(s13(1, 3) == doctest::Approx(1.0));
  const Mat4<double> s12 = star_of(0, 1);
  CHECK(s12(2, 3) == doctest::Approx(-1.0));
  const Mat4<double> s14 = star_of(0, 3);
  CHECK(s14(1, 2) == doctest::Approx(-1.0));

  const auto t = perturbed_triple(Grid::cube(8), 1e-2, 3);
  const MetricInfo<double> info(t.g);
  const auto chi = random_two_form(t.grid(), 9);
  CHECK((hodge_star2(info, hodge_star2(info, chi)) - chi).max_abs() < 1e-12);
}

TEST_CASE("self-dual projection formula on almost-Kahler triples") {
  for (double eps : {0.0, 1e-2}) {
    const auto t = perturbed_triple(Grid::cube(8), eps, 3);
    const MetricInfo<double> info(t.g);
    const auto om2 = wedge(t.omega, t.omega);
    double worst = 0;
    for (int trial = 0; trial < 20; ++trial) {
      const auto chi = random_two_form(t.grid(), 100 + trial);
      const auto lhs = self_dual_part(info, chi);
      auto rhs = apply_p(t.j, chi);
      const auto ratio = wedge(t.omega, chi);
      for (Eigen::Index p = 0; p < rhs.points(); ++p)
        set_mat4<double>(rhs, p,
                         mat4(rhs, p) + ratio.data()(p, 0) / om2.data()(p, 0) * mat4(t.omega, p));
      worst = std::max(worst, (lhs - rhs).max_abs());
    }
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("projector algebra") {
  const auto t = perturbed_triple(Grid::cube(8), 1e-2, 4);
  const auto x = random_two_tensor(t.grid(), 1);
  const auto y = random_two_tensor(t.grid(), 2);
  const auto pr = projectors(t.j);
  const auto px = pr.p(x), qx = pr.q(x);
  CHECK((px.data() + qx.data() - x.data()).abs().maxCoeff() < 1e-12);
  CHECK((pr.p(px).data() - px.data()).abs().maxCoeff() < 1e-12);
  CHECK((pr.q(qx).data() - qx.data()).abs().maxCoeff() < 1e-12);
  CHECK(pr.p(qx).max_abs() < 1e-12);
  CHECK(pr.p(static_cast<const TensorField<double> &>(t.g)).max_abs() < 1e-12);
  CHECK(pr.p(t.omega).max_abs() < 1e-12);
  CHECK((pr.q(t.omega) - t.omega).max_abs() < 1e-12);
  // self-adjointness with respect to g
  double gap = 0;
  const auto py = pr.p(y);
  for (Eigen::Index p = 0; p < x.points(); ++p) {
    const Mat4<double> gi = mat4(t.g, p).inverse();
    const double a = (gi * mat4(px, p) * gi).cwiseProduct(mat4(y, p)).sum();
    const double b = (gi * mat4(x, p) * gi).cwiseProduct(mat4(py, p)).sum();
    gap = std::max(gap, std::abs(a - b));
  }
  CHECK(gap < 1e-12);
}

TEST_CASE("exterior derivative and codifferential") {
  const Grid grid = Grid::cube(8);
  const auto a = smooth_one_form(grid, 1);
  const auto da = exterior_d(a);
  CHECK(exterior_d(static_cast<const TensorField<double> &>(da)).max_abs() < 1e-10 * da.max_abs());
  CHECK(exterior_d(static_cast<const TensorField<double> &>(standard_omega(grid))).max_abs() == 0.0);
  CHECK(d_plus(flat_metric(grid), OneForm<double>(constant_field<double>(
                                      grid, OneForm<double>::signature(),
                                      Vec4<double>(1, -2, 3, 0.5))))
            .max_abs() < 1e-13);

  for (double eps : {0.0, 1e-2}) {
    const auto t = perturbed_triple(grid, eps, 8);
    const MetricInfo<double> info(t.g);
    const auto chi = smooth_two_form(grid, 2);
    const double lhs = l2_inner2(info, da, chi);
    const double rhs = l2_inner1(info, a, codifferential(info, chi));
    CHECK(std::abs(lhs - rhs) < 1e-9 * std::abs(lhs));
    const auto f = random_band_limited_scalar(grid, 4);
    const double l0 = l2_inner1(info, exterior_d(f), a);
    const double r0 = l2_inner0(info, f, codifferential(info, a));
    CHECK(std::abs(l0 - r0) < 1e-9 * std::abs(l0));
  }
}

TEST_CASE("Nijenhuis tensor") {
  const Grid grid = Grid::cube(8);
  const auto flat = AKTriple<double>::standard(grid);
  CHECK(nijenhuis(flat.j).max_abs() == 0.0);
  CHECK(nijenhuis_ak_form(flat).max_abs() < 1e-12);

  // J0 conjugated by a constant matrix, with the matching compatible form.
  Mat4<double> a;
  a << 1, 0.2, 0, 0.1, 0, 1.1, 0.3, 0, 0.1, 0, 0.9, 0, 0, 0.2, 0, 1;
  const Mat4<double> jc = a.inverse() * standard_j_matrix<double>() * a;
  const Mat4<double> wc = a.inverse() * mat4(standard_omega(grid), 0) * a.inverse().transpose();
  const auto tc = AKTriple<double>::make(
      constant_two_form<double>(grid, wc),
      ACStructure<double>(constant_field<double>(grid, ACStructure<double>::signature(),
                                                 jc.reshaped<Eigen::RowMajor>())));
  CHECK(nijenhuis(tc.j).max_abs() < 1e-12);
  CHECK(nijenhuis_ak_form(tc).max_abs() < 1e-12);

  // The two formulas agree on almost-Kahler triples and the gap shrinks.
  const double g8 = max_nijenhuis_gap(perturbed_triple(Grid::cube(8), 1e-2, 1));
  const auto t16 = perturbed_triple(Grid::cube(16), 1e-2, 1);
  const double g16 = max_nijenhuis_gap(t16);
  MESSAGE("Nijenhuis formula gap n=8: " << g8 << " n=16: " << g16);
  CHECK(g16 < 1e-6);
  CHECK(g16 < g8);
  CHECK(nijenhuis(t16.j).max_abs() > 1e-3);

  // Linear scaling in eps.
  const Grid g12 = Grid::cube(12);
  const auto n1 = norms_12(nijenhuis(perturbed_triple(g12, 1e-2, 1).j), flat_metric(g12)).c0;
  const auto n2 = norms_12(nijenhuis(perturbed_triple(g12, 5e-3, 1).j), flat_metric(g12)).c0;
  CHECK(n1 / n2 == doctest::Approx(2.0).epsilon(0.2));
  CHECK(n1 > 1e-3);
  CHECK(n1 < 1e-1);
}

TEST_CASE("harmonicity of J refines at high order") {
  std::vector<double> err;
  for (int n : {8, 16}) {
    const auto t = perturbed_triple(Grid::cube(n), 1e-2, 2);
    err.push_back(harmonicity_defect(t.g, t.j).max_abs());
  }
  MESSAGE("harmonicity defect " << err[0] << " " << err[1]);
  CHECK(std::log2(err[0] / err[1]) >= 2.0);
}

TEST_CASE("curvature of a conformally flat metric") {
  const double a = 0.1, b = 0.05;
  // u = a sin(2 pi x1) cos(2 pi x2) + b cos(2 pi x3)
  auto u = [&](double x1, double x2, double x3) {
    return a * std::sin(2 * pi * x1) * std::cos(2 * pi * x2) + b * std::cos(2 * pi * x3);
  };
  auto grad = [&](double x1, double x2, double x3) {
    Vec4<double> d;
    d << 2 * pi * a * std::cos(2 * pi * x1) * std::cos(2 * pi * x2),
        -2 * pi * a * std::sin(2 * pi * x1) * std::sin(2 * pi * x2),
        -2 * pi * b * std::sin(2 * pi * x3), 0;
    return d;
  };
  auto hess = [&](double x1, double x2, double x3) {
    const double k2 = 4 * pi * pi;
    Mat4<double> h = Mat4<double>::Zero();
    h(0, 0) = -k2 * a * std::sin(2 * pi * x1) * std::cos(2 * pi * x2);
    h(1, 1) = h(0, 0);
    h(0, 1) = h(1, 0) = -k2 * a * std::cos(2 * pi * x1) * std::sin(2 * pi * x2);
    h(2, 2) = -k2 * b * std::cos(2 * pi * x3);
    return h;
  };
  std::vector<double> errs;
  for (int n : {8, 16}) {
    const Grid grid = Grid::cube(n);
    const Metric<double> g(sample_mat4<double>(grid, Metric<double>::signature(), [&](auto x) {
      return Mat4<double>(std::exp(2 * u(x[0], x[1], x[2])) * Mat4<double>::Identity());
    }));
    const auto c = curvature_summary(g, riemann(g));
    double err = 0;
    for (Eigen::Index p = 0; p < grid.size(); ++p) {
      const auto x = grid.coordinates(p);
      const Vec4<double> du = grad(x[0], x[1], x[2]);
      const Mat4<double> h = hess(x[0], x[1], x[2]);
      const double lap = h.trace(), g2 = du.squaredNorm();
      const double e2u = std::exp(2 * u(x[0], x[1], x[2]));
      const Mat4<double> ric = -2 * (h - du * du.transpose()) -
                               (lap + 2 * g2) * Mat4<double>::Identity();
      const double scal = -6 / e2u * (lap + g2);
      const double ric2 = ric.squaredNorm() / (e2u * e2u);
      const double rm = std::sqrt(2 * ric2 - scal * scal / 3);
      err = std::max({err, (mat4(c.ricci, p) - ric).cwiseAbs().maxCoeff(),
                      std::abs(c.scalar.data()(p, 0) - scal),
                      std::abs(c.rm_norm.data()(p, 0) - rm)});
    }
    errs.push_back(err);
  }
  MESSAGE("curvature error " << errs[0] << " " << errs[1]);
  CHECK(errs[1] < 1e-8);
  CHECK(errs[1] < errs[0]);

  const Grid grid = Grid::cube(8);
  const auto [rm0, nj0] = riemann_norm(flat_metric(grid), standard_j(grid));
  CHECK(rm0 == 0.0);
  CHECK(nj0 == 0.0);
  const auto t = perturbed_triple(grid, 1e-2, 6);
  const auto [rm1, nj1] = riemann_norm(t.g, t.j);
  CHECK(rm1 > 0);
  CHECK(std::isfinite(nj1 * nj1 / rm1));
}
