#pragma once

#include <string>
#include <vector>

#include "akcy/krylov.hpp"
#include "akcy/structure.hpp"

namespace akcy {

/// Flattened view of a field's components as one vector.
template <typename S> DenseVector<S> as_vector(const TensorField<S> &f) {
  return Eigen::Map<const DenseVector<S>>(f.data().data(), f.data().size());
}

template <Field F> F from_vector(const F &like, const DenseVector<typename F::Scalar> &v) {
  F out = like;
  Eigen::Map<DenseVector<typename F::Scalar>>(out.data().data(), out.data().size()) = v;
  return out;
}

/// Removes the mean and every Nyquist-carrying mode.
template <Field F> F clean(const F &f) { return remove_mean(band_limit(f)); }

/// Density of the 4-form Omega^2.
template <typename S> ScalarField<S> square_density(const TwoForm<S> &omega) {
  return wedge(omega, omega);
}

/// Laplacian of the almost-Kahler pair (Omega, J) through the 4-form identity
/// -Omega ^ d(J d phi) = 1/2 (Delta phi) Omega^2.
template <typename S>
ScalarField<S> laplacian(const TwoForm<S> &omega, const ACStructure<S> &j,
                         const ScalarField<S> &phi) {
  const auto dj = exterior_d(apply_j(j, exterior_d(phi)));
  ScalarField<S> out = wedge(omega, dj);
  out.data().col(0) *= S(-2) / square_density(omega).data().col(0);
  return out;
}

/// Metric form (1/sqrt g) d_i (sqrt g g^ij d_j phi) = -d* d phi.
template <typename S>
ScalarField<S> laplacian_metric(const MetricInfo<S> &g, const ScalarField<S> &phi) {
  auto out = codifferential(g, exterior_d(phi));
  out *= S(-1);
  return out;
}

/// Default iteration controls for the inner elliptic solves.
struct EllipticOptions {
  double tol = 1e-12;
  double abs_tol = 0; ///< absolute floor on the preconditioned residual norm
  int max_iter = 500;
  int restart = 60;
};

/// Zero-mean f with (1/sqrt g) d_i (sqrt g g^ij d_j f) = rhs. The equation
/// is solved in divergence form (multiplied by sqrt g) with the flat
/// Laplacian as right preconditioner.
template <typename S>
ScalarField<S> solve_metric_poisson(const MetricInfo<S> &g, const ScalarField<S> &rhs,
                                    const EllipticOptions &opt = {}, KrylovReport *report = nullptr) {
  ScalarField<S> b = rhs;
  b.data().col(0) *= g.sqrt_det.data().col(0);
  b = clean(b);
  S scale = 0;
  for (Eigen::Index p = 0; p < g.inverse.points(); ++p) scale += g.inv(p).trace() * g.vol(p);
  scale /= S(4 * g.inverse.points());
  auto precondition = [&](const ScalarField<S> &y) {
    auto x = clean(inverse_flat_laplacian(y));
    x *= S(1) / scale;
    return x;
  };
  auto op = [&](const DenseVector<S> &v) {
    auto f = precondition(from_vector(b, v));
    auto out = laplacian_metric(g, f);
    out.data().col(0) *= g.sqrt_det.data().col(0);
    return as_vector(clean(out));
  };
  DenseVector<S> y = DenseVector<S>::Zero(b.data().size());
  const auto rep =
      gmres<S>(op, as_vector(b), y, S(opt.tol), opt.max_iter, opt.restart, S(opt.abs_tol));
  if (report) *report = rep;
  if (!rep.converged)
    throw LinearSolveFailure("metric Poisson solve stalled at relative residual " +
                             std::to_string(rep.relative_residual));
  return precondition(from_vector(b, y));
}

enum class ClassMode { fixed, drifting };

/// Solution of the almost-Kahler potential problem for one s.
template <typename S> struct PotentialResult {
  ScalarField<S> phi;
  TwoForm<S> omega_s;
  KrylovReport krylov;
};

/// Almost-Kahler potential phi_s:
///   (1-2s) omega^omega' + s omega'^2 - (1-s) omega^2 = -1/2 Omega_s ^ d(J d phi_s),
/// Omega_s = (1-s) omega + s omega'. In drifting mode the source has its
/// Omega_s^2-weighted mean removed first, which reproduces the normalized
/// potentials used when the class of omega' moves.
template <typename S>
PotentialResult<S> solve_potential(const TwoForm<S> &omega, const TwoForm<S> &omega_prime,
                                   const ACStructure<S> &j, S s, ClassMode mode = ClassMode::fixed,
                                   const EllipticOptions &opt = {}, double consistency_tol = 1e-8) {
  TwoForm<S> omega_s = omega;
  omega_s *= S(1) - s;
  omega_s += s * omega_prime;
  const auto vol_s = square_density(omega_s);
  if ((vol_s.data().col(0) <= S(0)).any())
    throw NonPositiveDensity("Omega_s^2 is not positive");

  ScalarField<S> src = wedge(omega, omega_prime);
  src *= S(1) - S(2) * s;
  src += s * wedge(omega_prime, omega_prime);
  src -= (S(1) - s) * wedge(omega, omega);

  const S total = src.data().sum();
  if (mode == ClassMode::fixed) {
    const S size = src.data().abs().sum();
    if (std::abs(total) > S(consistency_tol) * std::max(size, S(1e-300)) && size > S(0))
      throw InconsistentRHS("source integrates to " + std::to_string(double(total)) +
                            " relative " + std::to_string(double(total / size)));
  } else {
    src.data().col(0) -= (total / vol_s.data().sum()) * vol_s.data().col(0);
  }

  PotentialResult<S> result{ScalarField<S>(omega.grid()), omega_s, {}};
  const auto b = clean(src);
  if (b.max_abs() == S(0)) {
    result.krylov.converged = true;
    return result;
  }
  const S scale = vol_s.data().mean() / S(4);
  auto precondition = [&](const ScalarField<S> &y) {
    auto x = clean(inverse_flat_laplacian(y));
    x *= S(1) / scale;
    return x;
  };
  auto op = [&](const DenseVector<S> &v) {
    const auto phi = precondition(from_vector(b, v));
    auto out = wedge(omega_s, exterior_d(apply_j(j, exterior_d(phi))));
    out *= S(-0.5);
    return as_vector(clean(out));
  };
  DenseVector<S> y = DenseVector<S>::Zero(b.data().size());
  result.krylov =
      gmres<S>(op, as_vector(b), y, S(opt.tol), opt.max_iter, opt.restart, S(opt.abs_tol));
  if (!result.krylov.converged)
    throw LinearSolveFailure("potential solve stalled at relative residual " +
                             std::to_string(result.krylov.relative_residual));
  result.phi = precondition(from_vector(b, y));
  return result;
}

template <typename S>
ScalarField<S> potentials(const TwoForm<S> &omega, const TwoForm<S> &omega_prime,
                          const ACStructure<S> &j, S s, ClassMode mode = ClassMode::fixed) {
  return solve_potential(omega, omega_prime, j, s, mode).phi;
}

/// Cohomology class of a closed 2-form on the torus, given by its six mean
/// coefficients (i < j).
template <typename S> Eigen::Matrix<S, 6, 1> class_vector(const TensorField<S> &f) {
  Eigen::Matrix<S, 6, 1> v;
  int c = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) v(c++) = f.data().col(4 * i + j).mean();
  return v;
}

/// Coefficients of [target] in the classes of `basis`; throws
/// InconsistentRHS when the class is not in their span.
template <typename S>
DenseVector<S> class_coefficients(const std::vector<TwoForm<S>> &basis, const TensorField<S> &target,
                                  double tol = 1e-8) {
  DenseMatrix<S> c(6, basis.size());
  for (std::size_t k = 0; k < basis.size(); ++k) c.col(k) = class_vector(basis[k]);
  const Eigen::Matrix<S, 6, 1> m = class_vector(target);
  DenseVector<S> s = c.colPivHouseholderQr().solve(m);
  const S miss = (c * s - m).norm();
  if (miss > S(tol) * std::max(S(1), m.norm()))
    throw InconsistentRHS("class is outside the span of the supplied harmonic forms (miss " +
                          std::to_string(double(miss)) + ")");
  return s;
}

template <typename S> struct Decomposition {
  ScalarField<S> phi;
  OneForm<S> a;
  TwoForm<S> class_term;        ///< sum s_i chi_i (zero in fixed-class mode)
  DenseVector<S> s;             ///< class coefficients (empty in fixed-class mode)
  TwoForm<S> omega_s;
};

/// omega' = omega + class_term - 1/2 d(J d phi_s) + d a_s with d*_s a_s = 0
/// and a_s orthogonal to the constant 1-forms. `class_basis` (used only in
/// drifting mode) lists closed forms whose classes span [omega'] - [omega].
template <typename S>
Decomposition<S> decompose(const TwoForm<S> &omega, const TwoForm<S> &omega_prime,
                           const ACStructure<S> &j, S s, ClassMode mode = ClassMode::fixed,
                           const std::vector<TwoForm<S>> &class_basis = {},
                           const EllipticOptions &opt = {}) {
  const auto pot = solve_potential(omega, omega_prime, j, s, mode, opt);
  Decomposition<S> d{pot.phi, OneForm<S>(omega.grid()), TwoForm<S>(omega.grid()), {}, pot.omega_s};
  TwoForm<S> e = omega_prime;
  e -= omega;
  if (mode == ClassMode::drifting) {
    d.s = class_coefficients(class_basis, e);
    for (std::size_t k = 0; k < class_basis.size(); ++k) d.class_term += d.s(k) * class_basis[k];
    e -= d.class_term;
  }
  auto ddc = exterior_d(apply_j(j, exterior_d(pot.phi)));
  ddc *= S(0.5);
  e += ddc;

  // Flat Hodge inverse: a0 = Delta_H^-1 d*_0 e, Delta_H = -sum d_k^2.
  OneForm<S> div(omega.grid());
  for (int i = 0; i < 4; ++i) {
    const auto de = partial_derivative(static_cast<const TensorField<S> &>(e), i);
    for (int jj = 0; jj < 4; ++jj) div.data().col(jj) -= de.data().col(4 * i + jj);
  }
  OneForm<S> a0 = clean(inverse_flat_laplacian(div));
  a0 *= S(-1);

  const MetricInfo<S> g_s(metric_from_pair(pot.omega_s, j));
  // The gauge source vanishes up to roundoff when a0 is already coclosed.
  EllipticOptions gauge = opt;
  gauge.abs_tol = std::max(opt.abs_tol, 1e-13 * double(as_vector(e).norm()));
  const auto f = solve_metric_poisson(g_s, codifferential(g_s, a0), gauge);
  d.a = a0 + exterior_d(f);
  return d;
}

/// zeta_ij = 1/2 (d_i J_j^k - d_j J_i^k) d_k phi, the source of P d a_s.
template <typename S> TwoForm<S> nijenhuis_source(const ACStructure<S> &j, const ScalarField<S> &phi) {
  const auto dphi = exterior_d(phi);
  std::array<TensorField<S>, 4> dj;
  for (int a = 0; a < 4; ++a) dj[a] = partial_derivative(static_cast<const TensorField<S> &>(j), a);
  TwoForm<S> z(j.grid());
  for (Eigen::Index p = 0; p < z.points(); ++p) {
    const Vec4<S> v = vec4(dphi, p);
    Mat4<S> m;
    for (int i = 0; i < 4; ++i) m.row(i) = (mat4(dj[i], p) * v).transpose();
    // m(i, jj) = d_i J_jj^k d_k phi
    set_mat4<S>(z, p, S(0.5) * (m - m.transpose()));
  }
  return z;
}

} // namespace akcy
