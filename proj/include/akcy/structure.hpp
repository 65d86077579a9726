#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

#include "akcy/forms.hpp"

namespace akcy {

/// omega0 = dx1^dx3 + dx2^dx4.
template <typename S> TwoForm<S> standard_omega(const Grid4<S> &grid) {
  return constant_two_form<S>(grid, {{0, 2, S(1)}, {1, 3, S(1)}});
}

/// J0 with J_1^3 = J_2^4 = 1 = -J_3^1 = -J_4^2.
template <typename S> Mat4<S> standard_j_matrix() {
  Mat4<S> j = Mat4<S>::Zero();
  j(0, 2) = j(1, 3) = S(1);
  j(2, 0) = j(3, 1) = S(-1);
  return j;
}

template <typename S> ACStructure<S> standard_j(const Grid4<S> &grid) {
  return ACStructure<S>(constant_field<S>(
      grid, ACStructure<S>::signature(),
      standard_j_matrix<S>().template reshaped<Eigen::RowMajor>()));
}

namespace pointwise {

/// g_ij = omega_ik J_j^k, which is the Euclidean metric for (omega0, J0).
template <typename S> Mat4<S> metric(const Mat4<S> &omega, const Mat4<S> &j) {
  return omega * j.transpose();
}

/// Polar part of the endomorphism A with omega(u, v) = h(Au, v), returned in
/// the stored (lower, upper) layout.
template <typename S>
Mat4<S> compatible_j(const Mat4<S> &omega, const Mat4<S> &h) {
  Eigen::SelfAdjointEigenSolver<Mat4<S>> eh(h);
  const Vec4<S> root = eh.eigenvalues().cwiseSqrt();
  const Mat4<S> sq = eh.eigenvectors() * root.asDiagonal() * eh.eigenvectors().transpose();
  const Mat4<S> sq_inv =
      eh.eigenvectors() * root.cwiseInverse().asDiagonal() * eh.eigenvectors().transpose();
  // B = S A S^-1 with A = -h^-1 omega is skew.
  Mat4<S> b = -sq_inv * omega * sq_inv;
  b = S(0.5) * (b - b.transpose()).eval();
  const Mat4<S> nb2 = -(b * b);
  Eigen::SelfAdjointEigenSolver<Mat4<S>> en(S(0.5) * (nb2 + nb2.transpose()));
  const Mat4<S> inv_sqrt = en.eigenvectors() *
                           en.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                           en.eigenvectors().transpose();
  const Mat4<S> action = sq_inv * (b * inv_sqrt) * sq;
  return action.transpose();
}

} // namespace pointwise

/// Metric of a compatible pair.
template <typename S>
Metric<S> metric_from_pair(const TwoForm<S> &omega, const ACStructure<S> &j) {
  Metric<S> g(omega.grid());
  for (Eigen::Index p = 0; p < g.points(); ++p) {
    const Mat4<S> m = pointwise::metric<S>(mat4(omega, p), mat4(j, p));
    const S scale = std::max(S(1), m.cwiseAbs().maxCoeff());
    const S asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > S(1e-8) * scale)
      throw NotCompatible("omega(., J.) is not symmetric at point " +
                          std::to_string(p) + " (deviation " +
                          std::to_string(double(asym)) + ")");
    const Mat4<S> sym = S(0.5) * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Mat4<S>> es(sym, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues()(0) > S(0)))
      throw NotTaming("omega(., J.) has eigenvalue " +
                      std::to_string(double(es.eigenvalues()(0))) + " at point " +
                      std::to_string(p));
    set_mat4<S>(g, p, sym);
  }
  return g;
}

/// Pointwise polar decomposition of the omega/h endomorphism.
template <typename S>
ACStructure<S> compatible_j_from_metric(const TwoForm<S> &omega, const Metric<S> &h) {
  ACStructure<S> j(omega.grid());
  for (Eigen::Index p = 0; p < j.points(); ++p) {
    const Mat4<S> w = mat4(omega, p);
    const S scale = w.cwiseAbs().maxCoeff();
    if (!(scale > S(0)) ||
        std::abs(w.determinant()) < S(1e-12) * scale * scale * scale * scale)
      throw Degenerate("omega is degenerate at point " + std::to_string(p));
    set_mat4<S>(j, p, pointwise::compatible_j<S>(w, mat4(h, p)));
  }
  return j;
}

/// Maximum deviations of the almost-Kahler invariants.
struct CompatibilityReport {
  double j_squared = 0;      ///< max |J^2 + Id|
  double d_omega = 0;        ///< max |d omega|
  double g_symmetry = 0;     ///< max |g - g^T|
  double min_eigenvalue = 0; ///< min eigenvalue of the symmetric part of g
  double j_invariance = 0;   ///< max |omega(J., J.) - omega|
};

template <typename S>
CompatibilityReport check_compatibility(const TwoForm<S> &omega,
                                        const ACStructure<S> &j) {
  CompatibilityReport r;
  r.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (Eigen::Index p = 0; p < omega.points(); ++p) {
    const Mat4<S> w = mat4(omega, p);
    const Mat4<S> jm = mat4(j, p);
    r.j_squared = std::max(r.j_squared,
                           double((jm * jm + Mat4<S>::Identity()).cwiseAbs().maxCoeff()));
    const Mat4<S> g = pointwise::metric<S>(w, jm);
    r.g_symmetry = std::max(r.g_symmetry, double((g - g.transpose()).cwiseAbs().maxCoeff()));
    Eigen::SelfAdjointEigenSolver<Mat4<S>> es(S(0.5) * (g + g.transpose()),
                                              Eigen::EigenvaluesOnly);
    r.min_eigenvalue = std::min(r.min_eigenvalue, double(es.eigenvalues()(0)));
    r.j_invariance = std::max(
        r.j_invariance, double((pointwise::pullback<S>(jm, w) - w).cwiseAbs().maxCoeff()));
  }
  r.d_omega = double(exterior_d(static_cast<const TensorField<S> &>(omega)).max_abs());
  return r;
}

/// A compatible (omega, J, g); construction verifies the invariants.
template <typename S> struct AKTriple {
  TwoForm<S> omega;
  ACStructure<S> j;
  Metric<S> g;

  const Grid4<S> &grid() const { return omega.grid(); }

  /// Builds g from (omega, J) and checks J^2 = -Id, d omega = 0 and
  /// J-invariance at the given tolerances.
  static AKTriple make(TwoForm<S> omega, ACStructure<S> j, double j_tol = 1e-10,
                       double closed_tol = 1e-8) {
    const auto r = check_compatibility(omega, j);
    if (r.j_squared > j_tol)
      throw InvalidStructure("J^2 + Id deviates by " + std::to_string(r.j_squared));
    if (r.j_invariance > j_tol)
      throw NotCompatible("omega(J., J.) - omega deviates by " +
                          std::to_string(r.j_invariance));
    if (r.d_omega > closed_tol)
      throw NotAlmostKahler("d omega deviates by " + std::to_string(r.d_omega));
    Metric<S> g = metric_from_pair(omega, j);
    return AKTriple{std::move(omega), std::move(j), std::move(g)};
  }

  static AKTriple standard(const Grid4<S> &grid) {
    return make(standard_omega(grid), standard_j(grid));
  }
};

// ---------------------------------------------------------------------------
// P and Q on (0,2)-tensors: P T = 1/2 (T - J* T), Q T = 1/2 (T + J* T).

template <typename S>
TensorField<S> apply_p(const ACStructure<S> &j, const TensorField<S> &t) {
  return map_mat4<S>(t, t.variance(), [&, p = Eigen::Index(0)](const Mat4<S> &m) mutable {
    return pointwise::project_p<S>(mat4(j, p++), m);
  });
}

template <typename S>
TensorField<S> apply_q(const ACStructure<S> &j, const TensorField<S> &t) {
  return map_mat4<S>(t, t.variance(), [&, p = Eigen::Index(0)](const Mat4<S> &m) mutable {
    return pointwise::project_q<S>(mat4(j, p++), m);
  });
}

template <typename S> TwoForm<S> apply_p(const ACStructure<S> &j, const TwoForm<S> &t) {
  return TwoForm<S>(apply_p(j, static_cast<const TensorField<S> &>(t)));
}
template <typename S> TwoForm<S> apply_q(const ACStructure<S> &j, const TwoForm<S> &t) {
  return TwoForm<S>(apply_q(j, static_cast<const TensorField<S> &>(t)));
}

/// P and Q bound to a structure J, usable as operators on (0,2)-tensor fields.
template <typename S> struct Projectors {
  ACStructure<S> j;
  TensorField<S> p(const TensorField<S> &t) const { return apply_p(j, t); }
  TensorField<S> q(const TensorField<S> &t) const { return apply_q(j, t); }
  TwoForm<S> p(const TwoForm<S> &t) const { return apply_p(j, t); }
  TwoForm<S> q(const TwoForm<S> &t) const { return apply_q(j, t); }
};

template <typename S> Projectors<S> projectors(const ACStructure<S> &j) {
  return Projectors<S>{j};
}

} // namespace akcy
