#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace akcy {

struct KrylovReport {
  int iterations = 0;
  double relative_residual = 0;
  bool converged = false;
};

/// Restarted GMRES for a matrix-free square operator `op(x) -> y`.
///
/// `x` holds the initial guess on entry. Convergence is declared when
/// |b - op(x)| <= max(tol |b|, abs_tol). Preconditioning is the caller's job: compose the
/// preconditioner into `op` and `b` (left) or map the result back (right).
template <typename S, typename Op>
KrylovReport gmres(Op &&op, const Eigen::Matrix<S, Eigen::Dynamic, 1> &b,
                   Eigen::Matrix<S, Eigen::Dynamic, 1> &x, S tol, int max_iter,
                   int restart = 40, S abs_tol = S(0)) {
  using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
  KrylovReport report;
  const S bnorm = b.norm();
  if (bnorm == S(0) || bnorm <= abs_tol) {
    x.setZero(b.size());
    report.converged = true;
    return report;
  }
  if (x.size() != b.size()) x.setZero(b.size());

  std::vector<Vec> basis;
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> h(restart + 1, restart);
  Vec cs(restart), sn(restart), g(restart + 1);

  const S target = std::max(tol * bnorm, abs_tol);
  Vec r = b - op(x);
  S rnorm = r.norm();
  report.relative_residual = double(rnorm / bnorm);
  while (report.iterations < max_iter) {
    if (rnorm <= target) break;
    basis.clear();
    basis.push_back(r / rnorm);
    h.setZero();
    g.setZero();
    g(0) = rnorm;
    int j = 0;
    for (; j < restart && report.iterations < max_iter; ++j) {
      ++report.iterations;
      Vec w = op(basis[j]);
      for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i <= j; ++i) {
          const S hij = basis[i].dot(w);
          h(i, j) += hij;
          w -= hij * basis[i];
        }
      h(j + 1, j) = w.norm();
      for (int i = 0; i < j; ++i) {
        const S t = cs(i) * h(i, j) + sn(i) * h(i + 1, j);
        h(i + 1, j) = -sn(i) * h(i, j) + cs(i) * h(i + 1, j);
        h(i, j) = t;
      }
      const S denom = std::hypot(h(j, j), h(j + 1, j));
      cs(j) = denom == S(0) ? S(1) : h(j, j) / denom;
      sn(j) = denom == S(0) ? S(0) : h(j + 1, j) / denom;
      h(j, j) = denom;
      h(j + 1, j) = S(0);
      g(j + 1) = -sn(j) * g(j);
      g(j) = cs(j) * g(j);
      const bool breakdown = w.norm() == S(0);
      if (std::abs(g(j + 1)) <= target || breakdown) {
        ++j;
        break;
      }
      basis.push_back(w / w.norm());
    }
    Vec y = h.topLeftCorner(j, j)
                .template triangularView<Eigen::Upper>()
                .solve(g.head(j));
    for (int i = 0; i < j; ++i) x += y(i) * basis[i];
    r = b - op(x);
    const S new_norm = r.norm();
    const bool stalled = new_norm >= rnorm * S(0.999999) && j == 0;
    rnorm = new_norm;
    report.relative_residual = double(rnorm / bnorm);
    if (stalled) break;
  }
  report.converged = rnorm <= target * S(1.0001);
  return report;
}

} // namespace akcy
