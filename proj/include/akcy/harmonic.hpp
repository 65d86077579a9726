#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>

#include "akcy/potentials.hpp"

namespace akcy {

template <typename S> OneForm<S> constant_one_form(const Grid4<S> &grid, int axis) {
  OneForm<S> e(grid);
  e.data().col(axis).setOnes();
  return e;
}

/// Hodge Laplacian d* d a + d d* a on 1-forms.
template <typename S> OneForm<S> hodge_laplacian(const MetricInfo<S> &g, const OneForm<S> &a) {
  OneForm<S> out = codifferential(g, exterior_d(a));
  out += exterior_d(codifferential(g, a));
  return out;
}

/// Mean of tr(g^-1) / 4 weighted by the volume, the leading coefficient the
/// flat preconditioners are scaled by.
template <typename S> S principal_scale(const MetricInfo<S> &g) {
  S num = 0, den = 0;
  for (Eigen::Index p = 0; p < g.inverse.points(); ++p) {
    num += g.inv(p).trace() * g.vol(p);
    den += g.vol(p);
  }
  return num / (S(4) * den);
}

/// Zero-mean gamma with Delta_H gamma = rhs, for rhs orthogonal to the
/// harmonic 1-forms. The system is squared up by dropping the constant
/// part of the equation; the dropped part vanishes for admissible rhs.
template <typename S>
OneForm<S> solve_hodge_laplacian(const MetricInfo<S> &g, const OneForm<S> &rhs,
                                 const EllipticOptions &opt = {}, KrylovReport *report = nullptr) {
  const OneForm<S> b = clean(rhs);
  const S scale = principal_scale(g);
  auto precondition = [&](const OneForm<S> &y) {
    OneForm<S> x = clean(inverse_flat_laplacian(y));
    x *= S(-1) / scale;
    return x;
  };
  auto op = [&](const DenseVector<S> &v) {
    return as_vector(clean(hodge_laplacian(g, precondition(from_vector(b, v)))));
  };
  DenseVector<S> y = DenseVector<S>::Zero(b.data().size());
  const auto rep = gmres<S>(op, as_vector(b), y, S(opt.tol), opt.max_iter, opt.restart, S(opt.abs_tol));
  if (report) *report = rep;
  if (!rep.converged)
    throw LinearSolveFailure("Hodge Laplacian solve stalled at relative residual " +
                             std::to_string(rep.relative_residual));
  return precondition(from_vector(b, y));
}

/// The g-harmonic 1-forms e_k + d f_k, one per coordinate direction.
template <typename S>
std::array<OneForm<S>, 4> harmonic_one_forms(const MetricInfo<S> &g, const EllipticOptions &opt = {}) {
  std::array<OneForm<S>, 4> out;
  for (int k = 0; k < 4; ++k) {
    const auto e = constant_one_form(g.grid(), k);
    EllipticOptions o = opt;
    o.abs_tol = std::max(opt.abs_tol, 1e-15);
    out[k] = e + exterior_d(solve_metric_poisson(g, codifferential(g, e), o));
  }
  return out;
}

/// The constant 2-forms dx^i ^ dx^j, i < j.
template <typename S> std::vector<TwoForm<S>> constant_two_forms(const Grid4<S> &grid) {
  std::vector<TwoForm<S>> out;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) out.push_back(constant_two_form<S>(grid, {{i, j, S(1)}}));
  return out;
}

/// Flat self-dual basis omega0, dx12 - dx34, dx14 - dx23, each of unit L2 norm.
template <typename S> std::vector<TwoForm<S>> flat_self_dual_basis(const Grid4<S> &grid) {
  std::vector<TwoForm<S>> out{constant_two_form<S>(grid, {{0, 2, S(1)}, {1, 3, S(1)}}),
                              constant_two_form<S>(grid, {{0, 1, S(1)}, {2, 3, S(-1)}}),
                              constant_two_form<S>(grid, {{0, 3, S(1)}, {1, 2, S(-1)}})};
  for (auto &f : out) f *= S(1) / std::sqrt(S(2) * grid.volume());
  return out;
}

/// Integral of a ^ b.
template <typename S> S intersection(const TwoForm<S> &a, const TwoForm<S> &b) {
  return wedge(a, b).data().sum() * a.grid().cell_volume();
}

template <typename S> DenseMatrix<S> l2_gram(const MetricInfo<S> &g, const std::vector<TwoForm<S>> &f) {
  const auto n = Eigen::Index(f.size());
  DenseMatrix<S> m(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a; b < n; ++b) m(a, b) = m(b, a) = l2_inner2(g, f[a], f[b]);
  return m;
}

template <typename S>
std::vector<TwoForm<S>> combine(const std::vector<TwoForm<S>> &f, const DenseMatrix<S> &c) {
  std::vector<TwoForm<S>> out;
  for (Eigen::Index col = 0; col < c.cols(); ++col) {
    TwoForm<S> t(f.front().grid());
    for (std::size_t k = 0; k < f.size(); ++k) t += c(Eigen::Index(k), col) * f[k];
    out.push_back(std::move(t));
  }
  return out;
}

/// Rotates an L2-orthonormal family so its classes best match `targets`
/// (orthogonal Procrustes on the class overlaps).
template <typename S>
std::vector<TwoForm<S>> align_classes(const std::vector<TwoForm<S>> &forms,
                                      const std::vector<TwoForm<S>> &targets) {
  DenseMatrix<S> c(forms.size(), targets.size());
  for (std::size_t a = 0; a < forms.size(); ++a)
    for (std::size_t b = 0; b < targets.size(); ++b)
      c(a, b) = class_vector(forms[a]).dot(class_vector(targets[b]));
  Eigen::JacobiSVD<DenseMatrix<S>> svd(c, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return combine(forms, DenseMatrix<S>(svd.matrixU() * svd.matrixV().transpose()));
}

template <typename S> struct HarmonicBasis {
  Metric<S> metric;
  std::vector<TwoForm<S>> forms;
  DenseVector<S> intersection_spectrum; ///< eigenvalues of the intersection form on harmonic 2-forms
};

/// L2(g)-orthonormal basis of the closed self-dual 2-forms of g. Every
/// constant class is moved to its harmonic representative h + d gamma; the
/// intersection form on those six forms has eigenvalues +-1 and its +1
/// eigenspace is the self-dual part. The basis is rotated to best match the
/// flat self-dual forms.
template <typename S>
HarmonicBasis<S> harmonic_self_dual_basis(const Metric<S> &metric, const EllipticOptions &opt = {},
                                          double eigen_tol = 1e-6) {
  const MetricInfo<S> g(metric);
  std::vector<TwoForm<S>> chi;
  for (const auto &h : constant_two_forms(metric.grid())) {
    OneForm<S> rhs = codifferential(g, h);
    rhs *= S(-1);
    EllipticOptions o = opt;
    o.abs_tol = std::max(opt.abs_tol, 1e-15);
    chi.push_back(h + exterior_d(solve_hodge_laplacian(g, rhs, o)));
  }
  DenseMatrix<S> inter(6, 6);
  for (int a = 0; a < 6; ++a)
    for (int b = a; b < 6; ++b) inter(a, b) = inter(b, a) = intersection(chi[a], chi[b]);
  Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix<S>> es(inter, l2_gram(g, chi));
  std::vector<Eigen::Index> plus;
  for (Eigen::Index k = 0; k < 6; ++k)
    if (std::abs(es.eigenvalues()(k) - S(1)) < S(eigen_tol)) plus.push_back(k);
  if (plus.size() != 3)
    throw DimensionMismatch("found " + std::to_string(plus.size()) +
                            " self-dual harmonic forms, expected 3");
  DenseMatrix<S> v(6, 3);
  for (int c = 0; c < 3; ++c) v.col(c) = es.eigenvectors().col(plus[c]);
  return HarmonicBasis<S>{metric, align_classes(combine(chi, v), flat_self_dual_basis(metric.grid())),
                          es.eigenvalues()};
}

/// {omega / |omega|, chi_1, chi_2}: an L2 orthonormal basis of the self-dual
/// harmonic forms of the metric of omega whose first element is omega itself.
template <typename S>
std::vector<TwoForm<S>> class_basis(const HarmonicBasis<S> &basis, const TwoForm<S> &omega) {
  const MetricInfo<S> g(basis.metric);
  TwoForm<S> unit = omega;
  unit *= S(1) / std::sqrt(l2_inner2(g, omega, omega));
  std::vector<TwoForm<S>> rest;
  for (const auto &f : basis.forms) rest.push_back(f - l2_inner2(g, unit, f) * unit);
  Eigen::SelfAdjointEigenSolver<DenseMatrix<S>> es(l2_gram(g, rest));
  DenseMatrix<S> c(3, 2);
  for (int k = 0; k < 2; ++k) c.col(k) = es.eigenvectors().col(2 - k) / std::sqrt(es.eigenvalues()(2 - k));
  const auto flat = flat_self_dual_basis(omega.grid());
  auto chi = align_classes(combine(rest, c), {flat[1], flat[2]});
  return {unit, chi[0], chi[1]};
}

// ---------------------------------------------------------------------------
// Spectrum of the operator a -> (d+ a, d* a) on 1-forms.

/// M-weighted vector of a 1-form: the L2(g) inner product is x . mass(y).
template <typename S> DenseVector<S> mass(const MetricInfo<S> &g, const OneForm<S> &a) {
  OneForm<S> out(a.grid());
  const S cell = a.grid().cell_volume();
  for (Eigen::Index p = 0; p < a.points(); ++p)
    set_vec4<S>(out, p, g.inv(p) * vec4(a, p) * (g.vol(p) * cell));
  return as_vector(out);
}

/// The normal operator 1/2 d* d + d d*, which equals A*A because the cross
/// term of the self-dual projection integrates to zero.
template <typename S> OneForm<S> normal_operator(const MetricInfo<S> &g, const OneForm<S> &a) {
  OneForm<S> out = codifferential(g, exterior_d(a));
  out *= S(0.5);
  out += exterior_d(codifferential(g, a));
  return out;
}

template <typename S> struct KernelSpectrum {
  std::array<double, 4> kernel{}; ///< singular values on the harmonic 1-forms
  double gap = 0;                 ///< smallest singular value off the harmonic 1-forms
  double residual = 0; ///< relative eigen-residual of the lowest pair before the last update
  int iterations = 0;
  bool converged = false;
};

struct EigenOptions {
  int block = 4;
  int max_iter = 200;
  double tol = 1e-8; ///< relative change of the lowest Rayleigh quotient
  std::uint64_t seed = 1;
};

/// Singular values of (d+, d*) in L2(g): the four on the harmonic 1-forms
/// from their Gram matrix, and the next one by locally optimal block
/// preconditioned iteration on the L2(g)-complement of the harmonic forms,
/// restricted to the band-limited subspace.
template <typename S>
KernelSpectrum<S> kernel_spectrum(const Metric<S> &metric, const EigenOptions &eo = {},
                                  const EllipticOptions &opt = {}) {
  const MetricInfo<S> g(metric);
  const auto &grid = metric.grid();
  KernelSpectrum<S> out;

  // Harmonic part: L2(g)-orthonormalize, then Gram of (d+ h, d* h).
  const auto h = harmonic_one_forms(g, opt);
  DenseMatrix<S> hm(4, 4), ha(4, 4);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      hm(a, b) = l2_inner1(g, h[a], h[b]);
      ha(a, b) = l2_inner2(g, d_plus(g, h[a]), d_plus(g, h[b])) +
                 l2_inner0(g, codifferential(g, h[a]), codifferential(g, h[b]));
    }
  Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix<S>> hs(ha, hm);
  for (int k = 0; k < 4; ++k) out.kernel[k] = std::sqrt(std::max(0.0, double(hs.eigenvalues()(k))));

  // Orthonormal harmonic basis as vectors, for deflation.
  Eigen::SelfAdjointEigenSolver<DenseMatrix<S>> ms(hm);
  const DenseMatrix<S> w = ms.eigenvectors() * ms.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal();
  const Eigen::Index dim = 4 * grid.size();
  DenseMatrix<S> y = DenseMatrix<S>::Zero(dim, 4), my(dim, 4);
  for (int c = 0; c < 4; ++c)
    for (int k = 0; k < 4; ++k) y.col(c) += w(k, c) * as_vector(h[k]);
  const OneForm<S> shape(grid);
  for (int c = 0; c < 4; ++c) my.col(c) = mass(g, from_vector(shape, DenseVector<S>(y.col(c))));

  auto project = [&](const DenseVector<S> &v) {
    DenseVector<S> x = as_vector(band_limit(from_vector(shape, v)));
    x -= y * (my.transpose() * x);
    return x;
  };
  // M K: the normal operator followed by the mass weighting.
  auto apply_k = [&](const DenseVector<S> &v) {
    return mass(g, normal_operator(g, from_vector(shape, v)));
  };
  auto apply_m = [&](const DenseVector<S> &v) { return mass(g, from_vector(shape, v)); };
  const S scale = principal_scale(g);
  auto precondition = [&](const DenseVector<S> &v) {
    OneForm<S> x = inverse_flat_laplacian(from_vector(shape, v));
    x *= S(-1) / scale;
    return project(as_vector(x));
  };

  const int m = eo.block;
  std::mt19937_64 rng(eo.seed);
  std::normal_distribution<double> normal;
  DenseMatrix<S> x(dim, m);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = S(normal(rng));
  for (int c = 0; c < m; ++c) x.col(c) = project(x.col(c));
  DenseMatrix<S> p(dim, 0);

  // Rayleigh-Ritz on span(basis); returns the m lowest Ritz vectors.
  auto rayleigh_ritz = [&](const DenseMatrix<S> &basis, DenseVector<S> &theta, DenseMatrix<S> &coef) {
    const Eigen::Index k = basis.cols();
    DenseMatrix<S> kb(dim, k), mb(dim, k);
    for (Eigen::Index c = 0; c < k; ++c) {
      kb.col(c) = apply_k(basis.col(c));
      mb.col(c) = apply_m(basis.col(c));
    }
    DenseMatrix<S> a = basis.transpose() * kb, b = basis.transpose() * mb;
    a = S(0.5) * (a + a.transpose()).eval();
    b = S(0.5) * (b + b.transpose()).eval();
    // Unit columns, so converged residual directions are not mistaken for dependent ones.
    DenseVector<S> unit(k);
    for (Eigen::Index c = 0; c < k; ++c) unit(c) = b(c, c) > S(0) ? S(1) / std::sqrt(b(c, c)) : S(0);
    a = unit.asDiagonal() * a * unit.asDiagonal();
    b = unit.asDiagonal() * b * unit.asDiagonal();
    // Drop directions that are numerically dependent before the Ritz solve.
    Eigen::SelfAdjointEigenSolver<DenseMatrix<S>> bs(b);
    const S cut = bs.eigenvalues().maxCoeff() * S(1e-12);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index c = 0; c < k; ++c)
      if (bs.eigenvalues()(c) > cut) keep.push_back(c);
    DenseMatrix<S> t(k, Eigen::Index(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c)
      t.col(Eigen::Index(c)) = bs.eigenvectors().col(keep[c]) / std::sqrt(bs.eigenvalues()(keep[c]));
    Eigen::SelfAdjointEigenSolver<DenseMatrix<S>> rs(t.transpose() * a * t);
    theta = rs.eigenvalues().head(m);
    coef = unit.asDiagonal() * t * rs.eigenvectors().leftCols(m);
  };

  DenseVector<S> theta;
  DenseMatrix<S> coef;
  rayleigh_ritz(x, theta, coef);
  x = x * coef;
  S previous = theta(0);
  int steady = 0;
  for (int it = 1; it <= eo.max_iter; ++it) {
    // Residuals K x - theta x as 1-forms, mapped back into the search space.
    DenseMatrix<S> wdir(dim, m);
    S residual = 0;
    for (int c = 0; c < m; ++c) {
      const DenseVector<S> r = apply_k(x.col(c)) - theta(c) * apply_m(x.col(c));
      OneForm<S> raw = from_vector(shape, r);
      for (Eigen::Index q = 0; q < raw.points(); ++q)
        set_vec4<S>(raw, q, mat4(metric, q) * vec4(raw, q) / (g.vol(q) * grid.cell_volume()));
      if (c == 0) {
        // Only the part inside the search space can be reduced.
        const DenseVector<S> rp = project(as_vector(raw));
        residual = std::sqrt(std::max(S(0), rp.dot(apply_m(rp)))) / theta(0);
      }
      wdir.col(c) = precondition(as_vector(raw));
    }
    DenseMatrix<S> basis(dim, x.cols() + wdir.cols() + p.cols());
    basis << x, wdir, p;
    rayleigh_ritz(basis, theta, coef);
    const DenseMatrix<S> xn = basis * coef;
    DenseMatrix<S> cp = coef;
    cp.topRows(m).setZero();
    p = basis * cp;
    x = xn;
    out.iterations = it;
    // A stalled quotient is trusted only when the block spans the cluster
    // around the lowest value; inside a cluster it creeps and stops early,
    // within the cluster width.
    steady = (std::abs(previous - theta(0)) <= S(eo.tol) * theta(0)) ? steady + 1 : 0;
    previous = theta(0);
    out.residual = double(residual);
    if (steady >= 2) {
      out.converged = true;
      break;
    }
  }
  out.gap = std::sqrt(std::max(0.0, double(theta(0))));
  return out;
}

} // namespace akcy
