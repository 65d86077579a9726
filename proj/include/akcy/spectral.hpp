#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

#include "akcy/errors.hpp"
#include "akcy/tensor_field.hpp"

namespace akcy {

template <typename S>
using DenseMatrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S> using DenseVector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

namespace spectral {

/// Fourier differentiation matrix on n equispaced points of a period-L
/// circle. The Nyquist mode is differentiated to zero, which keeps the
/// matrix real and skew-symmetric.
template <typename S> DenseMatrix<S> derivative_matrix(int n, S period) {
  DenseMatrix<S> d = DenseMatrix<S>::Zero(n, n);
  const S h = S(2) * std::numbers::pi_v<S> / S(n);
  const S scale = S(2) * std::numbers::pi_v<S> / period;
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) {
      if (j == l) continue;
      const int diff = j - l;
      const S sign = (diff % 2 == 0) ? S(1) : S(-1);
      d(j, l) = scale * S(0.5) * sign / std::tan(S(diff) * h / S(2));
    }
  return d;
}

/// Orthonormal real Fourier basis as columns:
/// [constant, cos 1, sin 1, cos 2, sin 2, ..., Nyquist].
template <typename S> DenseMatrix<S> fourier_basis(int n) {
  DenseMatrix<S> v(n, n);
  const S two_pi = S(2) * std::numbers::pi_v<S>;
  const S a0 = S(1) / std::sqrt(S(n));
  const S a = std::sqrt(S(2) / S(n));
  for (int j = 0; j < n; ++j) {
    v(j, 0) = a0;
    for (int m = 1; m < n / 2; ++m) {
      v(j, 2 * m - 1) = a * std::cos(two_pi * S(m * j) / S(n));
      v(j, 2 * m) = a * std::sin(two_pi * S(m * j) / S(n));
    }
    v(j, n - 1) = (j % 2 == 0 ? a0 : -a0);
  }
  return v;
}

/// Wavenumber magnitude |m| of basis column c of fourier_basis(n).
inline int basis_mode(int n, int c) {
  if (c == 0) return 0;
  if (c == n - 1) return n / 2;
  return (c + 1) / 2;
}

/// Eigenvalues of d^2/dx^2 (true symbol, Nyquist included) per basis column.
template <typename S> DenseVector<S> second_derivative_symbol(int n, S period) {
  DenseVector<S> lam(n);
  const S k0 = S(2) * std::numbers::pi_v<S> / period;
  for (int c = 0; c < n; ++c) {
    const S k = k0 * S(basis_mode(n, c));
    lam(c) = -k * k;
  }
  return lam;
}

/// Projector that removes the Nyquist mode on one axis.
template <typename S> DenseMatrix<S> band_limit_matrix(int n) {
  DenseVector<S> v(n);
  for (int j = 0; j < n; ++j) v(j) = (j % 2 == 0 ? S(1) : S(-1));
  return DenseMatrix<S>::Identity(n, n) - v * v.transpose() / S(n);
}

/// out = op applied along `axis` to every component of a point-major array.
template <typename S>
void apply_along(const typename TensorField<S>::Array &in,
                 typename TensorField<S>::Array &out, const Grid4<S> &grid,
                 int axis, const DenseMatrix<S> &op) {
  using Index = Eigen::Index;
  const Index comps = in.cols();
  const Index nk = grid.n(axis);
  const Index inner = grid.inner(axis) * comps;
  const Index outer = grid.outer(axis);
  out.resize(in.rows(), in.cols());
  if (inner >= 8) {
    using CMap = Eigen::Map<const DenseMatrix<S>>;
    using MMap = Eigen::Map<DenseMatrix<S>>;
    for (Index o = 0; o < outer; ++o) {
      CMap a(in.data() + o * nk * inner, inner, nk);
      MMap b(out.data() + o * nk * inner, inner, nk);
      b.noalias() = a * op.transpose();
    }
  } else {
    using RowMat =
        Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    DenseMatrix<S> k = DenseMatrix<S>::Zero(nk * inner, nk * inner);
    for (Index i = 0; i < nk; ++i)
      for (Index j = 0; j < nk; ++j)
        for (Index r = 0; r < inner; ++r) k(i * inner + r, j * inner + r) = op(i, j);
    Eigen::Map<const RowMat> a(in.data(), outer, nk * inner);
    Eigen::Map<RowMat> b(out.data(), outer, nk * inner);
    b.noalias() = a * k.transpose();
  }
}

/// Applies a per-axis operator on every axis in turn.
template <typename S, typename OpForAxis>
typename TensorField<S>::Array
apply_all_axes(const typename TensorField<S>::Array &in, const Grid4<S> &grid,
               OpForAxis &&op_for_axis) {
  typename TensorField<S>::Array a = in, b;
  for (int k = 0; k < 4; ++k) {
    apply_along<S>(a, b, grid, k, op_for_axis(k));
    a.swap(b);
  }
  return a;
}

/// Coefficients in the tensor-product real Fourier basis (orthonormal).
template <typename S>
typename TensorField<S>::Array to_modes(const typename TensorField<S>::Array &in,
                                        const Grid4<S> &grid) {
  return apply_all_axes<S>(in, grid, [&](int k) -> DenseMatrix<S> {
    return fourier_basis<S>(grid.n(k)).transpose();
  });
}

template <typename S>
typename TensorField<S>::Array
from_modes(const typename TensorField<S>::Array &in, const Grid4<S> &grid) {
  return apply_all_axes<S>(in, grid, [&](int k) -> DenseMatrix<S> {
    return fourier_basis<S>(grid.n(k));
  });
}

/// Flat Laplacian symbol sum_k -(2 pi m_k / L_k)^2 at every mode point.
template <typename S> DenseVector<S> laplacian_symbol(const Grid4<S> &grid) {
  std::array<DenseVector<S>, 4> lam;
  for (int k = 0; k < 4; ++k)
    lam[k] = second_derivative_symbol<S>(grid.n(k), grid.period(k));
  DenseVector<S> out(grid.size());
  for (Eigen::Index p = 0; p < grid.size(); ++p) {
    const auto m = grid.multi_index(p);
    out(p) = lam[0](m[0]) + lam[1](m[1]) + lam[2](m[2]) + lam[3](m[3]);
  }
  return out;
}

} // namespace spectral

// ---------------------------------------------------------------------------
// Field-level operations.

/// Spectral derivative of every component along `axis` (0-based).
/// The value at the first grid point is removed before differentiating, so a
/// constant field maps to exactly zero.
template <Field F> F partial_derivative(const F &f, int axis) {
  using S = typename F::Scalar;
  F out = f;
  typename TensorField<S>::Array shifted = f.data();
  if (shifted.rows() > 0) shifted.rowwise() -= f.data().row(0).eval();
  spectral::apply_along<S>(
      shifted, out.data(), f.grid(), axis,
      spectral::derivative_matrix<S>(f.grid().n(axis), f.grid().period(axis)));
  return out;
}

/// All four partial derivatives.
template <Field F> std::array<F, 4> gradient_fields(const F &f) {
  return {partial_derivative(f, 0), partial_derivative(f, 1),
          partial_derivative(f, 2), partial_derivative(f, 3)};
}

/// Removes every Fourier mode that is Nyquist on some axis.
template <Field F> F band_limit(const F &f) {
  using S = typename F::Scalar;
  F out = f;
  out.data() = spectral::apply_all_axes<S>(f.data(), f.grid(), [&](int k) {
    return spectral::band_limit_matrix<S>(f.grid().n(k));
  });
  return out;
}

/// Per-component grid mean.
template <typename S>
Eigen::Matrix<S, 1, Eigen::Dynamic> mean(const TensorField<S> &f) {
  return f.data().colwise().mean().matrix();
}

/// Subtracts the per-component grid mean.
template <Field F> F remove_mean(F f) {
  f.data().rowwise() -= f.data().colwise().mean();
  return f;
}

/// Componentwise flat Laplacian sum_k d^2/dx_k^2 (true symbol).
template <Field F> F flat_laplacian(const F &f) {
  using S = typename F::Scalar;
  const auto sym = spectral::laplacian_symbol<S>(f.grid());
  F out = f;
  auto modes = spectral::to_modes<S>(f.data(), f.grid());
  modes.colwise() *= sym.array();
  out.data() = spectral::from_modes<S>(modes, f.grid());
  return out;
}

/// Componentwise zero-mean inverse of the flat Laplacian; the mean of the
/// input is ignored.
template <Field F> F inverse_flat_laplacian(const F &f) {
  using S = typename F::Scalar;
  auto sym = spectral::laplacian_symbol<S>(f.grid());
  DenseVector<S> inv(sym.size());
  for (Eigen::Index p = 0; p < sym.size(); ++p)
    inv(p) = (p == 0) ? S(0) : S(1) / sym(p);
  F out = f;
  auto modes = spectral::to_modes<S>(f.data(), f.grid());
  modes.colwise() *= inv.array();
  out.data() = spectral::from_modes<S>(modes, f.grid());
  return out;
}

/// Zero-mean u with flat_laplacian(u) = rhs.
///
/// Throws NonZeroMean when some component's mean exceeds
/// `rel_tol` times its root-mean-square.
template <Field F>
F solve_flat_poisson(const F &rhs, typename F::Scalar rel_tol = 1e-10) {
  using S = typename F::Scalar;
  if (!rhs.all_finite()) throw NonFiniteField("poisson right-hand side");
  for (Eigen::Index c = 0; c < rhs.components(); ++c) {
    const S m = rhs.data().col(c).mean();
    const S rms = std::sqrt(rhs.data().col(c).square().mean());
    if (std::abs(m) > rel_tol * rms && std::abs(m) > S(0))
      throw NonZeroMean("component " + std::to_string(c) + " has mean " +
                        std::to_string(double(m)));
  }
  return inverse_flat_laplacian(rhs);
}

/// Sum of f * density * cell volume; the density must be positive.
template <typename S>
S integrate(const ScalarField<S> &f, const ScalarField<S> &density) {
  if (!f.grid().operator==(density.grid()))
    throw ShapeMismatch("integrand and density live on different grids");
  if ((density.data().col(0) <= S(0)).any())
    throw NonPositiveDensity("4-form density is not positive everywhere (min " +
                             std::to_string(double(density.data().minCoeff())) +
                             ")");
  return (f.data().col(0) * density.data().col(0)).sum() *
         f.grid().cell_volume();
}

/// Sum of f * cell volume (coordinate density dx1..dx4).
template <typename S> S integrate_flat(const ScalarField<S> &f) {
  return f.data().col(0).sum() * f.grid().cell_volume();
}

template <typename S> S oscillation(const ScalarField<S> &f) {
  return f.data().maxCoeff() - f.data().minCoeff();
}

} // namespace akcy
