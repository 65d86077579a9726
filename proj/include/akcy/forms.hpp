#pragma once

#include <array>
#include <cmath>

#include "akcy/spectral.hpp"

namespace akcy {

/// Orientation of the torus relative to dx1^dx2^dx3^dx4.
///
/// The reference volume is the symplectic one, mu = omega0^2 / 2 with
/// omega0 = dx1^dx3 + dx2^dx4, i.e. mu = dx1^dx3^dx2^dx4 = -dx1^dx2^dx3^dx4.
/// Every 4-form "density" in this library is a coefficient against mu.
inline constexpr int orientation_sign = -1;

/// Levi-Civita symbol relative to mu.
inline int levi_civita(int i, int j, int k, int l) {
  const std::array<int, 4> p{i, j, k, l};
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b)
      if (p[a] == p[b]) return 0;
  int inversions = 0;
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b)
      if (p[a] > p[b]) ++inversions;
  return orientation_sign * ((inversions % 2) ? -1 : 1);
}

namespace pointwise {

/// Density of alpha ^ beta against mu for 2-forms given as 4x4 matrices.
template <typename S> S wedge(const Mat4<S> &a, const Mat4<S> &b) {
  const S w = a(0, 1) * b(2, 3) - a(0, 2) * b(1, 3) + a(0, 3) * b(1, 2) +
              a(1, 2) * b(0, 3) - a(1, 3) * b(0, 2) + a(2, 3) * b(0, 1);
  return S(orientation_sign) * w;
}

/// Hodge star of a 2-form given the inverse metric and sqrt(det g).
template <typename S>
Mat4<S> hodge(const Mat4<S> &a, const Mat4<S> &ginv, S sqrt_det) {
  const Mat4<S> up = ginv * a * ginv;
  Mat4<S> out = Mat4<S>::Zero();
  for (int k = 0; k < 4; ++k)
    for (int l = 0; l < 4; ++l) {
      if (k == l) continue;
      S acc = 0;
      for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) acc += up(i, j) * S(levi_civita(i, j, k, l));
      out(k, l) = sqrt_det * acc;
    }
  return out;
}

/// g-inner product of 2-forms, <a,b> = 1/2 a_ij b^ij.
template <typename S>
S inner2(const Mat4<S> &a, const Mat4<S> &b, const Mat4<S> &ginv) {
  return S(0.5) * (a.cwiseProduct(ginv * b * ginv)).sum();
}

/// (J* a)_kl = J_k^i J_l^j a_ij; J stored as J(i,j) = J_i^j.
template <typename S> Mat4<S> pullback(const Mat4<S> &j, const Mat4<S> &a) {
  return j * a * j.transpose();
}

template <typename S> Mat4<S> project_p(const Mat4<S> &j, const Mat4<S> &a) {
  return S(0.5) * (a - pullback(j, a));
}

template <typename S> Mat4<S> project_q(const Mat4<S> &j, const Mat4<S> &a) {
  return S(0.5) * (a + pullback(j, a));
}

} // namespace pointwise

/// Inverse metric and volume factor, computed once and reused by operators
/// that are applied many times against the same metric.
template <typename S> struct MetricInfo {
  Metric<S> metric;
  TensorField<S> inverse;
  ScalarField<S> sqrt_det;

  explicit MetricInfo(const Metric<S> &g)
      : metric(g), inverse(g.grid(), {Slot::upper, Slot::upper}),
        sqrt_det(g.grid()) {
    for (Eigen::Index p = 0; p < g.points(); ++p) {
      const Mat4<S> m = mat4(g, p);
      const S det = m.determinant();
      if (!(det > S(0)))
        throw NotTaming("metric determinant is not positive at point " +
                        std::to_string(p));
      set_mat4<S>(inverse, p, m.inverse());
      sqrt_det.data()(p, 0) = std::sqrt(det);
    }
  }

  const Grid4<S> &grid() const { return metric.grid(); }
  Mat4<S> inv(Eigen::Index p) const { return mat4(inverse, p); }
  S vol(Eigen::Index p) const { return sqrt_det.data()(p, 0); }
};

template <typename S> Metric<S> flat_metric(const Grid4<S> &grid) {
  return Metric<S>(constant_field<S>(grid, Metric<S>::signature(),
                                     Mat4<S>::Identity().template reshaped<Eigen::RowMajor>()));
}

// ---------------------------------------------------------------------------
// Algebra on 2-forms.

/// Density of a ^ b against mu.
template <typename S>
ScalarField<S> wedge(const TensorField<S> &a, const TensorField<S> &b) {
  ScalarField<S> out(a.grid());
  for (Eigen::Index p = 0; p < a.points(); ++p)
    out.data()(p, 0) = pointwise::wedge<S>(mat4(a, p), mat4(b, p));
  return out;
}

template <typename S>
TwoForm<S> hodge_star2(const MetricInfo<S> &g, const TwoForm<S> &a) {
  TwoForm<S> out(a.grid());
  for (Eigen::Index p = 0; p < a.points(); ++p)
    set_mat4<S>(out, p, pointwise::hodge<S>(mat4(a, p), g.inv(p), g.vol(p)));
  return out;
}

template <typename S>
TwoForm<S> hodge_star2(const Metric<S> &g, const TwoForm<S> &a) {
  return hodge_star2(MetricInfo<S>(g), a);
}

/// 1/2 (1 + *) a.
template <typename S>
TwoForm<S> self_dual_part(const MetricInfo<S> &g, const TwoForm<S> &a) {
  TwoForm<S> out = hodge_star2(g, a);
  out += a;
  out *= S(0.5);
  return out;
}

/// Pointwise g-inner product of two 2-forms.
template <typename S>
ScalarField<S> inner2(const MetricInfo<S> &g, const TensorField<S> &a,
                      const TensorField<S> &b) {
  ScalarField<S> out(a.grid());
  for (Eigen::Index p = 0; p < a.points(); ++p)
    out.data()(p, 0) = pointwise::inner2<S>(mat4(a, p), mat4(b, p), g.inv(p));
  return out;
}

/// L2(g) inner product of two 2-forms.
template <typename S>
S l2_inner2(const MetricInfo<S> &g, const TensorField<S> &a,
            const TensorField<S> &b) {
  S acc = 0;
  for (Eigen::Index p = 0; p < a.points(); ++p)
    acc += pointwise::inner2<S>(mat4(a, p), mat4(b, p), g.inv(p)) * g.vol(p);
  return acc * a.grid().cell_volume();
}

/// L2(g) inner product of scalars.
template <typename S>
S l2_inner0(const MetricInfo<S> &g, const ScalarField<S> &a,
            const ScalarField<S> &b) {
  return (a.data().col(0) * b.data().col(0) * g.sqrt_det.data().col(0)).sum() *
         a.grid().cell_volume();
}

/// L2(g) inner product of 1-forms.
template <typename S>
S l2_inner1(const MetricInfo<S> &g, const OneForm<S> &a, const OneForm<S> &b) {
  S acc = 0;
  for (Eigen::Index p = 0; p < a.points(); ++p)
    acc += vec4(a, p).dot(g.inv(p) * vec4(b, p)) * g.vol(p);
  return acc * a.grid().cell_volume();
}

/// Action of J on 1-forms, (J a)_i = J_i^j a_j.
template <typename S>
OneForm<S> apply_j(const ACStructure<S> &j, const OneForm<S> &a) {
  OneForm<S> out(a.grid());
  for (Eigen::Index p = 0; p < a.points(); ++p)
    set_vec4<S>(out, p, mat4(j, p) * vec4(a, p));
  return out;
}

// ---------------------------------------------------------------------------
// Exterior derivative and codifferential on antisymmetric tensors.

namespace detail {

inline int digit(std::ptrdiff_t c, int slot, int rank) {
  for (int s = rank - 1; s > slot; --s) c /= 4;
  return int(c % 4);
}

inline std::ptrdiff_t flat_index(const int *idx, int rank) {
  std::ptrdiff_t c = 0;
  for (int s = 0; s < rank; ++s) c = 4 * c + idx[s];
  return c;
}

} // namespace detail

/// d of a k-form stored as a fully antisymmetric rank-k tensor (k <= 3).
/// (d a)_{i0..ik} = sum_m (-1)^m d_{i_m} a_{i0..^i_m..ik}.
template <typename S> TensorField<S> exterior_d(const TensorField<S> &a) {
  const int k = a.rank();
  if (k > 3) throw ShapeMismatch("exterior_d needs a k-form with k <= 3");
  const auto da = gradient_fields(a);
  TensorField<S> out(a.grid(), Variance(k + 1, Slot::lower));
  const std::ptrdiff_t comps = pow4(k + 1);
  for (std::ptrdiff_t c = 0; c < comps; ++c) {
    int idx[4];
    for (int s = 0; s <= k; ++s) idx[s] = detail::digit(c, s, k + 1);
    auto col = out.data().col(c);
    for (int m = 0; m <= k; ++m) {
      int rest[3];
      for (int s = 0, r = 0; s <= k; ++s)
        if (s != m) rest[r++] = idx[s];
      const std::ptrdiff_t src = detail::flat_index(rest, k);
      if (m % 2 == 0) col += da[idx[m]].data().col(src);
      else col -= da[idx[m]].data().col(src);
    }
  }
  return out;
}

template <typename S> OneForm<S> exterior_d(const ScalarField<S> &f) {
  return OneForm<S>(exterior_d(static_cast<const TensorField<S> &>(f)));
}
template <typename S> TwoForm<S> exterior_d(const OneForm<S> &a) {
  return TwoForm<S>(exterior_d(static_cast<const TensorField<S> &>(a)));
}

namespace detail {

/// Applies `m` to every slot of a rank-k tensor at each point (k <= 3).
template <typename S>
TensorField<S> transform_all_slots(const TensorField<S> &t,
                                   const TensorField<S> &m, Variance variance) {
  const int k = t.rank();
  TensorField<S> out(t.grid(), std::move(variance));
  for (Eigen::Index p = 0; p < t.points(); ++p) {
    const Mat4<S> a = mat4(m, p);
    const S *in = t.point(p);
    S *res = out.point(p);
    if (k == 0) {
      res[0] = in[0];
    } else if (k == 1) {
      Eigen::Map<Vec4<S>> dst(res);
      dst = a * Eigen::Map<const Vec4<S>>(in);
    } else if (k == 2) {
      const Mat4<S> x = Eigen::Map<const Eigen::Matrix<S, 4, 4, Eigen::RowMajor>>(in);
      Eigen::Map<Eigen::Matrix<S, 4, 4, Eigen::RowMajor>> dst(res);
      dst = a * x * a.transpose();
    } else {
      S tmp[64];
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
          for (int l = 0; l < 4; ++l) {
            S acc = 0;
            for (int q = 0; q < 4; ++q) acc += a(l, q) * in[16 * i + 4 * j + q];
            tmp[16 * i + 4 * j + l] = acc;
          }
      S tmp2[64];
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
          for (int l = 0; l < 4; ++l) {
            S acc = 0;
            for (int q = 0; q < 4; ++q) acc += a(j, q) * tmp[16 * i + 4 * q + l];
            tmp2[16 * i + 4 * j + l] = acc;
          }
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
          for (int l = 0; l < 4; ++l) {
            S acc = 0;
            for (int q = 0; q < 4; ++q) acc += a(i, q) * tmp2[16 * q + 4 * j + l];
            res[16 * i + 4 * j + l] = acc;
          }
    }
  }
  return out;
}

} // namespace detail

/// Formal L2(g) adjoint of d on k-forms, k in 1..3:
/// (d* a)^{J} = -(1/sqrt g) d_i (sqrt g a^{iJ}).
template <typename S>
TensorField<S> codifferential(const MetricInfo<S> &g, const TensorField<S> &a) {
  const int k = a.rank();
  if (k < 1 || k > 3) throw ShapeMismatch("codifferential needs 1 <= k <= 3");
  TensorField<S> up = detail::transform_all_slots(a, g.inverse, Variance(k, Slot::upper));
  up.data().colwise() *= g.sqrt_det.data().col(0);
  const std::ptrdiff_t rest = pow4(k - 1);
  TensorField<S> div(a.grid(), Variance(k - 1, Slot::upper));
  for (int i = 0; i < 4; ++i) {
    TensorField<S> slice(a.grid(), Variance(k - 1, Slot::upper));
    slice.data() = up.data().middleCols(i * rest, rest);
    div.data() += partial_derivative(slice, i).data();
  }
  div.data().colwise() /= g.sqrt_det.data().col(0);
  div *= S(-1);
  if (k == 1) return div;
  return detail::transform_all_slots(div, g.metric, Variance(k - 1, Slot::lower));
}

template <typename S>
ScalarField<S> codifferential(const MetricInfo<S> &g, const OneForm<S> &a) {
  return ScalarField<S>(codifferential(g, static_cast<const TensorField<S> &>(a)));
}
template <typename S>
OneForm<S> codifferential(const MetricInfo<S> &g, const TwoForm<S> &a) {
  return OneForm<S>(codifferential(g, static_cast<const TensorField<S> &>(a)));
}

/// d+ a = 1/2 (1 + *) d a.
template <typename S>
TwoForm<S> d_plus(const MetricInfo<S> &g, const OneForm<S> &a) {
  return self_dual_part(g, exterior_d(a));
}

template <typename S> TwoForm<S> d_plus(const Metric<S> &g, const OneForm<S> &a) {
  return d_plus(MetricInfo<S>(g), a);
}

/// Constant 2-form with the given coordinate coefficients (i < j pairs).
template <typename S>
TwoForm<S> constant_two_form(const Grid4<S> &grid,
                             std::initializer_list<std::tuple<int, int, S>> terms) {
  Mat4<S> m = Mat4<S>::Zero();
  for (const auto &[i, j, c] : terms) {
    m(i, j) += c;
    m(j, i) -= c;
  }
  return TwoForm<S>(constant_field<S>(grid, TwoForm<S>::signature(),
                                      m.template reshaped<Eigen::RowMajor>()));
}

/// Constant 2-form from an antisymmetric matrix.
template <typename S>
TwoForm<S> constant_two_form(const Grid4<S> &grid, const Mat4<S> &m) {
  return TwoForm<S>(constant_field<S>(grid, TwoForm<S>::signature(),
                                      m.template reshaped<Eigen::RowMajor>()));
}

} // namespace akcy
