#pragma once

#include <array>
#include <cmath>

#include "akcy/structure.hpp"

namespace akcy {

/// Three-index component block, T(a, b, c) stored at 16a + 4b + c.
template <typename S> using Tensor3 = Eigen::Matrix<S, 64, 1>;

inline constexpr int idx3(int a, int b, int c) { return 16 * a + 4 * b + c; }

/// First-order data of (g, J) at a point.
template <typename S> struct PointJet {
  Mat4<S> g, ginv, j;
  std::array<Mat4<S>, 4> dg, dj; ///< dg[a](i,j) = d_a g_ij, dj[a](i,j) = d_a J_i^j
};

/// Spectral first derivatives of the metric and of J, shared by the
/// connection-level diagnostics.
template <typename S> struct GeometryJet {
  Metric<S> g;
  ACStructure<S> j;
  TensorField<S> ginv;
  std::array<TensorField<S>, 4> dg, dj;

  GeometryJet(const Metric<S> &metric, const ACStructure<S> &structure)
      : g(metric), j(structure), ginv(metric.grid(), {Slot::upper, Slot::upper}) {
    for (Eigen::Index p = 0; p < g.points(); ++p) set_mat4<S>(ginv, p, mat4(g, p).inverse());
    for (int a = 0; a < 4; ++a) {
      dg[a] = partial_derivative(static_cast<const TensorField<S> &>(g), a);
      dj[a] = partial_derivative(static_cast<const TensorField<S> &>(j), a);
    }
  }

  PointJet<S> at(Eigen::Index p) const {
    PointJet<S> q;
    q.g = mat4(g, p);
    q.ginv = mat4(ginv, p);
    q.j = mat4(j, p);
    for (int a = 0; a < 4; ++a) {
      q.dg[a] = mat4(dg[a], p);
      q.dj[a] = mat4(dj[a], p);
    }
    return q;
  }

  const Grid4<S> &grid() const { return g.grid(); }
  Eigen::Index points() const { return g.points(); }
};

namespace pointwise {

/// Christoffel symbols, gamma[m](a, b) = Gamma^m_ab.
template <typename S> std::array<Mat4<S>, 4> christoffel(const PointJet<S> &q) {
  // lower[c](a,b) = 1/2 (d_a g_cb + d_b g_ac - d_c g_ab)
  std::array<Mat4<S>, 4> lower;
  for (int c = 0; c < 4; ++c)
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        lower[c](a, b) = S(0.5) * (q.dg[a](c, b) + q.dg[b](a, c) - q.dg[c](a, b));
  std::array<Mat4<S>, 4> gamma;
  for (int m = 0; m < 4; ++m) {
    gamma[m].setZero();
    for (int c = 0; c < 4; ++c) gamma[m] += q.ginv(m, c) * lower[c];
  }
  return gamma;
}

/// nj[a](j, l) = nabla_a J_j^l.
template <typename S>
std::array<Mat4<S>, 4> nabla_j(const PointJet<S> &q, const std::array<Mat4<S>, 4> &gamma) {
  std::array<Mat4<S>, 4> nj;
  for (int a = 0; a < 4; ++a) {
    Mat4<S> gam_a; // gam_a(m, j) = Gamma^m_aj
    for (int m = 0; m < 4; ++m) gam_a.row(m) = gamma[m].row(a);
    // - Gamma^m_aj J_m^l + Gamma^l_am J_j^m
    nj[a] = q.dj[a] - gam_a.transpose() * q.j + q.j * gam_a.transpose();
  }
  return nj;
}

/// nabla_a T_bc of a (0,2)-tensor with derivatives dt[a].
template <typename S>
std::array<Mat4<S>, 4> nabla_02(const Mat4<S> &t, const std::array<Mat4<S>, 4> &dt,
                                const std::array<Mat4<S>, 4> &gamma) {
  std::array<Mat4<S>, 4> out;
  for (int a = 0; a < 4; ++a) {
    Mat4<S> gam_a;
    for (int m = 0; m < 4; ++m) gam_a.row(m) = gamma[m].row(a);
    out[a] = dt[a] - gam_a.transpose() * t - t * gam_a;
  }
  return out;
}

/// Coordinate Nijenhuis tensor, n(j, k, i) = N^i_jk.
template <typename S> Tensor3<S> nijenhuis(const Mat4<S> &jm, const std::array<Mat4<S>, 4> &dj) {
  Tensor3<S> n;
  for (int j = 0; j < 4; ++j)
    for (int k = 0; k < 4; ++k)
      for (int i = 0; i < 4; ++i) {
        S acc = 0;
        for (int l = 0; l < 4; ++l)
          acc += jm(k, l) * dj[l](j, i) + jm(l, i) * dj[j](k, l) - jm(j, l) * dj[l](k, i) -
                 jm(l, i) * dj[k](j, l);
        n(idx3(j, k, i)) = acc;
      }
  return n;
}

/// Almost-Kahler form N^i_jk = 2 (nabla^i J_j^l) J_kl, with J_kl = J_k^m g_ml.
template <typename S>
Tensor3<S> nijenhuis_ak(const PointJet<S> &q, const std::array<Mat4<S>, 4> &nj) {
  const Mat4<S> jlow = q.j * q.g;
  Tensor3<S> n;
  for (int j = 0; j < 4; ++j)
    for (int k = 0; k < 4; ++k)
      for (int i = 0; i < 4; ++i) {
        S acc = 0;
        for (int a = 0; a < 4; ++a)
          for (int l = 0; l < 4; ++l) acc += q.ginv(i, a) * nj[a](j, l) * jlow(k, l);
        n(idx3(j, k, i)) = S(2) * acc;
      }
  return n;
}

/// |T|_g for T stored as T(j, k, i) = T^i_jk.
template <typename S> S norm_12(const Tensor3<S> &t, const PointJet<S> &q) {
  const Eigen::Map<const Eigen::Matrix<S, 16, 4, Eigen::RowMajor>> m(t.data());
  const Eigen::Matrix<S, 16, 16> inner = m * q.g * m.transpose();
  Eigen::Matrix<S, 16, 16> raise;
  for (int a = 0; a < 16; ++a)
    for (int b = 0; b < 16; ++b) raise(a, b) = q.ginv(a / 4, b / 4) * q.ginv(a % 4, b % 4);
  return std::sqrt(std::max(inner.cwiseProduct(raise).sum(), S(0)));
}

/// |nabla J|_g with nj[a](j, l) = nabla_a J_j^l.
template <typename S> S norm_nabla_j(const std::array<Mat4<S>, 4> &nj, const PointJet<S> &q) {
  S acc = 0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      acc += q.ginv(a, b) * (q.ginv * nj[a] * q.g).cwiseProduct(nj[b]).sum();
  return std::sqrt(std::max(acc, S(0)));
}

} // namespace pointwise

// ---------------------------------------------------------------------------
// Field-level operations.

/// Nijenhuis tensor from its coordinate formula, variance (lower, lower,
/// upper) with component (j, k, i) = N^i_jk.
template <typename S> TensorField<S> nijenhuis(const ACStructure<S> &j) {
  std::array<TensorField<S>, 4> dj;
  for (int a = 0; a < 4; ++a) dj[a] = partial_derivative(static_cast<const TensorField<S> &>(j), a);
  TensorField<S> out(j.grid(), {Slot::lower, Slot::lower, Slot::upper});
  for (Eigen::Index p = 0; p < j.points(); ++p) {
    std::array<Mat4<S>, 4> d;
    for (int a = 0; a < 4; ++a) d[a] = mat4(dj[a], p);
    Eigen::Map<Tensor3<S>> dst(out.point(p));
    dst = pointwise::nijenhuis<S>(mat4(j, p), d);
  }
  return out;
}

/// Nijenhuis tensor via the Levi-Civita connection of g, valid on
/// almost-Kahler triples only.
template <typename S> TensorField<S> nijenhuis_ak_form(const AKTriple<S> &t, double closed_tol = 1e-8) {
  const double d_omega = exterior_d(static_cast<const TensorField<S> &>(t.omega)).max_abs();
  if (d_omega > closed_tol)
    throw NotAlmostKahler("d omega deviates by " + std::to_string(d_omega));
  const GeometryJet<S> jet(t.g, t.j);
  TensorField<S> out(t.grid(), {Slot::lower, Slot::lower, Slot::upper});
  for (Eigen::Index p = 0; p < jet.points(); ++p) {
    const auto q = jet.at(p);
    const auto nj = pointwise::nabla_j(q, pointwise::christoffel(q));
    Eigen::Map<Tensor3<S>> dst(out.point(p));
    dst = pointwise::nijenhuis_ak<S>(q, nj);
  }
  return out;
}

/// Norms of a (1,2)-tensor field measured with g and its volume form.
struct TensorNorms {
  double l1 = 0, lp = 0, c0 = 0;
};

template <typename S>
TensorNorms norms_12(const TensorField<S> &t, const Metric<S> &g, double p_exp = 4) {
  TensorNorms r;
  double l1 = 0, lp = 0;
  for (Eigen::Index p = 0; p < t.points(); ++p) {
    PointJet<S> q;
    q.g = mat4(g, p);
    q.ginv = q.g.inverse();
    const S vol = std::sqrt(q.g.determinant());
    const double v = pointwise::norm_12<S>(Eigen::Map<const Tensor3<S>>(t.point(p)), q);
    l1 += v * vol;
    lp += std::pow(v, p_exp) * vol;
    r.c0 = std::max(r.c0, v);
  }
  const double cell = t.grid().cell_volume();
  r.l1 = l1 * cell;
  r.lp = std::pow(lp * cell, 1.0 / p_exp);
  return r;
}

/// g-norm of the harmonicity 1-form nabla_i J_j^i at every point. The
/// contraction is accumulated one derivative axis at a time, so only a
/// single derivative of g and of J is held in memory.
template <typename S> ScalarField<S> harmonicity_defect(const Metric<S> &g, const ACStructure<S> &j) {
  const Eigen::Index n = g.points();
  TensorField<S> ginv(g.grid(), {Slot::upper, Slot::upper});
  for (Eigen::Index p = 0; p < n; ++p) set_mat4<S>(ginv, p, mat4(g, p).inverse());
  OneForm<S> acc(g.grid());
  for (int c = 0; c < 4; ++c) {
    const auto dg = partial_derivative(static_cast<const TensorField<S> &>(g), c);
    const auto dj = partial_derivative(static_cast<const TensorField<S> &>(j), c);
    for (Eigen::Index p = 0; p < n; ++p) {
      const Mat4<S> gi = mat4(ginv, p), jm = mat4(j, p), d = mat4(dg, p), djm = mat4(dj, p);
      // d_c J_j^c + Gamma^a_ac J_j^c - Gamma^k_aj J_k^a restricted to the
      // terms carrying a derivative along axis c.
      const S trace_c = S(0.5) * gi.cwiseProduct(d).sum();
      const Vec4<S> gj = gi * jm.col(c);             // g^lk J_k^c
      const Vec4<S> jg = jm.transpose() * gi.col(c); // J_k^a g^kc
      Vec4<S> v;
      for (int jj = 0; jj < 4; ++jj)
        v(jj) = djm(jj, c) + trace_c * jm(jj, c) - S(0.5) * gj.dot(d.row(jj).transpose()) +
                S(0.5) * jg.dot(d.col(jj));
      v(c) -= S(0.5) * (d * gi * jm).trace();
      set_vec4<S>(acc, p, vec4(acc, p) + v);
    }
  }
  ScalarField<S> out(g.grid());
  for (Eigen::Index p = 0; p < n; ++p) {
    const Vec4<S> v = vec4(acc, p);
    out.data()(p, 0) = std::sqrt(std::max(S(0), v.dot(mat4(ginv, p) * v)));
  }
  return out;
}

/// Riemann tensor R^i_jkl stored at component ((i*4 + j)*4 + k)*4 + l.
template <typename S> TensorField<S> riemann(const Metric<S> &g) {
  const Grid4<S> &grid = g.grid();
  TensorField<S> gamma(grid, {Slot::upper, Slot::lower, Slot::lower});
  {
    std::array<TensorField<S>, 4> dg;
    for (int a = 0; a < 4; ++a) dg[a] = partial_derivative(static_cast<const TensorField<S> &>(g), a);
    for (Eigen::Index p = 0; p < grid.size(); ++p) {
      PointJet<S> q;
      q.g = mat4(g, p);
      q.ginv = q.g.inverse();
      for (int a = 0; a < 4; ++a) q.dg[a] = mat4(dg[a], p);
      const auto gm = pointwise::christoffel(q);
      S *dst = gamma.point(p);
      for (int m = 0; m < 4; ++m)
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b) dst[idx3(m, a, b)] = gm[m](a, b);
    }
  }
  std::array<TensorField<S>, 4> dgamma;
  for (int a = 0; a < 4; ++a) dgamma[a] = partial_derivative(gamma, a);
  TensorField<S> r(grid, {Slot::upper, Slot::lower, Slot::lower, Slot::lower});
  for (Eigen::Index p = 0; p < grid.size(); ++p) {
    const S *gm = gamma.point(p);
    S *dst = r.point(p);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        for (int k = 0; k < 4; ++k)
          for (int l = 0; l < 4; ++l) {
            S v = dgamma[k].point(p)[idx3(i, l, j)] - dgamma[l].point(p)[idx3(i, k, j)];
            for (int m = 0; m < 4; ++m)
              v += gm[idx3(i, k, m)] * gm[idx3(m, l, j)] - gm[idx3(i, l, m)] * gm[idx3(m, k, j)];
            dst[((i * 4 + j) * 4 + k) * 4 + l] = v;
          }
  }
  return r;
}

/// Pointwise |Rm|_g, Ricci tensor and scalar curvature of a Riemann field.
template <typename S> struct CurvatureSummary {
  ScalarField<S> rm_norm, scalar;
  TensorField<S> ricci;
};

template <typename S>
CurvatureSummary<S> curvature_summary(const Metric<S> &g, const TensorField<S> &rm) {
  CurvatureSummary<S> c{ScalarField<S>(g.grid()), ScalarField<S>(g.grid()),
                        TensorField<S>(g.grid(), {Slot::lower, Slot::lower})};
  for (Eigen::Index p = 0; p < g.points(); ++p) {
    const Mat4<S> gm = mat4(g, p);
    const Mat4<S> gi = gm.inverse();
    const S *r = rm.point(p);
    auto at = [&](int i, int j, int k, int l) { return r[((i * 4 + j) * 4 + k) * 4 + l]; };
    Mat4<S> ric = Mat4<S>::Zero();
    for (int j = 0; j < 4; ++j)
      for (int l = 0; l < 4; ++l)
        for (int i = 0; i < 4; ++i) ric(j, l) += at(i, j, i, l);
    set_mat4<S>(c.ricci, p, ric);
    c.scalar.data()(p, 0) = gi.cwiseProduct(ric).sum();
    // |Rm|^2 = g_ii' g^jj' g^kk' g^ll' R^i_jkl R^i'_j'k'l'
    const Eigen::Map<const Eigen::Matrix<S, 4, 64, Eigen::RowMajor>> rmat(r);
    Eigen::Matrix<S, 64, 64> raise;
    for (int a = 0; a < 64; ++a)
      for (int b = 0; b < 64; ++b)
        raise(a, b) = gi(a / 16, b / 16) * gi((a / 4) % 4, (b / 4) % 4) * gi(a % 4, b % 4);
    const Eigen::Matrix<S, 4, 64> raised = rmat * raise;
    const S acc = gm.cwiseProduct(rmat * raised.transpose()).sum();
    c.rm_norm.data()(p, 0) = std::sqrt(std::max(acc, S(0)));
  }
  return c;
}

/// (||Rm||_C0, sup |nabla J|) of a metric and compatible structure.
template <typename S> std::pair<double, double> riemann_norm(const Metric<S> &g, const ACStructure<S> &j) {
  const auto rm = riemann(g);
  const auto c = curvature_summary(g, rm);
  const GeometryJet<S> jet(g, j);
  double sup_nj = 0;
  for (Eigen::Index p = 0; p < jet.points(); ++p) {
    const auto q = jet.at(p);
    sup_nj = std::max(sup_nj, double(pointwise::norm_nabla_j(pointwise::nabla_j(q, pointwise::christoffel(q)), q)));
  }
  return {double(c.rm_norm.max_abs()), sup_nj};
}

} // namespace akcy
