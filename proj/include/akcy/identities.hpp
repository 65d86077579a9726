#pragma once

#include "akcy/connection.hpp"

namespace akcy {

/// Largest pointwise residuals of the two first-order identities relating
/// the antisymmetrized projections of nabla g' to the tensors alpha and
/// beta built from nabla J, with g' the metric of a closed J-compatible form.
struct IdentityReport {
  double alpha_residual = 0;
  double beta_residual = 0;
  double alpha_max = 0;
  double beta_max = 0;
};

namespace pointwise {

/// lhs and rhs of both identities at a point, stored at idx3(i, j, p).
template <typename S> struct IdentitySides {
  Tensor3<S> lhs_alpha, alpha, lhs_beta, beta;
};

/// nj[a](j, l) = nabla_a J_j^l, ng[r](s, p) = nabla_r g'_sp.
template <typename S>
IdentitySides<S> identity_sides(const Mat4<S> &j, const Mat4<S> &gp, const std::array<Mat4<S>, 4> &nj,
                              const std::array<Mat4<S>, 4> &ng) {
  // x[p](r, s) = nabla_r g'_sp; 2 P^rs_ij x_rs = (x - J x J^T)_ij.
  std::array<Mat4<S>, 4> pp, qq;
  for (int p = 0; p < 4; ++p) {
    Mat4<S> x;
    for (int r = 0; r < 4; ++r) x.row(r) = ng[r].col(p).transpose();
    const Mat4<S> jxj = j * x * j.transpose();
    pp[p] = x - jxj;
    qq[p] = x + jxj;
  }
  const Mat4<S> jp = j * gp; // J'_pl = J_p^q g'_ql
  IdentitySides<S> out;
  for (int i = 0; i < 4; ++i)
    for (int jj = 0; jj < 4; ++jj)
      for (int p = 0; p < 4; ++p) {
        S a = 0, b = 0;
        for (int l = 0; l < 4; ++l) {
          a += jp(p, l) * (nj[i](jj, l) - nj[jj](i, l));
          for (int k = 0; k < 4; ++k) {
            a += nj[p](l, k) * (gp(k, jj) * j(i, l) - gp(k, i) * j(jj, l));
            a += gp(k, p) * (nj[l](jj, k) * j(i, l) - nj[l](i, k) * j(jj, l));
            b += gp(k, l) * (nj[jj](i, l) * j(p, k) - nj[jj](p, l) * j(i, k));
            b -= gp(k, jj) * (nj[p](l, k) * j(i, l) - nj[i](l, k) * j(p, l));
            b -= nj[l](jj, k) * (gp(k, p) * j(i, l) - gp(k, i) * j(p, l));
          }
        }
        const int c = idx3(i, jj, p);
        out.alpha(c) = a;
        out.beta(c) = b;
        out.lhs_alpha(c) = pp[p](i, jj) - pp[p](jj, i);
        out.lhs_beta(c) = qq[p](i, jj) - qq[i](p, jj);
      }
  return out;
}

} // namespace pointwise

/// Evaluates both sides of the identities at every grid point for the
/// triple's (g, J) and a J-invariant metric g'.
template <typename S> IdentityReport first_order_identities(const AKTriple<S> &triple, const Metric<S> &g_prime) {
  const GeometryJet<S> jet(triple.g, triple.j);
  std::array<TensorField<S>, 4> dgp;
  for (int a = 0; a < 4; ++a) dgp[a] = partial_derivative(static_cast<const TensorField<S> &>(g_prime), a);
  IdentityReport r;
  for (Eigen::Index p = 0; p < jet.points(); ++p) {
    const auto q = jet.at(p);
    const auto gamma = pointwise::christoffel(q);
    const auto nj = pointwise::nabla_j(q, gamma);
    std::array<Mat4<S>, 4> d;
    for (int a = 0; a < 4; ++a) d[a] = mat4(dgp[a], p);
    const Mat4<S> gp = mat4(g_prime, p);
    const auto sides = pointwise::identity_sides(q.j, gp, nj, pointwise::nabla_02(gp, d, gamma));
    r.alpha_residual = std::max(r.alpha_residual, double((sides.lhs_alpha - sides.alpha).cwiseAbs().maxCoeff()));
    r.beta_residual = std::max(r.beta_residual, double((sides.lhs_beta - sides.beta).cwiseAbs().maxCoeff()));
    r.alpha_max = std::max(r.alpha_max, double(sides.alpha.cwiseAbs().maxCoeff()));
    r.beta_max = std::max(r.beta_max, double(sides.beta.cwiseAbs().maxCoeff()));
  }
  return r;
}

} // namespace akcy
