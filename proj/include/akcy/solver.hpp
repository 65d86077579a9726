#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "akcy/connection.hpp"
#include "akcy/harmonic.hpp"
#include "akcy/scenario.hpp"

namespace akcy {

struct SolverConfig {
  double newton_tol = 1e-10; ///< on the combined L2 residual
  int newton_max_iter = 30;
  double backtrack_factor = 0.5;
  int max_backtracks = 20;
  double p = 4;               ///< exponent of the claim monitor, > 2
  double claim_threshold = 1; ///< exceeding it is recorded, not fatal
  bool adaptive = true;
  int t_steps = 4;            ///< number of equal steps when not adaptive
  double dt_initial = 0.25;
  double dt_min = 1e-4;
  double dt_max = 0.25;
  ClassMode class_mode = ClassMode::drifting;
  double linear_tol = 1e-3;   ///< relative tolerance of each Newton correction solve
  int linear_max_iter = 200;
  double perturbation = 0;    ///< amplitude of the seeded initial-guess perturbation
  std::uint64_t seed = 0;

  void validate() const {
    if (!(p > 2)) throw ConfigError("claim exponent p must exceed 2");
    if (!(newton_tol > 0) || !(linear_tol > 0)) throw ConfigError("tolerances must be positive");
    if (newton_max_iter < 1 || max_backtracks < 0) throw ConfigError("iteration limits must be positive");
    if (!(backtrack_factor > 0 && backtrack_factor < 1)) throw ConfigError("backtrack factor must lie in (0, 1)");
    if (!(dt_min > 0 && dt_min <= dt_initial && dt_initial <= dt_max && dt_max <= 1))
      throw ConfigError("need 0 < dt_min <= dt_initial <= dt_max <= 1");
    if (!adaptive && t_steps < 1) throw ConfigError("t_steps must be positive");
  }
};

struct Residuals {
  double volume = 0, selfdual = 0, gauge = 0;
  double combined() const { return std::sqrt(volume * volume + selfdual * selfdual + gauge * gauge); }
};

/// F shifted by the constant that makes the integral of e^F omega^2 equal
/// to that of omega^2.
template <typename S> ScalarField<S> normalize_F(const ScalarField<S> &f_raw, const TwoForm<S> &omega) {
  const auto vol = square_density(omega);
  const S top = f_raw.data().maxCoeff();
  ScalarField<S> ef = f_raw;
  ef.data() = (f_raw.data() - top).exp();
  const S c = std::log(integrate(ScalarField<S>(constant_field<S>(f_raw.grid(), {}, DenseVector<S>::Ones(1))), vol)) -
              (top + std::log(integrate(ef, vol)));
  ScalarField<S> out = f_raw;
  out.data() += c;
  if (f_raw.data().maxCoeff() == f_raw.data().minCoeff()) out.data().setZero();
  return out;
}

/// Fixed data of a continuity problem: the triple, normalized F and the
/// harmonic self-dual forms chi_1, chi_2 of g orthogonal to omega.
template <typename S> struct ContinuityProblem {
  AKTriple<S> triple;
  ScalarField<S> F;
  std::vector<TwoForm<S>> class_basis; ///< {omega / |omega|, chi_1, chi_2}

  static ContinuityProblem make(AKTriple<S> triple, ScalarField<S> F, const EllipticOptions &opt = {}) {
    auto basis = class_basis_of(triple.g, triple.omega, opt);
    return ContinuityProblem{std::move(triple), std::move(F), std::move(basis)};
  }

  static std::vector<TwoForm<S>> class_basis_of(const Metric<S> &g, const TwoForm<S> &omega,
                                                const EllipticOptions &opt = {}) {
    return akcy::class_basis(harmonic_self_dual_basis(g, opt), omega);
  }
  const TwoForm<S> &chi(int i) const { return class_basis[1 + i]; }
};

/// The reference point (omega~, t0) of the Newton map and the data derived
/// from it: its metric, the forms chi~_1, chi~_2 and the reference density
/// the volume term is measured against (omega~^2 unless replaced).
template <typename S> struct Anchor {
  TwoForm<S> omega;
  S t0;
  MetricInfo<S> metric;
  std::vector<TwoForm<S>> chi; ///< chi~_1, chi~_2
  ScalarField<S> density;

  static Anchor make(TwoForm<S> omega, S t0, const ACStructure<S> &j, const EllipticOptions &opt = {}) {
    MetricInfo<S> g(metric_from_pair(omega, j));
    auto basis = ContinuityProblem<S>::class_basis_of(g.metric, omega, opt);
    auto density = square_density(omega);
    return Anchor{std::move(omega), t0, std::move(g), {basis[1], basis[2]}, std::move(density)};
  }

  /// Measures the volume term against e^{t0 F} omega^2 (same total as
  /// omega~^2), the density omega~ solves for exactly. Along a path this
  /// keeps the residual of one step from carrying into the next.
  void use_target_density(const ScalarField<S> &f, const TwoForm<S> &omega0) {
    const auto base = square_density(omega0);
    ScalarField<S> d = base;
    d.data() = (t0 * f.data()).exp() * base.data();
    d *= square_density(omega).data().sum() / d.data().sum();
    density = std::move(d);
  }
};

template <typename S> struct PhiValue {
  TwoForm<S> phi;     ///< the self-dual residual form
  ScalarField<S> u;   ///< its omega~ coefficient: phi = u omega~ / 2 + P(...)
  TwoForm<S> form;    ///< omega'' = omega~ + sum s_i chi_i + d b
  ScalarField<S> weight; ///< e^{-(t - t0) F}
  S c_hat = 0;
  Residuals residuals;
};

template <typename S> TwoForm<S> class_term(const ContinuityProblem<S> &pr, const DenseVector<S> &s) {
  TwoForm<S> out(pr.F.grid());
  for (Eigen::Index i = 0; i < s.size(); ++i) out += s(i) * pr.chi(int(i));
  return out;
}

/// Phi(b, s, t) = (log(omega''^2 / omega~^2) - (t - t0) F - c^) omega~ / 2 + P omega'',
/// with c^ = log(int e^{-(t-t0)F} omega''^2 / int omega~^2).
template <typename S>
PhiValue<S> phi_map(const OneForm<S> &b, const DenseVector<S> &s, S t, const Anchor<S> &anchor,
                    const ContinuityProblem<S> &pr) {
  PhiValue<S> v;
  TwoForm<S> delta = class_term(pr, s);
  delta += exterior_d(b);
  v.form = anchor.omega;
  v.form += delta;
  const auto dens = square_density(v.form);
  if (!(dens.data().col(0).minCoeff() > S(0)))
    throw LostPositivity("candidate form has non-positive square at some point");
  const auto &base = anchor.density;
  v.weight = pr.F;
  v.weight.data() = (-(t - anchor.t0) * pr.F.data()).exp();
  v.c_hat = std::log((v.weight.data() * dens.data()).sum() / base.data().sum());
  v.u = dens;
  v.u.data() = (dens.data() / base.data()).log() - (t - anchor.t0) * pr.F.data() - v.c_hat;
  // P of the whole form, so a leftover P omega~ from the previous step is corrected.
  v.phi = apply_p(pr.triple.j, v.form);
  const TwoForm<S> pd = v.phi;
  TwoForm<S> vol_part = anchor.omega;
  for (Eigen::Index c = 0; c < 16; ++c) vol_part.data().col(c) *= S(0.5) * v.u.data().col(0);
  v.phi += vol_part;
  const auto &g = anchor.metric;
  v.residuals.volume = std::sqrt(double(l2_inner2(g, vol_part, vol_part)));
  v.residuals.selfdual = std::sqrt(double(l2_inner2(g, pd, pd)));
  const auto div = codifferential(g, b);
  v.residuals.gauge = std::sqrt(double(l2_inner0(g, div, div)));
  return v;
}

/// Jacobian of (Phi, d*~ b) at a point and its preconditioner, acting on
/// vectors [b (4N); s (r)].
template <typename S> class NewtonOperator {
public:
  NewtonOperator(const PhiValue<S> &at, const Anchor<S> &anchor, const ContinuityProblem<S> &pr, int r)
      : at_(at), anchor_(anchor), pr_(pr), r_(r), shape_(pr.F.grid()) {
    dens_ = square_density(at.form);
    weighted_total_ = (at.weight.data() * dens_.data()).sum();
    scale_ = principal_scale(anchor.metric);
    // Images of the class directions and their pairing with chi~.
    pairing_ = DenseMatrix<S>::Zero(r_, r_);
    for (int j = 0; j < r_; ++j) {
      class_images_.push_back(jacobian_form(pr.chi(j)));
      for (int i = 0; i < r_; ++i) pairing_(i, j) = l2_inner2(anchor.metric, anchor.chi[i], class_images_[j]);
    }
    if (r_ > 0) pairing_lu_ = pairing_.fullPivLu();
  }

  Eigen::Index size() const { return 4 * shape_.points() + r_; }
  const DenseMatrix<S> &pairing() const { return pairing_; }

  /// D Phi applied to a closed perturbation eta of omega''.
  TwoForm<S> jacobian_form(const TwoForm<S> &eta) const {
    const auto w = wedge(at_.form, eta);
    const S dc = S(2) * (at_.weight.data() * w.data()).sum() / weighted_total_;
    TwoForm<S> out = apply_p(pr_.triple.j, eta);
    for (Eigen::Index c = 0; c < 16; ++c)
      out.data().col(c) += (w.data().col(0) / dens_.data().col(0) - S(0.5) * dc) * anchor_.omega.data().col(c);
    return out;
  }

  std::pair<TwoForm<S>, ScalarField<S>> apply(const DenseVector<S> &x) const {
    const auto b = from_vector(shape_, DenseVector<S>(x.head(4 * shape_.points())));
    TwoForm<S> eta = exterior_d(b);
    for (int j = 0; j < r_; ++j) eta += x(4 * shape_.points() + j) * pr_.chi(j);
    return {jacobian_form(eta), codifferential(anchor_.metric, b)};
  }

  /// Approximate inverse: the class part from the pairing matrix, the rest
  /// from d*~ and a scaled flat Hodge inverse.
  DenseVector<S> precondition(const TwoForm<S> &rho, const ScalarField<S> &sigma) const {
    DenseVector<S> out(size());
    TwoForm<S> rest = rho;
    if (r_ > 0) {
      DenseVector<S> proj(r_);
      for (int i = 0; i < r_; ++i) proj(i) = l2_inner2(anchor_.metric, anchor_.chi[i], rho);
      const DenseVector<S> ds = pairing_lu_.solve(proj);
      for (int j = 0; j < r_; ++j) rest -= ds(j) * class_images_[j];
      out.tail(r_) = ds;
    }
    OneForm<S> v = codifferential(anchor_.metric, rest);
    v *= S(2);
    v += exterior_d(sigma);
    OneForm<S> b = clean(inverse_flat_laplacian(v));
    b *= S(-1) / scale_;
    out.head(4 * shape_.points()) = as_vector(b);
    return out;
  }

  DenseVector<S> operator()(const DenseVector<S> &x) const {
    const auto [rho, sigma] = apply(x);
    return precondition(rho, sigma);
  }

private:
  const PhiValue<S> &at_;
  const Anchor<S> &anchor_;
  const ContinuityProblem<S> &pr_;
  int r_;
  OneForm<S> shape_;
  ScalarField<S> dens_;
  S weighted_total_ = 0, scale_ = 1;
  std::vector<TwoForm<S>> class_images_;
  DenseMatrix<S> pairing_;
  Eigen::FullPivLU<DenseMatrix<S>> pairing_lu_;
};

template <typename S> struct SolverState {
  S t = 0;
  OneForm<S> b;
  DenseVector<S> s;           ///< Newton class unknowns relative to the anchor
  TwoForm<S> omega_prime;     ///< cached omega~ + sum s_i chi_i + d b
  S c_hat = 0;
  Residuals residuals;
  int newton_iterations = 0;
  int backtracks = 0;
};

/// Damped Newton iteration for Phi(., ., t) = 0 with d*~ b = 0, b of zero mean.
template <typename S>
SolverState<S> newton_solve_at_t(SolverState<S> state, S t, const Anchor<S> &anchor,
                                 const ContinuityProblem<S> &pr, const SolverConfig &cfg) {
  const int r = cfg.class_mode == ClassMode::drifting ? 2 : 0;
  if (state.s.size() != r) state.s = DenseVector<S>::Zero(r);
  state.t = t;
  state.newton_iterations = 0;
  state.backtracks = 0;
  auto value = phi_map(state.b, state.s, t, anchor, pr);
  for (int it = 0;; ++it) {
    const double res = value.residuals.combined();
    if (res < cfg.newton_tol) break;
    if (it >= cfg.newton_max_iter)
      throw NewtonDivergence("no convergence after " + std::to_string(it) + " iterations (residual " +
                             std::to_string(res) + ")");
    const NewtonOperator<S> op(value, anchor, pr, r);
    TwoForm<S> minus_phi = value.phi;
    minus_phi *= S(-1);
    ScalarField<S> minus_div = codifferential(anchor.metric, state.b);
    minus_div *= S(-1);
    const DenseVector<S> rhs = op.precondition(minus_phi, minus_div);
    DenseVector<S> x = DenseVector<S>::Zero(op.size());
    const auto rep = gmres<S>(op, rhs, x, S(std::min(cfg.linear_tol, std::max(1e-12, res))), cfg.linear_max_iter, 40,
                              S(1e-3 * cfg.newton_tol) * rhs.norm() / std::max(res, 1e-300));
    if (!rep.converged && rep.relative_residual > 0.5)
      throw NewtonDivergence("correction solve stalled at relative residual " + std::to_string(rep.relative_residual));
    const auto shape = state.b;
    const OneForm<S> db = clean(from_vector(shape, DenseVector<S>(x.head(4 * shape.points()))));
    const DenseVector<S> ds = x.tail(r);

    S lambda = 1;
    bool accepted = false;
    for (int k = 0; k <= cfg.max_backtracks; ++k) {
      OneForm<S> b = state.b;
      b += lambda * db;
      const DenseVector<S> s = state.s + lambda * ds;
      try {
        auto trial = phi_map(b, s, t, anchor, pr);
        if (trial.residuals.combined() < (1 - 1e-4 * double(lambda)) * res) {
          state.b = std::move(b);
          state.s = s;
          value = std::move(trial);
          accepted = true;
          break;
        }
      } catch (const LostPositivity &) {
        if (k == cfg.max_backtracks) throw;
      }
      lambda *= S(cfg.backtrack_factor);
      ++state.backtracks;
    }
    if (!accepted)
      throw NewtonDivergence("line search failed at residual " + std::to_string(res));
    ++state.newton_iterations;
  }
  state.omega_prime = value.form;
  state.c_hat = value.c_hat;
  state.residuals = value.residuals;
  return state;
}

// ---------------------------------------------------------------------------
// Diagnostics.

template <typename S> struct DiagnosticsRecord {
  double t = 0;
  int newton_iters = 0;
  Residuals residuals;
  double min_eig_gprime = 0;
  double osc_phi1 = 0, osc_phi_half = 0;
  double tr_min = 0, tr_max = 0;             ///< tr_g g'
  double tr_inv_min = 0, tr_inv_max = 0;     ///< tr_g' g
  double lower_bound = 0;                    ///< 4 exp(inf F_t / 2)
  double trace_identity_residual = 0;        ///< max |tr_g g' - e^F_t tr_g' g|
  double volume_residual = 0;                ///< max |omega'^2 - e^F_t omega^2| / omega^2
  double selfdual_c0 = 0;                    ///< max |P omega'|
  double claim_quantity = 0;
  double class_term_lp = 0;
  double nij_l1 = 0, nij_lp = 0, nij_c0 = 0;
  std::array<double, 3> s{};                 ///< class of omega' - omega in {omega^, chi_1, chi_2}
  double c_hat = 0;
  std::optional<double> fitted_a;            ///< empty when osc phi_1 vanishes (exact Kahler)
  bool claim_exceeded = false;
};

/// Lp norm (int |f|^p omega^2)^{1/p}.
template <typename S> double lp_norm(const ScalarField<S> &f, const ScalarField<S> &density, double p) {
  ScalarField<S> a = f;
  a.data() = f.data().abs().pow(S(p));
  return std::pow(double(integrate(a, density)), 1.0 / p);
}

/// Every monitored quantity of a solution omega' of omega'^2 = e^{F_t} omega^2.
template <typename S>
DiagnosticsRecord<S> diagnostics(const AKTriple<S> &triple, const TwoForm<S> &omega_prime, const ScalarField<S> &f_t,
                                 double p, const std::vector<TwoForm<S>> &class_basis,
                                 const std::optional<TensorNorms> &nij = std::nullopt,
                                 const EllipticOptions &opt = {}) {
  DiagnosticsRecord<S> d;
  const auto &omega = triple.omega;
  const auto gp = metric_from_pair(omega_prime, triple.j);
  const auto vol = square_density(omega);
  const auto vol_p = square_density(omega_prime);
  d.min_eig_gprime = std::numeric_limits<double>::infinity();
  d.tr_min = d.tr_inv_min = std::numeric_limits<double>::infinity();
  d.tr_max = d.tr_inv_max = -std::numeric_limits<double>::infinity();
  for (Eigen::Index p_ = 0; p_ < omega.points(); ++p_) {
    const Mat4<S> g = mat4(triple.g, p_), h = mat4(gp, p_);
    const Mat4<S> gi = g.inverse(), hi = h.inverse();
    const double tr = double((gi * h).trace()), tri = double((hi * g).trace());
    d.tr_min = std::min(d.tr_min, tr);
    d.tr_max = std::max(d.tr_max, tr);
    d.tr_inv_min = std::min(d.tr_inv_min, tri);
    d.tr_inv_max = std::max(d.tr_inv_max, tri);
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat4<S>> es(h, g, Eigen::EigenvaluesOnly);
    d.min_eig_gprime = std::min(d.min_eig_gprime, double(es.eigenvalues().minCoeff()));
    const double ef = std::exp(double(f_t.data()(p_, 0)));
    d.trace_identity_residual = std::max(d.trace_identity_residual, std::abs(tr - ef * tri));
    const double v = double(vol.data()(p_, 0)), vp = double(vol_p.data()(p_, 0));
    d.volume_residual = std::max(d.volume_residual, std::abs(vp - ef * v) / v);
  }
  d.lower_bound = 4 * std::exp(0.5 * double(f_t.data().minCoeff()));
  TwoForm<S> delta = omega_prime;
  delta -= omega;
  d.selfdual_c0 = double(apply_p(triple.j, omega_prime).max_abs());

  d.osc_phi1 = double(oscillation(solve_potential(omega, omega_prime, triple.j, S(1), ClassMode::drifting, opt).phi));
  d.osc_phi_half = double(oscillation(solve_potential(omega, omega_prime, triple.j, S(0.5), ClassMode::drifting, opt).phi));
  const auto dec = decompose(omega, omega_prime, triple.j, S(1), ClassMode::drifting, class_basis, opt);
  for (int i = 0; i < 3; ++i) d.s[i] = double(dec.s(i));
  auto ratio = [&](const TwoForm<S> &form) {
    ScalarField<S> q = wedge(form, omega);
    q.data().col(0) /= vol.data().col(0);
    return q;
  };
  d.claim_quantity = lp_norm(ratio(exterior_d(dec.a)), vol, p);
  d.class_term_lp = lp_norm(ratio(dec.class_term), vol, p);
  d.claim_exceeded = d.claim_quantity + d.class_term_lp >= 1;
  if (nij) {
    d.nij_l1 = nij->l1;
    d.nij_lp = nij->lp;
    d.nij_c0 = nij->c0;
  }
  if (d.osc_phi1 > 1e-12) d.fitted_a = std::log(d.tr_max / d.tr_min) / d.osc_phi1;
  return d;
}

// ---------------------------------------------------------------------------
// Continuity path.

template <typename S> struct PathResult {
  SolverState<S> state;
  std::vector<DiagnosticsRecord<S>> records;
  int rejected_steps = 0;
};

/// Seeded initial guess perturbation (b, s) of a given amplitude.
template <typename S>
std::pair<OneForm<S>, DenseVector<S>> seeded_guess(const Grid4<S> &grid, int r, double amplitude, std::uint64_t seed) {
  OneForm<S> b(grid);
  DenseVector<S> s = DenseVector<S>::Zero(r);
  if (amplitude == 0) return {b, s};
  for (int k = 0; k < 4; ++k)
    b.data().col(k) = random_band_limited_scalar(grid, seed * 7919 + std::uint64_t(k) + 1, 1, 4).data().col(0);
  b *= S(amplitude) / std::max(b.max_abs(), S(1e-300));
  std::mt19937_64 rng(seed);
  for (int i = 0; i < r; ++i) s(i) = S(amplitude * unit_normal(rng));
  return {clean(b), s};
}

/// March t from 0 to 1 on omega'_t^2 = e^{t F + c_t} omega^2, re-anchoring
/// after every accepted step. `on_step` sees each accepted record.
template <typename S>
PathResult<S> continuity_path(const ContinuityProblem<S> &pr, const SolverConfig &cfg,
                              const std::function<void(const DiagnosticsRecord<S> &, const SolverState<S> &)> &on_step = {},
                              const EllipticOptions &opt = {}) {
  cfg.validate();
  const auto &triple = pr.triple;
  const auto &grid = triple.grid();
  const int r = cfg.class_mode == ClassMode::drifting ? 2 : 0;
  const std::optional<TensorNorms> nij = norms_12(nijenhuis(triple.j), triple.g, cfg.p);
  PathResult<S> out;

  SolverState<S> state;
  state.b = OneForm<S>(grid);
  state.s = DenseVector<S>::Zero(r);
  state.omega_prime = triple.omega;
  auto emit = [&](const SolverState<S> &st) {
    // F_t = t F + c_t with c_t = log(int omega^2 / int e^{tF} omega^2).
    const auto vol = square_density(triple.omega);
    ScalarField<S> f_t = pr.F;
    f_t *= st.t;
    ScalarField<S> ef = f_t;
    ef.data() = f_t.data().exp();
    f_t.data() += std::log(vol.data().sum() / (ef.data() * vol.data()).sum());
    auto rec = diagnostics(triple, st.omega_prime, f_t, cfg.p, pr.class_basis, nij, opt);
    rec.t = double(st.t);
    rec.newton_iters = st.newton_iterations;
    rec.residuals = st.residuals;
    rec.c_hat = double(st.c_hat);
    out.records.push_back(rec);
    if (on_step) on_step(rec, st);
  };
  emit(state);
  if (pr.F.max_abs() == S(0)) {
    state.t = 1;
    out.state = state;
    out.records.back().t = 1;
    return out;
  }

  Anchor<S> anchor = Anchor<S>::make(triple.omega, S(0), triple.j, opt);
  const S total = square_density(triple.omega).data().sum();
  S dt = S(cfg.adaptive ? cfg.dt_initial : 1.0 / cfg.t_steps);
  int clean_steps = 0, step = 0;
  while (state.t < S(1)) {
    const S t = std::min(S(1), state.t + dt);
    SolverState<S> guess = state;
    const auto [b0, s0] = seeded_guess(grid, r, cfg.perturbation, cfg.seed + std::uint64_t(step) * 104729);
    guess.b = b0;
    guess.s = s0;
    try {
      auto next = newton_solve_at_t(guess, t, anchor, pr, cfg);
      // Rescale so that the total volume is preserved, then re-anchor.
      const S lambda = std::sqrt(total / square_density(next.omega_prime).data().sum());
      next.omega_prime *= lambda;
      next.c_hat += S(2) * std::log(lambda);
      anchor = Anchor<S>::make(next.omega_prime, t, triple.j, opt);
      anchor.use_target_density(pr.F, triple.omega);
      next.b = OneForm<S>(grid);
      next.s = DenseVector<S>::Zero(r);
      state = next;
      ++step;
      emit(state);
      if (cfg.adaptive && ++clean_steps >= 2 && state.backtracks == 0) {
        dt = std::min(S(cfg.dt_max), S(2) * dt);
        clean_steps = 0;
      }
    } catch (const NewtonDivergence &) {
      ++out.rejected_steps;
    } catch (const LostPositivity &) {
      ++out.rejected_steps;
    } catch (const LinearSolveFailure &) {
      ++out.rejected_steps;
    }
    if (state.t < t) {
      if (!cfg.adaptive) throw PathStalled("fixed step to t = " + std::to_string(double(t)) + " failed");
      dt /= S(2);
      clean_steps = 0;
      if (dt < S(cfg.dt_min))
        throw PathStalled("step size fell below " + std::to_string(cfg.dt_min) + " at t = " +
                          std::to_string(double(state.t)));
    }
  }
  out.state = state;
  return out;
}

template <typename S> struct UniquenessReport {
  double difference = 0;      ///< |omega'_1 - omega'_2|_L2
  double volume_mechanism = 0; ///< |(omega'_1 + omega'_2) ^ delta|_L2 of the density
  double p_mechanism = 0;     ///< |P delta|_L2
  std::array<PathResult<S>, 2> runs;
};

/// Solves twice from differently perturbed initial guesses and compares.
template <typename S>
UniquenessReport<S> uniqueness_test(const ContinuityProblem<S> &pr, SolverConfig cfg, std::array<std::uint64_t, 2> seeds,
                                    double amplitude = 1e-2, const EllipticOptions &opt = {}) {
  UniquenessReport<S> rep;
  for (int k = 0; k < 2; ++k) {
    cfg.seed = seeds[k];
    cfg.perturbation = amplitude;
    rep.runs[k] = continuity_path(pr, cfg, {}, opt);
  }
  const MetricInfo<S> g(pr.triple.g);
  const auto &w1 = rep.runs[0].state.omega_prime, &w2 = rep.runs[1].state.omega_prime;
  TwoForm<S> delta = w1;
  delta -= w2;
  rep.difference = std::sqrt(double(l2_inner2(g, delta, delta)));
  TwoForm<S> sum = w1;
  sum += w2;
  const auto mech = wedge(sum, delta);
  rep.volume_mechanism = std::sqrt(double(l2_inner0(g, mech, mech)));
  const auto pd = apply_p(pr.triple.j, delta);
  rep.p_mechanism = std::sqrt(double(l2_inner2(g, pd, pd)));
  return rep;
}

} // namespace akcy
