#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "akcy/structure.hpp"

namespace akcy {

/// Uniform double in [0, 1) from raw engine bits; unlike the standard
/// distributions it gives the same stream on every platform.
inline double unit_uniform(std::mt19937_64 &rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller on unit_uniform.
inline double unit_normal(std::mt19937_64 &rng) {
  const double u = 1.0 - unit_uniform(rng);
  const double v = unit_uniform(rng);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
}

/// One separable Fourier term amplitude * prod_k cos(2 pi m_k x_k / L_k + phase_k).
struct FourierTerm {
  std::array<int, 4> mode{};
  std::array<double, 4> phase{};
  double amplitude = 0;
};

template <typename S> S evaluate(const FourierTerm &t, const Grid4<S> &grid, const std::array<S, 4> &x) {
  S v = S(t.amplitude);
  for (int k = 0; k < 4; ++k)
    v *= std::cos(S(2) * std::numbers::pi_v<S> * S(t.mode[k]) * x[k] / grid.period(k) + S(t.phase[k]));
  return v;
}

/// Seeded list of random terms with |m_k| <= max_mode (never the constant).
inline std::vector<FourierTerm> random_terms(std::uint64_t seed, int max_mode, int count) {
  std::mt19937_64 rng(seed);
  std::vector<FourierTerm> list;
  for (int t = 0; t < count; ++t) {
    FourierTerm term;
    bool zero = true;
    for (int k = 0; k < 4; ++k) {
      term.mode[k] = int(rng() % std::uint64_t(max_mode + 1));
      term.phase[k] = 2 * std::numbers::pi * unit_uniform(rng);
      zero = zero && term.mode[k] == 0;
    }
    if (zero) term.mode[t % 4] = 1;
    term.amplitude = unit_normal(rng);
    list.push_back(term);
  }
  return list;
}

template <typename S>
ScalarField<S> sample_terms(const Grid4<S> &grid, const std::vector<FourierTerm> &terms) {
  ScalarField<S> f(grid);
  for (Eigen::Index p = 0; p < grid.size(); ++p) {
    const auto x = grid.coordinates(p);
    S v = 0;
    for (const auto &t : terms) v += evaluate(t, grid, x);
    f.data()(p, 0) = v;
  }
  return f;
}

/// Largest |d_a f| of a term sum, sampled on a fixed 12^4 lattice so that the
/// value does not depend on the grid the field is later sampled on.
template <typename S>
S max_term_derivative(const std::array<S, 4> &periods, const std::vector<FourierTerm> &terms) {
  const Grid4<S> ref({12, 12, 12, 12}, periods);
  S best = 0;
  for (Eigen::Index p = 0; p < ref.size(); ++p) {
    const auto x = ref.coordinates(p);
    for (int a = 0; a < 4; ++a) {
      S v = 0;
      for (const auto &t : terms) {
        S term = S(t.amplitude);
        for (int k = 0; k < 4; ++k) {
          const S w = S(2) * std::numbers::pi_v<S> * S(t.mode[k]) / ref.period(k);
          const S arg = w * x[k] + S(t.phase[k]);
          term *= (k == a) ? -w * std::sin(arg) : std::cos(arg);
        }
        v += term;
      }
      best = std::max(best, std::abs(v));
    }
  }
  return best;
}

/// Seeded random zero-mean scalar with Fourier modes |m_k| <= max_mode.
template <typename S>
ScalarField<S> random_band_limited_scalar(const Grid4<S> &grid, std::uint64_t seed, int max_mode = 2,
                                          int terms = 8) {
  return remove_mean(sample_terms(grid, random_terms(seed, max_mode, terms)));
}

/// Seeded random symmetric (0,2)-field with modes |m_k| <= 2, scaled so that
/// its largest first derivative is 1. The field is the same function of x on
/// every grid, which keeps refinement studies honest.
template <typename S> Metric<S> random_symmetric_bump(const Grid4<S> &grid, std::uint64_t seed) {
  Metric<S> b(grid);
  S max_d = 0;
  std::uint64_t k = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) {
      const auto terms = random_terms(seed * 1000003ULL + (++k), 2, 4);
      max_d = std::max(max_d, max_term_derivative(grid.periods(), terms));
      const auto f = sample_terms(grid, terms);
      b.data().col(4 * i + j) = f.data().col(0);
      b.data().col(4 * j + i) = f.data().col(0);
    }
  b *= S(1) / max_d;
  return b;
}

/// (omega0, J, g) with J the polar part of omega0 against h = delta + eps B.
template <typename S> AKTriple<S> perturbed_triple(const Grid4<S> &grid, S eps, std::uint64_t seed) {
  Metric<S> h = flat_metric(grid);
  if (eps != S(0)) h += eps * random_symmetric_bump(grid, seed);
  return AKTriple<S>::make(standard_omega(grid), compatible_j_from_metric(standard_omega(grid), h));
}

} // namespace akcy
