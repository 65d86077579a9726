#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include "akcy/errors.hpp"

namespace akcy {

/// Uniform periodic grid on the flat 4-torus.
///
/// Points are numbered row-major over (i1, i2, i3, i4): the last axis varies
/// fastest. Coordinates run over [0, period) on each axis.
template <typename Scalar> class Grid4 {
public:
  using Index = std::ptrdiff_t;

  Grid4() : Grid4({16, 16, 16, 16}, {1, 1, 1, 1}) {}

  Grid4(std::array<int, 4> n, std::array<Scalar, 4> periods)
      : n_(n), periods_(periods) {
    for (int k = 0; k < 4; ++k) {
      if (n_[k] < 4 || n_[k] % 2 != 0)
        throw InvalidGrid("axis " + std::to_string(k + 1) +
                          " needs an even point count >= 4, got " +
                          std::to_string(n_[k]));
      if (!(periods_[k] > Scalar(0)) || !std::isfinite(double(periods_[k])))
        throw InvalidGrid("axis " + std::to_string(k + 1) +
                          " needs a positive period");
      spacing_[k] = periods_[k] / Scalar(n_[k]);
    }
  }

  static Grid4 cube(int n, Scalar period = Scalar(1)) {
    return Grid4({n, n, n, n}, {period, period, period, period});
  }

  int n(int axis) const { return n_[axis]; }
  const std::array<int, 4> &shape() const { return n_; }
  Scalar period(int axis) const { return periods_[axis]; }
  const std::array<Scalar, 4> &periods() const { return periods_; }
  Scalar spacing(int axis) const { return spacing_[axis]; }

  Index size() const { return Index(n_[0]) * n_[1] * n_[2] * n_[3]; }
  Scalar cell_volume() const {
    return spacing_[0] * spacing_[1] * spacing_[2] * spacing_[3];
  }
  Scalar volume() const {
    return periods_[0] * periods_[1] * periods_[2] * periods_[3];
  }

  /// Number of points strictly after `axis` in the ordering.
  Index inner(int axis) const {
    Index s = 1;
    for (int k = axis + 1; k < 4; ++k) s *= n_[k];
    return s;
  }
  /// Number of points strictly before `axis` in the ordering.
  Index outer(int axis) const {
    Index s = 1;
    for (int k = 0; k < axis; ++k) s *= n_[k];
    return s;
  }

  Index index(int i1, int i2, int i3, int i4) const {
    return ((Index(i1) * n_[1] + i2) * n_[2] + i3) * n_[3] + i4;
  }

  std::array<int, 4> multi_index(Index p) const {
    std::array<int, 4> m{};
    for (int k = 3; k >= 0; --k) {
      m[k] = int(p % n_[k]);
      p /= n_[k];
    }
    return m;
  }

  std::array<Scalar, 4> coordinates(Index p) const {
    const auto m = multi_index(p);
    return {m[0] * spacing_[0], m[1] * spacing_[1], m[2] * spacing_[2],
            m[3] * spacing_[3]};
  }

  /// Angular wavenumber 2*pi/L of the fundamental mode on `axis`.
  Scalar fundamental(int axis) const {
    return Scalar(2) * std::numbers::pi_v<Scalar> / periods_[axis];
  }

  bool operator==(const Grid4 &o) const {
    return n_ == o.n_ && periods_ == o.periods_;
  }
  bool operator!=(const Grid4 &o) const { return !(*this == o); }

private:
  std::array<int, 4> n_;
  std::array<Scalar, 4> periods_;
  std::array<Scalar, 4> spacing_{};
};

using Grid = Grid4<double>;

} // namespace akcy
