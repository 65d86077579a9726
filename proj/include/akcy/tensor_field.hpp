#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <string>
#include <vector>

#include "akcy/errors.hpp"
#include "akcy/grid.hpp"

namespace akcy {

enum class Slot : std::uint8_t { lower, upper };
using Variance = std::vector<Slot>;

inline std::string to_string(const Variance &v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i)
    s += (i ? "," : "") + std::string(v[i] == Slot::lower ? "lower" : "upper");
  return s + ")";
}

constexpr std::ptrdiff_t pow4(int rank) {
  std::ptrdiff_t c = 1;
  for (int i = 0; i < rank; ++i) c *= 4;
  return c;
}

/// Component array of a tensor over the grid.
///
/// Storage is an N x 4^rank row-major array: one row per grid point, the
/// component multi-index flattened row-major (so T_ij sits at column 4i+j).
/// Lower/upper slots follow the stored index order, e.g. an almost complex
/// structure J_i^j is (lower, upper) with J(d/dx^i) = J_i^j d/dx^j.
template <typename S> class TensorField {
public:
  using Scalar = S;
  using Index = std::ptrdiff_t;
  using Array =
      Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  TensorField() = default;

  TensorField(const Grid4<S> &grid, Variance variance)
      : grid_(grid), variance_(std::move(variance)),
        data_(Array::Zero(grid_.size(), pow4(rank()))) {}

  TensorField(const Grid4<S> &grid, Variance variance, Array data)
      : grid_(grid), variance_(std::move(variance)), data_(std::move(data)) {
    if (data_.rows() != grid_.size() || data_.cols() != pow4(rank()))
      throw ShapeMismatch("component array is " +
                          std::to_string(data_.rows()) + "x" +
                          std::to_string(data_.cols()) + ", expected " +
                          std::to_string(grid_.size()) + "x" +
                          std::to_string(pow4(rank())));
  }

  const Grid4<S> &grid() const { return grid_; }
  const Variance &variance() const { return variance_; }
  int rank() const { return int(variance_.size()); }
  Index points() const { return data_.rows(); }
  Index components() const { return data_.cols(); }

  Array &data() { return data_; }
  const Array &data() const { return data_; }

  auto component(Index c) { return data_.col(c); }
  auto component(Index c) const { return data_.col(c); }

  S *point(Index p) { return data_.data() + p * data_.cols(); }
  const S *point(Index p) const { return data_.data() + p * data_.cols(); }

  bool all_finite() const { return data_.allFinite(); }
  S max_abs() const { return data_.size() ? data_.abs().maxCoeff() : S(0); }

  bool same_shape(const TensorField &o) const {
    return grid_ == o.grid_ && variance_ == o.variance_;
  }

  TensorField &operator+=(const TensorField &o) {
    require_same_shape(o);
    data_ += o.data_;
    return *this;
  }
  TensorField &operator-=(const TensorField &o) {
    require_same_shape(o);
    data_ -= o.data_;
    return *this;
  }
  TensorField &operator*=(S a) {
    data_ *= a;
    return *this;
  }

protected:
  void require_same_shape(const TensorField &o) const {
    if (!same_shape(o))
      throw ShapeMismatch("tensor fields differ in grid or variance " +
                          to_string(variance_) + " vs " +
                          to_string(o.variance_));
  }

  Grid4<S> grid_;
  Variance variance_;
  Array data_;
};

template <typename F>
concept Field = std::derived_from<F, TensorField<typename F::Scalar>>;

template <Field F> F operator+(F a, const F &b) {
  a += b;
  return a;
}
template <Field F> F operator-(F a, const F &b) {
  a -= b;
  return a;
}
template <Field F> F operator-(F a) {
  a *= typename F::Scalar(-1);
  return a;
}
template <Field F> F operator*(typename F::Scalar s, F a) {
  a *= s;
  return a;
}
template <Field F> F operator*(F a, typename F::Scalar s) {
  a *= s;
  return a;
}

/// Shared constructor plumbing for the named specializations.
#define AKCY_FIELD_SPECIALIZATION(Name, ...)                                   \
  template <typename S> class Name : public TensorField<S> {                   \
  public:                                                                      \
    using Base = TensorField<S>;                                               \
    Name() = default;                                                          \
    explicit Name(const Grid4<S> &grid) : Base(grid, signature()) {}           \
    Name(const Grid4<S> &grid, typename Base::Array data)                      \
        : Base(grid, signature(), std::move(data)) {}                          \
    explicit Name(Base f) : Base(std::move(f)) {                               \
      if (this->variance() != signature())                                     \
        throw ShapeMismatch(std::string(#Name " needs variance ") +            \
                            to_string(signature()) + ", got " +               \
                            to_string(this->variance()));                      \
    }                                                                          \
    static Variance signature() { return Variance{__VA_ARGS__}; }              \
  }

AKCY_FIELD_SPECIALIZATION(ScalarField);
AKCY_FIELD_SPECIALIZATION(OneForm, Slot::lower);
AKCY_FIELD_SPECIALIZATION(TwoForm, Slot::lower, Slot::lower);
AKCY_FIELD_SPECIALIZATION(Metric, Slot::lower, Slot::lower);
AKCY_FIELD_SPECIALIZATION(ACStructure, Slot::lower, Slot::upper);

#undef AKCY_FIELD_SPECIALIZATION

// ---------------------------------------------------------------------------
// Pointwise access helpers.

template <typename S> using Mat4 = Eigen::Matrix<S, 4, 4>;
template <typename S> using Vec4 = Eigen::Matrix<S, 4, 1>;

/// Rank-2 components at a point as a 4x4 matrix, M(i,j) = T_ij.
template <typename S>
Mat4<S> mat4(const TensorField<S> &f, typename TensorField<S>::Index p) {
  return Eigen::Map<const Eigen::Matrix<S, 4, 4, Eigen::RowMajor>>(f.point(p));
}

template <typename S>
void set_mat4(TensorField<S> &f, typename TensorField<S>::Index p,
              const Mat4<S> &m) {
  Eigen::Map<Eigen::Matrix<S, 4, 4, Eigen::RowMajor>>(f.point(p)) = m;
}

template <typename S>
Vec4<S> vec4(const TensorField<S> &f, typename TensorField<S>::Index p) {
  return Eigen::Map<const Vec4<S>>(f.point(p));
}

template <typename S>
void set_vec4(TensorField<S> &f, typename TensorField<S>::Index p,
              const Vec4<S> &v) {
  Eigen::Map<Vec4<S>>(f.point(p)) = v;
}

// ---------------------------------------------------------------------------
// Construction helpers.

/// Field whose components at every point equal `value` (size 4^rank).
template <typename S, typename Derived>
TensorField<S> constant_field(const Grid4<S> &grid, Variance variance,
                              const Eigen::DenseBase<Derived> &value) {
  TensorField<S> f(grid, std::move(variance));
  if (value.size() != f.components())
    throw ShapeMismatch("constant value has wrong component count");
  Eigen::Matrix<S, 1, Eigen::Dynamic> row(value.size());
  for (Eigen::Index c = 0; c < value.size(); ++c) row(c) = value.derived()(c);
  f.data().rowwise() = row.array();
  return f;
}

/// Scalar field sampled from a callable f(x1, x2, x3, x4).
template <typename S, typename Fn>
ScalarField<S> sample(const Grid4<S> &grid, Fn &&fn) {
  ScalarField<S> f(grid);
  for (typename Grid4<S>::Index p = 0; p < grid.size(); ++p) {
    const auto x = grid.coordinates(p);
    f.data()(p, 0) = fn(x[0], x[1], x[2], x[3]);
  }
  return f;
}

/// Rank-2 field sampled from a callable returning a 4x4 matrix at x.
template <typename S, typename Fn>
TensorField<S> sample_mat4(const Grid4<S> &grid, Variance variance, Fn &&fn) {
  TensorField<S> f(grid, std::move(variance));
  for (typename Grid4<S>::Index p = 0; p < grid.size(); ++p) {
    const auto x = grid.coordinates(p);
    set_mat4<S>(f, p, fn(x));
  }
  return f;
}

/// Every point transformed by a 4x4 matrix map, M -> fn(M).
template <typename S, typename Fn>
TensorField<S> map_mat4(const TensorField<S> &f, Variance variance, Fn &&fn) {
  TensorField<S> out(f.grid(), std::move(variance));
  for (typename Grid4<S>::Index p = 0; p < f.points(); ++p)
    set_mat4<S>(out, p, fn(mat4(f, p)));
  return out;
}

template <typename S>
ScalarField<S> component_field(const TensorField<S> &f,
                               typename TensorField<S>::Index c) {
  ScalarField<S> out(f.grid());
  out.data().col(0) = f.data().col(c);
  return out;
}

} // namespace akcy
