#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "gml/error.hpp"

namespace gml {

using Shape = std::vector<std::int64_t>;

std::string shape_to_string(const Shape& shape);

/// Dense rank-2/3 field of doubles in row-major order. The same type holds
/// images, probability maps and binary masks; which role a grid plays is a
/// property of its values, checked by is_probability() / is_mask().
class Grid {
 public:
  Grid() = default;

  /// Throws InvalidShape for an empty shape or any extent < 1.
  explicit Grid(Shape shape, double fill = 0.0);
  Grid(Shape shape, std::vector<double> data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::int64_t extent(std::size_t axis) const { return shape_.at(axis); }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  double sum() const noexcept;
  bool is_probability() const noexcept;
  bool is_mask() const noexcept;

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Throws ShapeMismatch with `context` in the message when shapes differ.
void require_same_shape(const Grid& a, const Grid& b, std::string_view context);

template <typename F>
Grid map2(const Grid& a, const Grid& b, F&& f) {
  require_same_shape(a, b, "map2");
  Grid out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

template <typename F>
Grid map1(const Grid& a, F&& f) {
  Grid out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

}  // namespace gml
