#include "gml/grid.hpp"

#include <numeric>

namespace gml {

namespace {

std::size_t checked_element_count(const Shape& shape) {
  if (shape.empty()) throw Error(ErrorCode::InvalidShape, "grid needs at least one extent");
  std::size_t n = 1;
  for (auto e : shape) {
    if (e < 1) throw Error(ErrorCode::InvalidShape, "extent < 1 in " + shape_to_string(shape));
    n *= static_cast<std::size_t>(e);
  }
  return n;
}

}  // namespace

std::string shape_to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Grid::Grid(Shape shape, double fill)
    : shape_(std::move(shape)), data_(checked_element_count(shape_), fill) {}

Grid::Grid(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (checked_element_count(shape_) != data_.size()) {
    throw Error(ErrorCode::InvalidShape, "data length " + std::to_string(data_.size()) +
                                             " does not match shape " + shape_to_string(shape_));
  }
}

double Grid::sum() const noexcept { return std::accumulate(data_.begin(), data_.end(), 0.0); }

bool Grid::is_probability() const noexcept {
  for (double v : data_)
    if (!(v >= 0.0 && v <= 1.0)) return false;
  return true;
}

bool Grid::is_mask() const noexcept {
  for (double v : data_)
    if (v != 0.0 && v != 1.0) return false;
  return true;
}

void require_same_shape(const Grid& a, const Grid& b, std::string_view context) {
  if (a.shape() != b.shape()) {
    throw Error(ErrorCode::ShapeMismatch, std::string(context) + ": " + shape_to_string(a.shape()) +
                                              " vs " + shape_to_string(b.shape()));
  }
}

}  // namespace gml
