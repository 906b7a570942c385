#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ser::nn {

// Dense row-major array of doubles.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape_, double fill = 0.0);

  static Tensor zeros(std::initializer_list<std::size_t> shape) { return Tensor(std::vector<std::size_t>(shape)); }

  std::size_t size() const { return data.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }

  // Contiguous slice along the leading axis.
  std::span<double> slice(std::size_t i);
  std::span<const double> slice(std::size_t i) const;

  std::string shape_string() const;
};

// ShapeError unless t.shape == expected.
void expect_shape(const Tensor& t, std::initializer_list<std::size_t> expected, const char* what);

// Error when any element is NaN or infinite.
void check_finite(const Tensor& t, const char* what);

}  // namespace ser::nn
