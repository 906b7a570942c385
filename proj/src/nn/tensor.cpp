#include "ser/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "ser/error.hpp"

namespace ser::nn {

Tensor::Tensor(std::vector<std::size_t> shape_, double fill)
    : shape(std::move(shape_)),
      data(std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>()), fill) {}

std::span<double> Tensor::slice(std::size_t i) {
  const std::size_t stride = data.size() / shape.at(0);
  return {data.data() + i * stride, stride};
}

std::span<const double> Tensor::slice(std::size_t i) const {
  const std::size_t stride = data.size() / shape.at(0);
  return {data.data() + i * stride, stride};
}

std::string Tensor::shape_string() const {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

void expect_shape(const Tensor& t, std::initializer_list<std::size_t> expected, const char* what) {
  if (!std::equal(t.shape.begin(), t.shape.end(), expected.begin(), expected.end())) {
    Tensor want(std::vector<std::size_t>(expected), 0.0);
    throw ShapeError(std::string(what) + ": expected " + want.shape_string() + ", got " + t.shape_string());
  }
}

void check_finite(const Tensor& t, const char* what) {
  if (!std::all_of(t.data.begin(), t.data.end(), [](double v) { return std::isfinite(v); })) {
    throw Error(std::string(what) + ": non-finite value");
  }
}

}  // namespace ser::nn
