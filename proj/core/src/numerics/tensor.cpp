#include "lencon/numerics/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>
#include <utility>

namespace lencon {

std::string shape_string(const Shape& dims) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) out << 'x';
    out << dims[i];
  }
  out << ']';
  return out.str();
}

std::size_t shape_size(const Shape& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         std::multiplies<>());
}

Tensor::Tensor(Shape dims, double fill)
    : dims_(std::move(dims)), values_(shape_size(dims_), fill) {}

Tensor::Tensor(Shape dims, std::vector<double> values)
    : dims_(std::move(dims)), values_(values.begin(), values.end()) {
  if (shape_size(dims_) != values_.size()) {
    throw ShapeError("tensor of shape " + shape_string(dims_) + " given " +
                     std::to_string(values_.size()) + " values");
  }
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

std::size_t Tensor::rows() const {
  if (dims_.size() <= 1) return 1;
  return dims_.front();
}

std::size_t Tensor::cols() const {
  if (dims_.empty()) return values_.size();
  if (dims_.size() == 1) return dims_[0];
  return values_.size() / std::max<std::size_t>(dims_.front(), 1);
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

void Tensor::reshape(Shape dims) {
  if (shape_size(dims) != values_.size()) {
    throw ShapeError("cannot reshape " + shape_string(dims_) + " to " +
                     shape_string(dims));
  }
  dims_ = std::move(dims);
}

Parameter::Parameter(std::string n, Tensor v)
    : name(std::move(n)), value(std::move(v)), grad(value.dims()) {}

void Parameter::zero_grad() {
  if (grad.dims() != value.dims()) {
    grad = Tensor(value.dims());
  } else {
    grad.fill(0.0);
  }
}

}  // namespace lencon
