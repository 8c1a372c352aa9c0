#include "igcam/tensor.hpp"

#include <cmath>

#include "igcam/error.hpp"

namespace igcam {

std::size_t shape_product(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int e : shape) n *= static_cast<std::size_t>(e);
  return n;
}

std::string shape_to_string(const std::vector<int>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  s += ")";
  return s;
}

namespace {

void check_shape(const std::vector<int>& shape) {
  if (shape.empty() || shape.size() > 4) {
    throw ValidationError("tensor rank must be 1..4, got " +
                          std::to_string(shape.size()));
  }
  for (int e : shape) {
    if (e <= 0) {
      throw ValidationError("tensor extents must be positive, got " +
                            shape_to_string(shape));
    }
  }
}

}  // namespace

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(shape_product(shape_), 0.0);
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (data_.size() != shape_product(shape_)) {
    throw ValidationError("tensor data length " + std::to_string(data_.size()) +
                          " does not match shape " + shape_to_string(shape_));
  }
}

Tensor Tensor::full(std::vector<int> shape, double value) {
  Tensor t(std::move(shape));
  for (double& v : t.data_) v = value;
  return t;
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor Tensor::reshaped(std::vector<int> shape) const {
  check_shape(shape);
  if (shape_product(shape) != data_.size()) {
    throw ValidationError("reshape " + shape_string() + " -> " +
                          shape_to_string(shape) + " changes element count");
  }
  return Tensor(std::move(shape), data_);
}

std::string Tensor::shape_string() const { return shape_to_string(shape_); }

}  // namespace igcam
