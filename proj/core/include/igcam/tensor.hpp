#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace igcam {

// Dense row-major tensor of 64-bit floats, rank 1..4.
// Rank-3 tensors are interpreted as (C,H,W), rank-1 as flat vectors.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);  // zero-filled
  Tensor(std::vector<int> shape, std::vector<double> data);

  static Tensor full(std::vector<int> shape, double value);
  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }

  int rank() const { return static_cast<int>(shape_.size()); }
  const std::vector<int>& shape() const { return shape_; }
  int extent(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Rank-3 (C,H,W) element access.
  double& at(int c, int y, int x) {
    return data_[(static_cast<std::size_t>(c) * shape_[1] + y) * shape_[2] + x];
  }
  double at(int c, int y, int x) const {
    return data_[(static_cast<std::size_t>(c) * shape_[1] + y) * shape_[2] + x];
  }

  // Rank-2 (H,W) element access.
  double& at(int y, int x) {
    return data_[static_cast<std::size_t>(y) * shape_[1] + x];
  }
  double at(int y, int x) const {
    return data_[static_cast<std::size_t>(y) * shape_[1] + x];
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  // Same data, new shape (product of extents must match).
  Tensor reshaped(std::vector<int> shape) const;

  std::string shape_string() const;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

std::size_t shape_product(const std::vector<int>& shape);
std::string shape_to_string(const std::vector<int>& shape);

}  // namespace igcam
