#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace bp {

// Dense row-major tensor of 64-bit reals. The carrier type for latents,
// noise, velocities and weights. Public operations reject non-finite
// values; see require_finite().
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);  // zero-filled
  Tensor(std::vector<int> shape, std::vector<double> data);

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int> shape, double value);
  static Tensor scalar(double value);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // 2-D accessors; rank must be 2.
  int rows() const;
  int cols() const;
  double& at(int r, int c);
  double at(int r, int c) const;

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  std::string shape_str() const;

  Tensor reshape(std::vector<int> new_shape) const;  // same element count
  Tensor row_matrix() const;                         // rank-1 [n] -> [1,n]
  Tensor flatten() const;                            // any rank -> [n]

  bool all_finite() const;
  void require_finite(const std::string& what) const;  // throws on NaN/Inf

  bool operator==(const Tensor& other) const {
    return shape_ == other.shape_ && data_ == other.data_;
  }

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

std::size_t checked_numel(const std::vector<int>& shape);

// Elementwise helpers used by the bridge/sampler code paths (the autodiff
// graph has its own op kernels).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor hadamard(const Tensor& a, const Tensor& b);
// ca*a + cb*b, shapes must match.
Tensor lincomb(double ca, const Tensor& a, double cb, const Tensor& b);
double mean(const Tensor& a);
double squared_error_sum(const Tensor& a, const Tensor& b);

}  // namespace bp
