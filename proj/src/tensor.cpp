#include "bp/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace bp {

std::size_t checked_numel(const std::vector<int>& shape) {
  if (shape.empty()) throw std::invalid_argument("tensor shape must be non-empty");
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("tensor dims must be positive");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)), data_(checked_numel(shape_), 0.0) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (checked_numel(shape_) != data_.size())
    throw std::invalid_argument("tensor data length does not match shape");
}

Tensor Tensor::full(std::vector<int> shape, double value) {
  Tensor t(std::move(shape));
  for (auto& x : t.data_) x = value;
  return t;
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

int Tensor::rows() const {
  if (rank() != 2) throw std::logic_error("rows(): tensor is not 2-D, shape " + shape_str());
  return shape_[0];
}

int Tensor::cols() const {
  if (rank() != 2) throw std::logic_error("cols(): tensor is not 2-D, shape " + shape_str());
  return shape_[1];
}

double& Tensor::at(int r, int c) {
  return data_[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols()) +
               static_cast<std::size_t>(c)];
}

double Tensor::at(int r, int c) const {
  return data_[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols()) +
               static_cast<std::size_t>(c)];
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << 'x';
    os << shape_[i];
  }
  os << ']';
  return os.str();
}

Tensor Tensor::reshape(std::vector<int> new_shape) const {
  if (checked_numel(new_shape) != data_.size())
    throw std::invalid_argument("reshape: element count mismatch, " + shape_str());
  return Tensor(std::move(new_shape), data_);
}

Tensor Tensor::row_matrix() const {
  if (rank() == 2) return *this;
  if (rank() == 1) return reshape({1, shape_[0]});
  throw std::invalid_argument("row_matrix: expected rank 1 or 2, got " + shape_str());
}

Tensor Tensor::flatten() const { return reshape({static_cast<int>(size())}); }

bool Tensor::all_finite() const {
  for (double x : data_)
    if (!std::isfinite(x)) return false;
  return true;
}

void Tensor::require_finite(const std::string& what) const {
  if (!all_finite()) throw std::runtime_error(what + ": non-finite value in tensor " + shape_str());
}

namespace {
void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                                b.shape_str());
}
}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  out.require_finite("add");
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  out.require_finite("sub");
  return out;
}

Tensor scale(const Tensor& a, double factor) {
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= factor;
  out.require_finite("scale");
  return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "hadamard");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  out.require_finite("hadamard");
  return out;
}

Tensor lincomb(double ca, const Tensor& a, double cb, const Tensor& b) {
  require_same_shape(a, b, "lincomb");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ca * a[i] + cb * b[i];
  out.require_finite("lincomb");
  return out;
}

double mean(const Tensor& a) {
  if (a.empty()) throw std::invalid_argument("mean of empty tensor");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i];
  return s / static_cast<double>(a.size());
}

double squared_error_sum(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "squared_error_sum");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace bp
