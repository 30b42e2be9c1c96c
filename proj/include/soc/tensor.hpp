#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include "soc/error.hpp"

namespace soc {

using Shape = std::vector<int>;

int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {
struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until gradient first accumulates
  bool requires_grad = false;
};
}  // namespace detail

// Dense row-major tensor of 64-bit reals. Value-semantic handle: copies share
// storage. Data is immutable after an op produces it; only grad accumulates.
class Tensor {
 public:
  Tensor() = default;

  Tensor(Shape shape, double fill, bool requires_grad = false);
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    return Tensor(std::move(shape), 0.0, requires_grad);
  }
  static Tensor full(Shape shape, double v, bool requires_grad = false) {
    return Tensor(std::move(shape), v, requires_grad);
  }
  static Tensor scalar(double v, bool requires_grad = false) {
    return Tensor(Shape{1}, std::vector<double>{v}, requires_grad);
  }

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int rank() const { return static_cast<int>(impl_->shape.size()); }
  int dim(int axis) const { return impl_->shape[static_cast<size_t>(axis)]; }
  int64_t size() const { return static_cast<int64_t>(impl_->data.size()); }

  double* data() { return impl_->data.data(); }
  const double* data() const { return impl_->data.data(); }
  std::vector<double>& vec() { return impl_->data; }
  const std::vector<double>& vec() const { return impl_->data; }

  // Scalar read; contract: size() == 1.
  double value() const;

  double at(std::initializer_list<int> idx) const;
  double& at_mut(std::initializer_list<int> idx);

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool rg) { impl_->requires_grad = rg; }

  bool has_grad() const { return !impl_->grad.empty(); }
  // Allocates (zero-filled) on first access.
  std::vector<double>& grad();
  const std::vector<double>& grad() const { return impl_->grad; }
  void zero_grad();

  // Same storage, gradient flow severed.
  Tensor detach() const;
  // Deep copy of data (grad not copied).
  Tensor clone() const;

  // Storage identity; parameter-sharing assertions compare these.
  uintptr_t id() const { return reinterpret_cast<uintptr_t>(impl_.get()); }

  bool all_finite() const;

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

void check_same_shape(const Tensor& a, const Tensor& b, const char* op);

}  // namespace soc
