#include "soc/tensor.hpp"

#include <cmath>
#include <sstream>

namespace soc {

int64_t shape_numel(const Shape& shape) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

namespace {
void check_shape_positive(const Shape& shape) {
  for (int d : shape) {
    if (d <= 0) throw ShapeError("tensor dims must be positive, got " + shape_str(shape));
  }
}
}  // namespace

Tensor::Tensor(Shape shape, double fill, bool requires_grad) {
  check_shape_positive(shape);
  impl_ = std::make_shared<detail::TensorImpl>();
  impl_->data.assign(static_cast<size_t>(shape_numel(shape)), fill);
  impl_->shape = std::move(shape);
  impl_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) {
  check_shape_positive(shape);
  if (shape_numel(shape) != static_cast<int64_t>(data.size())) {
    throw ShapeError("data length " + std::to_string(data.size()) + " does not match shape " +
                     shape_str(shape));
  }
  impl_ = std::make_shared<detail::TensorImpl>();
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
}

double Tensor::value() const {
  if (size() != 1) throw ContractError("value() requires a scalar tensor, got " + shape_str(shape()));
  return impl_->data[0];
}

namespace {
size_t flat_index(const Shape& shape, std::initializer_list<int> idx) {
  if (idx.size() != shape.size()) {
    throw ShapeError("index rank " + std::to_string(idx.size()) + " vs tensor rank " +
                     std::to_string(shape.size()));
  }
  size_t flat = 0;
  size_t axis = 0;
  for (int i : idx) {
    flat = flat * static_cast<size_t>(shape[axis]) + static_cast<size_t>(i);
    ++axis;
  }
  return flat;
}
}  // namespace

double Tensor::at(std::initializer_list<int> idx) const {
  return impl_->data[flat_index(impl_->shape, idx)];
}

double& Tensor::at_mut(std::initializer_list<int> idx) {
  return impl_->data[flat_index(impl_->shape, idx)];
}

std::vector<double>& Tensor::grad() {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (!impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
}

Tensor Tensor::detach() const {
  Tensor t;
  t.impl_ = std::make_shared<detail::TensorImpl>();
  t.impl_->shape = impl_->shape;
  t.impl_->data = impl_->data;  // copy: detached view must not alias grad bookkeeping
  t.impl_->requires_grad = false;
  return t;
}

Tensor Tensor::clone() const {
  Tensor t;
  t.impl_ = std::make_shared<detail::TensorImpl>();
  t.impl_->shape = impl_->shape;
  t.impl_->data = impl_->data;
  t.impl_->requires_grad = impl_->requires_grad;
  return t;
}

bool Tensor::all_finite() const {
  for (double v : impl_->data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

}  // namespace soc
