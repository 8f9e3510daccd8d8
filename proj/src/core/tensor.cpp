#include "nvc/tensor.hpp"

#include <sstream>

#include "nvc/error.hpp"
#include "nvc/rng.hpp"

NVC_BEGIN_NAMESPACE

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (int extent : shape) {
    if (extent < 0) throw ShapeError("negative extent in shape " + shape_string(shape));
    n *= static_cast<std::size_t>(extent);
  }
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ')';
  return os.str();
}

Tensor::Tensor() = default;

Tensor::Tensor(Shape shape, Scalar fill) : impl_(std::make_shared<TensorImpl>()) {
  impl_->data.assign(shape_numel(shape), fill);
  impl_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<Scalar> values) : impl_(std::make_shared<TensorImpl>()) {
  if (values.size() != shape_numel(shape)) {
    throw ShapeError("tensor data length " + std::to_string(values.size()) +
                     " does not match shape " + shape_string(shape));
  }
  impl_->shape = std::move(shape);
  impl_->data = std::move(values);
}

Tensor Tensor::uniform(Shape shape, Rng& rng, double lo, double hi) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<Scalar>(rng.uniform(lo, hi));
  return t;
}

Tensor Tensor::normal(Shape shape, Rng& rng, double mean, double stddev) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<Scalar>(rng.normal(mean, stddev));
  return t;
}

int Tensor::dim(int axis) const {
  if (axis < 0) axis += rank();
  if (axis < 0 || axis >= rank()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                     shape_string(shape()));
  }
  return impl_->shape[static_cast<std::size_t>(axis)];
}

Scalar Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape()));
  return impl_->data[0];
}

Scalar& Tensor::at(int n, int c, int y, int x) {
  const auto& s = impl_->shape;
  return impl_->data[((static_cast<std::size_t>(n) * s[1] + c) * s[2] + y) * s[3] + x];
}

Scalar Tensor::at(int n, int c, int y, int x) const {
  const auto& s = impl_->shape;
  return impl_->data[((static_cast<std::size_t>(n) * s[1] + c) * s[2] + y) * s[3] + x];
}

Tensor& Tensor::set_requires_grad(bool on) {
  impl_->requires_grad = on;
  return *this;
}

std::span<Scalar> Tensor::grad() {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0);
  return impl_->grad;
}

std::span<const Scalar> Tensor::grad() const { return impl_->grad; }

void Tensor::zero_grad() { impl_->grad.clear(); }

Tensor Tensor::detach() const {
  Tensor out(impl_->shape, impl_->data);
  return out;
}

Tensor Tensor::reshape(Shape shape) const {
  if (shape_numel(shape) != numel()) {
    throw ShapeError("cannot reshape " + shape_string(this->shape()) + " to " + shape_string(shape));
  }
  // Shares nothing with the source; reshape is only used on tape-free paths.
  Tensor out(std::move(shape), impl_->data);
  return out;
}

void require_shape(const Tensor& t, const Shape& expected, const char* what) {
  if (t.shape() != expected) {
    throw ShapeError(std::string(what) + ": expected shape " + shape_string(expected) + ", got " +
                     shape_string(t.shape()));
  }
}

void require_rank(const Tensor& t, int rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got shape " +
                     shape_string(t.shape()));
  }
}

NVC_END_NAMESPACE
