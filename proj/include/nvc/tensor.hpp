#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nvc/config.hpp"

namespace nvc {
class Rng;
}

NVC_BEGIN_NAMESPACE

using Shape = std::vector<int>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

struct TensorImpl {
  Shape shape;
  std::vector<Scalar> data;
  std::vector<Scalar> grad;  // empty until a backward pass touches it
  bool requires_grad = false;
  std::uint64_t tape_id = 0;  // tape that produced this tensor, 0 for leaves
};

// Reference-counted handle to a dense row-major array. Copies share storage;
// use clone() for a deep copy. 4-D tensors are laid out (batch, channel,
// height, width).
class Tensor {
 public:
  Tensor();
  explicit Tensor(Shape shape, Scalar fill = 0);
  Tensor(Shape shape, std::vector<Scalar> values);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0); }
  static Tensor full(Shape shape, Scalar value) { return Tensor(std::move(shape), value); }
  static Tensor scalar(Scalar value) { return Tensor(Shape{}, value); }
  static Tensor uniform(Shape shape, Rng& rng, double lo, double hi);
  static Tensor normal(Shape shape, Rng& rng, double mean, double stddev);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int rank() const { return static_cast<int>(impl_->shape.size()); }
  int dim(int axis) const;
  std::size_t numel() const { return impl_->data.size(); }

  std::span<Scalar> data() { return impl_->data; }
  std::span<const Scalar> data() const { return impl_->data; }
  Scalar* ptr() { return impl_->data.data(); }
  const Scalar* ptr() const { return impl_->data.data(); }
  Scalar item() const;
  Scalar& at(int n, int c, int y, int x);
  Scalar at(int n, int c, int y, int x) const;

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool on);
  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<Scalar> grad();
  std::span<const Scalar> grad() const;
  void zero_grad();

  // Fresh leaf with copied data and no history.
  Tensor detach() const;
  Tensor clone() const { return detach(); }
  Tensor reshape(Shape shape) const;

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }
  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<TensorImpl> impl_;
};

void require_shape(const Tensor& t, const Shape& expected, const char* what);
void require_rank(const Tensor& t, int rank, const char* what);

NVC_END_NAMESPACE
