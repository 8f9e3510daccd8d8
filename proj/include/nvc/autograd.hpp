#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <vector>

#include "nvc/tensor.hpp"

NVC_BEGIN_NAMESPACE

// Ordered record of the differentiable operations executed while the tape is
// active on the current thread. Ops append a closure that maps the output
// gradient onto input gradients; backward() replays them newest first, which
// is a valid reverse topological order because an op is recorded only after
// all of its inputs exist.
//
// A tape is single-use: one training step, one backward().
class Tape {
 public:
  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  std::uint64_t id() const { return id_; }
  std::size_t size() const { return entries_.size(); }
  bool consumed() const { return consumed_; }

  void record(std::function<void()> backward_fn) { entries_.push_back(std::move(backward_fn)); }

  // Seeds d(loss)/d(loss) = 1 and propagates to every requires_grad tensor.
  void backward(const Tensor& loss);

  // Tape active on this thread, or nullptr (inference mode).
  static Tape* current();

 private:
  friend class TapeScope;
  std::uint64_t id_;
  bool consumed_ = false;
  std::vector<std::function<void()>> entries_;
};

// RAII activation of a tape on the current thread.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

// Runs backward on the tape that produced `loss`.
void backward(const Tensor& loss);

namespace autograd {

// True when a tape is active and at least one input requires a gradient.
bool should_record(std::initializer_list<const Tensor*> inputs);

// Marks `out` as produced on the active tape.
void mark_output(Tensor& out);

// grad(dst) += values, allocating the gradient buffer on first use.
void accumulate(TensorImpl& dst, std::span<const Scalar> values);
std::span<Scalar> grad_buffer(TensorImpl& t);

}  // namespace autograd

NVC_END_NAMESPACE
