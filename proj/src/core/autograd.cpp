#include "nvc/autograd.hpp"

#include <atomic>

#include "nvc/error.hpp"

NVC_BEGIN_NAMESPACE

namespace {
thread_local Tape* active_tape = nullptr;
std::atomic<std::uint64_t> next_tape_id{1};
}  // namespace

Tape::Tape() : id_(next_tape_id.fetch_add(1)) {}

Tape* Tape::current() { return active_tape; }

void Tape::backward(const Tensor& loss) {
  if (consumed_) throw Error("backward() called twice on the same tape");
  if (!loss.defined() || loss.numel() != 1) {
    throw ShapeError("backward() needs a scalar loss, got shape " +
                     (loss.defined() ? shape_string(loss.shape()) : std::string("<undefined>")));
  }
  if (!loss.requires_grad() || loss.impl()->tape_id != id_) {
    throw Error("backward(): loss is detached from the active tape");
  }
  consumed_ = true;
  autograd::grad_buffer(*loss.impl())[0] += 1;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
  entries_.clear();
}

TapeScope::TapeScope(Tape& tape) : previous_(active_tape) { active_tape = &tape; }
TapeScope::~TapeScope() { active_tape = previous_; }

void backward(const Tensor& loss) {
  Tape* tape = Tape::current();
  if (tape == nullptr) throw Error("backward(): no active tape");
  tape->backward(loss);
}

namespace autograd {

bool should_record(std::initializer_list<const Tensor*> inputs) {
  if (active_tape == nullptr) return false;
  for (const Tensor* t : inputs) {
    if (t != nullptr && t->defined() && t->requires_grad()) return true;
  }
  return false;
}

void mark_output(Tensor& out) {
  out.set_requires_grad(true);
  out.impl()->tape_id = active_tape->id();
}

std::span<Scalar> grad_buffer(TensorImpl& t) {
  if (t.grad.empty()) t.grad.assign(t.data.size(), 0);
  return t.grad;
}

void accumulate(TensorImpl& dst, std::span<const Scalar> values) {
  auto g = grad_buffer(dst);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += values[i];
}

}  // namespace autograd

NVC_END_NAMESPACE
