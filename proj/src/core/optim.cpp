#include "nvc/optim.hpp"

#include <cmath>

#include "nvc/error.hpp"

NVC_BEGIN_NAMESPACE

Adam::Adam(std::vector<Parameter> params, AdamOptions opt) : params_(std::move(params)), opt_(opt) {
  for (const auto& p : params_) {
    m_.emplace_back(p.tensor.numel(), 0.0);
    v_.emplace_back(p.tensor.numel(), 0.0);
  }
}

void Adam::step() {
  for (const auto& p : params_) {
    if (!p.tensor.has_grad()) throw Error("adam: parameter " + p.name + " has no gradient");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor t = params_[k].tensor;
    auto data = t.data();
    auto grad = std::as_const(t).grad();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double g = grad[i];
      m[i] = opt_.beta1 * m[i] + (1 - opt_.beta1) * g;
      v[i] = opt_.beta2 * v[i] + (1 - opt_.beta2) * g * g;
      data[i] -= static_cast<Scalar>(opt_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + opt_.eps));
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

double step_decay_lr(double lr0, int epoch, int period) {
  if (period <= 0) throw Error("lr schedule: period must be positive");
  return lr0 * std::pow(0.5, epoch / period);
}

double clip_grad_norm(const std::vector<Parameter>& params, double max_norm) {
  double sq = 0;
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (Scalar g : std::as_const(p.tensor).grad()) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0) {
    const auto scale = static_cast<Scalar>(max_norm / norm);
    for (auto p : params) {
      if (!p.tensor.has_grad()) continue;
      for (Scalar& g : p.tensor.grad()) g *= scale;
    }
  }
  return norm;
}

NVC_END_NAMESPACE
