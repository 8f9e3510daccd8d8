#pragma once

#include <vector>

#include "nvc/nn.hpp"

NVC_BEGIN_NAMESPACE

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(std::vector<Parameter> params, AdamOptions opt = {});

  // In-place update of every parameter; throws if one has no gradient.
  void step();
  void zero_grad();
  void set_lr(double lr) { opt_.lr = lr; }
  double lr() const { return opt_.lr; }
  long steps() const { return t_; }
  const std::vector<Parameter>& params() const { return params_; }

 private:
  std::vector<Parameter> params_;
  AdamOptions opt_;
  std::vector<std::vector<double>> m_, v_;
  long t_ = 0;
};

// lr0 * 0.5^floor(epoch / period)
double step_decay_lr(double lr0, int epoch, int period = 30);

// Rescales gradients so their global L2 norm is at most max_norm; returns the
// norm before clipping.
double clip_grad_norm(const std::vector<Parameter>& params, double max_norm);

NVC_END_NAMESPACE
