#include "nvc/nn.hpp"

#include <cmath>
#include <set>

#include "nvc/error.hpp"

NVC_BEGIN_NAMESPACE

std::vector<Parameter> Module::parameters(const std::string& prefix) const {
  std::vector<Parameter> out;
  collect(prefix, out);
  std::set<std::string> seen;
  for (const auto& p : out) {
    if (!seen.insert(p.name).second) throw Error("duplicate parameter name " + p.name);
  }
  return out;
}

void Module::collect(const std::string& prefix, std::vector<Parameter>& out) const {
  const std::string dot = prefix.empty() ? "" : prefix + ".";
  for (const auto& [name, t] : params_) out.push_back({dot + name, *t});
  for (const auto& [name, m] : children_) m->collect(dot + name, out);
}

std::size_t Module::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.tensor.numel();
  return n;
}

void Module::zero_grad() {
  for (auto& p : parameters()) p.tensor.zero_grad();
}

Tensor& Module::register_parameter(const std::string& name, Tensor& t) {
  t.set_requires_grad(true);
  params_.emplace_back(name, &t);
  return t;
}

void Module::register_module(const std::string& name, Module& m) { children_.emplace_back(name, &m); }

Tensor init_weight(const Shape& shape, int fan_in, Rng& rng) {
  const double b = std::sqrt(3.0 / std::max(fan_in, 1));
  return Tensor::uniform(shape, rng, -b, b);
}

Conv2d::Conv2d(int in, int out, int kernel, int stride_, int pad_, Rng& rng, bool with_bias)
    : stride(stride_), pad(pad_) {
  weight = init_weight({out, in, kernel, kernel}, in * kernel * kernel, rng);
  register_parameter("weight", weight);
  if (with_bias) {
    bias = Tensor::zeros({out});
    register_parameter("bias", bias);
  }
}

Tensor Conv2d::forward(const Tensor& x) const { return ops::conv2d(x, weight, bias, stride, pad); }

void Conv2d::zero_() {
  for (auto& v : weight.data()) v = 0;
  if (bias.defined())
    for (auto& v : bias.data()) v = 0;
}

ConvTranspose2d::ConvTranspose2d(int in, int out, int kernel, int stride_, int pad_, int output_padding_, Rng& rng)
    : stride(stride_), pad(pad_), output_padding(output_padding_) {
  weight = init_weight({in, out, kernel, kernel}, std::max(1, in * kernel * kernel / (stride_ * stride_)), rng);
  bias = Tensor::zeros({out});
  register_parameter("weight", weight);
  register_parameter("bias", bias);
}

Tensor ConvTranspose2d::forward(const Tensor& x) const {
  return ops::conv2d_transpose(x, weight, bias, stride, pad, output_padding);
}

namespace {
constexpr double kGdnFloor = 1e-6;
double softplus_inverse(double y) { return std::log(std::expm1(y)); }
}  // namespace

Gdn::Gdn(int channels, bool inverse_) : inverse(inverse_) {
  beta_raw = Tensor::full({channels}, static_cast<Scalar>(softplus_inverse(1.0 - kGdnFloor)));
  gamma_raw = Tensor::full({channels, channels}, Scalar(-10));
  for (int i = 0; i < channels; ++i) {
    gamma_raw.data()[static_cast<std::size_t>(i) * channels + i] = static_cast<Scalar>(softplus_inverse(0.1));
  }
  register_parameter("beta", beta_raw);
  register_parameter("gamma", gamma_raw);
}

Tensor Gdn::beta() const { return ops::add_scalar(ops::softplus(beta_raw), Scalar(kGdnFloor)); }
Tensor Gdn::gamma() const { return ops::add_scalar(ops::softplus(gamma_raw), Scalar(kGdnFloor)); }

Tensor Gdn::forward(const Tensor& x) const { return ops::gdn(x, beta(), gamma(), inverse); }

PRelu::PRelu(int channels, double init) {
  slope = Tensor::full({channels}, static_cast<Scalar>(init));
  register_parameter("slope", slope);
}

ResBlock::ResBlock(int channels, Act act, Rng& rng)
    : conv1(channels, channels, 3, 1, 1, rng),
      conv2(channels, channels, 3, 1, 1, rng),
      act_(act),
      gdn_(channels, false),
      prelu_(channels) {
  register_module("conv1", conv1);
  register_module("conv2", conv2);
  if (act_ == Act::Gdn) {
    register_module("gdn", gdn_);
  } else {
    register_module("act", prelu_);
  }
}

Tensor ResBlock::forward(const Tensor& x) const {
  Tensor h = conv1.forward(x);
  h = act_ == Act::Gdn ? gdn_.forward(h) : prelu_.forward(h);
  return ops::add(x, conv2.forward(h));
}

MaskedConv2d::MaskedConv2d(int in, int out, int kernel_, Rng& rng) : kernel(kernel_) {
  if (kernel % 2 == 0) throw ShapeError("masked conv kernel must be odd");
  const int live = kernel * (kernel / 2) + kernel / 2;
  weight = init_weight({out, in, kernel, kernel}, in * live, rng);
  bias = Tensor::zeros({out});
  mask = Tensor::zeros({out, in, kernel, kernel});
  for (int o = 0; o < out; ++o)
    for (int i = 0; i < in; ++i)
      for (int ky = 0; ky < kernel; ++ky)
        for (int kx = 0; kx < kernel; ++kx) {
          if (tap_live(ky, kx)) mask.data()[((static_cast<std::size_t>(o) * in + i) * kernel + ky) * kernel + kx] = 1;
        }
  for (std::size_t k = 0; k < weight.numel(); ++k) weight.data()[k] *= mask.data()[k];
  register_parameter("weight", weight);
  register_parameter("bias", bias);
}

bool MaskedConv2d::tap_live(int ky, int kx) const {
  const int c = kernel / 2;
  return ky < c || (ky == c && kx < c);
}

Tensor MaskedConv2d::forward(const Tensor& x) const {
  return ops::conv2d(x, ops::mul(weight, mask), bias, 1, kernel / 2);
}

Tensor MaskedConv2d::masked_weight() const {
  Tensor w(weight.shape());
  for (std::size_t k = 0; k < w.numel(); ++k) w.data()[k] = weight.data()[k] * mask.data()[k];
  return w;
}

RecurrentState RecurrentState::zeros(int batch, int channels, int height, int width) {
  return {Tensor::zeros({batch, channels, height, width}), Tensor::zeros({batch, channels, height, width})};
}

ConvLstmCell::ConvLstmCell(int in, int hidden, int kernel, Rng& rng)
    : gates(in + hidden, 4 * hidden, kernel, 1, kernel / 2, rng), hidden_(hidden) {
  register_module("gates", gates);
}

RecurrentState ConvLstmCell::initial_state(int batch, int height, int width) const {
  return RecurrentState::zeros(batch, hidden_, height, width);
}

RecurrentState ConvLstmCell::forward(const Tensor& x, const RecurrentState& state) const {
  require_rank(x, 4, "convlstm input");
  if (!state.defined()) throw Error("convlstm: undefined recurrent state");
  const Shape expect{x.dim(0), hidden_, x.dim(2), x.dim(3)};
  if (state.c.shape() != expect || state.h.shape() != expect) {
    throw ShapeError("convlstm: state " + shape_string(state.h.shape()) + " does not match input " +
                     shape_string(x.shape()) + " with " + std::to_string(hidden_) + " hidden channels");
  }
  const Tensor z = gates.forward(ops::concat_channels({x, state.h}));
  const Tensor i = ops::sigmoid(ops::slice_channels(z, 0, hidden_));
  const Tensor f = ops::sigmoid(ops::slice_channels(z, hidden_, hidden_));
  const Tensor o = ops::sigmoid(ops::slice_channels(z, 2 * hidden_, hidden_));
  const Tensor g = ops::tanh(ops::slice_channels(z, 3 * hidden_, hidden_));
  RecurrentState next;
  next.c = ops::add(ops::mul(f, state.c), ops::mul(i, g));
  next.h = ops::mul(o, ops::tanh(next.c));
  return next;
}

NVC_END_NAMESPACE
