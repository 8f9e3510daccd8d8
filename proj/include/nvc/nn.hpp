#pragma once

#include <string>
#include <utility>
#include <vector>

#include "nvc/ops.hpp"
#include "nvc/rng.hpp"

NVC_BEGIN_NAMESPACE

struct Parameter {
  std::string name;  // dotted path, unique within a model
  Tensor tensor;
};

// Owner of named parameters and child modules. Children are registered by
// reference, so modules are neither copyable nor movable.
class Module {
 public:
  Module() = default;
  Module(const Module&) = delete;
  Module& operator=(const Module&) = delete;
  virtual ~Module() = default;

  // All parameters in registration order, named by their dotted path.
  std::vector<Parameter> parameters(const std::string& prefix = "") const;
  std::size_t parameter_count() const;
  void zero_grad();

 protected:
  Tensor& register_parameter(const std::string& name, Tensor& t);
  void register_module(const std::string& name, Module& m);

 private:
  void collect(const std::string& prefix, std::vector<Parameter>& out) const;

  std::vector<std::pair<std::string, Tensor*>> params_;
  std::vector<std::pair<std::string, Module*>> children_;
};

// Uniform(-b, b) with b = sqrt(3 / fan_in).
Tensor init_weight(const Shape& shape, int fan_in, Rng& rng);

class Conv2d : public Module {
 public:
  Conv2d(int in, int out, int kernel, int stride, int pad, Rng& rng, bool bias = true);
  Tensor forward(const Tensor& x) const;
  void zero_();

  Tensor weight;
  Tensor bias;
  int stride;
  int pad;
};

class ConvTranspose2d : public Module {
 public:
  ConvTranspose2d(int in, int out, int kernel, int stride, int pad, int output_padding, Rng& rng);
  Tensor forward(const Tensor& x) const;

  Tensor weight;
  Tensor bias;
  int stride;
  int pad;
  int output_padding;
};

// GDN / IGDN with beta = softplus(beta_raw) + 1e-6 and likewise for gamma.
// Initialized to beta = 1, gamma = 0.1 I.
class Gdn : public Module {
 public:
  Gdn(int channels, bool inverse);
  Tensor forward(const Tensor& x) const;
  Tensor beta() const;
  Tensor gamma() const;

  Tensor beta_raw;
  Tensor gamma_raw;
  bool inverse;
};

class PRelu : public Module {
 public:
  explicit PRelu(int channels, double init = 0.25);
  Tensor forward(const Tensor& x) const { return ops::prelu(x, slope); }

  Tensor slope;
};

// conv3x3 -> activation -> conv3x3, plus identity skip. The activation is GDN
// in the texture transforms and PReLU in the processing network.
class ResBlock : public Module {
 public:
  enum class Act { Gdn, PRelu };
  ResBlock(int channels, Act act, Rng& rng);
  Tensor forward(const Tensor& x) const;

  Conv2d conv1;
  Conv2d conv2;

 private:
  Act act_;
  Gdn gdn_;
  PRelu prelu_;
};

// Convolution whose kernel only sees positions strictly before the centre in
// raster order (rows above, and the left part of the centre row), for every
// input channel.
class MaskedConv2d : public Module {
 public:
  MaskedConv2d(int in, int out, int kernel, Rng& rng);
  Tensor forward(const Tensor& x) const;
  // weight * mask, no tape.
  Tensor masked_weight() const;
  bool tap_live(int ky, int kx) const;

  Tensor weight;
  Tensor bias;
  Tensor mask;
  int kernel;
};

struct RecurrentState {
  Tensor c;
  Tensor h;

  static RecurrentState zeros(int batch, int channels, int height, int width);
  bool defined() const { return c.defined() && h.defined(); }
};

// ConvLSTM: one convolution over [x, h] yields the i, f, o, g gate planes.
// c' = sigmoid(f) c + sigmoid(i) tanh(g), h' = sigmoid(o) tanh(c').
class ConvLstmCell : public Module {
 public:
  ConvLstmCell(int in, int hidden, int kernel, Rng& rng);
  RecurrentState forward(const Tensor& x, const RecurrentState& state) const;
  RecurrentState initial_state(int batch, int height, int width) const;
  int hidden() const { return hidden_; }

  Conv2d gates;

 private:
  int hidden_;
};

NVC_END_NAMESPACE
