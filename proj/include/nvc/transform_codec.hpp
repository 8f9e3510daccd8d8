#pragma once

#include <cstdint>
#include <vector>

#include "nvc/bytes.hpp"
#include "nvc/entropy.hpp"

// Hyperprior autoencoder with an autoregressive context model. Used as the
// intra codec (frames) and, with a temporal prior, as the residual codec.

NVC_BEGIN_NAMESPACE

struct TransformConfig {
  int in_channels = 3;
  int features = 32;        // analysis/synthesis width
  int latent = 32;          // C_y
  int hyper = 16;           // C_z
  int hyper_width = 32;     // hyper analysis/synthesis width
  int hyper_features = 64;  // psi channels at latent resolution
  int context = 64;         // masked conv outputs
  int aggregator = 96;      // hidden width of the 1x1 parameter aggregator
  int temporal = 0;         // channels of the temporal prior, 0 = none
  int context_kernel = 5;
};

// Total down-sampling from pixels to hyper latents.
inline constexpr int kLatentStride = 4;
inline constexpr int kTotalStride = 16;

class Analysis : public Module {
 public:
  Analysis(const TransformConfig& cfg, Rng& rng);
  Tensor forward(const Tensor& x) const;

 private:
  Conv2d down1_;
  Gdn gdn1_;
  ResBlock rb1_;
  Conv2d down2_;
  Gdn gdn2_;
  ResBlock rb2_;
  ResBlock rb3_;
  Conv2d out_;
};

class Synthesis : public Module {
 public:
  Synthesis(const TransformConfig& cfg, Rng& rng);
  Tensor forward(const Tensor& y) const;
  // Zeroes the last layer so the transform starts out as the zero map.
  void zero_output();

 private:
  Conv2d in_;
  ResBlock rb1_;
  ResBlock rb2_;
  Gdn igdn1_;
  ConvTranspose2d up1_;
  ResBlock rb3_;
  Gdn igdn2_;
  ConvTranspose2d up2_;
};

class HyperAnalysis : public Module {
 public:
  HyperAnalysis(const TransformConfig& cfg, Rng& rng);
  Tensor forward(const Tensor& y) const;

 private:
  Conv2d c1_;
  PRelu a1_;
  Conv2d c2_;
  PRelu a2_;
  Conv2d c3_;
};

class HyperSynthesis : public Module {
 public:
  HyperSynthesis(const TransformConfig& cfg, Rng& rng);
  Tensor forward(const Tensor& z) const;

 private:
  ConvTranspose2d u1_;
  PRelu a1_;
  ConvTranspose2d u2_;
  PRelu a2_;
  Conv2d c3_;
};

// Information compensation network: y + conv(prelu(conv(cat(y, psi)))).
class Icn : public Module {
 public:
  Icn(const TransformConfig& cfg, Rng& rng);
  Tensor forward(const Tensor& y, const Tensor& psi) const;

 private:
  Conv2d c1_;
  PRelu a1_;
  Conv2d c2_;
};

// Per-element (mu, sigma) from the causal latent context, hyper features and
// an optional temporal prior:
//   h1 = W_ctx * maskedconv(y) + b + W_hyp * psi [+ W_tmp * temporal]
//   (mu, sigma_raw) = W3 prelu(W2 prelu(h1))
class ContextModel : public Module {
 public:
  ContextModel(const TransformConfig& cfg, Rng& rng);

  // Full-tensor evaluation (training).
  GaussianParams forward(const Tensor& y, const Tensor& psi, const Tensor& temporal) const;

  // Inference: position-independent part of h1, evaluated once per frame.
  Tensor base(const Tensor& psi, const Tensor& temporal) const;

  MaskedConv2d masked;
  Conv2d agg_ctx;
  Conv2d agg_hyper;
  Conv2d agg_temporal;  // only registered when the config has a temporal prior
  PRelu act1;
  Conv2d agg2;
  PRelu act2;
  Conv2d agg3;
  int latent;
  int temporal_channels;
};

// Flattened context-model weights for the sequential coding loop. Encoder and
// decoder both go through predict(), so their parameter streams are identical.
class ContextKernel {
 public:
  explicit ContextKernel(const ContextModel& m);
  // Parameters for every channel at (y, x) given the latents decoded so far
  // (only positions before (y, x) in raster order are read).
  void predict(const Tensor& y_hat, const Tensor& base, int y, int x, Scalar* mu, Scalar* sigma) const;

 private:
  struct Tap {
    int dy, dx, in;
  };
  int latent_, context_, hidden_, kernel_;
  std::vector<Tap> taps_;
  std::vector<Scalar> masked_;  // [context][tap]
  std::vector<Scalar> masked_bias_;
  std::vector<Scalar> w_ctx_, b_ctx_, slope1_, w2_, b2_, slope2_, w3_, b3_;
};

struct TransformCode {
  Shape latent_shape;
  Shape hyper_shape;
  std::vector<std::uint8_t> hyper_segment;
  std::vector<std::uint8_t> latent_segment;

  // latent shape (4 x u16), hyper shape (4 x u16), hyper segment, latent segment.
  void write(ByteWriter& w) const;
  static TransformCode read(ByteReader& r);
  std::size_t byte_size() const;
};

struct TransformTrainOut {
  Tensor recon;  // synthesis output, unclamped
  Tensor latent_bits;
  Tensor hyper_bits;
  Tensor y_tilde;
  Tensor psi;
  Tensor fused;  // ICN output
  GaussianParams params;
};

struct TransformResult {
  Tensor recon;  // synthesis output, unclamped
  Tensor y_hat;
  Tensor z_hat;
  Tensor psi;
  Tensor fused;
  GaussianParams params;  // parameter stream used for coding
};

class TransformCodec : public Module {
 public:
  TransformCodec(const TransformConfig& cfg, Rng& rng);

  const TransformConfig& config() const { return cfg_; }

  TransformTrainOut forward(const Tensor& x, const Tensor& temporal, QuantizerMode mode, Rng& rng) const;

  // Batch size must be 1. Extents must be multiples of kTotalStride.
  std::pair<TransformCode, TransformResult> encode(const Tensor& x, const Tensor& temporal) const;
  TransformResult decode(const TransformCode& code, const Tensor& temporal) const;
  // Synthesis path from given latents (shared by encode and decode).
  TransformResult reconstruct(const Tensor& y_hat, const Tensor& z_hat) const;
  // Parameter stream of the sequential coder for complete latents.
  GaussianParams sequential_params(const Tensor& y_hat, const Tensor& psi, const Tensor& temporal) const;

  Analysis analysis;
  Synthesis synthesis;
  HyperAnalysis hyper_analysis;
  HyperSynthesis hyper_synthesis;
  FactorizedGaussian hyper_prior;
  ContextModel context;
  Icn icn;

 private:
  void check_input(const Tensor& x, const Tensor& temporal) const;
  TransformConfig cfg_;
};

NVC_END_NAMESPACE
