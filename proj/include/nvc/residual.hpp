#pragma once

#include "nvc/transform_codec.hpp"

// Residual coding r = X - X~ with the transform codec, its entropy model
// conditioned on a ConvLSTM state built from previously decoded frames.
//
// State update order: the ConvLSTM consumes Y^_t = cat(stem(X^_t), ICN_t)
// after frame t is reconstructed, so the prior for frame t is h_{t-1} and is
// known to the decoder before frame t is parsed. I-frames contribute zeros in
// the ICN part.

NVC_BEGIN_NAMESPACE

using ResidualCode = TransformCode;

struct ResidualConfig {
  TransformConfig transform{.temporal = 32};
  int stem = 16;
};

class ResidualModel : public Module {
 public:
  explicit ResidualModel(Rng& rng, const ResidualConfig& cfg = {});

  // Zero state at latent resolution of an (H, W) frame.
  RecurrentState initial_state(int height, int width, int batch = 1) const;
  // (N, stem, H/4, W/4) features of a reconstructed frame.
  Tensor stem(const Tensor& recon) const;
  // h_t from the reconstruction of frame t and its ICN output (undefined for
  // I-frames, replaced by zeros).
  RecurrentState update_state(const Tensor& recon, const Tensor& fused, const RecurrentState& state) const;

  TransformCodec codec;
  Conv2d stem1;
  PRelu stem_act;
  Conv2d stem2;
  ConvLstmCell lstm;
};

struct ResidualEncoded {
  ResidualCode code;
  Tensor recon;  // clamp(X~ + r^, 0, 1)
  RecurrentState state;
  GaussianParams params;  // (mu_r, sigma_r) stream used for the latents
};

struct ResidualDecoded {
  Tensor recon;
  RecurrentState state;
  GaussianParams params;
};

ResidualEncoded residual_encode(const ResidualModel& model, const Tensor& cur, const Tensor& prediction,
                                const RecurrentState& state);
ResidualDecoded residual_decode(const ResidualModel& model, const ResidualCode& code, const Tensor& prediction,
                                const RecurrentState& state);

// Full-tensor (mu_r, sigma_r) for residual latents given hyper features and
// the temporal prior h_{t-1}.
GaussianParams residual_context_predict(const ResidualModel& model, const Tensor& latents, const Tensor& psi,
                                        const Tensor& prior);

struct ResidualTrainOut {
  Tensor recon;  // prediction + decoded residual, not clamped
  Tensor latent_bits;
  Tensor hyper_bits;
  Tensor fused;
};

ResidualTrainOut residual_forward(const ResidualModel& model, const Tensor& cur, const Tensor& prediction,
                                  const RecurrentState& state, QuantizerMode mode, Rng& rng);

NVC_END_NAMESPACE
