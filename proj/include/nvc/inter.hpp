#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "nvc/bytes.hpp"
#include "nvc/entropy.hpp"

// Temporal prediction: flow estimation and compression, warping, the
// processing network and the ConvLSTM temporal augmentation.

NVC_BEGIN_NAMESPACE

struct InterConfig {
  int flow_width = 16;    // pyramid conv width
  int flow_latent = 16;   // flow latent channels at 1/4 resolution
  int proc_width = 16;    // processing network width
  int stem = 16;          // reference feature stem width
  int hidden = 32;        // ConvLSTM hidden channels at 1/2 resolution
};

// Two-level pyramid: a coarse estimate on 2x average-pooled frames, upsampled
// and refined at full resolution on (warped ref, cur, coarse flow).
class FlowEstimator : public Module {
 public:
  FlowEstimator(const InterConfig& cfg, Rng& rng);
  // (N, 2, H, W) displacement (dx, dy) in pixels. H and W must be even.
  Tensor forward(const Tensor& ref, const Tensor& cur) const;

 private:
  struct Level : Module {
    Level(int in, int width, Rng& rng);
    Tensor forward(const Tensor& x) const;
    Conv2d c1, c2, c3, c4, c5;
    PRelu a1, a2, a3, a4;
  };
  Level coarse_;
  Level fine_;
};

struct FlowCode {
  Shape latent_shape;
  std::vector<std::uint8_t> segment;

  // latent shape (4 x u16), segment.
  void write(ByteWriter& w) const;
  static FlowCode read(ByteReader& r);
  std::size_t wire_bytes() const { return 4 + segment.size(); }
};

// Flow autoencoder: two stride-2 convs to flow_latent channels, two stride-2
// transposed convs back to a 2-channel field; latents use a factorized prior.
class FlowCodec : public Module {
 public:
  FlowCodec(const InterConfig& cfg, Rng& rng);
  Tensor analysis(const Tensor& flow) const;
  Tensor synthesis(const Tensor& latents) const;

  FlowEstimator estimator;
  Conv2d enc1;
  PRelu enc_act;
  Conv2d enc2;
  ConvTranspose2d dec1;
  PRelu dec_act;
  ConvTranspose2d dec2;
  FactorizedGaussian prior;
};

// Ten residual blocks: two at full resolution, six after a stride-2 conv, two
// after the mirrored transposed conv. The output conv starts at zero so the
// network is the identity on the warped frame at initialization.
class ProcessingNet : public Module {
 public:
  ProcessingNet(const InterConfig& cfg, Rng& rng);
  // warped + net(warped)
  Tensor forward(const Tensor& warped) const;

  Conv2d in;
  std::vector<std::unique_ptr<ResBlock>> blocks;
  Conv2d down;
  ConvTranspose2d up;
  Conv2d out;
};

// ConvLSTM over features of the decoded reference; h is fused into the
// prediction by a conv over cat(refined, upsampled h) with a residual skip.
class TemporalAugment : public Module {
 public:
  TemporalAugment(const InterConfig& cfg, Rng& rng);
  // (N, stem, H/2, W/2) features of the reference frame.
  Tensor features(const Tensor& ref) const;
  RecurrentState initial_state(int batch, int height, int width) const {
    return lstm.initial_state(batch, height / 2, width / 2);
  }
  std::pair<Tensor, RecurrentState> forward(const Tensor& refined, const Tensor& ref_features,
                                            const RecurrentState& state) const;

  Conv2d stem1;
  PRelu stem_act;
  Conv2d stem2;
  ConvLstmCell lstm;
  Conv2d fuse;
};

class InterModel : public Module {
 public:
  explicit InterModel(Rng& rng, const InterConfig& cfg = {});

  FlowCodec flow;
  ProcessingNet processing;
  TemporalAugment temporal;
};

struct FlowEncoded {
  FlowCode code;
  Tensor flow;     // decoded flow, identical on the decoder side
  Tensor latents;  // rounded flow latents
};

// ref is the decoded previous frame, cur the frame being coded; both
// (1, 3, H, W) with H, W multiples of 4.
FlowEncoded flow_encode(const InterModel& model, const Tensor& ref, const Tensor& cur);
Tensor flow_decode(const InterModel& model, const FlowCode& code);
Tensor motion_compensate(const Tensor& ref, const Tensor& flow);
Tensor refine(const InterModel& model, const Tensor& warped);
std::pair<Tensor, RecurrentState> temporal_augment(const InterModel& model, const Tensor& refined,
                                                   const Tensor& ref_features, const RecurrentState& state);

struct Prediction {
  Tensor warped;
  Tensor refined;     // X^wp
  Tensor prediction;  // X~
  RecurrentState state;
};

// Shared by encoder and decoder once the decoded flow is known.
Prediction predict_frame(const InterModel& model, const Tensor& ref, const Tensor& flow,
                         const RecurrentState& state);

struct InterTrainOut {
  Tensor flow;       // decoded (noisy-latent) flow
  Tensor flow_bits;  // scalar
  Prediction pred;
};

// Differentiable pass used in training. With compress_flow = false the raw
// estimated flow is used and flow_bits is zero (flow pretraining).
InterTrainOut inter_forward(const InterModel& model, const Tensor& ref, const Tensor& cur,
                            const RecurrentState& state, QuantizerMode mode, Rng& rng, bool compress_flow = true);

NVC_END_NAMESPACE
