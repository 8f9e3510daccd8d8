#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nvc/frame.hpp"
#include "nvc/loss.hpp"
#include "nvc/model_set.hpp"

NVC_BEGIN_NAMESPACE

struct TrainConfig {
  LossWeights weights;
  double lr = 1e-4;
  int lr_period = 30;  // epochs between halvings
  int unroll = 5;      // frames per training clip (one I-frame, unroll - 1 P-frames)
  int crop = 32;       // square crop, multiple of kTotalStride
  int batch = 4;       // clips (stage 3) or pairs (stage 2) per step; stage 1 uses 2 * batch frames
  int intra_steps = 0;  // stage 1: intra codec on single frames
  int flow_steps = 0;   // stage 2: flow + processing on uncompressed pairs
  int flow_warmup = 0;  // leading stage-2 steps that train the estimator on the raw flow
  int joint_steps = 200;  // stage 3: everything, decoded references
  double clip_norm = 1.0;  // gradient clipping, <= 0 disables
  std::uint64_t seed = 1;

  // Throws on out-of-range values.
  void validate() const;
};

enum class Stage { Intra = 1, Flow = 2, Joint = 3 };

struct StepLog {
  Stage stage;
  int step;
  int epoch;
  double lr;
  LossTerms terms;
};

struct TrainResult {
  std::vector<double> intra_loss;
  std::vector<double> flow_loss;
  std::vector<double> joint_loss;
  LossTerms last;
  // Every unroll step of stage 3 ran on the same parameter storage.
  bool weights_shared = true;
};

// Epoch index of a step when one epoch is one pass over `samples` samples.
int epoch_of(int step, int batch, std::size_t samples);

// Mean of values[end - window, end), clipped at the front.
double moving_average(const std::vector<double>& values, std::size_t end, std::size_t window);

// Runs the three stages on `model` in place. Deterministic for a given seed
// within one build.
TrainResult train(ModelSet& model, const TrainConfig& cfg, const std::vector<VideoSequence>& corpus,
                  const std::function<void(const StepLog&)>& on_step = {});

NVC_END_NAMESPACE
