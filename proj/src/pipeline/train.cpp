#include "nvc/train.hpp"

#include <algorithm>
#include <cmath>

#include "nvc/error.hpp"
#include "nvc/frame_tensor.hpp"
#include "nvc/optim.hpp"

NVC_BEGIN_NAMESPACE

void TrainConfig::validate() const {
  if (unroll < 2) throw UsageError("train: unroll must be at least 2");
  if (crop < kTotalStride || crop % kTotalStride != 0) {
    throw UsageError("train: crop " + std::to_string(crop) + " must be a positive multiple of " +
                     std::to_string(kTotalStride));
  }
  if (batch < 1) throw UsageError("train: batch must be positive");
  if (!(lr > 0)) throw UsageError("train: learning rate must be positive");
  if (lr_period < 1) throw UsageError("train: lr period must be positive");
  if (intra_steps < 0 || flow_steps < 0 || joint_steps < 0) throw UsageError("train: negative step count");
  if (flow_warmup < 0 || flow_warmup > flow_steps) throw UsageError("train: flow warmup must lie in [0, flow_steps]");
  if (weights.lambda1 < 0 || weights.lambda2 < 0 || weights.tv_weight < 0)
    throw UsageError("train: negative loss weight");
}

int epoch_of(int step, int batch, std::size_t samples) {
  const std::size_t per_epoch = std::max<std::size_t>(1, (samples + batch - 1) / batch);
  return static_cast<int>(static_cast<std::size_t>(step) / per_epoch);
}

double moving_average(const std::vector<double>& values, std::size_t end, std::size_t window) {
  end = std::min(end, values.size());
  const std::size_t begin = end > window ? end - window : 0;
  if (begin == end) throw Error("moving_average: empty window");
  double s = 0;
  for (std::size_t i = begin; i < end; ++i) s += values[i];
  return s / static_cast<double>(end - begin);
}

namespace {

class Sampler {
 public:
  Sampler(const std::vector<VideoSequence>& corpus, int frames, int crop, Rng& rng)
      : corpus_(corpus), frames_(frames), crop_(crop), rng_(rng) {}

  // frames_ tensors of shape (batch, 3, crop, crop), one per time step.
  std::vector<Tensor> clip_batch(int batch) {
    std::vector<std::vector<Frame>> per_t(frames_);
    for (int b = 0; b < batch; ++b) {
      const VideoSequence& seq = corpus_[rng_.uniform_int(0, static_cast<int>(corpus_.size()) - 1)];
      const int start = rng_.uniform_int(0, static_cast<int>(seq.frames.size()) - frames_);
      const int x0 = rng_.uniform_int(0, seq.width() - crop_);
      const int y0 = rng_.uniform_int(0, seq.height() - crop_);
      for (int t = 0; t < frames_; ++t) per_t[t].push_back(crop(seq.frames[start + t], x0, y0, crop_, crop_));
    }
    std::vector<Tensor> out;
    for (auto& f : per_t) out.push_back(to_tensor(f));
    return out;
  }

 private:
  const std::vector<VideoSequence>& corpus_;
  int frames_;
  int crop_;
  Rng& rng_;
};

void check_corpus(const std::vector<VideoSequence>& corpus, const TrainConfig& cfg) {
  if (corpus.empty()) throw DataError("train: empty corpus");
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const VideoSequence& s = corpus[i];
    if (static_cast<int>(s.frames.size()) < cfg.unroll) {
      throw DataError("train: sequence " + std::to_string(i) + " has " + std::to_string(s.frames.size()) +
                      " frames, fewer than the unroll length " + std::to_string(cfg.unroll));
    }
    if (s.width() < cfg.crop || s.height() < cfg.crop) {
      throw DataError("train: sequence " + std::to_string(i) + " is smaller than the crop size");
    }
  }
}

std::vector<Parameter> concat(std::vector<Parameter> a, const std::vector<Parameter>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

Tensor per_pixel(const Tensor& bits, const Tensor& frame) {
  const double pixels = static_cast<double>(frame.dim(0)) * frame.dim(2) * frame.dim(3);
  return ops::mul_scalar(bits, static_cast<Scalar>(1.0 / pixels));
}

Tensor clamp01(const Tensor& t) { return ops::clamp(t, 0, 1); }

bool same_parameters(const std::vector<Parameter>& a, const std::vector<Parameter>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!a[i].tensor.same_storage(b[i].tensor)) return false;
  return true;
}

// Windows of `length` consecutive frames in the corpus.
std::size_t window_count(const std::vector<VideoSequence>& corpus, int length) {
  std::size_t n = 0;
  for (const auto& s : corpus) n += s.frames.size() - length + 1;
  return n;
}

struct StageRunner {
  const TrainConfig& cfg;
  const std::function<void(const StepLog&)>& on_step;

  template <typename StepFn>
  void run(Stage stage, int steps, int batch, std::size_t samples, const std::vector<Parameter>& params,
           std::vector<double>& history, LossTerms& last, StepFn&& step_fn) const {
    if (steps == 0) return;
    Adam opt(params, AdamOptions{cfg.lr});
    for (int s = 0; s < steps; ++s) {
      const int epoch = epoch_of(s, batch, samples);
      opt.set_lr(step_decay_lr(cfg.lr, epoch, cfg.lr_period));
      opt.zero_grad();
      Tape tape;
      LossTerms terms;
      {
        TapeScope scope(tape);
        terms = step_fn();
      }
      tape.backward(terms.total);
      if (cfg.clip_norm > 0) clip_grad_norm(params, cfg.clip_norm);
      opt.step();
      history.push_back(terms.value);
      last = terms;
      if (on_step) on_step({stage, s, epoch, opt.lr(), terms});
    }
  }
};

}  // namespace

TrainResult train(ModelSet& model, const TrainConfig& cfg, const std::vector<VideoSequence>& corpus,
                  const std::function<void(const StepLog&)>& on_step) {
  cfg.validate();
  check_corpus(corpus, cfg);
  Rng rng(cfg.seed);
  Sampler frames1(corpus, 1, cfg.crop, rng);
  Sampler pairs(corpus, 2, cfg.crop, rng);
  Sampler clips(corpus, cfg.unroll, cfg.crop, rng);
  const StageRunner runner{cfg, on_step};
  const auto& w = cfg.weights;
  TrainResult result;

  runner.run(Stage::Intra, cfg.intra_steps, 2 * cfg.batch, window_count(corpus, 1), model.intra.parameters(),
             result.intra_loss, result.last, [&] {
               // Single frames: twice the clip batch, there is no temporal axis to fill.
               const Tensor x = frames1.clip_batch(2 * cfg.batch)[0];
               const TransformTrainOut o = model.intra.codec.forward(x, Tensor(), QuantizerMode::TrainNoise, rng);
               const Tensor rate = per_pixel(ops::add(o.latent_bits, o.hyper_bits), x);
               return rd_loss({x}, {o.recon}, {}, {}, rate, {}, w);
             });

  // Only the warp loss and the flow rate: lambda1 = 0 and no intra rate. The
  // warmup leaves the flow autoencoder out, so the estimator first learns
  // motion without a rate penalty.
  auto flow_step = [&](bool compress) {
    const auto p = pairs.clip_batch(cfg.batch);
    const RecurrentState st = model.inter.temporal.initial_state(p[0].dim(0), cfg.crop, cfg.crop);
    const InterTrainOut o = inter_forward(model.inter, p[0], p[1], st, QuantizerMode::TrainNoise, rng, compress);
    LossWeights fw = w;
    fw.lambda1 = 0;
    return rd_loss(p, {p[0], o.pred.refined}, {o.pred.refined}, {o.flow}, Tensor::scalar(0),
                   {per_pixel(o.flow_bits, p[1])}, fw);
  };
  const std::size_t pair_count = window_count(corpus, 2);
  runner.run(Stage::Flow, cfg.flow_warmup, cfg.batch, pair_count, model.inter.flow.estimator.parameters(),
             result.flow_loss, result.last, [&] { return flow_step(false); });
  const auto flow_params = concat(model.inter.flow.parameters(), model.inter.processing.parameters());
  runner.run(Stage::Flow, cfg.flow_steps - cfg.flow_warmup, cfg.batch, pair_count, flow_params, result.flow_loss,
             result.last, [&] { return flow_step(true); });

  runner.run(Stage::Joint, cfg.joint_steps, cfg.batch, window_count(corpus, cfg.unroll), model.parameters(),
             result.joint_loss, result.last, [&] {
               const auto x = clips.clip_batch(cfg.batch);
               const int batch = x[0].dim(0);
               std::vector<Tensor> recon, refined, flows, rates;
               const TransformTrainOut io = model.intra.codec.forward(x[0], Tensor(), QuantizerMode::TrainNoise, rng);
               const Tensor rate_intra = per_pixel(ops::add(io.latent_bits, io.hyper_bits), x[0]);
               recon.push_back(io.recon);
               Tensor ref = clamp01(io.recon);
               RecurrentState inter_state = model.inter.temporal.initial_state(batch, cfg.crop, cfg.crop);
               RecurrentState res_state = model.residual.initial_state(cfg.crop, cfg.crop, batch);
               res_state = model.residual.update_state(ref, Tensor(), res_state);
               std::vector<Parameter> first_step;
               for (std::size_t t = 1; t < x.size(); ++t) {
                 const auto used = concat(model.inter.parameters(), model.residual.parameters());
                 if (t == 1) {
                   first_step = used;
                 } else if (!same_parameters(first_step, used)) {
                   result.weights_shared = false;
                 }
                 const InterTrainOut io_t =
                     inter_forward(model.inter, ref, x[t], inter_state, QuantizerMode::TrainNoise, rng);
                 const ResidualTrainOut ro = residual_forward(model.residual, x[t], io_t.pred.prediction, res_state,
                                                              QuantizerMode::TrainNoise, rng);
                 recon.push_back(ro.recon);
                 refined.push_back(io_t.pred.refined);
                 flows.push_back(io_t.flow);
                 rates.push_back(per_pixel(ops::add(io_t.flow_bits, ops::add(ro.latent_bits, ro.hyper_bits)), x[t]));
                 inter_state = io_t.pred.state;
                 ref = clamp01(ro.recon);
                 res_state = model.residual.update_state(ref, ro.fused, res_state);
               }
               return rd_loss(x, recon, refined, flows, rate_intra, rates, w);
             });
  return result;
}

NVC_END_NAMESPACE
