#include "nvc/residual.hpp"

#include "nvc/error.hpp"
#include "nvc/frame_tensor.hpp"

NVC_BEGIN_NAMESPACE

ResidualModel::ResidualModel(Rng& rng, const ResidualConfig& cfg)
    : codec(cfg.transform, rng),
      stem1(3, cfg.stem, 5, 2, 2, rng),
      stem_act(cfg.stem),
      stem2(cfg.stem, cfg.stem, 5, 2, 2, rng),
      lstm(cfg.stem + cfg.transform.latent, cfg.transform.temporal, 3, rng) {
  if (cfg.transform.temporal <= 0) throw Error("residual model: needs a temporal prior");
  // X^ = X~ at initialization.
  codec.synthesis.zero_output();
  register_module("codec", codec);
  register_module("stem1", stem1);
  register_module("stem_act", stem_act);
  register_module("stem2", stem2);
  register_module("lstm", lstm);
}

RecurrentState ResidualModel::initial_state(int height, int width, int batch) const {
  return lstm.initial_state(batch, height / kLatentStride, width / kLatentStride);
}

Tensor ResidualModel::stem(const Tensor& recon) const {
  return stem2.forward(stem_act.forward(stem1.forward(recon)));
}

RecurrentState ResidualModel::update_state(const Tensor& recon, const Tensor& fused,
                                           const RecurrentState& state) const {
  const Tensor s = stem(recon);
  const Tensor f = fused.defined() ? fused : Tensor::zeros({s.dim(0), codec.config().latent, s.dim(2), s.dim(3)});
  return lstm.forward(ops::concat_channels({s, f}), state);
}

namespace {

void check_frames(const Tensor& cur, const Tensor& prediction) {
  require_rank(cur, 4, "residual input");
  if (cur.shape() != prediction.shape()) {
    throw ShapeError("residual codec: frame " + shape_string(cur.shape()) + " and prediction " +
                     shape_string(prediction.shape()) + " differ");
  }
}

}  // namespace

ResidualEncoded residual_encode(const ResidualModel& model, const Tensor& cur, const Tensor& prediction,
                                const RecurrentState& state) {
  check_frames(cur, prediction);
  auto [code, detail] = model.codec.encode(ops::sub(cur, prediction), state.h);
  ResidualEncoded out;
  out.code = std::move(code);
  out.recon = clamp_unit(ops::add(prediction, detail.recon));
  out.state = model.update_state(out.recon, detail.fused, state);
  out.params = std::move(detail.params);
  return out;
}

ResidualDecoded residual_decode(const ResidualModel& model, const ResidualCode& code, const Tensor& prediction,
                                const RecurrentState& state) {
  TransformResult detail = model.codec.decode(code, state.h);
  if (detail.recon.shape() != prediction.shape()) {
    throw FormatError("residual code extent " + shape_string(detail.recon.shape()) + " does not match prediction " +
                      shape_string(prediction.shape()));
  }
  ResidualDecoded out;
  out.recon = clamp_unit(ops::add(prediction, detail.recon));
  out.state = model.update_state(out.recon, detail.fused, state);
  out.params = std::move(detail.params);
  return out;
}

GaussianParams residual_context_predict(const ResidualModel& model, const Tensor& latents, const Tensor& psi,
                                        const Tensor& prior) {
  return model.codec.context.forward(latents, psi, prior);
}

ResidualTrainOut residual_forward(const ResidualModel& model, const Tensor& cur, const Tensor& prediction,
                                  const RecurrentState& state, QuantizerMode mode, Rng& rng) {
  check_frames(cur, prediction);
  TransformTrainOut t = model.codec.forward(ops::sub(cur, prediction), state.h, mode, rng);
  return {ops::add(prediction, t.recon), t.latent_bits, t.hyper_bits, t.fused};
}

NVC_END_NAMESPACE
