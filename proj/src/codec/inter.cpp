#include "nvc/inter.hpp"

#include <string>

#include "nvc/error.hpp"

NVC_BEGIN_NAMESPACE

FlowEstimator::Level::Level(int in, int width, Rng& rng)
    : c1(in, width, 3, 1, 1, rng),
      c2(width, width, 3, 1, 1, rng),
      c3(width, width, 3, 1, 1, rng),
      c4(width, width, 3, 1, 1, rng),
      c5(width, 2, 3, 1, 1, rng),
      a1(width),
      a2(width),
      a3(width),
      a4(width) {
  register_module("c1", c1);
  register_module("a1", a1);
  register_module("c2", c2);
  register_module("a2", a2);
  register_module("c3", c3);
  register_module("a3", a3);
  register_module("c4", c4);
  register_module("a4", a4);
  register_module("c5", c5);
  // Start from a near-zero flow.
  for (auto& v : c5.weight.data()) v *= Scalar(0.1);
}

Tensor FlowEstimator::Level::forward(const Tensor& x) const {
  Tensor h = a1.forward(c1.forward(x));
  h = a2.forward(c2.forward(h));
  h = a3.forward(c3.forward(h));
  h = a4.forward(c4.forward(h));
  return c5.forward(h);
}

FlowEstimator::FlowEstimator(const InterConfig& cfg, Rng& rng)
    : coarse_(6, cfg.flow_width, rng), fine_(8, cfg.flow_width, rng) {
  register_module("coarse", coarse_);
  register_module("fine", fine_);
}

Tensor FlowEstimator::forward(const Tensor& ref, const Tensor& cur) const {
  require_rank(ref, 4, "flow estimator reference");
  if (ref.shape() != cur.shape()) {
    throw ShapeError("flow estimator: reference " + shape_string(ref.shape()) + " and current " +
                     shape_string(cur.shape()) + " differ");
  }
  if (ref.dim(2) % 2 != 0 || ref.dim(3) % 2 != 0) throw ShapeError("flow estimator: extents must be even");
  const Tensor coarse = coarse_.forward(ops::concat_channels({ops::avg_pool2(ref), ops::avg_pool2(cur)}));
  const Tensor up = ops::mul_scalar(ops::upsample_nearest2(coarse), 2);
  const Tensor warped = ops::bilinear_warp(ref, up);
  return ops::add(up, fine_.forward(ops::concat_channels({warped, cur, up})));
}

void FlowCode::write(ByteWriter& w) const {
  if (latent_shape.size() != 4) throw Error("flow code: latent shape must be 4-D");
  for (int d : latent_shape) {
    if (d < 0 || d > 0xFFFF) throw Error("flow code: extent does not fit u16");
    w.put_u16(static_cast<std::uint16_t>(d));
  }
  w.put_segment(segment);
}

FlowCode FlowCode::read(ByteReader& r) {
  FlowCode c;
  c.latent_shape.resize(4);
  const std::size_t at = r.offset();
  for (int& d : c.latent_shape) d = r.get_u16();
  if (c.latent_shape[0] != 1 || c.latent_shape[2] == 0 || c.latent_shape[3] == 0) {
    throw DataError("flow code: invalid latent shape " + shape_string(c.latent_shape), at);
  }
  const auto s = r.get_segment();
  c.segment.assign(s.begin(), s.end());
  return c;
}

FlowCodec::FlowCodec(const InterConfig& cfg, Rng& rng)
    : estimator(cfg, rng),
      enc1(2, cfg.flow_latent, 5, 2, 2, rng),
      enc_act(cfg.flow_latent),
      enc2(cfg.flow_latent, cfg.flow_latent, 5, 2, 2, rng),
      dec1(cfg.flow_latent, cfg.flow_latent, 4, 2, 1, 0, rng),
      dec_act(cfg.flow_latent),
      dec2(cfg.flow_latent, 2, 4, 2, 1, 0, rng),
      prior(cfg.flow_latent) {
  register_module("estimator", estimator);
  register_module("enc1", enc1);
  register_module("enc_act", enc_act);
  register_module("enc2", enc2);
  register_module("dec1", dec1);
  register_module("dec_act", dec_act);
  register_module("dec2", dec2);
  register_module("prior", prior);
}

Tensor FlowCodec::analysis(const Tensor& flow) const { return enc2.forward(enc_act.forward(enc1.forward(flow))); }

Tensor FlowCodec::synthesis(const Tensor& latents) const {
  return dec2.forward(dec_act.forward(dec1.forward(latents)));
}

ProcessingNet::ProcessingNet(const InterConfig& cfg, Rng& rng)
    : in(3, cfg.proc_width, 3, 1, 1, rng),
      down(cfg.proc_width, cfg.proc_width, 3, 2, 1, rng),
      up(cfg.proc_width, cfg.proc_width, 4, 2, 1, 0, rng),
      out(cfg.proc_width, 3, 3, 1, 1, rng) {
  out.zero_();
  register_module("in", in);
  for (int i = 0; i < 10; ++i) {
    blocks.push_back(std::make_unique<ResBlock>(cfg.proc_width, ResBlock::Act::PRelu, rng));
    register_module("block" + std::to_string(i), *blocks.back());
  }
  register_module("down", down);
  register_module("up", up);
  register_module("out", out);
}

Tensor ProcessingNet::forward(const Tensor& warped) const {
  Tensor h = in.forward(warped);
  h = blocks[1]->forward(blocks[0]->forward(h));
  const Tensor skip = h;
  h = down.forward(h);
  for (int i = 2; i < 8; ++i) h = blocks[i]->forward(h);
  h = ops::add(up.forward(h), skip);
  h = blocks[9]->forward(blocks[8]->forward(h));
  return ops::add(warped, out.forward(h));
}

TemporalAugment::TemporalAugment(const InterConfig& cfg, Rng& rng)
    : stem1(3, cfg.stem, 3, 2, 1, rng),
      stem_act(cfg.stem),
      stem2(cfg.stem, cfg.stem, 3, 1, 1, rng),
      lstm(cfg.stem, cfg.hidden, 3, rng),
      fuse(3 + cfg.hidden, 3, 3, 1, 1, rng) {
  // Zero h-branch: the prediction equals the refined frame at initialization.
  fuse.zero_();
  register_module("stem1", stem1);
  register_module("stem_act", stem_act);
  register_module("stem2", stem2);
  register_module("lstm", lstm);
  register_module("fuse", fuse);
}

Tensor TemporalAugment::features(const Tensor& ref) const {
  return stem2.forward(stem_act.forward(stem1.forward(ref)));
}

std::pair<Tensor, RecurrentState> TemporalAugment::forward(const Tensor& refined, const Tensor& ref_features,
                                                           const RecurrentState& state) const {
  require_rank(refined, 4, "temporal augment input");
  RecurrentState next = lstm.forward(ref_features, state);
  const Tensor h_up = ops::upsample_nearest2(next.h);
  if (h_up.dim(2) != refined.dim(2) || h_up.dim(3) != refined.dim(3)) {
    throw ShapeError("temporal augment: state " + shape_string(next.h.shape()) + " does not match frame " +
                     shape_string(refined.shape()));
  }
  Tensor pred = ops::add(refined, fuse.forward(ops::concat_channels({refined, h_up})));
  return {std::move(pred), std::move(next)};
}

InterModel::InterModel(Rng& rng, const InterConfig& cfg)
    : flow(cfg, rng), processing(cfg, rng), temporal(cfg, rng) {
  register_module("flow", flow);
  register_module("processing", processing);
  register_module("temporal", temporal);
}

namespace {

void check_pair(const Tensor& ref, const Tensor& cur) {
  require_rank(ref, 4, "inter reference");
  if (ref.shape() != cur.shape()) {
    throw ShapeError("inter codec: reference " + shape_string(ref.shape()) + " and current " +
                     shape_string(cur.shape()) + " differ");
  }
  if (ref.dim(2) % 4 != 0 || ref.dim(3) % 4 != 0) throw ShapeError("inter codec: extents must be multiples of 4");
}

}  // namespace

FlowEncoded flow_encode(const InterModel& model, const Tensor& ref, const Tensor& cur) {
  check_pair(ref, cur);
  if (ref.dim(0) != 1) throw ShapeError("flow_encode takes a single frame");
  const Tensor est = model.flow.estimator.forward(ref, cur);
  FlowEncoded out;
  out.latents = model.flow.analysis(est);
  for (Scalar& v : out.latents.data()) v = static_cast<Scalar>(entropy::clamp_symbol(v));
  entropy::RangeEncoder enc;
  model.flow.prior.encode(out.latents, enc);
  out.code.latent_shape = out.latents.shape();
  out.code.segment = enc.finish();
  out.flow = model.flow.synthesis(out.latents);
  return out;
}

Tensor flow_decode(const InterModel& model, const FlowCode& code) {
  if (code.latent_shape.size() != 4 || code.latent_shape[1] != model.flow.prior.scale_raw.dim(0)) {
    throw FormatError("flow code: latent channels do not match the model");
  }
  entropy::RangeDecoder dec(code.segment);
  const Tensor latents = model.flow.prior.decode(code.latent_shape, dec);
  dec.finish();
  return model.flow.synthesis(latents);
}

Tensor motion_compensate(const Tensor& ref, const Tensor& flow) { return ops::bilinear_warp(ref, flow); }

Tensor refine(const InterModel& model, const Tensor& warped) { return model.processing.forward(warped); }

std::pair<Tensor, RecurrentState> temporal_augment(const InterModel& model, const Tensor& refined,
                                                   const Tensor& ref_features, const RecurrentState& state) {
  return model.temporal.forward(refined, ref_features, state);
}

Prediction predict_frame(const InterModel& model, const Tensor& ref, const Tensor& flow,
                         const RecurrentState& state) {
  Prediction p;
  p.warped = motion_compensate(ref, flow);
  p.refined = refine(model, p.warped);
  auto [pred, next] = temporal_augment(model, p.refined, model.temporal.features(ref), state);
  p.prediction = std::move(pred);
  p.state = std::move(next);
  return p;
}

InterTrainOut inter_forward(const InterModel& model, const Tensor& ref, const Tensor& cur,
                            const RecurrentState& state, QuantizerMode mode, Rng& rng, bool compress_flow) {
  check_pair(ref, cur);
  InterTrainOut out;
  const Tensor est = model.flow.estimator.forward(ref, cur);
  if (compress_flow) {
    const Tensor latents = quantize(model.flow.analysis(est), mode, rng);
    out.flow_bits = model.flow.prior.rate(latents);
    out.flow = model.flow.synthesis(latents);
  } else {
    out.flow_bits = Tensor::scalar(0);
    out.flow = est;
  }
  out.pred = predict_frame(model, ref, out.flow, state);
  return out;
}

NVC_END_NAMESPACE
