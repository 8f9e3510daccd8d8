#include <cmath>

#include "nvc/error.hpp"
#include "nvc/transform_codec.hpp"

NVC_BEGIN_NAMESPACE

Analysis::Analysis(const TransformConfig& cfg, Rng& rng)
    : down1_(cfg.in_channels, cfg.features, 5, 2, 2, rng),
      gdn1_(cfg.features, false),
      rb1_(cfg.features, ResBlock::Act::Gdn, rng),
      down2_(cfg.features, cfg.features, 5, 2, 2, rng),
      gdn2_(cfg.features, false),
      rb2_(cfg.features, ResBlock::Act::Gdn, rng),
      rb3_(cfg.features, ResBlock::Act::Gdn, rng),
      out_(cfg.features, cfg.latent, 3, 1, 1, rng) {
  register_module("down1", down1_);
  register_module("gdn1", gdn1_);
  register_module("rb1", rb1_);
  register_module("down2", down2_);
  register_module("gdn2", gdn2_);
  register_module("rb2", rb2_);
  register_module("rb3", rb3_);
  register_module("out", out_);
}

Tensor Analysis::forward(const Tensor& x) const {
  Tensor h = rb1_.forward(gdn1_.forward(down1_.forward(x)));
  h = rb3_.forward(rb2_.forward(gdn2_.forward(down2_.forward(h))));
  return out_.forward(h);
}

Synthesis::Synthesis(const TransformConfig& cfg, Rng& rng)
    : in_(cfg.latent, cfg.features, 3, 1, 1, rng),
      rb1_(cfg.features, ResBlock::Act::Gdn, rng),
      rb2_(cfg.features, ResBlock::Act::Gdn, rng),
      igdn1_(cfg.features, true),
      up1_(cfg.features, cfg.features, 4, 2, 1, 0, rng),
      rb3_(cfg.features, ResBlock::Act::Gdn, rng),
      igdn2_(cfg.features, true),
      up2_(cfg.features, cfg.in_channels, 4, 2, 1, 0, rng) {
  register_module("in", in_);
  register_module("rb1", rb1_);
  register_module("rb2", rb2_);
  register_module("igdn1", igdn1_);
  register_module("up1", up1_);
  register_module("rb3", rb3_);
  register_module("igdn2", igdn2_);
  register_module("up2", up2_);
}

Tensor Synthesis::forward(const Tensor& y) const {
  Tensor h = rb2_.forward(rb1_.forward(in_.forward(y)));
  h = rb3_.forward(up1_.forward(igdn1_.forward(h)));
  return up2_.forward(igdn2_.forward(h));
}

void Synthesis::zero_output() {
  for (auto& v : up2_.weight.data()) v = 0;
  for (auto& v : up2_.bias.data()) v = 0;
}

HyperAnalysis::HyperAnalysis(const TransformConfig& cfg, Rng& rng)
    : c1_(cfg.latent, cfg.hyper_width, 3, 1, 1, rng),
      a1_(cfg.hyper_width),
      c2_(cfg.hyper_width, cfg.hyper_width, 5, 2, 2, rng),
      a2_(cfg.hyper_width),
      c3_(cfg.hyper_width, cfg.hyper, 5, 2, 2, rng) {
  register_module("c1", c1_);
  register_module("a1", a1_);
  register_module("c2", c2_);
  register_module("a2", a2_);
  register_module("c3", c3_);
}

Tensor HyperAnalysis::forward(const Tensor& y) const {
  return c3_.forward(a2_.forward(c2_.forward(a1_.forward(c1_.forward(y)))));
}

HyperSynthesis::HyperSynthesis(const TransformConfig& cfg, Rng& rng)
    : u1_(cfg.hyper, cfg.hyper_width, 4, 2, 1, 0, rng),
      a1_(cfg.hyper_width),
      u2_(cfg.hyper_width, cfg.hyper_width, 4, 2, 1, 0, rng),
      a2_(cfg.hyper_width),
      c3_(cfg.hyper_width, cfg.hyper_features, 3, 1, 1, rng) {
  register_module("u1", u1_);
  register_module("a1", a1_);
  register_module("u2", u2_);
  register_module("a2", a2_);
  register_module("c3", c3_);
}

Tensor HyperSynthesis::forward(const Tensor& z) const {
  return c3_.forward(a2_.forward(u2_.forward(a1_.forward(u1_.forward(z)))));
}

Icn::Icn(const TransformConfig& cfg, Rng& rng)
    : c1_(cfg.latent + cfg.hyper_features, cfg.hyper_features, 3, 1, 1, rng),
      a1_(cfg.hyper_features),
      c2_(cfg.hyper_features, cfg.latent, 3, 1, 1, rng) {
  register_module("c1", c1_);
  register_module("a1", a1_);
  register_module("c2", c2_);
}

Tensor Icn::forward(const Tensor& y, const Tensor& psi) const {
  if (y.rank() != 4 || psi.rank() != 4 || y.dim(2) != psi.dim(2) || y.dim(3) != psi.dim(3)) {
    throw ShapeError("icn: latents " + shape_string(y.shape()) + " and hyper features " + shape_string(psi.shape()) +
                     " are not spatially aligned");
  }
  return ops::add(y, c2_.forward(a1_.forward(c1_.forward(ops::concat_channels({y, psi})))));
}

ContextModel::ContextModel(const TransformConfig& cfg, Rng& rng)
    : masked(cfg.latent, cfg.context, cfg.context_kernel, rng),
      agg_ctx(cfg.context, cfg.aggregator, 1, 1, 0, rng),
      agg_hyper(cfg.hyper_features, cfg.aggregator, 1, 1, 0, rng, false),
      agg_temporal(std::max(cfg.temporal, 1), cfg.aggregator, 1, 1, 0, rng, false),
      act1(cfg.aggregator),
      agg2(cfg.aggregator, cfg.aggregator, 1, 1, 0, rng),
      act2(cfg.aggregator),
      agg3(cfg.aggregator, 2 * cfg.latent, 1, 1, 0, rng),
      latent(cfg.latent),
      temporal_channels(cfg.temporal) {
  register_module("masked", masked);
  register_module("agg_ctx", agg_ctx);
  register_module("agg_hyper", agg_hyper);
  if (temporal_channels > 0) register_module("agg_temporal", agg_temporal);
  register_module("act1", act1);
  register_module("agg2", agg2);
  register_module("act2", act2);
  register_module("agg3", agg3);
}

namespace {

void check_temporal(const ContextModel& m, const Tensor& psi, const Tensor& temporal) {
  if (m.temporal_channels == 0) {
    if (temporal.defined()) throw ShapeError("context model has no temporal branch but a temporal prior was given");
    return;
  }
  if (!temporal.defined()) throw ShapeError("context model needs a temporal prior");
  if (temporal.rank() != 4 || temporal.dim(1) != m.temporal_channels || temporal.dim(2) != psi.dim(2) ||
      temporal.dim(3) != psi.dim(3)) {
    throw ShapeError("temporal prior " + shape_string(temporal.shape()) + " does not match hyper features " +
                     shape_string(psi.shape()));
  }
}

}  // namespace

GaussianParams ContextModel::forward(const Tensor& y, const Tensor& psi, const Tensor& temporal) const {
  check_temporal(*this, psi, temporal);
  Tensor h = ops::add(agg_ctx.forward(masked.forward(y)), agg_hyper.forward(psi));
  if (temporal_channels > 0) h = ops::add(h, agg_temporal.forward(temporal));
  const Tensor out = agg3.forward(act2.forward(agg2.forward(act1.forward(h))));
  return {ops::slice_channels(out, 0, latent), sigma_from_raw(ops::slice_channels(out, latent, latent))};
}

Tensor ContextModel::base(const Tensor& psi, const Tensor& temporal) const {
  check_temporal(*this, psi, temporal);
  Tensor b = agg_hyper.forward(psi);
  if (temporal_channels > 0) b = ops::add(b, agg_temporal.forward(temporal));
  return b;
}

ContextKernel::ContextKernel(const ContextModel& m)
    : latent_(m.latent),
      context_(m.masked.weight.dim(0)),
      hidden_(m.agg_ctx.weight.dim(0)),
      kernel_(m.masked.kernel) {
  const int c = kernel_ / 2;
  for (int ky = 0; ky < kernel_; ++ky)
    for (int kx = 0; kx < kernel_; ++kx)
      if (m.masked.tap_live(ky, kx))
        for (int i = 0; i < latent_; ++i) taps_.push_back({ky - c, kx - c, i});
  masked_.resize(static_cast<std::size_t>(context_) * taps_.size());
  const auto w = m.masked.weight.data();
  for (int o = 0; o < context_; ++o)
    for (std::size_t t = 0; t < taps_.size(); ++t) {
      const Tap& tp = taps_[t];
      masked_[o * taps_.size() + t] =
          w[((static_cast<std::size_t>(o) * latent_ + tp.in) * kernel_ + tp.dy + c) * kernel_ + tp.dx + c];
    }
  auto copy = [](const Tensor& t) { return std::vector<Scalar>(t.data().begin(), t.data().end()); };
  masked_bias_ = copy(m.masked.bias);
  w_ctx_ = copy(m.agg_ctx.weight);
  b_ctx_ = copy(m.agg_ctx.bias);
  slope1_ = copy(m.act1.slope);
  w2_ = copy(m.agg2.weight);
  b2_ = copy(m.agg2.bias);
  slope2_ = copy(m.act2.slope);
  w3_ = copy(m.agg3.weight);
  b3_ = copy(m.agg3.bias);
}

void ContextKernel::predict(const Tensor& y_hat, const Tensor& base, int y, int x, Scalar* mu, Scalar* sigma) const {
  const int H = y_hat.dim(2), W = y_hat.dim(3);
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  const Scalar* yh = y_hat.ptr();
  // Gather the causal neighbourhood once (zero outside the frame).
  std::vector<Scalar> patch(taps_.size());
  for (std::size_t t = 0; t < taps_.size(); ++t) {
    const int yy = y + taps_[t].dy, xx = x + taps_[t].dx;
    patch[t] = (yy >= 0 && yy < H && xx >= 0 && xx < W)
                   ? yh[taps_[t].in * plane + static_cast<std::size_t>(yy) * W + xx]
                   : Scalar(0);
  }
  std::vector<Scalar> ctx(context_), h1(hidden_), h2(hidden_);
  for (int o = 0; o < context_; ++o) {
    Scalar s = masked_bias_[o];
    const Scalar* wr = masked_.data() + o * taps_.size();
    for (std::size_t t = 0; t < taps_.size(); ++t) s += wr[t] * patch[t];
    ctx[o] = s;
  }
  const Scalar* bp = base.ptr();
  const std::size_t pix = static_cast<std::size_t>(y) * W + x;
  for (int j = 0; j < hidden_; ++j) {
    Scalar s = b_ctx_[j];
    const Scalar* wr = w_ctx_.data() + static_cast<std::size_t>(j) * context_;
    for (int o = 0; o < context_; ++o) s += wr[o] * ctx[o];
    s += bp[j * plane + pix];
    h1[j] = s >= 0 ? s : slope1_[j] * s;
  }
  for (int j = 0; j < hidden_; ++j) {
    Scalar s = b2_[j];
    const Scalar* wr = w2_.data() + static_cast<std::size_t>(j) * hidden_;
    for (int k = 0; k < hidden_; ++k) s += wr[k] * h1[k];
    h2[j] = s >= 0 ? s : slope2_[j] * s;
  }
  for (int j = 0; j < 2 * latent_; ++j) {
    Scalar s = b3_[j];
    const Scalar* wr = w3_.data() + static_cast<std::size_t>(j) * hidden_;
    for (int k = 0; k < hidden_; ++k) s += wr[k] * h2[k];
    if (j < latent_) {
      mu[j] = s;
    } else {
      sigma[j - latent_] = sigma_from_raw(s);
    }
  }
}

void TransformCode::write(ByteWriter& w) const {
  for (const Shape* s : {&latent_shape, &hyper_shape}) {
    if (s->size() != 4) throw Error("transform code: shapes must be 4-D");
    for (int d : *s) {
      if (d < 0 || d > 0xFFFF) throw Error("transform code: extent does not fit u16");
      w.put_u16(static_cast<std::uint16_t>(d));
    }
  }
  w.put_segment(hyper_segment);
  w.put_segment(latent_segment);
}

TransformCode TransformCode::read(ByteReader& r) {
  TransformCode c;
  for (Shape* s : {&c.latent_shape, &c.hyper_shape}) {
    s->resize(4);
    for (int& d : *s) d = r.get_u16();
  }
  const std::size_t at = r.offset();
  const auto hs = r.get_segment();
  c.hyper_segment.assign(hs.begin(), hs.end());
  const auto ls = r.get_segment();
  c.latent_segment.assign(ls.begin(), ls.end());
  const Shape& l = c.latent_shape;
  const Shape& h = c.hyper_shape;
  if (l[0] != 1 || h[0] != 1 || l[2] != h[2] * kTotalStride / kLatentStride ||
      l[3] != h[3] * kTotalStride / kLatentStride || l[2] == 0 || l[3] == 0) {
    throw DataError("transform code: inconsistent latent/hyper shapes", at);
  }
  return c;
}

std::size_t TransformCode::byte_size() const { return 16 + 8 + hyper_segment.size() + latent_segment.size(); }

TransformCodec::TransformCodec(const TransformConfig& cfg, Rng& rng)
    : analysis(cfg, rng),
      synthesis(cfg, rng),
      hyper_analysis(cfg, rng),
      hyper_synthesis(cfg, rng),
      hyper_prior(cfg.hyper),
      context(cfg, rng),
      icn(cfg, rng),
      cfg_(cfg) {
  register_module("analysis", analysis);
  register_module("synthesis", synthesis);
  register_module("hyper_analysis", hyper_analysis);
  register_module("hyper_synthesis", hyper_synthesis);
  register_module("hyper_prior", hyper_prior);
  register_module("context", context);
  register_module("icn", icn);
}

void TransformCodec::check_input(const Tensor& x, const Tensor& temporal) const {
  require_rank(x, 4, "transform codec input");
  if (x.dim(1) != cfg_.in_channels)
    throw ShapeError("transform codec: expected " + std::to_string(cfg_.in_channels) + " input channels");
  if (x.dim(2) % kTotalStride != 0 || x.dim(3) % kTotalStride != 0 || x.dim(2) == 0 || x.dim(3) == 0) {
    throw ShapeError("transform codec: extents " + shape_string(x.shape()) + " must be positive multiples of " +
                     std::to_string(kTotalStride));
  }
  (void)temporal;
}

TransformTrainOut TransformCodec::forward(const Tensor& x, const Tensor& temporal, QuantizerMode mode, Rng& rng) const {
  check_input(x, temporal);
  TransformTrainOut out;
  const Tensor y = analysis.forward(x);
  const Tensor z = hyper_analysis.forward(y);
  const Tensor z_tilde = quantize(z, mode, rng);
  out.hyper_bits = hyper_prior.rate(z_tilde);
  out.psi = hyper_synthesis.forward(z_tilde);
  out.y_tilde = quantize(y, mode, rng);
  out.params = context.forward(out.y_tilde, out.psi, temporal);
  out.latent_bits = estimate_rate(out.y_tilde, out.params);
  out.fused = icn.forward(out.y_tilde, out.psi);
  out.recon = synthesis.forward(out.fused);
  return out;
}

namespace {

Tensor round_clamped(const Tensor& t) {
  Tensor out(t.shape());
  for (std::size_t i = 0; i < t.numel(); ++i) out.data()[i] = static_cast<Scalar>(entropy::clamp_symbol(t.data()[i]));
  return out;
}

}  // namespace

TransformResult TransformCodec::reconstruct(const Tensor& y_hat, const Tensor& z_hat) const {
  TransformResult r;
  r.y_hat = y_hat;
  r.z_hat = z_hat;
  r.psi = hyper_synthesis.forward(z_hat);
  r.fused = icn.forward(y_hat, r.psi);
  r.recon = synthesis.forward(r.fused);
  return r;
}

GaussianParams TransformCodec::sequential_params(const Tensor& y_hat, const Tensor& psi, const Tensor& temporal) const {
  const Tensor b = context.base(psi, temporal);
  const ContextKernel kernel(context);
  GaussianParams p{Tensor(y_hat.shape()), Tensor(y_hat.shape())};
  const int C = y_hat.dim(1), H = y_hat.dim(2), W = y_hat.dim(3);
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  std::vector<Scalar> mu(C), sigma(C);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      kernel.predict(y_hat, b, y, x, mu.data(), sigma.data());
      for (int c = 0; c < C; ++c) {
        p.mu.data()[c * plane + static_cast<std::size_t>(y) * W + x] = mu[c];
        p.sigma.data()[c * plane + static_cast<std::size_t>(y) * W + x] = sigma[c];
      }
    }
  return p;
}

std::pair<TransformCode, TransformResult> TransformCodec::encode(const Tensor& x, const Tensor& temporal) const {
  check_input(x, temporal);
  if (x.dim(0) != 1) throw ShapeError("transform codec: encode takes a single frame");
  const Tensor y = analysis.forward(x);
  const Tensor y_hat = round_clamped(y);
  const Tensor z_hat = round_clamped(hyper_analysis.forward(y));
  TransformCode code;
  code.latent_shape = y_hat.shape();
  code.hyper_shape = z_hat.shape();
  {
    entropy::RangeEncoder enc;
    hyper_prior.encode(z_hat, enc);
    code.hyper_segment = enc.finish();
  }
  TransformResult r = reconstruct(y_hat, z_hat);
  r.params = sequential_params(y_hat, r.psi, temporal);
  {
    entropy::RangeEncoder enc;
    const int C = y_hat.dim(1), H = y_hat.dim(2), W = y_hat.dim(3);
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    for (int y = 0; y < H; ++y)
      for (int xx = 0; xx < W; ++xx)
        for (int c = 0; c < C; ++c) {
          const std::size_t i = c * plane + static_cast<std::size_t>(y) * W + xx;
          entropy::encode_gaussian(enc, static_cast<int>(y_hat.data()[i]), r.params.mu.data()[i],
                                   r.params.sigma.data()[i]);
        }
    code.latent_segment = enc.finish();
  }
  return {std::move(code), std::move(r)};
}

TransformResult TransformCodec::decode(const TransformCode& code, const Tensor& temporal) const {
  const Shape& ls = code.latent_shape;
  const Shape& hs = code.hyper_shape;
  if (ls.size() != 4 || hs.size() != 4 || ls[1] != cfg_.latent || hs[1] != cfg_.hyper) {
    throw FormatError("transform code: latent/hyper channel counts do not match the model");
  }
  Tensor z_hat;
  {
    entropy::RangeDecoder dec(code.hyper_segment);
    z_hat = hyper_prior.decode(hs, dec);
    dec.finish();
  }
  const Tensor psi = hyper_synthesis.forward(z_hat);
  if (psi.dim(2) != ls[2] || psi.dim(3) != ls[3])
    throw FormatError("transform code: hyper shape does not match latents");
  const Tensor b = context.base(psi, temporal);
  const ContextKernel kernel(context);
  Tensor y_hat(ls);
  GaussianParams params{Tensor(ls), Tensor(ls)};
  {
    entropy::RangeDecoder dec(code.latent_segment);
    const int C = ls[1], H = ls[2], W = ls[3];
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    std::vector<Scalar> mu(C), sigma(C);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        kernel.predict(y_hat, b, y, x, mu.data(), sigma.data());
        for (int c = 0; c < C; ++c) {
          const std::size_t i = c * plane + static_cast<std::size_t>(y) * W + x;
          y_hat.data()[i] = static_cast<Scalar>(entropy::decode_gaussian(dec, mu[c], sigma[c]));
          params.mu.data()[i] = mu[c];
          params.sigma.data()[i] = sigma[c];
        }
      }
    dec.finish();
  }
  TransformResult r = reconstruct(y_hat, z_hat);
  r.params = std::move(params);
  return r;
}

NVC_END_NAMESPACE
