#include "nvc/intra.hpp"

#include "nvc/error.hpp"
#include "nvc/frame_tensor.hpp"

NVC_BEGIN_NAMESPACE

std::size_t segment_bytes(const TransformCode& code) {
  return 8 + code.hyper_segment.size() + code.latent_segment.size();
}

IntraModel::IntraModel(Rng& rng, const TransformConfig& cfg) : codec(cfg, rng) {
  if (cfg.temporal != 0) throw Error("intra model: the intra codec has no temporal prior");
  register_module("codec", codec);
}

IntraEncoded intra_encode(const IntraModel& model, const Tensor& x) {
  auto [code, detail] = model.codec.encode(x, Tensor());
  IntraEncoded out{std::move(code), clamp_unit(detail.recon), std::move(detail)};
  return out;
}

Tensor intra_decode(const IntraModel& model, const IntraCode& code) {
  return clamp_unit(model.codec.decode(code, Tensor()).recon);
}

int padded_extent(int v) {
  if (v < kTotalStride) {
    throw ShapeError("frame extent " + std::to_string(v) + " is smaller than the model stride " +
                     std::to_string(kTotalStride));
  }
  return (v + kTotalStride - 1) / kTotalStride * kTotalStride;
}

std::pair<IntraCode, Frame> intra_encode(const IntraModel& model, const Frame& frame) {
  const Frame padded = pad_replicate(frame, padded_extent(frame.width), padded_extent(frame.height));
  IntraEncoded enc = intra_encode(model, to_tensor(padded));
  return {std::move(enc.code), crop(to_frame(enc.recon), frame.width, frame.height)};
}

Frame intra_decode(const IntraModel& model, const IntraCode& code, int width, int height) {
  const Tensor recon = intra_decode(model, code);
  if (recon.dim(3) != padded_extent(width) || recon.dim(2) != padded_extent(height)) {
    throw FormatError("intra code extent " + shape_string(recon.shape()) + " does not match frame " +
                      std::to_string(width) + "x" + std::to_string(height));
  }
  return crop(to_frame(recon), width, height);
}

NVC_END_NAMESPACE
