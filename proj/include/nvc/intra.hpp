#pragma once

#include <utility>

#include "nvc/frame.hpp"
#include "nvc/transform_codec.hpp"

NVC_BEGIN_NAMESPACE

using IntraCode = TransformCode;

// Wire size of both segments, length prefixes included.
std::size_t segment_bytes(const TransformCode& code);
inline double code_bits(const TransformCode& code) { return 8.0 * static_cast<double>(segment_bytes(code)); }

class IntraModel : public Module {
 public:
  explicit IntraModel(Rng& rng, const TransformConfig& cfg = {});
  TransformCodec codec;
};

struct IntraEncoded {
  IntraCode code;
  Tensor recon;  // (1, 3, H, W), clamped to [0, 1]
  TransformResult detail;
};

// Tensor level: x is (1, 3, H, W) with extents divisible by kTotalStride.
IntraEncoded intra_encode(const IntraModel& model, const Tensor& x);
Tensor intra_decode(const IntraModel& model, const IntraCode& code);

// Frame level: replicate-pads to the stride, crops after decoding.
std::pair<IntraCode, Frame> intra_encode(const IntraModel& model, const Frame& frame);
Frame intra_decode(const IntraModel& model, const IntraCode& code, int width, int height);

// Smallest multiple of kTotalStride >= v. Throws for extents below one stride.
int padded_extent(int v);

NVC_END_NAMESPACE
