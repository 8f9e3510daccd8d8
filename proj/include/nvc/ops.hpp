#pragma once

#include <vector>

#include "nvc/autograd.hpp"
#include "nvc/tensor.hpp"

// Differentiable tensor operations. Every op records itself on the active tape
// when any input requires a gradient; without an active tape ops are plain
// functions.

NVC_BEGIN_NAMESPACE
namespace ops {

// Elementwise, operands of identical shape.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor add_scalar(const Tensor& a, Scalar s);
Tensor mul_scalar(const Tensor& a, Scalar s);

Tensor neg(const Tensor& a);
Tensor square(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor softplus(const Tensor& a);
// a^p for a > 0.
Tensor pow_scalar(const Tensor& a, Scalar p);
// Gradient is zero where the value was clamped.
Tensor clamp(const Tensor& a, Scalar lo, Scalar hi);
// max(a, bound); gradient also passes below the bound when it points upward.
Tensor lower_bound(const Tensor& a, Scalar bound);
// Rounds half away from zero; gradient passes through unchanged.
Tensor round_ste(const Tensor& a);

// (C) per-channel vector broadcast to a (N, C, H, W) shape.
Tensor broadcast_channels(const Tensor& per_channel, const Shape& shape);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// (N, C, H, W) -> (N, C)
Tensor spatial_mean(const Tensor& a);
Tensor concat_channels(const std::vector<Tensor>& parts);
Tensor slice_channels(const Tensor& a, int start, int count);
// Stacks equally shaped tensors along a new leading axis of size parts.size().
Tensor stack(const std::vector<Tensor>& parts);

// 2x2 average pooling (odd trailing rows/columns dropped).
Tensor avg_pool2(const Tensor& a);
Tensor upsample_nearest2(const Tensor& a);

// Cross-correlation with zero padding. weight (out_ch, in_ch, kH, kW);
// bias (out_ch) or undefined.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int pad);
// Adjoint of conv2d. weight (in_ch, out_ch, kH, kW) as in the matching conv.
Tensor conv2d_transpose(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride,
                        int pad, int output_padding = 0);
// Generalized divisive normalization; beta (C) and gamma (C, C) must be
// positive. inverse = true gives IGDN.
Tensor gdn(const Tensor& input, const Tensor& beta, const Tensor& gamma, bool inverse);
Tensor prelu(const Tensor& input, const Tensor& slope);
Tensor bilinear_warp(const Tensor& image, const Tensor& flow);

// Depthwise separable blur with a fixed 1-D kernel, "valid" extent.
Tensor blur_valid(const Tensor& a, const std::vector<double>& kernel);

// Mean absolute horizontal + vertical difference (anisotropic total variation).
Tensor total_variation(const Tensor& a);

// P(y) = Phi((y + 1/2 - mu)/sigma) - Phi((y - 1/2 - mu)/sigma), elementwise.
Tensor gaussian_likelihood(const Tensor& y, const Tensor& mu, const Tensor& sigma);
// -sum(log2(max(p, floor))) as a scalar.
Tensor neg_log2_sum(const Tensor& p, Scalar floor = Scalar(1e-9));

}  // namespace ops
NVC_END_NAMESPACE
