#pragma once

#include <span>

#include "nvc/config.hpp"

// Raw compute kernels behind the differentiable ops.
//
// nvc::kernels holds the production versions: OpenMP-parallel over
// independent output blocks, GEMM-backed where the work is a contraction.
// nvc::kernels::reference holds naive serial loops with the same signatures;
// they are the oracle for the kernel tests and the baseline in the benchmark.
//
// Parallel kernels never split a reduction across threads, so results do not
// depend on the thread count. Backward kernels accumulate into their outputs.

NVC_BEGIN_NAMESPACE
namespace kernels {

struct ConvGeometry {
  int batch = 1;
  int in_channels = 1;
  int in_height = 1;
  int in_width = 1;
  int out_channels = 1;
  int kernel_h = 1;
  int kernel_w = 1;
  int stride = 1;
  int pad = 0;

  int out_height() const { return (in_height + 2 * pad - kernel_h) / stride + 1; }
  int out_width() const { return (in_width + 2 * pad - kernel_w) / stride + 1; }
  int patch_size() const { return in_channels * kernel_h * kernel_w; }
};

// out = conv(in, weight) + bias. bias may be empty.
void conv2d_forward(const ConvGeometry& g, std::span<const Scalar> in, std::span<const Scalar> weight,
                    std::span<const Scalar> bias, std::span<Scalar> out);
// grad_in += conv^T(grad_out)
void conv2d_backward_input(const ConvGeometry& g, std::span<const Scalar> grad_out,
                           std::span<const Scalar> weight, std::span<Scalar> grad_in);
// grad_weight += d/dw, grad_bias += d/db (grad_bias may be empty)
void conv2d_backward_weight(const ConvGeometry& g, std::span<const Scalar> in,
                            std::span<const Scalar> grad_out, std::span<Scalar> grad_weight,
                            std::span<Scalar> grad_bias);

struct PointwiseGeometry {
  int batch = 1;
  int channels = 1;
  int pixels = 1;
};

// y_i = x_i / sqrt(beta_i + sum_j gamma_ij x_j^2), or times the root when inverse.
void gdn_forward(const PointwiseGeometry& g, std::span<const Scalar> x, std::span<const Scalar> beta,
                 std::span<const Scalar> gamma, bool inverse, std::span<Scalar> y);
void gdn_backward(const PointwiseGeometry& g, std::span<const Scalar> x, std::span<const Scalar> beta,
                  std::span<const Scalar> gamma, bool inverse, std::span<const Scalar> grad_y,
                  std::span<Scalar> grad_x, std::span<Scalar> grad_beta, std::span<Scalar> grad_gamma);

struct WarpGeometry {
  int batch = 1;
  int channels = 1;
  int height = 1;
  int width = 1;
};

// out(p) = bilinear sample of image at p + flow(p), sample position clamped to
// the image (border replication). flow is (batch, 2, H, W) holding (dx, dy).
void warp_forward(const WarpGeometry& g, std::span<const Scalar> image, std::span<const Scalar> flow,
                  std::span<Scalar> out);
void warp_backward(const WarpGeometry& g, std::span<const Scalar> image, std::span<const Scalar> flow,
                   std::span<const Scalar> grad_out, std::span<Scalar> grad_image,
                   std::span<Scalar> grad_flow);

namespace reference {

void conv2d_forward(const ConvGeometry& g, std::span<const Scalar> in, std::span<const Scalar> weight,
                    std::span<const Scalar> bias, std::span<Scalar> out);
void conv2d_backward_input(const ConvGeometry& g, std::span<const Scalar> grad_out,
                           std::span<const Scalar> weight, std::span<Scalar> grad_in);
void conv2d_backward_weight(const ConvGeometry& g, std::span<const Scalar> in,
                            std::span<const Scalar> grad_out, std::span<Scalar> grad_weight,
                            std::span<Scalar> grad_bias);
void gdn_forward(const PointwiseGeometry& g, std::span<const Scalar> x, std::span<const Scalar> beta,
                 std::span<const Scalar> gamma, bool inverse, std::span<Scalar> y);
void gdn_backward(const PointwiseGeometry& g, std::span<const Scalar> x, std::span<const Scalar> beta,
                  std::span<const Scalar> gamma, bool inverse, std::span<const Scalar> grad_y,
                  std::span<Scalar> grad_x, std::span<Scalar> grad_beta, std::span<Scalar> grad_gamma);
void warp_forward(const WarpGeometry& g, std::span<const Scalar> image, std::span<const Scalar> flow,
                  std::span<Scalar> out);
void warp_backward(const WarpGeometry& g, std::span<const Scalar> image, std::span<const Scalar> flow,
                   std::span<const Scalar> grad_out, std::span<Scalar> grad_image,
                   std::span<Scalar> grad_flow);

}  // namespace reference
}  // namespace kernels
NVC_END_NAMESPACE
