#pragma once

#include "nvc/metrics.hpp"
#include "nvc/ops.hpp"

NVC_BEGIN_NAMESPACE

// Differentiable MS-SSIM on (N, C, H, W) tensors with the same windows and
// scale rule as ms_ssim(). Returns the (N, C) per-channel values. Extents at
// every pooled scale must be even.
Tensor ms_ssim_map(const Tensor& a, const Tensor& b, const MsSsimOptions& opt = {});

// 1 - mean MS-SSIM, as a scalar.
Tensor ms_ssim_distortion(const Tensor& a, const Tensor& b, const MsSsimOptions& opt = {});

NVC_END_NAMESPACE
