#pragma once

#include <vector>

#include "nvc/ops.hpp"

NVC_BEGIN_NAMESPACE

struct LossWeights {
  double lambda1 = 16;      // reconstruction distortion weight
  double lambda2 = 4;       // warp loss weight
  double tv_weight = 0.01;  // total variation of the flow inside the warp loss
};

struct LossTerms {
  Tensor total;           // scalar on the tape
  double distortion = 0;  // lambda1 * mean_t (1 - MS-SSIM(X^_t, X_t))
  double warp = 0;        // lambda2 * mean_t (L1(X^wp_t, X_t) + tv * TV(f_t))
  double rate_intra = 0;  // R_s
  double rate_inter = 0;  // mean_t R_t
  double value = 0;       // total as a double

  double sum() const { return distortion + warp + rate_intra + rate_inter; }
};

// frames and recon hold X_0..X_n (batched (B, 3, H, W) tensors); refined and
// flows hold X^wp_t and f_t for t = 1..n; rate_inter holds R_1..R_n. Rates are
// scalars in bits per pixel. With n = 0 the inter terms are zero.
LossTerms rd_loss(const std::vector<Tensor>& frames, const std::vector<Tensor>& recon,
                  const std::vector<Tensor>& refined, const std::vector<Tensor>& flows, const Tensor& rate_intra,
                  const std::vector<Tensor>& rate_inter, const LossWeights& w);

// mean |a - b|
Tensor l1_loss(const Tensor& a, const Tensor& b);

NVC_END_NAMESPACE
