#pragma once

#include <vector>

#include "nvc/cdf.hpp"
#include "nvc/nn.hpp"

NVC_BEGIN_NAMESPACE

enum class QuantizerMode { TrainNoise, InferRound };

struct GaussianParams {
  Tensor mu;
  Tensor sigma;
};

// TrainNoise: x + u with u ~ U[-1/2, 1/2), identity gradient.
// InferRound: round half away from zero (gradient passes straight through).
Tensor quantize(const Tensor& latents, QuantizerMode mode, Rng& rng);

// Discretized Gaussian mass at each (integer or noisy) element.
Tensor gaussian_pmf(const Tensor& symbols, const GaussianParams& params);
// -sum log2 pmf, as a differentiable scalar (bits).
Tensor estimate_rate(const Tensor& latents, const GaussianParams& params);
// lower_bound(softplus(raw), sigma_min)
Tensor sigma_from_raw(const Tensor& raw);
Scalar sigma_from_raw(Scalar raw);

// One table per element over [smin, smax].
std::vector<entropy::CdfTable> build_cdf_tables(const GaussianParams& params, int smin, int smax);

// Learned zero-mean Gaussian per channel, for hyper and flow latents.
class FactorizedGaussian : public Module {
 public:
  explicit FactorizedGaussian(int channels, double init_sigma = 1.0);
  // Broadcast (mu = 0, sigma) for a (N, C, H, W) latent shape.
  GaussianParams params(const Shape& shape) const;
  Tensor rate(const Tensor& latents) const { return estimate_rate(latents, params(latents.shape())); }
  Scalar sigma(int channel) const;

  // Elements coded in memory order (channel-major, then raster).
  void encode(const Tensor& symbols, entropy::RangeEncoder& enc) const;
  Tensor decode(const Shape& shape, entropy::RangeDecoder& dec) const;

  Tensor scale_raw;
};

// Ideal code length (bits) of integer symbols under the quantized windowed
// tables that encode_gaussian uses.
double quantized_code_length(const Tensor& symbols, const GaussianParams& params);

NVC_END_NAMESPACE
