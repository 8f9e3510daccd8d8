#include "nvc/entropy.hpp"

#include <cmath>

#include "nvc/error.hpp"

NVC_BEGIN_NAMESPACE

Tensor quantize(const Tensor& latents, QuantizerMode mode, Rng& rng) {
  if (mode == QuantizerMode::InferRound) return ops::round_ste(latents);
  Tensor noise(latents.shape());
  for (Scalar& v : noise.data()) {
    // uniform(-0.5, 0.5) is half-open; the float cast can round up to 0.5.
    Scalar u = static_cast<Scalar>(rng.uniform(-0.5, 0.5));
    if (u >= Scalar(0.5)) u = std::nextafter(Scalar(0.5), Scalar(0));
    v = u;
  }
  return ops::add(latents, noise);
}

Tensor gaussian_pmf(const Tensor& symbols, const GaussianParams& params) {
  return ops::gaussian_likelihood(symbols, params.mu, params.sigma);
}

Tensor estimate_rate(const Tensor& latents, const GaussianParams& params) {
  return ops::neg_log2_sum(gaussian_pmf(latents, params));
}

Tensor sigma_from_raw(const Tensor& raw) {
  return ops::lower_bound(ops::softplus(raw), static_cast<Scalar>(entropy::kSigmaMin));
}

Scalar sigma_from_raw(Scalar raw) {
  const Scalar sp = raw > 20 ? raw : std::log1p(std::exp(raw));
  return std::max(sp, static_cast<Scalar>(entropy::kSigmaMin));
}

std::vector<entropy::CdfTable> build_cdf_tables(const GaussianParams& params, int smin, int smax) {
  if (params.mu.shape() != params.sigma.shape()) throw ShapeError("build_cdf_tables: mu/sigma shapes differ");
  std::vector<entropy::CdfTable> tables;
  tables.reserve(params.mu.numel());
  for (std::size_t i = 0; i < params.mu.numel(); ++i) {
    const double sigma = std::max<double>(params.sigma.data()[i], entropy::kSigmaMin);
    tables.push_back(entropy::build_cdf_table(params.mu.data()[i], sigma, smin, smax));
  }
  return tables;
}

FactorizedGaussian::FactorizedGaussian(int channels, double init_sigma) {
  scale_raw = Tensor::full({channels}, static_cast<Scalar>(std::log(std::expm1(init_sigma))));
  register_parameter("scale", scale_raw);
}

GaussianParams FactorizedGaussian::params(const Shape& shape) const {
  return {Tensor::zeros(shape), ops::broadcast_channels(sigma_from_raw(scale_raw), shape)};
}

Scalar FactorizedGaussian::sigma(int channel) const { return sigma_from_raw(scale_raw.data()[channel]); }

void FactorizedGaussian::encode(const Tensor& symbols, entropy::RangeEncoder& enc) const {
  require_rank(symbols, 4, "factorized encode");
  if (symbols.dim(1) != scale_raw.dim(0)) throw ShapeError("factorized encode: channel count mismatch");
  const std::size_t plane = static_cast<std::size_t>(symbols.dim(2)) * symbols.dim(3);
  for (std::size_t i = 0; i < symbols.numel(); ++i) {
    const int c = static_cast<int>((i / plane) % symbols.dim(1));
    entropy::encode_gaussian(enc, entropy::clamp_symbol(symbols.data()[i]), 0.0, sigma(c));
  }
}

Tensor FactorizedGaussian::decode(const Shape& shape, entropy::RangeDecoder& dec) const {
  Tensor out(shape);
  require_rank(out, 4, "factorized decode");
  if (out.dim(1) != scale_raw.dim(0)) throw ShapeError("factorized decode: channel count mismatch");
  const std::size_t plane = static_cast<std::size_t>(out.dim(2)) * out.dim(3);
  for (std::size_t i = 0; i < out.numel(); ++i) {
    const int c = static_cast<int>((i / plane) % out.dim(1));
    out.data()[i] = static_cast<Scalar>(entropy::decode_gaussian(dec, 0.0, sigma(c)));
  }
  return out;
}

double quantized_code_length(const Tensor& symbols, const GaussianParams& params) {
  double bits = 0;
  for (std::size_t i = 0; i < symbols.numel(); ++i) {
    const entropy::WindowedGaussian w(params.mu.data()[i],
                                      std::max<double>(params.sigma.data()[i], entropy::kSigmaMin));
    bits += w.code_length(entropy::clamp_symbol(symbols.data()[i]));
  }
  return bits;
}

NVC_END_NAMESPACE
