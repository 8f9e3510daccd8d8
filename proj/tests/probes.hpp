#pragma once

#include <algorithm>

#include "nvc/transform_codec.hpp"

// Perturbation probe of a context model: latent elements are ordered raster
// first, channels innermost. Perturbing every element from index i onwards
// must leave (mu, sigma) of elements 0..i unchanged.
namespace probes {

using nvc::Scalar;
using nvc::Tensor;

inline std::size_t element_offset(const Tensor& y, std::size_t order) {
  const std::size_t c_count = static_cast<std::size_t>(y.dim(1));
  const std::size_t plane = static_cast<std::size_t>(y.dim(2)) * y.dim(3);
  const std::size_t pos = order / c_count, c = order % c_count;
  return c * plane + pos;
}

// One random latent configuration. Returns the number of violating elements.
inline int causality_violations(const nvc::ContextModel& model, const Tensor& psi, const Tensor& temporal,
                                const nvc::Shape& latent_shape, nvc::Rng& rng) {
  Tensor y(latent_shape);
  for (Scalar& v : y.data()) v = static_cast<Scalar>(std::round(rng.normal(0, 3)));
  const std::size_t n = y.numel();
  const std::size_t cut = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(n) - 1));
  Tensor perturbed = y.clone();
  for (std::size_t k = cut; k < n; ++k) {
    perturbed.data()[element_offset(y, k)] +=
        static_cast<Scalar>(rng.uniform_int(1, 9) * (rng.uniform() < 0.5 ? -1 : 1));
  }
  const auto a = model.forward(y, psi, temporal);
  const auto b = model.forward(perturbed, psi, temporal);
  int bad = 0;
  for (std::size_t k = 0; k <= cut; ++k) {
    const std::size_t i = element_offset(y, k);
    bad += a.mu.data()[i] != b.mu.data()[i] || a.sigma.data()[i] != b.sigma.data()[i];
  }
  return bad;
}

}  // namespace probes
