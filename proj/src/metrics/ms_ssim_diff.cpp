#include <algorithm>
#include <limits>

#include "nvc/error.hpp"
#include "nvc/ms_ssim_diff.hpp"

NVC_BEGIN_NAMESPACE

namespace {

struct Terms {
  Tensor ssim;  // (N, C)
  Tensor cs;
};

Terms ssim_terms(const Tensor& a, const Tensor& b, const MsSsimOptions& opt) {
  const int win = std::min({opt.window, a.dim(2), a.dim(3)});
  const auto g = gaussian_window(win, opt.sigma);
  const Scalar c1 = static_cast<Scalar>(opt.k1 * opt.k1), c2 = static_cast<Scalar>(opt.k2 * opt.k2);
  const Tensor mu1 = ops::blur_valid(a, g), mu2 = ops::blur_valid(b, g);
  const Tensor m11 = ops::square(mu1), m22 = ops::square(mu2), m12 = ops::mul(mu1, mu2);
  const Tensor s11 = ops::sub(ops::blur_valid(ops::square(a), g), m11);
  const Tensor s22 = ops::sub(ops::blur_valid(ops::square(b), g), m22);
  const Tensor s12 = ops::sub(ops::blur_valid(ops::mul(a, b), g), m12);
  const Tensor cs_map = ops::div(ops::add_scalar(ops::mul_scalar(s12, 2), c2), ops::add_scalar(ops::add(s11, s22), c2));
  const Tensor lum = ops::div(ops::add_scalar(ops::mul_scalar(m12, 2), c1), ops::add_scalar(ops::add(m11, m22), c1));
  return {ops::spatial_mean(ops::mul(lum, cs_map)), ops::spatial_mean(cs_map)};
}

// relu, kept strictly positive so the fractional power stays differentiable.
Tensor positive(const Tensor& t) {
  return ops::clamp(t, Scalar(1e-6), std::numeric_limits<Scalar>::max());
}

}  // namespace

Tensor ms_ssim_map(const Tensor& a, const Tensor& b, const MsSsimOptions& opt) {
  require_rank(a, 4, "ms_ssim_map");
  if (a.shape() != b.shape())
    throw ShapeError("ms_ssim_map: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  const int scales = ms_ssim_scales(std::min(a.dim(2), a.dim(3)), opt.max_scales);
  const auto weights = ms_ssim_weights(scales);
  Tensor pa = a, pb = b;
  Tensor result;
  for (int s = 0; s < scales; ++s) {
    const Terms t = ssim_terms(pa, pb, opt);
    const Tensor term = ops::pow_scalar(positive(s + 1 < scales ? t.cs : t.ssim), static_cast<Scalar>(weights[s]));
    result = result.defined() ? ops::mul(result, term) : term;
    if (s + 1 < scales) {
      if (pa.dim(2) % 2 != 0 || pa.dim(3) % 2 != 0) throw ShapeError("ms_ssim_map: odd extent at a pooled scale");
      pa = ops::avg_pool2(pa);
      pb = ops::avg_pool2(pb);
    }
  }
  return result;
}

Tensor ms_ssim_distortion(const Tensor& a, const Tensor& b, const MsSsimOptions& opt) {
  return ops::add_scalar(ops::neg(ops::mean(ms_ssim_map(a, b, opt))), 1);
}

NVC_END_NAMESPACE
