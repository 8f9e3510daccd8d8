#include <algorithm>
#include <cmath>

#include "nvc/error.hpp"
#include "nvc/metrics.hpp"

namespace nvc {

int ms_ssim_scales(int min_side, int max_scales) {
  int m = 1;
  while (m < max_scales && min_side >= 10 * (1 << m)) ++m;
  return m;
}

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> g(static_cast<std::size_t>(size));
  double total = 0;
  for (int i = 0; i < size; ++i) {
    const double c = i - size / 2;
    g[i] = std::exp(-(c * c) / (2 * sigma * sigma));
    total += g[i];
  }
  for (double& v : g) v /= total;
  return g;
}

std::vector<double> ms_ssim_weights(int scales) {
  if (scales < 1 || scales > 5) throw Error("ms_ssim_weights: scale count must be in [1, 5]");
  std::vector<double> w(kMsSsimWeights, kMsSsimWeights + scales);
  double total = 0;
  for (double v : w) total += v;
  for (double& v : w) v /= total;
  return w;
}

namespace {

struct Plane {
  int w = 0, h = 0;
  std::vector<double> v;
};

// Separable filter, "valid" extent.
Plane blur(const Plane& p, const std::vector<double>& g) {
  const int k = static_cast<int>(g.size());
  const int ow = p.w - k + 1, oh = p.h - k + 1;
  std::vector<double> tmp(static_cast<std::size_t>(p.h) * ow);
  for (int y = 0; y < p.h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0;
      for (int i = 0; i < k; ++i) s += g[i] * p.v[static_cast<std::size_t>(y) * p.w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = s;
    }
  Plane out{ow, oh, std::vector<double>(static_cast<std::size_t>(oh) * ow)};
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0;
      for (int i = 0; i < k; ++i) s += g[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out.v[static_cast<std::size_t>(y) * ow + x] = s;
    }
  return out;
}

Plane product(const Plane& a, const Plane& b) {
  Plane out{a.w, a.h, std::vector<double>(a.v.size())};
  for (std::size_t i = 0; i < a.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
  return out;
}

// 2x2 average pooling; odd extents get one zero sample of padding on each side
// that still counts in the average.
Plane downsample(const Plane& p) {
  const int px = p.w % 2, py = p.h % 2;
  const int ow = (p.w + 2 * px - 2) / 2 + 1, oh = (p.h + 2 * py - 2) / 2 + 1;
  Plane out{ow, oh, std::vector<double>(static_cast<std::size_t>(oh) * ow)};
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0;
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
          const int yy = 2 * y + dy - py, xx = 2 * x + dx - px;
          if (yy >= 0 && yy < p.h && xx >= 0 && xx < p.w) s += p.v[static_cast<std::size_t>(yy) * p.w + xx];
        }
      out.v[static_cast<std::size_t>(y) * ow + x] = s / 4;
    }
  return out;
}

// Mean SSIM and mean contrast-structure term at one scale.
std::pair<double, double> ssim_terms(const Plane& a, const Plane& b, const MsSsimOptions& opt) {
  const int win = std::min({opt.window, a.w, a.h});
  const auto g = gaussian_window(win, opt.sigma);
  const double c1 = opt.k1 * opt.k1, c2 = opt.k2 * opt.k2;
  const Plane mu1 = blur(a, g), mu2 = blur(b, g);
  const Plane e11 = blur(product(a, a), g), e22 = blur(product(b, b), g), e12 = blur(product(a, b), g);
  double ssim = 0, cs = 0;
  for (std::size_t i = 0; i < mu1.v.size(); ++i) {
    const double m1 = mu1.v[i], m2 = mu2.v[i];
    const double s11 = e11.v[i] - m1 * m1, s22 = e22.v[i] - m2 * m2, s12 = e12.v[i] - m1 * m2;
    const double csv = (2 * s12 + c2) / (s11 + s22 + c2);
    cs += csv;
    ssim += (2 * m1 * m2 + c1) / (m1 * m1 + m2 * m2 + c1) * csv;
  }
  const double n = static_cast<double>(mu1.v.size());
  return {ssim / n, cs / n};
}

}  // namespace

double ms_ssim_plane(const std::vector<double>& a, const std::vector<double>& b, int width, int height,
                     const MsSsimOptions& opt) {
  if (a.size() != b.size() || a.size() != static_cast<std::size_t>(width) * height) {
    throw ShapeError("ms_ssim: plane extents differ");
  }
  const int scales = ms_ssim_scales(std::min(width, height), opt.max_scales);
  const auto weights = ms_ssim_weights(scales);
  Plane pa{width, height, a}, pb{width, height, b};
  double result = 1;
  for (int s = 0; s < scales; ++s) {
    const auto [ssim, cs] = ssim_terms(pa, pb, opt);
    const double term = s + 1 < scales ? cs : ssim;
    result *= std::pow(std::max(term, 0.0), weights[s]);
    if (s + 1 < scales) {
      pa = downsample(pa);
      pb = downsample(pb);
    }
  }
  return result;
}

double ms_ssim(const Frame& a, const Frame& b, const MsSsimOptions& opt) {
  require_same_extent(a, b, "ms_ssim");
  double total = 0;
  for (int c = 0; c < 3; ++c) {
    const auto pa = a.plane(c), pb = b.plane(c);
    total += ms_ssim_plane({pa.begin(), pa.end()}, {pb.begin(), pb.end()}, a.width, a.height, opt);
  }
  return total / 3;
}

double to_db(double d, double ceiling) {
  if (!(d >= 0 && d <= 1)) throw Error("to_db: MS-SSIM " + std::to_string(d) + " outside [0, 1]");
  if (d == 1) return ceiling;
  return std::min(ceiling, -10.0 * std::log10(1.0 - d));
}

}  // namespace nvc
