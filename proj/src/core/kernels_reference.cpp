// Serial, loop-for-loop transcriptions of the kernel definitions. Slow on
// purpose: these are what the parallel kernels are tested against.

#include <algorithm>
#include <cmath>

#include "nvc/kernels.hpp"

NVC_BEGIN_NAMESPACE
namespace kernels::reference {

namespace {

std::size_t in_index(const ConvGeometry& g, int n, int c, int y, int x) {
  return ((static_cast<std::size_t>(n) * g.in_channels + c) * g.in_height + y) * g.in_width + x;
}
std::size_t out_index(const ConvGeometry& g, int n, int c, int y, int x) {
  return ((static_cast<std::size_t>(n) * g.out_channels + c) * g.out_height() + y) * g.out_width() + x;
}
std::size_t w_index(const ConvGeometry& g, int oc, int ic, int ky, int kx) {
  return ((static_cast<std::size_t>(oc) * g.in_channels + ic) * g.kernel_h + ky) * g.kernel_w + kx;
}

}  // namespace

void conv2d_forward(const ConvGeometry& g, std::span<const Scalar> in, std::span<const Scalar> weight,
                    std::span<const Scalar> bias, std::span<Scalar> out) {
  for (int n = 0; n < g.batch; ++n)
    for (int oc = 0; oc < g.out_channels; ++oc)
      for (int oy = 0; oy < g.out_height(); ++oy)
        for (int ox = 0; ox < g.out_width(); ++ox) {
          double acc = bias.empty() ? 0.0 : bias[oc];
          for (int ic = 0; ic < g.in_channels; ++ic)
            for (int ky = 0; ky < g.kernel_h; ++ky)
              for (int kx = 0; kx < g.kernel_w; ++kx) {
                const int iy = oy * g.stride - g.pad + ky;
                const int ix = ox * g.stride - g.pad + kx;
                if (iy < 0 || iy >= g.in_height || ix < 0 || ix >= g.in_width) continue;
                acc += static_cast<double>(weight[w_index(g, oc, ic, ky, kx)]) * in[in_index(g, n, ic, iy, ix)];
              }
          out[out_index(g, n, oc, oy, ox)] = static_cast<Scalar>(acc);
        }
}

void conv2d_backward_input(const ConvGeometry& g, std::span<const Scalar> grad_out,
                           std::span<const Scalar> weight, std::span<Scalar> grad_in) {
  for (int n = 0; n < g.batch; ++n)
    for (int oc = 0; oc < g.out_channels; ++oc)
      for (int oy = 0; oy < g.out_height(); ++oy)
        for (int ox = 0; ox < g.out_width(); ++ox) {
          const Scalar go = grad_out[out_index(g, n, oc, oy, ox)];
          for (int ic = 0; ic < g.in_channels; ++ic)
            for (int ky = 0; ky < g.kernel_h; ++ky)
              for (int kx = 0; kx < g.kernel_w; ++kx) {
                const int iy = oy * g.stride - g.pad + ky;
                const int ix = ox * g.stride - g.pad + kx;
                if (iy < 0 || iy >= g.in_height || ix < 0 || ix >= g.in_width) continue;
                grad_in[in_index(g, n, ic, iy, ix)] += go * weight[w_index(g, oc, ic, ky, kx)];
              }
        }
}

void conv2d_backward_weight(const ConvGeometry& g, std::span<const Scalar> in,
                            std::span<const Scalar> grad_out, std::span<Scalar> grad_weight,
                            std::span<Scalar> grad_bias) {
  for (int n = 0; n < g.batch; ++n)
    for (int oc = 0; oc < g.out_channels; ++oc)
      for (int oy = 0; oy < g.out_height(); ++oy)
        for (int ox = 0; ox < g.out_width(); ++ox) {
          const Scalar go = grad_out[out_index(g, n, oc, oy, ox)];
          if (!grad_bias.empty()) grad_bias[oc] += go;
          for (int ic = 0; ic < g.in_channels; ++ic)
            for (int ky = 0; ky < g.kernel_h; ++ky)
              for (int kx = 0; kx < g.kernel_w; ++kx) {
                const int iy = oy * g.stride - g.pad + ky;
                const int ix = ox * g.stride - g.pad + kx;
                if (iy < 0 || iy >= g.in_height || ix < 0 || ix >= g.in_width) continue;
                grad_weight[w_index(g, oc, ic, ky, kx)] += go * in[in_index(g, n, ic, iy, ix)];
              }
        }
}

void gdn_forward(const PointwiseGeometry& g, std::span<const Scalar> x, std::span<const Scalar> beta,
                 std::span<const Scalar> gamma, bool inverse, std::span<Scalar> y) {
  auto at = [&](int n, int c, int p) {
    return (static_cast<std::size_t>(n) * g.channels + c) * g.pixels + p;
  };
  for (int n = 0; n < g.batch; ++n)
    for (int p = 0; p < g.pixels; ++p)
      for (int i = 0; i < g.channels; ++i) {
        double s = beta[i];
        for (int j = 0; j < g.channels; ++j) {
          const double xj = x[at(n, j, p)];
          s += gamma[static_cast<std::size_t>(i) * g.channels + j] * xj * xj;
        }
        const double xi = x[at(n, i, p)];
        y[at(n, i, p)] = static_cast<Scalar>(inverse ? xi * std::sqrt(s) : xi / std::sqrt(s));
      }
}

void gdn_backward(const PointwiseGeometry& g, std::span<const Scalar> x, std::span<const Scalar> beta,
                  std::span<const Scalar> gamma, bool inverse, std::span<const Scalar> grad_y,
                  std::span<Scalar> grad_x, std::span<Scalar> grad_beta, std::span<Scalar> grad_gamma) {
  auto at = [&](int n, int c, int p) {
    return (static_cast<std::size_t>(n) * g.channels + c) * g.pixels + p;
  };
  const int C = g.channels;
  for (int n = 0; n < g.batch; ++n)
    for (int p = 0; p < g.pixels; ++p)
      for (int i = 0; i < C; ++i) {
        double s = beta[i];
        for (int j = 0; j < C; ++j) {
          const double xj = x[at(n, j, p)];
          s += gamma[static_cast<std::size_t>(i) * C + j] * xj * xj;
        }
        const double xi = x[at(n, i, p)];
        const double gy = grad_y[at(n, i, p)];
        // y_i = xi * s^e with e = +-1/2; dy/dxi (direct) and dy/ds.
        const double e = inverse ? 0.5 : -0.5;
        const double dy_ds = xi * e * std::pow(s, e - 1.0);
        grad_x[at(n, i, p)] += static_cast<Scalar>(gy * std::pow(s, e));
        grad_beta[i] += static_cast<Scalar>(gy * dy_ds);
        for (int j = 0; j < C; ++j) {
          const double xj = x[at(n, j, p)];
          grad_gamma[static_cast<std::size_t>(i) * C + j] += static_cast<Scalar>(gy * dy_ds * xj * xj);
          grad_x[at(n, j, p)] +=
              static_cast<Scalar>(gy * dy_ds * 2.0 * gamma[static_cast<std::size_t>(i) * C + j] * xj);
        }
      }
}

namespace {

double bilinear(const Scalar* img, int width, int height, double sx, double sy) {
  sx = std::clamp(sx, 0.0, static_cast<double>(width - 1));
  sy = std::clamp(sy, 0.0, static_cast<double>(height - 1));
  const int x0 = static_cast<int>(std::floor(sx));
  const int y0 = static_cast<int>(std::floor(sy));
  const int x1 = std::min(x0 + 1, width - 1);
  const int y1 = std::min(y0 + 1, height - 1);
  const double ax = sx - x0, ay = sy - y0;
  return (1 - ay) * ((1 - ax) * img[y0 * width + x0] + ax * img[y0 * width + x1]) +
         ay * ((1 - ax) * img[y1 * width + x0] + ax * img[y1 * width + x1]);
}

}  // namespace

void warp_forward(const WarpGeometry& g, std::span<const Scalar> image, std::span<const Scalar> flow,
                  std::span<Scalar> out) {
  const std::size_t plane = static_cast<std::size_t>(g.height) * g.width;
  for (int n = 0; n < g.batch; ++n)
    for (int c = 0; c < g.channels; ++c)
      for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) {
          const std::size_t p = static_cast<std::size_t>(y) * g.width + x;
          const double dx = flow[(static_cast<std::size_t>(n) * 2) * plane + p];
          const double dy = flow[(static_cast<std::size_t>(n) * 2 + 1) * plane + p];
          const Scalar* img = image.data() + (static_cast<std::size_t>(n) * g.channels + c) * plane;
          out[(static_cast<std::size_t>(n) * g.channels + c) * plane + p] =
              static_cast<Scalar>(bilinear(img, g.width, g.height, x + dx, y + dy));
        }
}

void warp_backward(const WarpGeometry& g, std::span<const Scalar> image, std::span<const Scalar> flow,
                   std::span<const Scalar> grad_out, std::span<Scalar> grad_image,
                   std::span<Scalar> grad_flow) {
  const std::size_t plane = static_cast<std::size_t>(g.height) * g.width;
  for (int n = 0; n < g.batch; ++n)
    for (int c = 0; c < g.channels; ++c)
      for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) {
          const std::size_t p = static_cast<std::size_t>(y) * g.width + x;
          const std::size_t fxi = (static_cast<std::size_t>(n) * 2) * plane + p;
          const std::size_t fyi = fxi + plane;
          double sx = x + static_cast<double>(flow[fxi]);
          double sy = y + static_cast<double>(flow[fyi]);
          const bool live_x = sx > 0 && sx < g.width - 1;
          const bool live_y = sy > 0 && sy < g.height - 1;
          sx = std::clamp(sx, 0.0, static_cast<double>(g.width - 1));
          sy = std::clamp(sy, 0.0, static_cast<double>(g.height - 1));
          const int x0 = static_cast<int>(std::floor(sx));
          const int y0 = static_cast<int>(std::floor(sy));
          const int x1 = std::min(x0 + 1, g.width - 1);
          const int y1 = std::min(y0 + 1, g.height - 1);
          const double ax = sx - x0, ay = sy - y0;
          const std::size_t off = (static_cast<std::size_t>(n) * g.channels + c) * plane;
          const Scalar* img = image.data() + off;
          const double go = grad_out[off + p];
          Scalar* gi = grad_image.data() + off;
          gi[y0 * g.width + x0] += static_cast<Scalar>(go * (1 - ax) * (1 - ay));
          gi[y0 * g.width + x1] += static_cast<Scalar>(go * ax * (1 - ay));
          gi[y1 * g.width + x0] += static_cast<Scalar>(go * (1 - ax) * ay);
          gi[y1 * g.width + x1] += static_cast<Scalar>(go * ax * ay);
          if (live_x) {
            grad_flow[fxi] += static_cast<Scalar>(
                go * ((1 - ay) * (img[y0 * g.width + x1] - img[y0 * g.width + x0]) +
                      ay * (img[y1 * g.width + x1] - img[y1 * g.width + x0])));
          }
          if (live_y) {
            grad_flow[fyi] += static_cast<Scalar>(
                go * ((1 - ax) * (img[y1 * g.width + x0] - img[y0 * g.width + x0]) +
                      ax * (img[y1 * g.width + x1] - img[y0 * g.width + x1])));
          }
        }
}

}  // namespace kernels::reference
NVC_END_NAMESPACE
