#include "nvc/kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

NVC_BEGIN_NAMESPACE
namespace kernels {

namespace {

using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMatrix = Eigen::Map<Matrix>;
using ConstMapMatrix = Eigen::Map<const Matrix>;

bool is_pointwise(const ConvGeometry& g) {
  return g.kernel_h == 1 && g.kernel_w == 1 && g.stride == 1 && g.pad == 0;
}

// Column buffer of shape (patch_size, out_h * out_w) for one sample.
void im2col(const ConvGeometry& g, const Scalar* in, Scalar* cols) {
  const int oh = g.out_height();
  const int ow = g.out_width();
  Scalar* row = cols;
  for (int c = 0; c < g.in_channels; ++c) {
    const Scalar* plane = in + static_cast<std::size_t>(c) * g.in_height * g.in_width;
    for (int ky = 0; ky < g.kernel_h; ++ky) {
      for (int kx = 0; kx < g.kernel_w; ++kx, row += static_cast<std::size_t>(oh) * ow) {
        for (int oy = 0; oy < oh; ++oy) {
          Scalar* dst = row + static_cast<std::size_t>(oy) * ow;
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.in_height) {
            std::fill(dst, dst + ow, Scalar(0));
            continue;
          }
          const Scalar* src = plane + static_cast<std::size_t>(iy) * g.in_width;
          if (g.stride == 1) {
            const int lo = std::clamp(g.pad - kx, 0, ow);
            const int hi = std::clamp(g.in_width + g.pad - kx, lo, ow);
            std::fill(dst, dst + lo, Scalar(0));
            std::memcpy(dst + lo, src + lo - g.pad + kx, sizeof(Scalar) * (hi - lo));
            std::fill(dst + hi, dst + ow, Scalar(0));
          } else {
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * g.stride - g.pad + kx;
              dst[ox] = (ix >= 0 && ix < g.in_width) ? src[ix] : Scalar(0);
            }
          }
        }
      }
    }
  }
}

void col2im_add(const ConvGeometry& g, const Scalar* cols, Scalar* out) {
  const int oh = g.out_height();
  const int ow = g.out_width();
  const Scalar* row = cols;
  for (int c = 0; c < g.in_channels; ++c) {
    Scalar* plane = out + static_cast<std::size_t>(c) * g.in_height * g.in_width;
    for (int ky = 0; ky < g.kernel_h; ++ky) {
      for (int kx = 0; kx < g.kernel_w; ++kx, row += static_cast<std::size_t>(oh) * ow) {
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.in_height) continue;
          const Scalar* src = row + static_cast<std::size_t>(oy) * ow;
          Scalar* dst = plane + static_cast<std::size_t>(iy) * g.in_width;
          if (g.stride == 1) {
            const int lo = std::clamp(g.pad - kx, 0, ow);
            const int hi = std::clamp(g.in_width + g.pad - kx, lo, ow);
            Scalar* d = dst - g.pad + kx;
            for (int ox = lo; ox < hi; ++ox) d[ox] += src[ox];
          } else {
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * g.stride - g.pad + kx;
              if (ix >= 0 && ix < g.in_width) dst[ix] += src[ox];
            }
          }
        }
      }
    }
  }
}

}  // namespace

void conv2d_forward(const ConvGeometry& g, std::span<const Scalar> in, std::span<const Scalar> weight,
                    std::span<const Scalar> bias, std::span<Scalar> out) {
  const int pixels = g.out_height() * g.out_width();
  const int k = g.patch_size();
  const std::size_t in_stride = static_cast<std::size_t>(g.in_channels) * g.in_height * g.in_width;
  const std::size_t out_stride = static_cast<std::size_t>(g.out_channels) * pixels;
  ConstMapMatrix w(weight.data(), g.out_channels, k);

#pragma omp parallel for schedule(static)
  for (int n = 0; n < g.batch; ++n) {
    MapMatrix y(out.data() + n * out_stride, g.out_channels, pixels);
    if (is_pointwise(g)) {
      y.noalias() = w * ConstMapMatrix(in.data() + n * in_stride, k, pixels);
    } else {
      std::vector<Scalar> cols(static_cast<std::size_t>(k) * pixels);
      im2col(g, in.data() + n * in_stride, cols.data());
      y.noalias() = w * ConstMapMatrix(cols.data(), k, pixels);
    }
    if (!bias.empty()) {
      for (int oc = 0; oc < g.out_channels; ++oc) y.row(oc).array() += bias[oc];
    }
  }
}

void conv2d_backward_input(const ConvGeometry& g, std::span<const Scalar> grad_out,
                           std::span<const Scalar> weight, std::span<Scalar> grad_in) {
  const int pixels = g.out_height() * g.out_width();
  const int k = g.patch_size();
  const std::size_t in_stride = static_cast<std::size_t>(g.in_channels) * g.in_height * g.in_width;
  const std::size_t out_stride = static_cast<std::size_t>(g.out_channels) * pixels;
  ConstMapMatrix w(weight.data(), g.out_channels, k);

#pragma omp parallel for schedule(static)
  for (int n = 0; n < g.batch; ++n) {
    ConstMapMatrix gy(grad_out.data() + n * out_stride, g.out_channels, pixels);
    if (is_pointwise(g)) {
      MapMatrix(grad_in.data() + n * in_stride, k, pixels).noalias() += w.transpose() * gy;
    } else {
      Matrix cols = w.transpose() * gy;
      col2im_add(g, cols.data(), grad_in.data() + n * in_stride);
    }
  }
}

void conv2d_backward_weight(const ConvGeometry& g, std::span<const Scalar> in,
                            std::span<const Scalar> grad_out, std::span<Scalar> grad_weight,
                            std::span<Scalar> grad_bias) {
  const int pixels = g.out_height() * g.out_width();
  const int k = g.patch_size();
  const std::size_t in_stride = static_cast<std::size_t>(g.in_channels) * g.in_height * g.in_width;
  const std::size_t out_stride = static_cast<std::size_t>(g.out_channels) * pixels;
  const std::size_t wsize = static_cast<std::size_t>(g.out_channels) * k;

  // One partial per sample, summed in sample order afterwards.
  std::vector<Scalar> partial(static_cast<std::size_t>(g.batch) * wsize);
#pragma omp parallel for schedule(static)
  for (int n = 0; n < g.batch; ++n) {
    ConstMapMatrix gy(grad_out.data() + n * out_stride, g.out_channels, pixels);
    MapMatrix gw(partial.data() + n * wsize, g.out_channels, k);
    if (is_pointwise(g)) {
      gw.noalias() = gy * ConstMapMatrix(in.data() + n * in_stride, k, pixels).transpose();
    } else {
      std::vector<Scalar> cols(static_cast<std::size_t>(k) * pixels);
      im2col(g, in.data() + n * in_stride, cols.data());
      gw.noalias() = gy * ConstMapMatrix(cols.data(), k, pixels).transpose();
    }
  }
  for (int n = 0; n < g.batch; ++n) {
    const Scalar* p = partial.data() + n * wsize;
    for (std::size_t i = 0; i < wsize; ++i) grad_weight[i] += p[i];
  }
  if (!grad_bias.empty()) {
    for (int n = 0; n < g.batch; ++n) {
      for (int oc = 0; oc < g.out_channels; ++oc) {
        const Scalar* row = grad_out.data() + n * out_stride + static_cast<std::size_t>(oc) * pixels;
        Scalar s = 0;
        for (int p = 0; p < pixels; ++p) s += row[p];
        grad_bias[oc] += s;
      }
    }
  }
}

namespace {

// norm = beta + gamma * x^2 for one sample, shape (channels, pixels).
Matrix gdn_norm(const PointwiseGeometry& g, const Scalar* x, std::span<const Scalar> beta,
                std::span<const Scalar> gamma) {
  ConstMapMatrix xs(x, g.channels, g.pixels);
  ConstMapMatrix gm(gamma.data(), g.channels, g.channels);
  Matrix sq = xs.array().square().matrix();
  Matrix norm = gm * sq;
  for (int c = 0; c < g.channels; ++c) norm.row(c).array() += beta[c];
  return norm;
}

}  // namespace

void gdn_forward(const PointwiseGeometry& g, std::span<const Scalar> x, std::span<const Scalar> beta,
                 std::span<const Scalar> gamma, bool inverse, std::span<Scalar> y) {
  const std::size_t stride = static_cast<std::size_t>(g.channels) * g.pixels;
#pragma omp parallel for schedule(static)
  for (int n = 0; n < g.batch; ++n) {
    const Scalar* xs = x.data() + n * stride;
    Matrix norm = gdn_norm(g, xs, beta, gamma);
    Scalar* ys = y.data() + n * stride;
    const Scalar* s = norm.data();
    if (inverse) {
      for (std::size_t i = 0; i < stride; ++i) ys[i] = xs[i] * std::sqrt(s[i]);
    } else {
      for (std::size_t i = 0; i < stride; ++i) ys[i] = xs[i] / std::sqrt(s[i]);
    }
  }
}

void gdn_backward(const PointwiseGeometry& g, std::span<const Scalar> x, std::span<const Scalar> beta,
                  std::span<const Scalar> gamma, bool inverse, std::span<const Scalar> grad_y,
                  std::span<Scalar> grad_x, std::span<Scalar> grad_beta, std::span<Scalar> grad_gamma) {
  const std::size_t stride = static_cast<std::size_t>(g.channels) * g.pixels;
  const std::size_t gsize = static_cast<std::size_t>(g.channels) * g.channels;
  std::vector<Scalar> partial_gamma(static_cast<std::size_t>(g.batch) * gsize);
  std::vector<Scalar> partial_beta(static_cast<std::size_t>(g.batch) * g.channels);
  ConstMapMatrix gm(gamma.data(), g.channels, g.channels);

#pragma omp parallel for schedule(static)
  for (int n = 0; n < g.batch; ++n) {
    const Scalar* xs = x.data() + n * stride;
    const Scalar* gy = grad_y.data() + n * stride;
    Matrix norm = gdn_norm(g, xs, beta, gamma);
    // a = d(loss)/d(norm) * (-2) for the forward variant, +2 for the inverse.
    Matrix a(g.channels, g.pixels);
    Scalar* gx = grad_x.data() + n * stride;
    for (std::size_t i = 0; i < stride; ++i) {
      const Scalar s = norm.data()[i];
      const Scalar root = std::sqrt(s);
      if (inverse) {
        gx[i] += gy[i] * root;
        a.data()[i] = gy[i] * xs[i] / root;
      } else {
        gx[i] += gy[i] / root;
        a.data()[i] = -gy[i] * xs[i] / (s * root);
      }
    }
    Matrix back = gm.transpose() * a;
    for (std::size_t i = 0; i < stride; ++i) gx[i] += xs[i] * back.data()[i];
    ConstMapMatrix xm(xs, g.channels, g.pixels);
    MapMatrix pg(partial_gamma.data() + n * gsize, g.channels, g.channels);
    pg.noalias() = Scalar(0.5) * a * xm.array().square().matrix().transpose();
    for (int c = 0; c < g.channels; ++c) partial_beta[n * g.channels + c] = Scalar(0.5) * a.row(c).sum();
  }
  for (int n = 0; n < g.batch; ++n) {
    for (std::size_t i = 0; i < gsize; ++i) grad_gamma[i] += partial_gamma[n * gsize + i];
    for (int c = 0; c < g.channels; ++c) grad_beta[c] += partial_beta[n * g.channels + c];
  }
}

namespace {

struct Sample {
  int x0, x1, y0, y1;
  Scalar ax, ay;
  bool inside_x, inside_y;  // sample not clamped, so d/d(flow) is live
};

inline Sample locate(int x, int y, Scalar dx, Scalar dy, int width, int height) {
  Sample s{};
  Scalar sx = static_cast<Scalar>(x) + dx;
  Scalar sy = static_cast<Scalar>(y) + dy;
  const Scalar max_x = static_cast<Scalar>(width - 1);
  const Scalar max_y = static_cast<Scalar>(height - 1);
  s.inside_x = sx > 0 && sx < max_x;
  s.inside_y = sy > 0 && sy < max_y;
  sx = std::clamp(sx, Scalar(0), max_x);
  sy = std::clamp(sy, Scalar(0), max_y);
  s.x0 = static_cast<int>(std::floor(sx));
  s.y0 = static_cast<int>(std::floor(sy));
  s.x1 = std::min(s.x0 + 1, width - 1);
  s.y1 = std::min(s.y0 + 1, height - 1);
  s.ax = sx - static_cast<Scalar>(s.x0);
  s.ay = sy - static_cast<Scalar>(s.y0);
  return s;
}

}  // namespace

void warp_forward(const WarpGeometry& g, std::span<const Scalar> image, std::span<const Scalar> flow,
                  std::span<Scalar> out) {
  const std::size_t plane = static_cast<std::size_t>(g.height) * g.width;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < g.batch; ++n) {
    for (int y = 0; y < g.height; ++y) {
      const Scalar* fx = flow.data() + (static_cast<std::size_t>(n) * 2) * plane;
      const Scalar* fy = fx + plane;
      for (int x = 0; x < g.width; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * g.width + x;
        const Sample s = locate(x, y, fx[p], fy[p], g.width, g.height);
        const Scalar w00 = (1 - s.ax) * (1 - s.ay), w01 = s.ax * (1 - s.ay);
        const Scalar w10 = (1 - s.ax) * s.ay, w11 = s.ax * s.ay;
        for (int c = 0; c < g.channels; ++c) {
          const Scalar* img = image.data() + (static_cast<std::size_t>(n) * g.channels + c) * plane;
          out[(static_cast<std::size_t>(n) * g.channels + c) * plane + p] =
              w00 * img[s.y0 * g.width + s.x0] + w01 * img[s.y0 * g.width + s.x1] +
              w10 * img[s.y1 * g.width + s.x0] + w11 * img[s.y1 * g.width + s.x1];
        }
      }
    }
  }
}

void warp_backward(const WarpGeometry& g, std::span<const Scalar> image, std::span<const Scalar> flow,
                   std::span<const Scalar> grad_out, std::span<Scalar> grad_image,
                   std::span<Scalar> grad_flow) {
  const std::size_t plane = static_cast<std::size_t>(g.height) * g.width;
  // Image gradients scatter, so parallelize over (batch, channel) planes where
  // the scatter targets are private; flow gradients gather per pixel.
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < g.batch; ++n) {
    for (int c = 0; c < g.channels; ++c) {
      const Scalar* fx = flow.data() + (static_cast<std::size_t>(n) * 2) * plane;
      const Scalar* fy = fx + plane;
      const std::size_t off = (static_cast<std::size_t>(n) * g.channels + c) * plane;
      Scalar* gi = grad_image.data() + off;
      const Scalar* go = grad_out.data() + off;
      for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
          const std::size_t p = static_cast<std::size_t>(y) * g.width + x;
          const Sample s = locate(x, y, fx[p], fy[p], g.width, g.height);
          const Scalar v = go[p];
          gi[s.y0 * g.width + s.x0] += v * (1 - s.ax) * (1 - s.ay);
          gi[s.y0 * g.width + s.x1] += v * s.ax * (1 - s.ay);
          gi[s.y1 * g.width + s.x0] += v * (1 - s.ax) * s.ay;
          gi[s.y1 * g.width + s.x1] += v * s.ax * s.ay;
        }
      }
    }
  }
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < g.batch; ++n) {
    for (int y = 0; y < g.height; ++y) {
      const Scalar* fx = flow.data() + (static_cast<std::size_t>(n) * 2) * plane;
      const Scalar* fy = fx + plane;
      Scalar* gfx = grad_flow.data() + (static_cast<std::size_t>(n) * 2) * plane;
      Scalar* gfy = gfx + plane;
      for (int x = 0; x < g.width; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * g.width + x;
        const Sample s = locate(x, y, fx[p], fy[p], g.width, g.height);
        Scalar dx = 0, dy = 0;
        for (int c = 0; c < g.channels; ++c) {
          const std::size_t off = (static_cast<std::size_t>(n) * g.channels + c) * plane;
          const Scalar* img = image.data() + off;
          const Scalar v = grad_out[off + p];
          const Scalar i00 = img[s.y0 * g.width + s.x0], i01 = img[s.y0 * g.width + s.x1];
          const Scalar i10 = img[s.y1 * g.width + s.x0], i11 = img[s.y1 * g.width + s.x1];
          dx += v * ((1 - s.ay) * (i01 - i00) + s.ay * (i11 - i10));
          dy += v * ((1 - s.ax) * (i10 - i00) + s.ax * (i11 - i01));
        }
        if (s.inside_x) gfx[p] += dx;
        if (s.inside_y) gfy[p] += dy;
      }
    }
  }
}

}  // namespace kernels
NVC_END_NAMESPACE
