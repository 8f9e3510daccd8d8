#include "nvc/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nvc/error.hpp"
#include "nvc/kernels.hpp"

NVC_BEGIN_NAMESPACE
namespace ops {

using autograd::accumulate;
using autograd::grad_buffer;
using autograd::mark_output;
using autograd::should_record;

namespace {

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": operand shapes differ, " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

// Elementwise unary op: forward f(x), derivative df(x, y).
template <class F, class DF>
Tensor unary(const Tensor& a, F f, DF df) {
  Tensor out(a.shape());
  auto x = a.data();
  auto y = out.data();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  if (should_record({&a})) {
    mark_output(out);
    Tape::current()->record([ai = a.impl(), oi = out.impl(), df] {
      if (oi->grad.empty() || !ai->requires_grad) return;
      auto g = grad_buffer(*ai);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += oi->grad[i] * df(ai->data[i], oi->data[i]);
    });
  }
  return out;
}

Scalar normal_cdf(Scalar t) {
  return Scalar(0.5) * std::erfc(-t * static_cast<Scalar>(std::numbers::sqrt2 / 2));
}
Scalar normal_pdf(Scalar t) {
  return static_cast<Scalar>(0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2) * std::exp(Scalar(-0.5) * t * t);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same(a, b, "add");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
  if (should_record({&a, &b})) {
    mark_output(out);
    Tape::current()->record([ai = a.impl(), bi = b.impl(), oi = out.impl()] {
      if (oi->grad.empty()) return;
      if (ai->requires_grad) accumulate(*ai, oi->grad);
      if (bi->requires_grad) accumulate(*bi, oi->grad);
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same(a, b, "sub");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
  if (should_record({&a, &b})) {
    mark_output(out);
    Tape::current()->record([ai = a.impl(), bi = b.impl(), oi = out.impl()] {
      if (oi->grad.empty()) return;
      if (ai->requires_grad) accumulate(*ai, oi->grad);
      if (bi->requires_grad) {
        auto g = grad_buffer(*bi);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] -= oi->grad[i];
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same(a, b, "mul");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
  if (should_record({&a, &b})) {
    mark_output(out);
    Tape::current()->record([ai = a.impl(), bi = b.impl(), oi = out.impl()] {
      if (oi->grad.empty()) return;
      if (ai->requires_grad) {
        auto g = grad_buffer(*ai);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += oi->grad[i] * bi->data[i];
      }
      if (bi->requires_grad) {
        auto g = grad_buffer(*bi);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += oi->grad[i] * ai->data[i];
      }
    });
  }
  return out;
}

Tensor div(const Tensor& a, const Tensor& b) {
  require_same(a, b, "div");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out.data()[i] = a.data()[i] / b.data()[i];
  if (should_record({&a, &b})) {
    mark_output(out);
    Tape::current()->record([ai = a.impl(), bi = b.impl(), oi = out.impl()] {
      if (oi->grad.empty()) return;
      if (ai->requires_grad) {
        auto g = grad_buffer(*ai);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += oi->grad[i] / bi->data[i];
      }
      if (bi->requires_grad) {
        auto g = grad_buffer(*bi);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] -= oi->grad[i] * oi->data[i] / bi->data[i];
      }
    });
  }
  return out;
}

Tensor add_scalar(const Tensor& a, Scalar s) {
  return unary(a, [s](Scalar x) { return x + s; }, [](Scalar, Scalar) { return Scalar(1); });
}

Tensor mul_scalar(const Tensor& a, Scalar s) {
  return unary(a, [s](Scalar x) { return x * s; }, [s](Scalar, Scalar) { return s; });
}

Tensor neg(const Tensor& a) { return mul_scalar(a, -1); }

Tensor square(const Tensor& a) {
  return unary(a, [](Scalar x) { return x * x; }, [](Scalar x, Scalar) { return 2 * x; });
}

Tensor abs(const Tensor& a) {
  return unary(
      a, [](Scalar x) { return std::abs(x); },
      [](Scalar x, Scalar) { return x > 0 ? Scalar(1) : (x < 0 ? Scalar(-1) : Scalar(0)); });
}

Tensor exp(const Tensor& a) {
  return unary(a, [](Scalar x) { return std::exp(x); }, [](Scalar, Scalar y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary(a, [](Scalar x) { return std::log(x); }, [](Scalar x, Scalar) { return 1 / x; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, [](Scalar x) { return 1 / (1 + std::exp(-x)); }, [](Scalar, Scalar y) { return y * (1 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary(a, [](Scalar x) { return std::tanh(x); }, [](Scalar, Scalar y) { return 1 - y * y; });
}

Tensor relu(const Tensor& a) {
  return unary(
      a, [](Scalar x) { return x > 0 ? x : Scalar(0); },
      [](Scalar x, Scalar) { return x > 0 ? Scalar(1) : Scalar(0); });
}

Tensor softplus(const Tensor& a) {
  return unary(
      a, [](Scalar x) { return x > 20 ? x : std::log1p(std::exp(x)); },
      [](Scalar x, Scalar) { return 1 / (1 + std::exp(-x)); });
}

Tensor pow_scalar(const Tensor& a, Scalar p) {
  return unary(
      a, [p](Scalar x) { return std::pow(x, p); },
      [p](Scalar x, Scalar) { return p * std::pow(x, p - 1); });
}

Tensor clamp(const Tensor& a, Scalar lo, Scalar hi) {
  return unary(
      a, [lo, hi](Scalar x) { return std::clamp(x, lo, hi); },
      [lo, hi](Scalar x, Scalar) { return (x >= lo && x <= hi) ? Scalar(1) : Scalar(0); });
}

Tensor lower_bound(const Tensor& a, Scalar bound) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out.data()[i] = std::max(a.data()[i], bound);
  if (should_record({&a})) {
    mark_output(out);
    Tape::current()->record([ai = a.impl(), oi = out.impl(), bound] {
      if (oi->grad.empty()) return;
      auto g = grad_buffer(*ai);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const Scalar go = oi->grad[i];
        if (ai->data[i] >= bound || go < 0) g[i] += go;
      }
    });
  }
  return out;
}

Tensor round_ste(const Tensor& a) {
  return unary(a, [](Scalar x) { return std::round(x); }, [](Scalar, Scalar) { return Scalar(1); });
}

Tensor broadcast_channels(const Tensor& per_channel, const Shape& shape) {
  if (shape.size() != 4 || per_channel.numel() != static_cast<std::size_t>(shape[1])) {
    throw ShapeError("broadcast_channels: " + shape_string(per_channel.shape()) + " cannot broadcast to " +
                     shape_string(shape));
  }
  Tensor out(shape);
  const std::size_t plane = static_cast<std::size_t>(shape[2]) * shape[3];
  for (int n = 0; n < shape[0]; ++n)
    for (int c = 0; c < shape[1]; ++c) {
      Scalar* dst = out.ptr() + (static_cast<std::size_t>(n) * shape[1] + c) * plane;
      std::fill(dst, dst + plane, per_channel.data()[c]);
    }
  if (should_record({&per_channel})) {
    mark_output(out);
    Tape::current()->record([pi = per_channel.impl(), oi = out.impl(), shape, plane] {
      if (oi->grad.empty()) return;
      auto g = grad_buffer(*pi);
      for (int n = 0; n < shape[0]; ++n)
        for (int c = 0; c < shape[1]; ++c) {
          const Scalar* src = oi->grad.data() + (static_cast<std::size_t>(n) * shape[1] + c) * plane;
          Scalar s = 0;
          for (std::size_t p = 0; p < plane; ++p) s += src[p];
          g[c] += s;
        }
    });
  }
  return out;
}

Tensor sum(const Tensor& a) {
  Scalar s = 0;
  for (Scalar v : a.data()) s += v;
  Tensor out = Tensor::scalar(s);
  if (should_record({&a})) {
    mark_output(out);
    Tape::current()->record([ai = a.impl(), oi = out.impl()] {
      if (oi->grad.empty()) return;
      auto g = grad_buffer(*ai);
      for (auto& v : g) v += oi->grad[0];
    });
  }
  return out;
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw ShapeError("mean of an empty tensor");
  return mul_scalar(sum(a), Scalar(1) / static_cast<Scalar>(a.numel()));
}

Tensor spatial_mean(const Tensor& a) {
  require_rank(a, 4, "spatial_mean");
  const int n_ = a.dim(0), c_ = a.dim(1);
  const std::size_t plane = static_cast<std::size_t>(a.dim(2)) * a.dim(3);
  Tensor out(Shape{n_, c_});
  for (std::size_t i = 0; i < static_cast<std::size_t>(n_) * c_; ++i) {
    const Scalar* src = a.ptr() + i * plane;
    Scalar s = 0;
    for (std::size_t p = 0; p < plane; ++p) s += src[p];
    out.data()[i] = s / static_cast<Scalar>(plane);
  }
  if (should_record({&a})) {
    mark_output(out);
    Tape::current()->record([ai = a.impl(), oi = out.impl(), plane] {
      if (oi->grad.empty()) return;
      auto g = grad_buffer(*ai);
      for (std::size_t i = 0; i < oi->grad.size(); ++i) {
        const Scalar v = oi->grad[i] / static_cast<Scalar>(plane);
        for (std::size_t p = 0; p < plane; ++p) g[i * plane + p] += v;
      }
    });
  }
  return out;
}

Tensor concat_channels(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  const Tensor& first = parts.front();
  require_rank(first, 4, "concat_channels");
  int channels = 0;
  for (const auto& p : parts) {
    require_rank(p, 4, "concat_channels");
    if (p.dim(0) != first.dim(0) || p.dim(2) != first.dim(2) || p.dim(3) != first.dim(3)) {
      throw ShapeError("concat_channels: mismatched batch/spatial extents, " + shape_string(first.shape()) +
                       " vs " + shape_string(p.shape()));
    }
    channels += p.dim(1);
  }
  const int batch = first.dim(0);
  const std::size_t plane = static_cast<std::size_t>(first.dim(2)) * first.dim(3);
  Tensor out(Shape{batch, channels, first.dim(2), first.dim(3)});
  bool record = false;
  for (const auto& p : parts) record = record || should_record({&p});
  for (int n = 0; n < batch; ++n) {
    Scalar* dst = out.ptr() + static_cast<std::size_t>(n) * channels * plane;
    for (const auto& p : parts) {
      const std::size_t block = static_cast<std::size_t>(p.dim(1)) * plane;
      std::copy_n(p.ptr() + n * block, block, dst);
      dst += block;
    }
  }
  if (record) {
    mark_output(out);
    std::vector<std::shared_ptr<TensorImpl>> impls;
    for (const auto& p : parts) impls.push_back(p.impl());
    Tape::current()->record([impls, oi = out.impl(), batch, channels, plane] {
      if (oi->grad.empty()) return;
      std::size_t offset = 0;
      for (const auto& pi : impls) {
        const std::size_t block = static_cast<std::size_t>(pi->shape[1]) * plane;
        if (pi->requires_grad) {
          auto g = grad_buffer(*pi);
          for (int n = 0; n < batch; ++n) {
            const Scalar* src = oi->grad.data() + static_cast<std::size_t>(n) * channels * plane + offset;
            for (std::size_t i = 0; i < block; ++i) g[n * block + i] += src[i];
          }
        }
        offset += block;
      }
    });
  }
  return out;
}

Tensor slice_channels(const Tensor& a, int start, int count) {
  require_rank(a, 4, "slice_channels");
  if (start < 0 || count < 0 || start + count > a.dim(1)) {
    throw ShapeError("slice_channels: range [" + std::to_string(start) + ", " + std::to_string(start + count) +
                     ") outside channel axis of " + shape_string(a.shape()));
  }
  const int batch = a.dim(0), channels = a.dim(1);
  const std::size_t plane = static_cast<std::size_t>(a.dim(2)) * a.dim(3);
  Tensor out(Shape{batch, count, a.dim(2), a.dim(3)});
  const std::size_t block = static_cast<std::size_t>(count) * plane;
  for (int n = 0; n < batch; ++n) {
    std::copy_n(a.ptr() + (static_cast<std::size_t>(n) * channels + start) * plane, block, out.ptr() + n * block);
  }
  if (should_record({&a})) {
    mark_output(out);
    Tape::current()->record([ai = a.impl(), oi = out.impl(), batch, channels, start, plane, block] {
      if (oi->grad.empty()) return;
      auto g = grad_buffer(*ai);
      for (int n = 0; n < batch; ++n) {
        Scalar* dst = g.data() + (static_cast<std::size_t>(n) * channels + start) * plane;
        const Scalar* src = oi->grad.data() + n * block;
        for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
      }
    });
  }
  return out;
}

Tensor stack(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("stack: no inputs");
  Shape shape = parts.front().shape();
  for (const auto& p : parts) require_same(p, parts.front(), "stack");
  const std::size_t block = parts.front().numel();
  shape.insert(shape.begin(), static_cast<int>(parts.size()));
  Tensor out(shape);
  bool record = false;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    std::copy_n(parts[k].ptr(), block, out.ptr() + k * block);
    record = record || should_record({&parts[k]});
  }
  if (record) {
    mark_output(out);
    std::vector<std::shared_ptr<TensorImpl>> impls;
    for (const auto& p : parts) impls.push_back(p.impl());
    Tape::current()->record([impls, oi = out.impl(), block] {
      if (oi->grad.empty()) return;
      for (std::size_t k = 0; k < impls.size(); ++k) {
        if (impls[k]->requires_grad) accumulate(*impls[k], std::span<const Scalar>(oi->grad).subspan(k * block, block));
      }
    });
  }
  return out;
}

Tensor avg_pool2(const Tensor& a) {
  require_rank(a, 4, "avg_pool2");
  const int n_ = a.dim(0), c_ = a.dim(1), h = a.dim(2), w = a.dim(3);
  const int oh = h / 2, ow = w / 2;
  if (oh == 0 || ow == 0) throw ShapeError("avg_pool2: input too small, " + shape_string(a.shape()));
  Tensor out(Shape{n_, c_, oh, ow});
  for (int p = 0; p < n_ * c_; ++p) {
    const Scalar* src = a.ptr() + static_cast<std::size_t>(p) * h * w;
    Scalar* dst = out.ptr() + static_cast<std::size_t>(p) * oh * ow;
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        dst[y * ow + x] = Scalar(0.25) * (src[2 * y * w + 2 * x] + src[2 * y * w + 2 * x + 1] +
                                          src[(2 * y + 1) * w + 2 * x] + src[(2 * y + 1) * w + 2 * x + 1]);
      }
  }
  if (should_record({&a})) {
    mark_output(out);
    Tape::current()->record([ai = a.impl(), oi = out.impl(), n_, c_, h, w, oh, ow] {
      if (oi->grad.empty()) return;
      auto g = grad_buffer(*ai);
      for (int p = 0; p < n_ * c_; ++p) {
        Scalar* dst = g.data() + static_cast<std::size_t>(p) * h * w;
        const Scalar* src = oi->grad.data() + static_cast<std::size_t>(p) * oh * ow;
        for (int y = 0; y < oh; ++y)
          for (int x = 0; x < ow; ++x) {
            const Scalar v = Scalar(0.25) * src[y * ow + x];
            dst[2 * y * w + 2 * x] += v;
            dst[2 * y * w + 2 * x + 1] += v;
            dst[(2 * y + 1) * w + 2 * x] += v;
            dst[(2 * y + 1) * w + 2 * x + 1] += v;
          }
      }
    });
  }
  return out;
}

Tensor upsample_nearest2(const Tensor& a) {
  require_rank(a, 4, "upsample_nearest2");
  const int n_ = a.dim(0), c_ = a.dim(1), h = a.dim(2), w = a.dim(3);
  Tensor out(Shape{n_, c_, 2 * h, 2 * w});
  for (int p = 0; p < n_ * c_; ++p) {
    const Scalar* src = a.ptr() + static_cast<std::size_t>(p) * h * w;
    Scalar* dst = out.ptr() + static_cast<std::size_t>(p) * 4 * h * w;
    for (int y = 0; y < 2 * h; ++y)
      for (int x = 0; x < 2 * w; ++x) dst[y * 2 * w + x] = src[(y / 2) * w + x / 2];
  }
  if (should_record({&a})) {
    mark_output(out);
    Tape::current()->record([ai = a.impl(), oi = out.impl(), n_, c_, h, w] {
      if (oi->grad.empty()) return;
      auto g = grad_buffer(*ai);
      for (int p = 0; p < n_ * c_; ++p) {
        Scalar* dst = g.data() + static_cast<std::size_t>(p) * h * w;
        const Scalar* src = oi->grad.data() + static_cast<std::size_t>(p) * 4 * h * w;
        for (int y = 0; y < 2 * h; ++y)
          for (int x = 0; x < 2 * w; ++x) dst[(y / 2) * w + x / 2] += src[y * 2 * w + x];
      }
    });
  }
  return out;
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int pad) {
  require_rank(input, 4, "conv2d input");
  require_rank(weight, 4, "conv2d weight");
  if (stride < 1 || pad < 0) throw ShapeError("conv2d: stride must be positive and pad non-negative");
  if (input.dim(1) != weight.dim(1)) {
    throw ShapeError("conv2d: input channel axis has " + std::to_string(input.dim(1)) +
                     " channels but weight expects " + std::to_string(weight.dim(1)));
  }
  if (bias.defined() && bias.numel() != static_cast<std::size_t>(weight.dim(0))) {
    throw ShapeError("conv2d: bias length " + std::to_string(bias.numel()) + " does not match output channel axis " +
                     std::to_string(weight.dim(0)));
  }
  kernels::ConvGeometry g{input.dim(0), input.dim(1), input.dim(2), input.dim(3), weight.dim(0),
                          weight.dim(2), weight.dim(3), stride, pad};
  if (g.out_height() < 1 || g.out_width() < 1) {
    throw ShapeError("conv2d: spatial extent " + shape_string(input.shape()) + " too small for kernel");
  }
  Tensor out(Shape{g.batch, g.out_channels, g.out_height(), g.out_width()});
  kernels::conv2d_forward(g, input.data(), weight.data(),
                          bias.defined() ? std::span<const Scalar>(bias.data()) : std::span<const Scalar>(),
                          out.data());
  if (should_record({&input, &weight, &bias})) {
    mark_output(out);
    Tape::current()->record([ii = input.impl(), wi = weight.impl(), bi = bias.impl(), oi = out.impl(), g] {
      if (oi->grad.empty()) return;
      if (ii->requires_grad) kernels::conv2d_backward_input(g, oi->grad, wi->data, grad_buffer(*ii));
      const bool want_w = wi->requires_grad;
      const bool want_b = bi && bi->requires_grad;
      if (want_w || want_b) {
        std::vector<Scalar> scratch;
        std::span<Scalar> gw;
        if (want_w) {
          gw = grad_buffer(*wi);
        } else {
          scratch.assign(wi->data.size(), 0);
          gw = scratch;
        }
        kernels::conv2d_backward_weight(g, ii->data, oi->grad, gw,
                                        want_b ? grad_buffer(*bi) : std::span<Scalar>());
      }
    });
  }
  return out;
}

Tensor conv2d_transpose(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int pad,
                        int output_padding) {
  require_rank(input, 4, "conv2d_transpose input");
  require_rank(weight, 4, "conv2d_transpose weight");
  if (stride < 1 || pad < 0) throw ShapeError("conv2d_transpose: stride must be positive and pad non-negative");
  if (output_padding < 0 || output_padding >= stride) {
    throw ShapeError("conv2d_transpose: output_padding must lie in [0, stride)");
  }
  if (input.dim(1) != weight.dim(0)) {
    throw ShapeError("conv2d_transpose: input channel axis has " + std::to_string(input.dim(1)) +
                     " channels but weight expects " + std::to_string(weight.dim(0)));
  }
  const int out_ch = weight.dim(1);
  if (bias.defined() && bias.numel() != static_cast<std::size_t>(out_ch)) {
    throw ShapeError("conv2d_transpose: bias length does not match output channel axis");
  }
  const int oh = (input.dim(2) - 1) * stride - 2 * pad + weight.dim(2) + output_padding;
  const int ow = (input.dim(3) - 1) * stride - 2 * pad + weight.dim(3) + output_padding;
  if (oh < 1 || ow < 1) throw ShapeError("conv2d_transpose: output extent would be empty");
  // The forward conv this op is the adjoint of: (out_ch -> in_ch) on the output grid.
  kernels::ConvGeometry g{input.dim(0), out_ch, oh, ow, input.dim(1), weight.dim(2), weight.dim(3), stride, pad};
  Tensor out(Shape{g.batch, out_ch, oh, ow});
  kernels::conv2d_backward_input(g, input.data(), weight.data(), out.data());
  if (bias.defined()) {
    const std::size_t plane = static_cast<std::size_t>(oh) * ow;
    for (int n = 0; n < g.batch; ++n)
      for (int c = 0; c < out_ch; ++c) {
        Scalar* dst = out.ptr() + (static_cast<std::size_t>(n) * out_ch + c) * plane;
        for (std::size_t p = 0; p < plane; ++p) dst[p] += bias.data()[c];
      }
  }
  if (should_record({&input, &weight, &bias})) {
    mark_output(out);
    Tape::current()->record([ii = input.impl(), wi = weight.impl(), bi = bias.impl(), oi = out.impl(), g] {
      if (oi->grad.empty()) return;
      if (ii->requires_grad) {
        std::vector<Scalar> tmp(ii->data.size());
        kernels::conv2d_forward(g, oi->grad, wi->data, {}, tmp);
        accumulate(*ii, tmp);
      }
      if (wi->requires_grad) kernels::conv2d_backward_weight(g, oi->grad, ii->data, grad_buffer(*wi), {});
      if (bi && bi->requires_grad) {
        auto gb = grad_buffer(*bi);
        const std::size_t plane = static_cast<std::size_t>(g.in_height) * g.in_width;
        for (int n = 0; n < g.batch; ++n)
          for (int c = 0; c < g.in_channels; ++c) {
            const Scalar* src = oi->grad.data() + (static_cast<std::size_t>(n) * g.in_channels + c) * plane;
            Scalar s = 0;
            for (std::size_t p = 0; p < plane; ++p) s += src[p];
            gb[c] += s;
          }
      }
    });
  }
  return out;
}

Tensor gdn(const Tensor& input, const Tensor& beta, const Tensor& gamma, bool inverse) {
  require_rank(input, 4, "gdn input");
  const int channels = input.dim(1);
  if (beta.numel() != static_cast<std::size_t>(channels)) {
    throw ShapeError("gdn: beta length " + std::to_string(beta.numel()) + " does not match channel axis " +
                     std::to_string(channels));
  }
  if (gamma.numel() != static_cast<std::size_t>(channels) * channels) {
    throw ShapeError("gdn: gamma must be (channels, channels), got " + shape_string(gamma.shape()));
  }
  for (Scalar b : beta.data()) {
    if (!(b > 0)) throw Error("gdn: beta must be strictly positive");
  }
  kernels::PointwiseGeometry g{input.dim(0), channels, input.dim(2) * input.dim(3)};
  Tensor out(input.shape());
  kernels::gdn_forward(g, input.data(), beta.data(), gamma.data(), inverse, out.data());
  if (should_record({&input, &beta, &gamma})) {
    mark_output(out);
    Tape::current()->record([ii = input.impl(), bi = beta.impl(), gi = gamma.impl(), oi = out.impl(), g, inverse] {
      if (oi->grad.empty()) return;
      std::vector<Scalar> gx(ii->data.size()), gb(bi->data.size()), gg(gi->data.size());
      kernels::gdn_backward(g, ii->data, bi->data, gi->data, inverse, oi->grad, gx, gb, gg);
      if (ii->requires_grad) accumulate(*ii, gx);
      if (bi->requires_grad) accumulate(*bi, gb);
      if (gi->requires_grad) accumulate(*gi, gg);
    });
  }
  return out;
}

Tensor prelu(const Tensor& input, const Tensor& slope) {
  require_rank(input, 4, "prelu input");
  const int channels = input.dim(1);
  if (slope.numel() != static_cast<std::size_t>(channels)) {
    throw ShapeError("prelu: slope length " + std::to_string(slope.numel()) + " does not match channel axis " +
                     std::to_string(channels));
  }
  const int batch = input.dim(0);
  const std::size_t plane = static_cast<std::size_t>(input.dim(2)) * input.dim(3);
  Tensor out(input.shape());
  for (int n = 0; n < batch; ++n)
    for (int c = 0; c < channels; ++c) {
      const std::size_t off = (static_cast<std::size_t>(n) * channels + c) * plane;
      const Scalar a = slope.data()[c];
      for (std::size_t p = 0; p < plane; ++p) {
        const Scalar x = input.data()[off + p];
        out.data()[off + p] = x >= 0 ? x : a * x;
      }
    }
  if (should_record({&input, &slope})) {
    mark_output(out);
    Tape::current()->record([ii = input.impl(), si = slope.impl(), oi = out.impl(), batch, channels, plane] {
      if (oi->grad.empty()) return;
      std::span<Scalar> gx = ii->requires_grad ? grad_buffer(*ii) : std::span<Scalar>();
      std::span<Scalar> gs = si->requires_grad ? grad_buffer(*si) : std::span<Scalar>();
      for (int n = 0; n < batch; ++n)
        for (int c = 0; c < channels; ++c) {
          const std::size_t off = (static_cast<std::size_t>(n) * channels + c) * plane;
          const Scalar a = si->data[c];
          Scalar acc = 0;
          for (std::size_t p = 0; p < plane; ++p) {
            const Scalar x = ii->data[off + p];
            const Scalar go = oi->grad[off + p];
            if (!gx.empty()) gx[off + p] += x >= 0 ? go : a * go;
            if (x < 0) acc += go * x;
          }
          if (!gs.empty()) gs[c] += acc;
        }
    });
  }
  return out;
}

Tensor bilinear_warp(const Tensor& image, const Tensor& flow) {
  require_rank(image, 4, "bilinear_warp image");
  require_rank(flow, 4, "bilinear_warp flow");
  if (flow.dim(1) != 2) throw ShapeError("bilinear_warp: flow must have 2 channels (dx, dy)");
  if (flow.dim(0) != image.dim(0) || flow.dim(2) != image.dim(2) || flow.dim(3) != image.dim(3)) {
    throw ShapeError("bilinear_warp: flow extent " + shape_string(flow.shape()) + " does not match image " +
                     shape_string(image.shape()));
  }
  kernels::WarpGeometry g{image.dim(0), image.dim(1), image.dim(2), image.dim(3)};
  Tensor out(image.shape());
  kernels::warp_forward(g, image.data(), flow.data(), out.data());
  if (should_record({&image, &flow})) {
    mark_output(out);
    Tape::current()->record([ii = image.impl(), fi = flow.impl(), oi = out.impl(), g] {
      if (oi->grad.empty()) return;
      std::vector<Scalar> gi(ii->data.size()), gf(fi->data.size());
      kernels::warp_backward(g, ii->data, fi->data, oi->grad, gi, gf);
      if (ii->requires_grad) accumulate(*ii, gi);
      if (fi->requires_grad) accumulate(*fi, gf);
    });
  }
  return out;
}

Tensor blur_valid(const Tensor& a, const std::vector<double>& kernel) {
  require_rank(a, 4, "blur_valid");
  const int k = static_cast<int>(kernel.size());
  const int h = a.dim(2), w = a.dim(3);
  const int oh = h - k + 1, ow = w - k + 1;
  if (oh < 1 || ow < 1) throw ShapeError("blur_valid: input " + shape_string(a.shape()) + " smaller than window");
  const int planes = a.dim(0) * a.dim(1);
  std::vector<Scalar> kern(kernel.begin(), kernel.end());
  Tensor out(Shape{a.dim(0), a.dim(1), oh, ow});
  std::vector<Scalar> tmp(static_cast<std::size_t>(h) * ow);
  for (int p = 0; p < planes; ++p) {
    const Scalar* src = a.ptr() + static_cast<std::size_t>(p) * h * w;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < ow; ++x) {
        Scalar s = 0;
        for (int i = 0; i < k; ++i) s += kern[i] * src[y * w + x + i];
        tmp[static_cast<std::size_t>(y) * ow + x] = s;
      }
    Scalar* dst = out.ptr() + static_cast<std::size_t>(p) * oh * ow;
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        Scalar s = 0;
        for (int i = 0; i < k; ++i) s += kern[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
        dst[y * ow + x] = s;
      }
  }
  if (should_record({&a})) {
    mark_output(out);
    Tape::current()->record([ai = a.impl(), oi = out.impl(), kern, planes, h, w, oh, ow, k] {
      if (oi->grad.empty()) return;
      auto g = grad_buffer(*ai);
      std::vector<Scalar> t(static_cast<std::size_t>(h) * ow);
      for (int p = 0; p < planes; ++p) {
        const Scalar* go = oi->grad.data() + static_cast<std::size_t>(p) * oh * ow;
        std::fill(t.begin(), t.end(), Scalar(0));
        for (int y = 0; y < oh; ++y)
          for (int x = 0; x < ow; ++x)
            for (int i = 0; i < k; ++i) t[static_cast<std::size_t>(y + i) * ow + x] += kern[i] * go[y * ow + x];
        Scalar* dst = g.data() + static_cast<std::size_t>(p) * h * w;
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < ow; ++x)
            for (int i = 0; i < k; ++i) dst[y * w + x + i] += kern[i] * t[static_cast<std::size_t>(y) * ow + x];
      }
    });
  }
  return out;
}

Tensor total_variation(const Tensor& a) {
  require_rank(a, 4, "total_variation");
  const int planes = a.dim(0) * a.dim(1), h = a.dim(2), w = a.dim(3);
  const Scalar scale = Scalar(1) / static_cast<Scalar>(a.numel());
  Scalar s = 0;
  for (int p = 0; p < planes; ++p) {
    const Scalar* src = a.ptr() + static_cast<std::size_t>(p) * h * w;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (x + 1 < w) s += std::abs(src[y * w + x + 1] - src[y * w + x]);
        if (y + 1 < h) s += std::abs(src[(y + 1) * w + x] - src[y * w + x]);
      }
  }
  Tensor out = Tensor::scalar(s * scale);
  if (should_record({&a})) {
    mark_output(out);
    Tape::current()->record([ai = a.impl(), oi = out.impl(), planes, h, w, scale] {
      if (oi->grad.empty()) return;
      auto g = grad_buffer(*ai);
      const Scalar go = oi->grad[0] * scale;
      auto sign = [](Scalar v) { return v > 0 ? Scalar(1) : (v < 0 ? Scalar(-1) : Scalar(0)); };
      for (int p = 0; p < planes; ++p) {
        const Scalar* src = ai->data.data() + static_cast<std::size_t>(p) * h * w;
        Scalar* dst = g.data() + static_cast<std::size_t>(p) * h * w;
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x) {
            if (x + 1 < w) {
              const Scalar d = go * sign(src[y * w + x + 1] - src[y * w + x]);
              dst[y * w + x + 1] += d;
              dst[y * w + x] -= d;
            }
            if (y + 1 < h) {
              const Scalar d = go * sign(src[(y + 1) * w + x] - src[y * w + x]);
              dst[(y + 1) * w + x] += d;
              dst[y * w + x] -= d;
            }
          }
      }
    });
  }
  return out;
}

Tensor gaussian_likelihood(const Tensor& y, const Tensor& mu, const Tensor& sigma) {
  require_same(y, mu, "gaussian_likelihood");
  require_same(y, sigma, "gaussian_likelihood");
  Tensor out(y.shape());
  // Evaluated on |y - mu| so both CDF terms sit in the accurate lower tail.
  for (std::size_t i = 0; i < out.numel(); ++i) {
    const Scalar v = std::abs(y.data()[i] - mu.data()[i]);
    const Scalar s = sigma.data()[i];
    out.data()[i] = normal_cdf((Scalar(0.5) - v) / s) - normal_cdf((Scalar(-0.5) - v) / s);
  }
  if (should_record({&y, &mu, &sigma})) {
    mark_output(out);
    Tape::current()->record([yi = y.impl(), mi = mu.impl(), si = sigma.impl(), oi = out.impl()] {
      if (oi->grad.empty()) return;
      std::span<Scalar> gy = yi->requires_grad ? grad_buffer(*yi) : std::span<Scalar>();
      std::span<Scalar> gm = mi->requires_grad ? grad_buffer(*mi) : std::span<Scalar>();
      std::span<Scalar> gs = si->requires_grad ? grad_buffer(*si) : std::span<Scalar>();
      for (std::size_t i = 0; i < oi->data.size(); ++i) {
        const Scalar go = oi->grad[i];
        const Scalar d = yi->data[i] - mi->data[i];
        const Scalar v = std::abs(d);
        const Scalar s = si->data[i];
        const Scalar u = (Scalar(0.5) - v) / s;
        const Scalar l = (Scalar(-0.5) - v) / s;
        const Scalar pu = normal_pdf(u), pl = normal_pdf(l);
        const Scalar dp_dv = (pl - pu) / s;
        const Scalar sign = d > 0 ? Scalar(1) : (d < 0 ? Scalar(-1) : Scalar(0));
        const Scalar dp_dd = dp_dv * sign;
        if (!gy.empty()) gy[i] += go * dp_dd;
        if (!gm.empty()) gm[i] -= go * dp_dd;
        if (!gs.empty()) gs[i] += go * (pl * l - pu * u) / s;
      }
    });
  }
  return out;
}

Tensor neg_log2_sum(const Tensor& p, Scalar floor) {
  Scalar bits = 0;
  const Scalar inv_ln2 = static_cast<Scalar>(1.0 / std::numbers::ln2);
  for (Scalar v : p.data()) bits -= std::log(std::max(v, floor)) * inv_ln2;
  Tensor out = Tensor::scalar(bits);
  if (should_record({&p})) {
    mark_output(out);
    Tape::current()->record([pi = p.impl(), oi = out.impl(), floor, inv_ln2] {
      if (oi->grad.empty()) return;
      auto g = grad_buffer(*pi);
      const Scalar go = oi->grad[0];
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= go * inv_ln2 / std::max(pi->data[i], floor);
    });
  }
  return out;
}

}  // namespace ops
NVC_END_NAMESPACE
