#include "nvc/frame_tensor.hpp"

#include <algorithm>

#include "nvc/error.hpp"

NVC_BEGIN_NAMESPACE

Tensor to_tensor(const Frame& f) { return to_tensor(std::vector<Frame>{f}); }

Tensor to_tensor(const std::vector<Frame>& frames) {
  if (frames.empty()) throw ShapeError("to_tensor: no frames");
  const int w = frames.front().width, h = frames.front().height;
  Tensor t({static_cast<int>(frames.size()), 3, h, w});
  Scalar* p = t.ptr();
  for (const Frame& f : frames) {
    require_same_extent(f, frames.front(), "to_tensor");
    p = std::copy(f.rgb.begin(), f.rgb.end(), p);
  }
  return t;
}

Frame to_frame(const Tensor& t, int n) {
  require_rank(t, 4, "to_frame");
  if (t.dim(1) != 3) throw ShapeError("to_frame: expected 3 channels, got " + shape_string(t.shape()));
  if (n < 0 || n >= t.dim(0)) throw ShapeError("to_frame: batch index out of range");
  Frame f(t.dim(3), t.dim(2));
  const Scalar* p = t.ptr() + static_cast<std::size_t>(n) * f.rgb.size();
  for (std::size_t i = 0; i < f.rgb.size(); ++i) f.rgb[i] = static_cast<float>(std::clamp<Scalar>(p[i], 0, 1));
  return f;
}

Tensor clamp_unit(const Tensor& t) {
  Tensor out(t.shape());
  for (std::size_t i = 0; i < t.numel(); ++i) out.data()[i] = std::clamp<Scalar>(t.data()[i], 0, 1);
  return out;
}

NVC_END_NAMESPACE
