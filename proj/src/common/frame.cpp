#include "nvc/frame.hpp"

#include <algorithm>
#include <cmath>

#include "nvc/error.hpp"

namespace nvc {

Frame::Frame(int w, int h, float fill) : width(w), height(h), rgb(3 * static_cast<std::size_t>(w) * h, fill) {
  if (w <= 0 || h <= 0) throw ShapeError("frame extents must be positive");
}

Frame pad_replicate(const Frame& f, int w, int h) {
  if (w < f.width || h < f.height) throw ShapeError("pad_replicate: target smaller than frame");
  Frame out(w, h);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(c, y, x) = f.at(c, std::min(y, f.height - 1), std::min(x, f.width - 1));
  return out;
}

Frame crop(const Frame& f, int x0, int y0, int w, int h) {
  if (x0 < 0 || y0 < 0 || x0 + w > f.width || y0 + h > f.height) {
    throw ShapeError("crop: window exceeds the " + std::to_string(f.width) + "x" + std::to_string(f.height) + " frame");
  }
  Frame out(w, h);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(c, y, x) = f.at(c, y0 + y, x0 + x);
  return out;
}

Frame crop(const Frame& f, int w, int h) { return crop(f, 0, 0, w, h); }

std::uint8_t to_u8(float v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)); }

Frame quantize8(const Frame& f) {
  Frame out = f;
  for (float& v : out.rgb) v = to_u8(v) / 255.0f;
  return out;
}

void require_same_extent(const Frame& a, const Frame& b, const char* what) {
  if (a.width != b.width || a.height != b.height) {
    throw ShapeError(std::string(what) + ": extents differ, " + std::to_string(a.width) + "x" +
                     std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" + std::to_string(b.height));
  }
}

}  // namespace nvc
