#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace nvc {

// Planar RGB picture with samples in [0, 1].
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<float> rgb;  // 3 * height * width, plane-major

  Frame() = default;
  Frame(int w, int h, float fill = 0.0f);

  std::size_t plane_size() const { return static_cast<std::size_t>(width) * height; }
  float& at(int c, int y, int x) { return rgb[c * plane_size() + static_cast<std::size_t>(y) * width + x]; }
  float at(int c, int y, int x) const { return rgb[c * plane_size() + static_cast<std::size_t>(y) * width + x]; }
  std::span<float> plane(int c) { return {rgb.data() + c * plane_size(), plane_size()}; }
  std::span<const float> plane(int c) const { return {rgb.data() + c * plane_size(), plane_size()}; }

  bool operator==(const Frame& o) const = default;
};

struct VideoSequence {
  std::vector<Frame> frames;
  int fps_num = 25;
  int fps_den = 1;

  int width() const { return frames.empty() ? 0 : frames.front().width; }
  int height() const { return frames.empty() ? 0 : frames.front().height; }
};

// Extends to (w, h) by repeating the last row/column.
Frame pad_replicate(const Frame& f, int w, int h);
// Top-left (w, h) window.
Frame crop(const Frame& f, int w, int h);
// Window at (x0, y0).
Frame crop(const Frame& f, int x0, int y0, int w, int h);
// Rounds every sample to the nearest of the 256 8-bit levels.
Frame quantize8(const Frame& f);
std::uint8_t to_u8(float v);

// Throws ShapeError when the extents differ.
void require_same_extent(const Frame& a, const Frame& b, const char* what);

}  // namespace nvc
