#include "nvc/synthetic.hpp"

#include <cmath>

#include "nvc/rng.hpp"

namespace nvc {

namespace {

struct Shape {
  bool disc = false;
  double x = 0, y = 0;    // centre
  double rx = 0, ry = 0;  // half extents (rx = radius for discs)
  double vx = 0, vy = 0;
  float color[3] = {0, 0, 0};

  bool covers(double px, double py) const {
    const double dx = px - x, dy = py - y;
    if (disc) return dx * dx + dy * dy <= rx * rx;
    return std::abs(dx) <= rx && std::abs(dy) <= ry;
  }
};

}  // namespace

VideoSequence moving_shapes(int width, int height, int frames, std::uint64_t seed) {
  Rng rng(seed);
  float base[3], tint[3];
  for (int c = 0; c < 3; ++c) {
    base[c] = static_cast<float>(rng.uniform(0.15, 0.6));
    tint[c] = static_cast<float>(rng.uniform(-0.25, 0.25));
  }
  const double fx = rng.uniform(0.1, 0.5), fy = rng.uniform(0.1, 0.5), phase = rng.uniform(0, 6.283);
  const double texture = rng.uniform(0.02, 0.06);

  std::vector<Shape> shapes(static_cast<std::size_t>(rng.uniform_int(2, 4)));
  const double scale = std::min(width, height);
  for (auto& s : shapes) {
    s.disc = rng.uniform() < 0.5;
    s.x = rng.uniform(0, width);
    s.y = rng.uniform(0, height);
    s.rx = rng.uniform(0.1, 0.25) * scale;
    s.ry = s.disc ? s.rx : rng.uniform(0.1, 0.25) * scale;
    s.vx = rng.uniform(-1.5, 1.5);
    s.vy = rng.uniform(-1.5, 1.5);
    for (float& c : s.color) c = static_cast<float>(rng.uniform(0.0, 1.0));
  }

  constexpr int kSuper = 4;
  VideoSequence seq;
  for (int t = 0; t < frames; ++t) {
    Frame f(width, height);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const double u = static_cast<double>(x) / width, v = static_cast<double>(y) / height;
        const double tex = texture * std::sin(fx * x + phase) * std::cos(fy * y - phase);
        float px[3];
        for (int c = 0; c < 3; ++c) px[c] = static_cast<float>(base[c] + tint[c] * (u - v) + tex);
        for (const auto& s : shapes) {
          int hits = 0;
          for (int sy = 0; sy < kSuper; ++sy)
            for (int sx = 0; sx < kSuper; ++sx) {
              hits += s.covers(x + (sx + 0.5) / kSuper, y + (sy + 0.5) / kSuper);
            }
          const float a = static_cast<float>(hits) / (kSuper * kSuper);
          for (int c = 0; c < 3; ++c) px[c] = (1 - a) * px[c] + a * s.color[c];
        }
        for (int c = 0; c < 3; ++c) f.at(c, y, x) = px[c];
      }
    seq.frames.push_back(quantize8(f));
    for (auto& s : shapes) {
      s.x += s.vx;
      s.y += s.vy;
    }
  }
  return seq;
}

std::vector<VideoSequence> moving_shapes_corpus(int count, int width, int height, int frames, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<VideoSequence> out;
  for (int i = 0; i < count; ++i) out.push_back(moving_shapes(width, height, frames, rng.next()));
  return out;
}

}  // namespace nvc
