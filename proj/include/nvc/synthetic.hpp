#pragma once

#include <cstdint>
#include <vector>

#include "nvc/frame.hpp"

namespace nvc {

// Moving-shapes clips: a smooth textured background with two to four
// anti-aliased rectangles and discs translating at constant sub-pixel
// velocities. Samples are snapped to 8-bit levels.
VideoSequence moving_shapes(int width, int height, int frames, std::uint64_t seed);
std::vector<VideoSequence> moving_shapes_corpus(int count, int width, int height, int frames, std::uint64_t seed);

}  // namespace nvc
