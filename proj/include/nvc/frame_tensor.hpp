#pragma once

#include <vector>

#include "nvc/frame.hpp"
#include "nvc/tensor.hpp"

NVC_BEGIN_NAMESPACE

// (1, 3, H, W) tensor of the frame samples.
Tensor to_tensor(const Frame& f);
// (N, 3, H, W) for equally sized frames.
Tensor to_tensor(const std::vector<Frame>& frames);
// Item n of a (N, 3, H, W) tensor, samples clamped to [0, 1].
Frame to_frame(const Tensor& t, int n = 0);
// Clamps to [0, 1] without recording on the tape.
Tensor clamp_unit(const Tensor& t);

NVC_END_NAMESPACE
