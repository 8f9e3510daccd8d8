#pragma once

#include <string>

#include "nvc/train.hpp"

namespace nvc::cli {

// Key-value training config, one "key = value" per line, '#' starts a
// comment. Keys: lambda1, lambda2, tv_weight, lr, lr_period, unroll, crop,
// batch, intra_steps, flow_steps, flow_warmup, joint_steps, clip_norm, seed.
TrainConfig parse_train_config(const std::string& text, const std::string& origin = "<config>");
TrainConfig load_train_config(const std::string& path);
std::string format_train_config(const TrainConfig& cfg);

}  // namespace nvc::cli
