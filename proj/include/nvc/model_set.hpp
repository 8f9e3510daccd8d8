#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "nvc/inter.hpp"
#include "nvc/intra.hpp"
#include "nvc/residual.hpp"

NVC_BEGIN_NAMESPACE

struct ModelConfig {
  TransformConfig intra;
  InterConfig inter;
  ResidualConfig residual;
};

// Everything a bitstream depends on: intra, inter and residual networks.
class ModelSet : public Module {
 public:
  ModelSet(Rng& rng, const ModelConfig& cfg = {});

  static std::unique_ptr<ModelSet> create(std::uint64_t seed, const ModelConfig& cfg = {});
  static std::unique_ptr<ModelSet> load(const std::string& path, const ModelConfig& cfg = {});

  // FNV-1a 64 of the serialized checkpoint.
  std::uint64_t hash() const;

  IntraModel intra;
  InterModel inter;
  ResidualModel residual;
};

NVC_END_NAMESPACE
