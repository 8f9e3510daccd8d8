#include "nvc/model_set.hpp"

#include "nvc/checkpoint.hpp"

NVC_BEGIN_NAMESPACE

ModelSet::ModelSet(Rng& rng, const ModelConfig& cfg)
    : intra(rng, cfg.intra), inter(rng, cfg.inter), residual(rng, cfg.residual) {
  register_module("intra", intra);
  register_module("inter", inter);
  register_module("residual", residual);
}

std::unique_ptr<ModelSet> ModelSet::create(std::uint64_t seed, const ModelConfig& cfg) {
  Rng rng(seed);
  return std::make_unique<ModelSet>(rng, cfg);
}

std::unique_ptr<ModelSet> ModelSet::load(const std::string& path, const ModelConfig& cfg) {
  auto m = create(0, cfg);
  load_checkpoint(path, *m);
  return m;
}

std::uint64_t ModelSet::hash() const { return model_hash(*this); }

NVC_END_NAMESPACE
