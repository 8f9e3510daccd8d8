#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nvc/nn.hpp"

// Checkpoint file: "NVCW", u16 version, then per parameter: u16 name length,
// name bytes, u8 rank, rank x u32 extents, little-endian f32 payload.

NVC_BEGIN_NAMESPACE

inline constexpr std::uint16_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_checkpoint(const std::vector<Parameter>& params);
// Copies values into `params` by name. Every parameter must be present with a
// matching shape; unknown records are an error.
void deserialize_checkpoint(std::span<const std::uint8_t> bytes, const std::vector<Parameter>& params);

void save_checkpoint(const std::string& path, const Module& model);
void load_checkpoint(const std::string& path, const Module& model);

// FNV-1a 64 over the serialized checkpoint.
std::uint64_t model_hash(const Module& model);

NVC_END_NAMESPACE
