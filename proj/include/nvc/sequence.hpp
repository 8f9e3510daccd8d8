#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nvc/container.hpp"
#include "nvc/frame.hpp"
#include "nvc/model_set.hpp"

NVC_BEGIN_NAMESPACE

struct CodecConfig {
  int gop = 8;
  std::string structure = "IPPP";  // the only supported structure

  void validate() const;
};

struct FrameStats {
  FrameType type;
  std::size_t bytes = 0;  // frame record in the container, length prefix included
  double bpp = 0;         // bytes * 8 / (width * height)
};

struct EncodeResult {
  Container container;
  std::vector<Frame> recon;  // encoder-side reconstructions, original extent
  std::vector<FrameStats> stats;

  // Bits of all frame records per pixel per frame.
  double mean_bpp() const;
};

// Frame 0 of every GOP is intra coded, the rest are predicted from the
// previous reconstruction. Recurrent states restart at every GOP.
EncodeResult encode_sequence(const VideoSequence& video, const ModelSet& model, const CodecConfig& cfg);

// Throws FormatError naming both hashes when the bitstream was produced by a
// different model. on_frame is called as each frame is reconstructed.
std::vector<Frame> decode_sequence(std::span<const std::uint8_t> bitstream, const ModelSet& model,
                                   const std::function<void(std::size_t, const Frame&)>& on_frame = {});

// Frame types of a GOP-structured sequence, e.g. "IPPPPPPPIPPPPPPP".
std::string gop_pattern(std::size_t frames, int gop);

NVC_END_NAMESPACE
