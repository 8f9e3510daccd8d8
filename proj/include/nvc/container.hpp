#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nvc/inter.hpp"
#include "nvc/intra.hpp"

// Bitstream container. All integers little-endian.
//
//   header: "NVC1", u16 version, u16 width, u16 height, u16 padded width,
//           u16 padded height, u8 GOP, u32 frame count, u64 model hash
//   frame:  u32 record length, then the record:
//           u8 type ('I' or 'P'), u8 segment count, per segment a u8 tag
//           followed by the tagged code (intra / residual: TransformCode,
//           flow: FlowCode)

NVC_BEGIN_NAMESPACE

inline constexpr std::uint16_t kContainerVersion = 1;
inline constexpr std::size_t kContainerHeaderBytes = 4 + 2 * 5 + 1 + 4 + 8;

enum class FrameType : std::uint8_t { Intra = 'I', Inter = 'P' };
enum class SegmentTag : std::uint8_t { Intra = 1, Flow = 2, Residual = 3 };

struct FrameRecord {
  FrameType type = FrameType::Intra;
  std::optional<IntraCode> intra;
  std::optional<FlowCode> flow;
  std::optional<TransformCode> residual;

  std::vector<std::uint8_t> serialize() const;
  static FrameRecord parse(std::span<const std::uint8_t> bytes, std::size_t base_offset = 0);
};

struct Container {
  int width = 0;
  int height = 0;
  int padded_width = 0;
  int padded_height = 0;
  int gop = 8;
  std::uint64_t model_hash = 0;
  std::vector<FrameRecord> frames;

  std::vector<std::uint8_t> serialize() const;
  static Container parse(std::span<const std::uint8_t> bytes);
  // Bytes of frame i in the serialized container (length prefix included).
  std::size_t frame_bytes(std::size_t i) const;
};

// Incremental parser: the header up front, frame records one at a time, so a
// damaged record only surfaces when it is reached.
class ContainerReader {
 public:
  explicit ContainerReader(std::span<const std::uint8_t> bytes);
  // Header fields; `frames` stays empty.
  const Container& header() const { return header_; }
  std::uint32_t frame_count() const { return count_; }
  bool done() const { return read_ == count_; }
  FrameRecord next();

 private:
  ByteReader r_;
  Container header_;
  std::uint32_t count_ = 0;
  std::uint32_t read_ = 0;
};

NVC_END_NAMESPACE
