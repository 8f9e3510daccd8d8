#include "nvc/container.hpp"

#include <cstring>

#include "nvc/error.hpp"

NVC_BEGIN_NAMESPACE

namespace {

constexpr char kMagic[4] = {'N', 'V', 'C', '1'};

std::uint16_t u16_field(int v, const char* what) {
  if (v < 0 || v > 0xFFFF) throw FormatError(std::string("container: ") + what + " does not fit in 16 bits");
  return static_cast<std::uint16_t>(v);
}

}  // namespace

std::vector<std::uint8_t> FrameRecord::serialize() const {
  ByteWriter w;
  w.put_u8(static_cast<std::uint8_t>(type));
  const std::uint8_t count = (intra ? 1 : 0) + (flow ? 1 : 0) + (residual ? 1 : 0);
  w.put_u8(count);
  if (intra) {
    w.put_u8(static_cast<std::uint8_t>(SegmentTag::Intra));
    intra->write(w);
  }
  if (flow) {
    w.put_u8(static_cast<std::uint8_t>(SegmentTag::Flow));
    flow->write(w);
  }
  if (residual) {
    w.put_u8(static_cast<std::uint8_t>(SegmentTag::Residual));
    residual->write(w);
  }
  return w.take();
}

FrameRecord FrameRecord::parse(std::span<const std::uint8_t> bytes, std::size_t base_offset) {
  ByteReader r(bytes);
  FrameRecord rec;
  const std::uint8_t type = r.get_u8();
  if (type != 'I' && type != 'P') throw DataError("container: unknown frame type " + std::to_string(type), base_offset);
  rec.type = static_cast<FrameType>(type);
  const int count = r.get_u8();
  for (int i = 0; i < count; ++i) {
    const std::size_t at = base_offset + r.offset();
    switch (static_cast<SegmentTag>(r.get_u8())) {
      case SegmentTag::Intra:
        if (rec.intra) throw DataError("container: duplicate intra segment", at);
        rec.intra = TransformCode::read(r);
        break;
      case SegmentTag::Flow:
        if (rec.flow) throw DataError("container: duplicate flow segment", at);
        rec.flow = FlowCode::read(r);
        break;
      case SegmentTag::Residual:
        if (rec.residual) throw DataError("container: duplicate residual segment", at);
        rec.residual = TransformCode::read(r);
        break;
      default:
        throw DataError("container: unknown segment tag", at);
    }
  }
  if (!r.at_end()) throw DataError("container: trailing bytes in frame record", base_offset + r.offset());
  const bool ok = rec.type == FrameType::Intra ? (rec.intra && !rec.flow && !rec.residual)
                                               : (!rec.intra && rec.flow && rec.residual);
  if (!ok) throw DataError("container: frame record has the wrong segments for its type", base_offset);
  return rec;
}

std::vector<std::uint8_t> Container::serialize() const {
  ByteWriter w;
  w.put_bytes({reinterpret_cast<const std::uint8_t*>(kMagic), 4});
  w.put_u16(kContainerVersion);
  w.put_u16(u16_field(width, "width"));
  w.put_u16(u16_field(height, "height"));
  w.put_u16(u16_field(padded_width, "padded width"));
  w.put_u16(u16_field(padded_height, "padded height"));
  if (gop < 1 || gop > 255) throw FormatError("container: GOP must be in [1, 255]");
  w.put_u8(static_cast<std::uint8_t>(gop));
  w.put_u32(static_cast<std::uint32_t>(frames.size()));
  w.put_u64(model_hash);
  for (const FrameRecord& f : frames) {
    const auto rec = f.serialize();
    w.put_u32(static_cast<std::uint32_t>(rec.size()));
    w.put_bytes(rec);
  }
  return w.take();
}

ContainerReader::ContainerReader(std::span<const std::uint8_t> bytes) : r_(bytes) {
  const auto magic = r_.get_bytes(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) throw FormatError("container: bad magic, not an NVC1 bitstream");
  const std::uint16_t version = r_.get_u16();
  if (version != kContainerVersion) throw FormatError("container: unsupported version " + std::to_string(version));
  Container& c = header_;
  c.width = r_.get_u16();
  c.height = r_.get_u16();
  c.padded_width = r_.get_u16();
  c.padded_height = r_.get_u16();
  c.gop = r_.get_u8();
  count_ = r_.get_u32();
  c.model_hash = r_.get_u64();
  if (c.width == 0 || c.height == 0 || c.padded_width < c.width || c.padded_height < c.height || c.gop == 0) {
    throw DataError("container: invalid header fields", 6);
  }
  if (count_ == 0 && !r_.at_end()) throw DataError("container: trailing bytes after the header", r_.offset());
}

FrameRecord ContainerReader::next() {
  if (done()) throw Error("container: no more frames");
  const std::size_t at = r_.offset();
  const std::uint32_t len = r_.get_u32();
  const auto rec = r_.get_bytes(len);
  FrameRecord f = FrameRecord::parse(rec, at + 4);
  if (++read_ == count_ && !r_.at_end()) {
    throw DataError("container: trailing bytes after the last frame", r_.offset());
  }
  return f;
}

Container Container::parse(std::span<const std::uint8_t> bytes) {
  ContainerReader reader(bytes);
  Container c = reader.header();
  while (!reader.done()) c.frames.push_back(reader.next());
  return c;
}

std::size_t Container::frame_bytes(std::size_t i) const { return 4 + frames.at(i).serialize().size(); }

NVC_END_NAMESPACE
