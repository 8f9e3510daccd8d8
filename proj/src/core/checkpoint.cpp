#include "nvc/checkpoint.hpp"

#include <map>

#include "nvc/bytes.hpp"
#include "nvc/error.hpp"

NVC_BEGIN_NAMESPACE

std::vector<std::uint8_t> serialize_checkpoint(const std::vector<Parameter>& params) {
  ByteWriter w;
  w.put_string("NVCW");
  w.put_u16(kCheckpointVersion);
  for (const auto& p : params) {
    if (p.name.size() > 0xFFFF) throw Error("checkpoint: parameter name too long");
    w.put_u16(static_cast<std::uint16_t>(p.name.size()));
    w.put_string(p.name);
    w.put_u8(static_cast<std::uint8_t>(p.tensor.rank()));
    for (int d : p.tensor.shape()) w.put_u32(static_cast<std::uint32_t>(d));
    for (Scalar v : p.tensor.data()) w.put_f32(static_cast<float>(v));
  }
  return w.take();
}

void deserialize_checkpoint(std::span<const std::uint8_t> bytes, const std::vector<Parameter>& params) {
  ByteReader r(bytes);
  const auto magic = r.get_bytes(4);
  if (std::string(magic.begin(), magic.end()) != "NVCW") throw FormatError("checkpoint: bad magic");
  const std::uint16_t version = r.get_u16();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  std::map<std::string, Tensor> by_name;
  for (const auto& p : params) by_name.emplace(p.name, p.tensor);
  std::size_t loaded = 0;
  while (!r.at_end()) {
    const std::size_t at = r.offset();
    const std::uint16_t len = r.get_u16();
    const auto name_bytes = r.get_bytes(len);
    const std::string name(name_bytes.begin(), name_bytes.end());
    const int rank = r.get_u8();
    Shape shape;
    for (int i = 0; i < rank; ++i) shape.push_back(static_cast<int>(r.get_u32()));
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw FormatError("checkpoint: unknown parameter " + name + " at byte " + std::to_string(at));
    Tensor t = it->second;
    if (t.shape() != shape) {
      throw FormatError("checkpoint: parameter " + name + " has shape " + shape_string(shape) + ", model expects " +
                        shape_string(t.shape()));
    }
    for (Scalar& v : t.data()) v = static_cast<Scalar>(r.get_f32());
    by_name.erase(it);
    ++loaded;
  }
  if (!by_name.empty()) throw FormatError("checkpoint: missing parameter " + by_name.begin()->first);
  (void)loaded;
}

void save_checkpoint(const std::string& path, const Module& model) {
  write_file(path, serialize_checkpoint(model.parameters()));
}

void load_checkpoint(const std::string& path, const Module& model) {
  deserialize_checkpoint(read_file(path), model.parameters());
}

std::uint64_t model_hash(const Module& model) { return fnv1a64(serialize_checkpoint(model.parameters())); }

NVC_END_NAMESPACE
