#include "nvc/sequence.hpp"

#include "nvc/bytes.hpp"
#include "nvc/error.hpp"
#include "nvc/frame_tensor.hpp"

NVC_BEGIN_NAMESPACE

void CodecConfig::validate() const {
  if (gop < 1 || gop > 255) throw UsageError("codec: GOP must be in [1, 255]");
  if (structure != "IPPP") throw UsageError("codec: unsupported coding structure '" + structure + "'");
}

double EncodeResult::mean_bpp() const {
  if (stats.empty()) return 0;
  double s = 0;
  for (const FrameStats& f : stats) s += f.bpp;
  return s / static_cast<double>(stats.size());
}

std::string gop_pattern(std::size_t frames, int gop) {
  std::string s;
  for (std::size_t i = 0; i < frames; ++i) s += i % gop == 0 ? 'I' : 'P';
  return s;
}

namespace {

// Decoder state carried across the frames of one GOP.
struct GopState {
  Tensor ref;
  RecurrentState inter;
  RecurrentState residual;
};

GopState start_gop(const ModelSet& model, const Tensor& intra_recon) {
  const int h = intra_recon.dim(2), w = intra_recon.dim(3);
  GopState s;
  s.ref = intra_recon;
  s.inter = model.inter.temporal.initial_state(1, h, w);
  s.residual = model.residual.update_state(intra_recon, Tensor(), model.residual.initial_state(h, w));
  return s;
}

// Rejects codes whose declared latent extent disagrees with the header before
// anything is allocated for them.
void check_latent_extent(const Shape& shape, const Container& h, std::size_t frame, const char* what) {
  if (shape.size() != 4 || shape[2] != h.padded_height / kLatentStride || shape[3] != h.padded_width / kLatentStride) {
    throw DataError("decode: " + std::string(what) + " latents of frame " + std::to_string(frame) +
                    " do not match the header extent");
  }
}

}  // namespace

EncodeResult encode_sequence(const VideoSequence& video, const ModelSet& model, const CodecConfig& cfg) {
  cfg.validate();
  if (video.frames.empty()) throw DataError("encode: no frames");
  const int width = video.width(), height = video.height();
  const int pw = padded_extent(width), ph = padded_extent(height);
  EncodeResult out;
  out.container.width = width;
  out.container.height = height;
  out.container.padded_width = pw;
  out.container.padded_height = ph;
  out.container.gop = cfg.gop;
  out.container.model_hash = model.hash();
  GopState gs;
  for (std::size_t i = 0; i < video.frames.size(); ++i) {
    const Frame& f = video.frames[i];
    if (f.width != width || f.height != height) {
      throw DataError("encode: frame " + std::to_string(i) + " is " + std::to_string(f.width) + "x" +
                      std::to_string(f.height) + ", header says " + std::to_string(width) + "x" +
                      std::to_string(height));
    }
    const Tensor x = to_tensor(pad_replicate(f, pw, ph));
    FrameRecord rec;
    Tensor recon;
    if (i % cfg.gop == 0) {
      IntraEncoded enc = intra_encode(model.intra, x);
      rec.type = FrameType::Intra;
      rec.intra = std::move(enc.code);
      recon = enc.recon;
      gs = start_gop(model, recon);
    } else {
      FlowEncoded fe = flow_encode(model.inter, gs.ref, x);
      const Prediction p = predict_frame(model.inter, gs.ref, fe.flow, gs.inter);
      ResidualEncoded re = residual_encode(model.residual, x, p.prediction, gs.residual);
      rec.type = FrameType::Inter;
      rec.flow = std::move(fe.code);
      rec.residual = std::move(re.code);
      recon = re.recon;
      gs.ref = recon;
      gs.inter = p.state;
      gs.residual = re.state;
    }
    out.container.frames.push_back(std::move(rec));
    const std::size_t bytes = out.container.frame_bytes(i);
    out.stats.push_back({out.container.frames.back().type, bytes,
                         8.0 * static_cast<double>(bytes) / (static_cast<double>(width) * height)});
    out.recon.push_back(crop(to_frame(recon), width, height));
  }
  return out;
}

std::vector<Frame> decode_sequence(std::span<const std::uint8_t> bitstream, const ModelSet& model,
                                   const std::function<void(std::size_t, const Frame&)>& on_frame) {
  ContainerReader reader(bitstream);
  const Container& h = reader.header();
  const std::uint64_t expect = model.hash();
  if (h.model_hash != expect) {
    throw FormatError("decode: bitstream model hash " + hex64(h.model_hash) + " does not match checkpoint hash " +
                      hex64(expect));
  }
  if (h.padded_width != padded_extent(h.width) || h.padded_height != padded_extent(h.height)) {
    throw FormatError("decode: padded extents do not match the model stride");
  }
  std::vector<Frame> frames;
  GopState gs;
  for (std::size_t i = 0; !reader.done(); ++i) {
    const FrameRecord rec = reader.next();
    const bool gop_start = i % h.gop == 0;
    if ((rec.type == FrameType::Intra) != gop_start) {
      throw DataError("decode: frame " + std::to_string(i) + " type does not follow the GOP structure");
    }
    Tensor recon;
    if (gop_start) {
      check_latent_extent(rec.intra->latent_shape, h, i, "intra");
      recon = intra_decode(model.intra, *rec.intra);
      if (recon.dim(2) != h.padded_height || recon.dim(3) != h.padded_width) {
        throw DataError("decode: intra frame " + std::to_string(i) + " has the wrong extent");
      }
      gs = start_gop(model, recon);
    } else {
      check_latent_extent(rec.flow->latent_shape, h, i, "flow");
      check_latent_extent(rec.residual->latent_shape, h, i, "residual");
      const Tensor flow = flow_decode(model.inter, *rec.flow);
      if (flow.dim(2) != h.padded_height || flow.dim(3) != h.padded_width) {
        throw DataError("decode: flow of frame " + std::to_string(i) + " has the wrong extent");
      }
      const Prediction p = predict_frame(model.inter, gs.ref, flow, gs.inter);
      ResidualDecoded rd = residual_decode(model.residual, *rec.residual, p.prediction, gs.residual);
      recon = rd.recon;
      gs.ref = recon;
      gs.inter = p.state;
      gs.residual = rd.state;
    }
    frames.push_back(crop(to_frame(recon), h.width, h.height));
    if (on_frame) on_frame(i, frames.back());
  }
  return frames;
}

NVC_END_NAMESPACE
