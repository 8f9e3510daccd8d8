// Properties of the toy-trained models. Reads the checkpoints written by the
// acceptance run from $NVC_TOY_DIR.
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <map>
#include <string>

#include "nvc/frame_tensor.hpp"
#include "nvc/metrics.hpp"
#include "nvc/sequence.hpp"
#include "nvc/sweep.hpp"
#include "nvc/synthetic.hpp"

using namespace nvc;

namespace {

std::string toy_path(const std::string& name) {
  const char* dir = std::getenv("NVC_TOY_DIR");
  REQUIRE_MESSAGE(dir != nullptr, "NVC_TOY_DIR is not set");
  return std::string(dir) + "/" + name;
}

const ModelSet& model(const std::string& name) {
  static std::map<std::string, std::unique_ptr<ModelSet>> cache;
  auto& m = cache[name];
  if (!m) m = ModelSet::load(toy_path(name));
  return *m;
}

const ModelSet& base() { return model("base.ckpt"); }

double intra_bits(const IntraModel& m, const Tensor& x) { return code_bits(intra_encode(m, x).code); }

bool equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

}  // namespace

TEST_CASE("gray frame costs less than white noise") {
  const Tensor gray = Tensor::full({1, 3, 32, 32}, Scalar(0.5));
  Rng rng(1);
  const Tensor noise = Tensor::uniform({1, 3, 32, 32}, rng, 0, 1);
  const double g = intra_bits(base().intra, gray), n = intra_bits(base().intra, noise);
  MESSAGE("gray ", g, " bits, noise ", n, " bits");
  CHECK(g < n);
}

TEST_CASE("static scenes decode to near-zero flow") {
  const VideoSequence clip = moving_shapes(32, 32, 10, 321);
  double mean_abs = 0;
  for (const auto& f : clip.frames) {
    const Tensor x = to_tensor(f);
    const FlowEncoded fe = flow_encode(base().inter, x, x);
    double s = 0;
    for (Scalar v : fe.flow.data()) s += std::abs(v);
    mean_abs += s / static_cast<double>(fe.flow.numel()) / static_cast<double>(clip.frames.size());
  }
  MESSAGE("mean |flow| ", mean_abs, " px");
  CHECK(mean_abs < 0.5);
}

TEST_CASE("processing net does not degrade the warped frame") {
  const VideoSequence clip = moving_shapes(32, 32, 10, 654);
  double warped = 0, refined = 0;
  for (std::size_t t = 1; t < clip.frames.size(); ++t) {
    const Tensor ref = to_tensor(clip.frames[t - 1]), cur = to_tensor(clip.frames[t]);
    const FlowEncoded fe = flow_encode(base().inter, ref, cur);
    const Prediction p = predict_frame(base().inter, ref, fe.flow, base().inter.temporal.initial_state(1, 32, 32));
    warped += ms_ssim(to_frame(clamp_unit(p.warped)), clip.frames[t]);
    refined += ms_ssim(to_frame(clamp_unit(p.refined)), clip.frames[t]);
  }
  MESSAGE("warped ", warped / 9, " refined ", refined / 9);
  CHECK(refined >= warped);
}

TEST_CASE("zero residual costs less than intra coding") {
  const auto& m = base();
  const VideoSequence clip = moving_shapes(32, 32, 5, 987);
  const Tensor x0 = to_tensor(clip.frames[0]);
  const IntraEncoded i0 = intra_encode(m.intra, x0);
  const RecurrentState s = m.residual.update_state(i0.recon, Tensor(), m.residual.initial_state(32, 32));
  double zero = 0, intra = 0;
  for (std::size_t t = 1; t < clip.frames.size(); ++t) {
    const Tensor x = to_tensor(clip.frames[t]);
    zero += code_bits(residual_encode(m.residual, x, x, s).code);
    intra += intra_bits(m.intra, x);
  }
  MESSAGE("zero residual ", zero, " bits, intra ", intra, " bits");
  CHECK(zero < intra);
}

TEST_CASE("residual entropy model uses the temporal prior") {
  const auto& m = base();
  const VideoSequence clip = moving_shapes(32, 32, 2, 135);
  const Tensor x0 = to_tensor(clip.frames[0]), x1 = to_tensor(clip.frames[1]);
  const IntraEncoded i0 = intra_encode(m.intra, x0);
  const RecurrentState s = m.residual.update_state(i0.recon, Tensor(), m.residual.initial_state(32, 32));
  RecurrentState zeroed = s;
  zeroed.h = Tensor::zeros(s.h.shape());
  const ResidualEncoded a = residual_encode(m.residual, x1, i0.recon, s);
  const ResidualEncoded b = residual_encode(m.residual, x1, i0.recon, zeroed);
  CHECK_FALSE(equal(a.params.mu, b.params.mu));
  CHECK_FALSE(equal(a.params.sigma, b.params.sigma));
}

TEST_CASE("intra quality does not drop as lambda grows") {
  const VideoSequence corpus = moving_shapes(32, 32, 10, 4242);
  CodecConfig intra_only;
  intra_only.gop = 1;
  double previous = 0;
  for (const char* name : {"intra_lambda32.ckpt", "intra_lambda64.ckpt", "intra_lambda128.ckpt"}) {
    const EncodeResult r = encode_sequence(corpus, model(name), intra_only);
    const double q = mean_ms_ssim(r.recon, corpus.frames);
    MESSAGE(std::string(name), " MS-SSIM ", q, " at ", r.mean_bpp(), " bpp");
    CHECK(q >= previous);
    previous = q;
  }
}

TEST_CASE("latent clamping is rare on trained models") {
  long clamped = 0, total = 0;
  for (int c = 0; c < 4; ++c) {
    for (const auto& f : moving_shapes(32, 32, 5, 2000 + c).frames) {
      const Tensor y = base().intra.codec.analysis.forward(to_tensor(f));
      for (Scalar v : y.data()) clamped += std::abs(std::round(v)) > entropy::kSymbolMax;
      total += static_cast<long>(y.numel());
    }
  }
  MESSAGE(clamped, " of ", total, " latents clamped");
  CHECK(static_cast<double>(clamped) / static_cast<double>(total) < 1e-4);
}

TEST_CASE("higher lambda checkpoints sit at the higher-rate end") {
  const VideoSequence clip = moving_shapes(32, 32, 5, 999);
  std::vector<const ModelSet*> models;
  for (const char* name : {"sweep_lambda4.ckpt", "sweep_lambda8.ckpt", "sweep_lambda32.ckpt", "sweep_lambda64.ckpt"})
    models.push_back(&model(name));
  const auto points = sweep_points(clip, models, CodecConfig{});
  // Rank of each checkpoint's rate against its rank in lambda.
  int in_place = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::size_t rank = 0;
    for (const auto& p : points) rank += p.bpp < points[i].bpp;
    in_place += rank == i;
    MESSAGE("checkpoint ", i, ": ", points[i].bpp, " bpp, rate rank ", rank);
  }
  CHECK(in_place >= 3);
}

TEST_CASE("trained model round trip is frame-exact") {
  const VideoSequence clip = moving_shapes(32, 32, 10, 246);
  const EncodeResult enc = encode_sequence(clip, base(), CodecConfig{});
  const auto dec = decode_sequence(enc.container.serialize(), base());
  REQUIRE(dec.size() == enc.recon.size());
  for (std::size_t i = 0; i < dec.size(); ++i) CHECK(dec[i] == enc.recon[i]);
}
