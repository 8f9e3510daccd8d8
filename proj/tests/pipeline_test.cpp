#include <doctest.h>

#include <filesystem>
#include <map>
#include <memory>

#include "config.hpp"
#include "nvc/bytes.hpp"
#include "nvc/checkpoint.hpp"
#include "nvc/error.hpp"
#include "nvc/frame_tensor.hpp"
#include "nvc/optim.hpp"
#include "nvc/sweep.hpp"
#include "nvc/synthetic.hpp"
#include "nvc/train.hpp"

using namespace nvc;

namespace {

const ModelSet& untrained() {
  static const auto model = ModelSet::create(11);
  return *model;
}

const VideoSequence& clip16() {
  static const VideoSequence v = moving_shapes(32, 32, 16, 5);
  return v;
}

const EncodeResult& encoded16() {
  static const EncodeResult r = encode_sequence(clip16(), untrained(), CodecConfig{});
  return r;
}

Tensor random_image(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  return Tensor::uniform({1, 3, h, w}, rng, 0, 1);
}

}  // namespace

TEST_CASE("rd_loss: weight ablation and arithmetic") {
  const Tensor x0 = random_image(32, 32, 1), x1 = random_image(32, 32, 2), x2 = random_image(32, 32, 3);
  const Tensor still = Tensor::zeros({1, 2, 32, 32});
  LossWeights w;
  const auto perfect = rd_loss({x0, x1, x2}, {x0, x1, x2}, {x1, x2}, {still, still}, Tensor::scalar(10),
                               {Tensor::scalar(4), Tensor::scalar(6)}, w);
  CHECK(perfect.value == doctest::Approx(15).epsilon(1e-6));
  CHECK(std::abs(perfect.sum() - perfect.value) <= 1e-6);

  LossWeights off = w;
  off.lambda1 = 0;
  off.lambda2 = 0;
  const Tensor y1 = random_image(32, 32, 4), y2 = random_image(32, 32, 5);
  const auto ablated = rd_loss({x0, x1, x2}, {y1, y2, y1}, {y2, y1}, {still, still}, Tensor::scalar(0.5),
                               {Tensor::scalar(0.2), Tensor::scalar(0.6)}, off);
  CHECK(ablated.value == doctest::Approx(0.9).epsilon(1e-6));

  const auto noisy = rd_loss({x0, x1, x2}, {y1, y2, y1}, {y2, y1}, {still, still}, Tensor::scalar(0.5),
                             {Tensor::scalar(0.2), Tensor::scalar(0.6)}, w);
  CHECK(noisy.distortion > 0);
  CHECK(noisy.warp > 0);
  CHECK(std::abs(noisy.sum() - noisy.value) <= 1e-6);
  CHECK_THROWS_AS(rd_loss({x0, x1}, {x0}, {x1}, {still}, Tensor::scalar(0), {Tensor::scalar(0)}, w), Error);
  CHECK_THROWS_AS(rd_loss({x0, x1}, {x0, x1}, {}, {still}, Tensor::scalar(0), {Tensor::scalar(0)}, w), Error);
}

TEST_CASE("rd_loss reaches every parameter group") {
  auto model = ModelSet::create(21);
  // Zero-initialised output layers would block gradients to everything before them.
  Rng rng(22);
  for (Conv2d* c : {&model->inter.processing.out, &model->inter.temporal.fuse})
    for (Scalar& v : c->weight.data()) v = static_cast<Scalar>(rng.normal(0, 0.05));
  for (const auto& p : model->residual.codec.synthesis.parameters()) {
    bool zero = true;
    for (Scalar v : std::as_const(p.tensor).data()) zero = zero && v == 0;
    if (zero)
      for (Scalar& v : Tensor(p.tensor).data()) v = static_cast<Scalar>(rng.normal(0, 0.05));
  }
  const std::vector<VideoSequence> corpus{moving_shapes(32, 32, 5, 1)};
  TrainConfig cfg;
  cfg.batch = 1;
  cfg.joint_steps = 1;
  cfg.clip_norm = 0;
  cfg.lr = 1e-12;
  std::map<std::string, bool> reached;
  for (const auto& p : model->parameters()) reached[p.name.substr(0, p.name.find('.', p.name.find('.') + 1))] = false;
  // One joint step; the gradients stay on the parameters afterwards.
  train(*model, cfg, corpus);
  for (const auto& p : model->parameters()) {
    if (!p.tensor.has_grad()) continue;
    for (Scalar g : std::as_const(p.tensor).grad()) {
      if (g != 0) {
        reached[p.name.substr(0, p.name.find('.', p.name.find('.') + 1))] = true;
        break;
      }
    }
  }
  for (const auto& [group, ok] : reached) CHECK_MESSAGE(ok, group);
}

TEST_CASE("learning rate halves every 30 epochs") {
  CHECK(step_decay_lr(1e-4, 29) == 1e-4);
  CHECK(step_decay_lr(1e-4, 30) == 5e-5);
  CHECK(epoch_of(0, 4, 16) == 0);
  CHECK(epoch_of(3, 4, 16) == 0);
  CHECK(epoch_of(4, 4, 16) == 1);
  CHECK(epoch_of(9, 4, 17) == 1);
  CHECK(moving_average({1, 2, 3, 4}, 4, 2) == 3.5);
  CHECK(moving_average({1, 2, 3, 4}, 1, 10) == 1);
}

TEST_CASE("training is deterministic and shares weights across the unroll") {
  const auto corpus = moving_shapes_corpus(2, 32, 32, 5, 3);
  TrainConfig cfg;
  cfg.batch = 1;
  cfg.intra_steps = 2;
  cfg.flow_steps = 2;
  cfg.joint_steps = 2;
  cfg.lr = 1e-3;
  auto a = ModelSet::create(4), b = ModelSet::create(4);
  int logged = 0;
  const TrainResult ra = train(*a, cfg, corpus, [&](const StepLog&) { ++logged; });
  const TrainResult rb = train(*b, cfg, corpus);
  CHECK(logged == 6);
  CHECK(ra.joint_loss == rb.joint_loss);
  CHECK(ra.intra_loss.size() == 2);
  CHECK(a->hash() == b->hash());
  CHECK(a->hash() != ModelSet::create(4)->hash());
  CHECK(ra.weights_shared);

  std::vector<VideoSequence> short_corpus{moving_shapes(32, 32, 3, 1)};
  CHECK_THROWS_AS(train(*a, cfg, short_corpus), DataError);
  TrainConfig bad = cfg;
  bad.unroll = 1;
  CHECK_THROWS_AS(train(*a, bad, corpus), UsageError);
  bad = cfg;
  bad.crop = 20;
  CHECK_THROWS_AS(train(*a, bad, corpus), UsageError);
}

TEST_CASE("GOP structure and rate accounting") {
  CHECK(gop_pattern(16, 8) == "IPPPPPPPIPPPPPPP");
  CHECK(gop_pattern(3, 1) == "III");
  const EncodeResult& r = encoded16();
  std::string types;
  for (const auto& f : r.container.frames) types += static_cast<char>(f.type);
  CHECK(types == "IPPPPPPPIPPPPPPP");
  double bits = 0;
  for (std::size_t i = 0; i < r.stats.size(); ++i) {
    CHECK(r.stats[i].bytes == r.container.frame_bytes(i));
    CHECK(r.stats[i].bpp == r.stats[i].bytes * 8.0 / (32 * 32));
    bits += r.stats[i].bytes * 8.0;
  }
  CHECK(r.mean_bpp() == doctest::Approx(bits / (32 * 32) / 16));
  const auto bytes = r.container.serialize();
  std::size_t total = kContainerHeaderBytes;
  for (std::size_t i = 0; i < 16; ++i) total += r.container.frame_bytes(i);
  CHECK(bytes.size() == total);
}

TEST_CASE("decode reproduces the encoder reconstructions") {
  const EncodeResult& r = encoded16();
  const auto bytes = r.container.serialize();
  std::size_t seen = 0;
  const auto frames = decode_sequence(bytes, untrained(), [&](std::size_t i, const Frame&) { CHECK(i == seen++); });
  REQUIRE(frames.size() == 16);
  CHECK(seen == 16);
  for (std::size_t i = 0; i < 16; ++i) CHECK(frames[i] == r.recon[i]);
}

TEST_CASE("encoder is deterministic") {
  const EncodeResult again = encode_sequence(clip16(), untrained(), CodecConfig{});
  CHECK(again.container.serialize() == encoded16().container.serialize());
}

TEST_CASE("container parse and serialize agree") {
  const auto bytes = encoded16().container.serialize();
  const Container c = Container::parse(bytes);
  CHECK(c.serialize() == bytes);
  CHECK(c.width == 32);
  CHECK(c.gop == 8);
  CHECK(c.model_hash == untrained().hash());
  ContainerReader reader(bytes);
  CHECK(reader.frame_count() == 16);
  std::size_t n = 0;
  while (!reader.done()) {
    reader.next();
    ++n;
  }
  CHECK(n == 16);
  CHECK_THROWS_AS(reader.next(), Error);

  for (std::size_t cut : {std::size_t{3}, kContainerHeaderBytes - 1, bytes.size() / 2, bytes.size() - 1}) {
    const std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + static_cast<long>(cut));
    CHECK_THROWS_AS(Container::parse(truncated), Error);
    CHECK_THROWS_AS(decode_sequence(truncated, untrained()), Error);
  }
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(Container::parse(bad_magic), FormatError);
}

TEST_CASE("hash mismatch names both hashes") {
  const auto bytes = encoded16().container.serialize();
  const auto other = ModelSet::create(12);
  try {
    decode_sequence(bytes, *other);
    FAIL("expected a hash mismatch");
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    CHECK(msg.find(hex64(untrained().hash())) != std::string::npos);
    CHECK(msg.find(hex64(other->hash())) != std::string::npos);
  }
}

TEST_CASE("corrupting the second GOP leaves the first intact") {
  const EncodeResult& r = encoded16();
  std::size_t start = kContainerHeaderBytes;
  for (std::size_t i = 0; i < 8; ++i) start += r.container.frame_bytes(i);
  const auto clean = r.container.serialize();
  Rng rng(31);
  for (int trial = 0; trial < 8; ++trial) {
    auto bytes = clean;
    const std::size_t at =
        start + 4 + static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(clean.size() - start - 5)));
    bytes[at] ^= static_cast<std::uint8_t>(rng.uniform_int(1, 255));
    std::vector<Frame> got;
    try {
      decode_sequence(bytes, untrained(), [&](std::size_t, const Frame& f) { got.push_back(f); });
    } catch (const Error&) {
    }
    REQUIRE(got.size() >= 8);
    for (std::size_t i = 0; i < 8; ++i) CHECK(got[i] == r.recon[i]);
  }
}

TEST_CASE("encode input validation") {
  VideoSequence mixed = moving_shapes(32, 32, 2, 1);
  mixed.frames.push_back(Frame(16, 32));
  CHECK_THROWS_AS(encode_sequence(mixed, untrained(), CodecConfig{}), DataError);
  CHECK_THROWS_AS(encode_sequence(VideoSequence{}, untrained(), CodecConfig{}), DataError);
  CodecConfig bad;
  bad.gop = 0;
  CHECK_THROWS_AS(encode_sequence(clip16(), untrained(), bad), UsageError);
  bad = {};
  bad.structure = "IBBP";
  CHECK_THROWS_AS(bad.validate(), UsageError);
}

TEST_CASE("rd sweep from four checkpoints") {
  const VideoSequence clip = moving_shapes(32, 32, 2, 8);
  std::vector<std::unique_ptr<ModelSet>> owned;
  std::vector<const ModelSet*> models;
  for (int i = 0; i < 4; ++i) {
    owned.push_back(ModelSet::create(40 + i));
    models.push_back(owned.back().get());
  }
  const RDCurve c = rd_sweep("clip", clip, models, CodecConfig{});
  CHECK(c.points.size() == 4);
  for (std::size_t i = 1; i < c.points.size(); ++i) CHECK(c.points[i - 1].rate < c.points[i].rate);
  models.pop_back();
  CHECK_THROWS_AS(rd_sweep("clip", clip, models, CodecConfig{}), UsageError);

  const RDCurve merged =
      curve_from_points("m", {{0, 0.2, 0.9}, {0, 0.1, 0.8}, {0, 0.2, 0.92}, {0, 0.4, 0.95}, {0, 0.8, 0.97}});
  REQUIRE(merged.points.size() == 4);
  CHECK(merged.points[1].rate == 0.2);
  CHECK(merged.points[1].ms_ssim == doctest::Approx(0.91));
  CHECK(bd_rate(merged, merged) == doctest::Approx(0.0));
}

TEST_CASE("checkpoint save and load") {
  const auto path = std::filesystem::temp_directory_path() / "nvc_test_ckpt.bin";
  save_checkpoint(path.string(), untrained());
  const auto back = ModelSet::load(path.string());
  CHECK(back->hash() == untrained().hash());
  CHECK(model_hash(untrained()) == untrained().hash());
  auto bytes = read_file(path.string());
  bytes.resize(bytes.size() - 3);
  write_file(path.string(), bytes);
  CHECK_THROWS_AS(ModelSet::load(path.string()), DataError);
  std::filesystem::remove(path);
}

TEST_CASE("training config parser") {
  const TrainConfig c = cli::parse_train_config("# toy\nlambda1 = 32\nlr=1e-3 # fast\n\njoint_steps = 7\nseed = 9\n");
  CHECK(c.weights.lambda1 == 32);
  CHECK(c.lr == 1e-3);
  CHECK(c.joint_steps == 7);
  CHECK(c.seed == 9);
  CHECK(c.unroll == 5);
  const TrainConfig round = cli::parse_train_config(cli::format_train_config(c));
  CHECK(cli::format_train_config(round) == cli::format_train_config(c));
  CHECK_THROWS_AS(cli::parse_train_config("bogus = 1\n"), DataError);
  CHECK_THROWS_AS(cli::parse_train_config("lr = fast\n"), DataError);
  CHECK_THROWS_AS(cli::parse_train_config("crop 32\n"), DataError);
  CHECK_THROWS_AS(cli::parse_train_config("unroll = 1\n"), DataError);
}
