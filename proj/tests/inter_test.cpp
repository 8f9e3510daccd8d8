#include <doctest.h>

#include "nvc/error.hpp"
#include "nvc/inter.hpp"

using namespace nvc;

namespace {

const InterModel& untrained() {
  static Rng rng(77);
  static InterModel model(rng);
  return model;
}

Tensor random_image(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  return Tensor::uniform({1, 3, h, w}, rng, 0, 1);
}

bool equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

}  // namespace

TEST_CASE("flow round trip is bit exact") {
  const auto& m = untrained();
  const Tensor ref = random_image(32, 48, 1), cur = random_image(32, 48, 2);
  const FlowEncoded enc = flow_encode(m, ref, cur);
  CHECK(enc.code.latent_shape == Shape{1, 16, 8, 12});
  CHECK(enc.flow.shape() == Shape{1, 2, 32, 48});
  CHECK(equal(flow_decode(m, enc.code), enc.flow));

  ByteWriter w;
  enc.code.write(w);
  CHECK(w.size() == 8 + enc.code.wire_bytes());
  CHECK(8.0 * enc.code.wire_bytes() == 8.0 * (4 + enc.code.segment.size()));
  ByteReader r(w.bytes());
  const FlowCode back = FlowCode::read(r);
  CHECK(back.segment == enc.code.segment);
  CHECK(equal(flow_decode(m, back), enc.flow));

  FlowCode bad = enc.code;
  bad.latent_shape[0] = 2;
  ByteWriter bw;
  bad.write(bw);
  ByteReader br(bw.bytes());
  CHECK_THROWS_AS(FlowCode::read(br), DataError);
}

TEST_CASE("zero flow latents decode to the synthesis of zeros") {
  const auto& m = untrained();
  const Tensor zeros = Tensor::zeros({1, 16, 4, 4});
  entropy::RangeEncoder enc;
  m.flow.prior.encode(zeros, enc);
  const FlowCode code{zeros.shape(), enc.finish()};
  const Tensor a = flow_decode(m, code), b = m.flow.synthesis(zeros);
  CHECK(equal(a, b));
  CHECK(equal(flow_decode(m, code), a));
}

TEST_CASE("fuzzed flow payloads stay in bounds") {
  const auto& m = untrained();
  const FlowEncoded enc = flow_encode(m, random_image(32, 32, 3), random_image(32, 32, 4));
  Rng rng(5);
  int errors = 0;
  for (int trial = 0; trial < 100; ++trial) {
    FlowCode code = enc.code;
    code.segment[rng.uniform_int(0, static_cast<int>(code.segment.size()) - 1)] ^=
        static_cast<std::uint8_t>(rng.uniform_int(1, 255));
    if (trial % 4 == 0) code.segment.resize(code.segment.size() / 2);
    try {
      const Tensor f = flow_decode(m, code);
      CHECK(f.shape() == enc.flow.shape());
    } catch (const DataError&) {
      ++errors;
    }
  }
  CHECK(errors > 0);
  FlowCode wrong = enc.code;
  wrong.latent_shape[1] = 3;
  CHECK_THROWS_AS(flow_decode(m, wrong), FormatError);
}

TEST_CASE("motion compensation: identity and one-pixel translation") {
  const Tensor ref = random_image(8, 10, 6);
  CHECK(equal(motion_compensate(ref, Tensor::zeros({1, 2, 8, 10})), ref));

  // cur(x) = wide(x + 1): content moved one pixel to the left.
  const Tensor wide = random_image(8, 11, 7);
  Tensor r({1, 3, 8, 10}), cur({1, 3, 8, 10});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 10; ++x) {
        r.at(0, c, y, x) = wide.at(0, c, y, x);
        cur.at(0, c, y, x) = wide.at(0, c, y, x + 1);
      }
  Tensor flow = Tensor::zeros({1, 2, 8, 10});
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 10; ++x) flow.at(0, 0, y, x) = 1;
  const Tensor warped = motion_compensate(r, flow);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 9; ++x) CHECK(warped.at(0, c, y, x) == cur.at(0, c, y, x));
      CHECK(warped.at(0, c, y, 9) == r.at(0, c, y, 9));
    }
}

TEST_CASE("processing network is the identity through its skip path") {
  const auto& m = untrained();
  const Tensor w = random_image(16, 16, 8);
  CHECK(equal(refine(m, w), w));
  Rng rng(9);
  InterModel zero(rng);
  for (const auto& p : zero.processing.parameters()) {
    Tensor t = p.tensor;
    for (Scalar& v : t.data()) v = 0;
  }
  CHECK(equal(refine(zero, w), w));
}

TEST_CASE("temporal augmentation: zero fusion branch and evolving state") {
  const auto& m = untrained();
  const Tensor refined = random_image(16, 16, 10), ref = random_image(16, 16, 11);
  const Tensor feats = m.temporal.features(ref);
  CHECK(feats.shape() == Shape{1, 16, 8, 8});
  const RecurrentState s0 = m.temporal.initial_state(1, 16, 16);
  CHECK(s0.h.shape() == Shape{1, 32, 8, 8});
  const auto [p1, s1] = temporal_augment(m, refined, feats, s0);
  CHECK(equal(p1, refined));
  const auto [p2, s2] = temporal_augment(m, refined, feats, s1);
  CHECK_FALSE(equal(s1.h, s2.h));
  CHECK_THROWS_AS(temporal_augment(m, refined, feats, m.temporal.initial_state(1, 8, 8)), ShapeError);
}

TEST_CASE("frame prediction shapes and training pass") {
  const auto& m = untrained();
  const Tensor ref = random_image(32, 32, 12), cur = random_image(32, 32, 13);
  const FlowEncoded enc = flow_encode(m, ref, cur);
  const Prediction p = predict_frame(m, ref, enc.flow, m.temporal.initial_state(1, 32, 32));
  CHECK(p.warped.shape() == ref.shape());
  CHECK(p.refined.shape() == ref.shape());
  CHECK(p.prediction.shape() == ref.shape());
  Rng rng(14);
  const InterTrainOut raw = inter_forward(m, ref, cur, m.temporal.initial_state(1, 32, 32),
                                          QuantizerMode::TrainNoise, rng, false);
  CHECK(raw.flow_bits.item() == 0);
  const InterTrainOut coded =
      inter_forward(m, ref, cur, m.temporal.initial_state(1, 32, 32), QuantizerMode::TrainNoise, rng);
  CHECK(coded.flow_bits.item() > 0);
  CHECK_THROWS_AS(m.flow.estimator.forward(random_image(15, 16, 1), random_image(15, 16, 2)), ShapeError);
  CHECK_THROWS_AS(flow_encode(m, ref, random_image(16, 32, 3)), ShapeError);
}
