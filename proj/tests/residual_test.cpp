#include <doctest.h>

#include "nvc/error.hpp"
#include "nvc/frame_tensor.hpp"
#include "nvc/residual.hpp"
#include "probes.hpp"

using namespace nvc;

namespace {

ResidualModel& untrained() {
  static Rng rng(303);
  static ResidualModel model(rng);
  return model;
}

Tensor random_image(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  return Tensor::uniform({1, 3, h, w}, rng, 0, 1);
}

bool equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

// Perturb synthesis so the decoded residual is not identically zero.
void randomize_output(ResidualModel& m, std::uint64_t seed) {
  Rng rng(seed);
  for (const auto& p : m.codec.synthesis.parameters()) {
    Tensor t = p.tensor;
    bool all_zero = true;
    for (Scalar v : std::as_const(t).data()) all_zero = all_zero && v == 0;
    if (all_zero)
      for (Scalar& v : t.data()) v = static_cast<Scalar>(rng.normal(0, 0.05));
  }
}

}  // namespace

TEST_CASE("residual model starts as the identity on the prediction") {
  const auto& m = untrained();
  const Tensor pred = random_image(32, 32, 1);
  const ResidualEncoded enc = residual_encode(m, random_image(32, 32, 2), pred, m.initial_state(32, 32));
  CHECK(equal(enc.recon, clamp_unit(pred)));
}

TEST_CASE("residual round trip over a five frame group") {
  Rng rng(4);
  ResidualModel m(rng);
  randomize_output(m, 5);
  RecurrentState enc_state = m.initial_state(32, 48), dec_state = enc_state;
  Tensor ref = random_image(32, 48, 6);
  for (int t = 1; t < 5; ++t) {
    const Tensor cur = random_image(32, 48, 10 + t);
    const Tensor pred = ops::add(ops::mul_scalar(ref, Scalar(0.7)), ops::mul_scalar(cur, Scalar(0.3)));
    const ResidualEncoded enc = residual_encode(m, cur, pred, enc_state);
    const ResidualDecoded dec = residual_decode(m, enc.code, pred, dec_state);
    CHECK(equal(dec.recon, enc.recon));
    CHECK(equal(dec.params.mu, enc.params.mu));
    CHECK(equal(dec.params.sigma, enc.params.sigma));
    CHECK(equal(dec.state.h, enc.state.h));
    CHECK(equal(dec.state.c, enc.state.c));
    if (t > 1) CHECK_FALSE(equal(enc.state.h, enc_state.h));
    enc_state = enc.state;
    dec_state = dec.state;
    ref = enc.recon;
  }
}

TEST_CASE("residual context model is causal with a temporal prior") {
  const auto& m = untrained();
  Rng rng(7);
  int violations = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int h = rng.uniform_int(2, 6), w = rng.uniform_int(2, 6);
    const Tensor psi = Tensor::normal({1, m.codec.config().hyper_features, h, w}, rng, 0, 1);
    const Tensor prior = Tensor::normal({1, m.codec.config().temporal, h, w}, rng, 0, 1);
    violations += probes::causality_violations(m.codec.context, psi, prior, {1, 32, h, w}, rng);
  }
  CHECK(violations == 0);
}

TEST_CASE("zeroed temporal branch removes the prior's influence") {
  Rng rng(8);
  ResidualModel m(rng);
  const Tensor y = Tensor::normal({1, 32, 3, 5}, rng, 0, 2);
  const Tensor psi = Tensor::normal({1, m.codec.config().hyper_features, 3, 5}, rng, 0, 1);
  const Tensor h1 = Tensor::normal({1, 32, 3, 5}, rng, 0, 1), h2 = Tensor::normal({1, 32, 3, 5}, rng, 0, 1);
  const auto a = residual_context_predict(m, y, psi, h1);
  const auto b = residual_context_predict(m, y, psi, h2);
  CHECK_FALSE(equal(a.mu, b.mu));
  for (const auto& p : m.codec.context.agg_temporal.parameters())
    for (Scalar& v : Tensor(p.tensor).data()) v = 0;
  const auto c = residual_context_predict(m, y, psi, h1);
  const auto d = residual_context_predict(m, y, psi, h2);
  CHECK(equal(c.mu, d.mu));
  CHECK(equal(c.sigma, d.sigma));
}

TEST_CASE("zero residual codes deterministically") {
  const auto& m = untrained();
  const Tensor pred = random_image(32, 32, 9);
  const RecurrentState s = m.initial_state(32, 32);
  const ResidualEncoded a = residual_encode(m, pred, pred, s);
  const ResidualEncoded b = residual_encode(m, pred, pred, s);
  CHECK(a.code.latent_segment == b.code.latent_segment);
  CHECK(a.code.hyper_segment == b.code.hyper_segment);
  CHECK(equal(residual_decode(m, a.code, pred, s).recon, a.recon));
}

TEST_CASE("state update is deterministic and accepts intra frames") {
  const auto& m = untrained();
  const Tensor recon = random_image(16, 16, 11);
  const RecurrentState s0 = m.initial_state(16, 16);
  CHECK(s0.h.shape() == Shape{1, 32, 4, 4});
  const RecurrentState a = m.update_state(recon, Tensor(), s0);
  const RecurrentState b = m.update_state(recon, Tensor(), s0);
  CHECK(equal(a.h, b.h));
  CHECK(equal(a.c, b.c));
  Rng rng(12);
  const RecurrentState c = m.update_state(recon, Tensor::normal({1, 32, 4, 4}, rng, 0, 1), s0);
  CHECK_FALSE(equal(a.h, c.h));
}

TEST_CASE("residual shape checks") {
  const auto& m = untrained();
  CHECK_THROWS_AS(residual_encode(m, random_image(32, 32, 1), random_image(32, 16, 2), m.initial_state(32, 32)),
                  ShapeError);
  const Tensor pred = random_image(32, 32, 3);
  const ResidualEncoded enc = residual_encode(m, pred, pred, m.initial_state(32, 32));
  CHECK_THROWS_AS(residual_decode(m, enc.code, random_image(48, 32, 4), m.initial_state(48, 32)), Error);
  Rng rng(5);
  ResidualConfig none;
  none.transform.temporal = 0;
  CHECK_THROWS_AS(ResidualModel(rng, none), Error);
}

TEST_CASE("residual training pass carries gradients to the recurrent stem") {
  Rng rng(13);
  ResidualModel m(rng);
  randomize_output(m, 14);
  const Tensor ref = random_image(16, 16, 15), cur = random_image(16, 16, 16);
  Tape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    const RecurrentState s = m.update_state(ref, Tensor(), m.initial_state(16, 16));
    const ResidualTrainOut out = residual_forward(m, cur, ref, s, QuantizerMode::TrainNoise, rng);
    CHECK(out.recon.shape() == cur.shape());
    loss = ops::add(ops::mean(ops::square(ops::sub(out.recon, cur))),
                    ops::mul_scalar(ops::add(out.latent_bits, out.hyper_bits), Scalar(1e-3)));
  }
  tape.backward(loss);
  int nonzero = 0;
  for (const auto& p : m.stem1.parameters()) {
    REQUIRE(p.tensor.has_grad());
    for (Scalar g : std::as_const(p.tensor).grad()) nonzero += g != 0;
  }
  CHECK(nonzero > 0);
}
