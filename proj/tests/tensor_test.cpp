#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "nvc/error.hpp"
#include "nvc/kernels.hpp"
#include "nvc/nn.hpp"
#include "nvc/optim.hpp"

using namespace nvc;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed, double lo = -1, double hi = 1) {
  Rng rng(seed);
  return Tensor::uniform(std::move(shape), rng, lo, hi);
}

double max_abs_diff(std::span<const Scalar> a, std::span<const Scalar> b) {
  REQUIRE(a.size() == b.size());
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(double(a[i]) - double(b[i])));
  return m;
}

}  // namespace

TEST_CASE("tensor shape bookkeeping") {
  Tensor t({2, 3, 4, 5});
  CHECK(t.numel() == 120);
  CHECK(t.rank() == 4);
  CHECK(shape_numel({2, 3, 4, 5}) == 120);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<Scalar>{1, 2, 3}), ShapeError);
  Tensor r = t.reshape({6, 20});
  CHECK(r.same_storage(r));
  CHECK(r.numel() == 120);
  CHECK_THROWS_AS(t.reshape({7, 20}), ShapeError);
}

TEST_CASE("conv2d: scalar kernel scales the input") {
  const Tensor x = Tensor::full({1, 1, 3, 3}, 1);
  const Tensor w = Tensor::full({1, 1, 1, 1}, 2);
  const Tensor b = Tensor::zeros({1});
  const Tensor y = ops::conv2d(x, w, b, 1, 0);
  REQUIRE(y.shape() == Shape{1, 1, 3, 3});
  for (Scalar v : y.data()) CHECK(v == 2);
}

TEST_CASE("conv2d: identity kernel with pad 1") {
  const Tensor x = random_tensor({1, 1, 5, 6}, 3);
  Tensor w = Tensor::zeros({1, 1, 3, 3});
  w.at(0, 0, 1, 1) = 1;
  const Tensor y = ops::conv2d(x, w, Tensor::zeros({1}), 1, 1);
  REQUIRE(y.shape() == x.shape());
  CHECK(max_abs_diff(y.data(), x.data()) == 0);
}

TEST_CASE("conv2d rejects a channel mismatch") {
  CHECK_THROWS_AS(ops::conv2d(Tensor({1, 2, 4, 4}), Tensor({1, 3, 3, 3}), Tensor(), 1, 1), ShapeError);
}

TEST_CASE("conv2d_transpose: all-ones 2x2 kernel at stride 2 preserves mass x4") {
  const Tensor x({1, 1, 2, 2}, std::vector<Scalar>{1, 2, 3, 4});
  const Tensor w = Tensor::full({1, 1, 2, 2}, 1);
  const Tensor y = ops::conv2d_transpose(x, w, Tensor(), 2, 0);
  REQUIRE(y.shape() == Shape{1, 1, 4, 4});
  double s = 0;
  for (Scalar v : y.data()) s += v;
  CHECK(s == doctest::Approx(4 * 10.0));
}

TEST_CASE("gdn: unit denominator is the identity") {
  const Tensor x = random_tensor({2, 3, 4, 4}, 5);
  const Tensor y = ops::gdn(x, Tensor::full({3}, 1), Tensor::zeros({3, 3}), false);
  CHECK(max_abs_diff(y.data(), x.data()) < 1e-6);
}

TEST_CASE("gdn: closed form for one channel") {
  const Tensor x({1, 1, 1, 1}, std::vector<Scalar>{3});
  const Tensor y = ops::gdn(x, Tensor::full({1}, 1), Tensor::full({1, 1}, 1), false);
  CHECK(y.item() == doctest::Approx(3 / std::sqrt(10.0)).epsilon(1e-6));
  CHECK(y.item() == doctest::Approx(0.94868).epsilon(1e-5));
  const Tensor z = ops::gdn(x, Tensor::full({1}, 1), Tensor::full({1, 1}, 1), true);
  CHECK(z.item() == doctest::Approx(3 * std::sqrt(10.0)).epsilon(1e-6));
}

TEST_CASE("gdn layer starts with positive beta and gamma") {
  Gdn g(4, false);
  const Tensor beta = g.beta(), gamma = g.gamma();
  for (Scalar v : beta.data()) CHECK(v > 0);
  for (Scalar v : gamma.data()) CHECK(v > 0);
}

TEST_CASE("prelu: slope 0 is relu, slope 1 is identity") {
  const Tensor x({1, 1, 1, 2}, std::vector<Scalar>{-1, 2});
  const Tensor relu = ops::prelu(x, Tensor::zeros({1}));
  CHECK(relu.data()[0] == 0);
  CHECK(relu.data()[1] == 2);
  const Tensor id = ops::prelu(x, Tensor::full({1}, 1));
  CHECK(id.data()[0] == -1);
  CHECK(id.data()[1] == 2);
}

TEST_CASE("bilinear_warp: zero flow is exact identity") {
  const Tensor img = random_tensor({2, 3, 7, 9}, 11, 0, 1);
  const Tensor out = ops::bilinear_warp(img, Tensor::zeros({2, 2, 7, 9}));
  CHECK(max_abs_diff(out.data(), img.data()) == 0);
}

TEST_CASE("bilinear_warp: integer shift on a ramp replicates the last column") {
  const int h = 4, w = 6;
  Tensor img({1, 1, h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.at(0, 0, y, x) = static_cast<Scalar>(x + 10 * y);
  Tensor flow = Tensor::zeros({1, 2, h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) flow.at(0, 0, y, x) = 1;
  const Tensor out = ops::bilinear_warp(img, flow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int src = std::min(x + 1, w - 1);
      CHECK(out.at(0, 0, y, x) == img.at(0, 0, y, src));
    }
}

TEST_CASE("bilinear_warp: half-pixel shift averages horizontal neighbours") {
  const int h = 3, w = 5;
  const Tensor img = random_tensor({1, 2, h, w}, 13, 0, 1);
  Tensor flow = Tensor::zeros({1, 2, h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) flow.at(0, 0, y, x) = 0.5;
  const Tensor out = ops::bilinear_warp(img, flow);
  for (int c = 0; c < 2; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x + 1 < w; ++x) {
        const double want = 0.5 * (img.at(0, c, y, x) + img.at(0, c, y, x + 1));
        CHECK(out.at(0, c, y, x) == doctest::Approx(want).epsilon(1e-6));
      }
}

TEST_CASE("convlstm: zero weights, zero input and state stay zero") {
  Rng rng(1);
  ConvLstmCell cell(2, 3, 3, rng);
  cell.gates.zero_();
  const auto s = cell.forward(Tensor::zeros({1, 2, 4, 4}), cell.initial_state(1, 4, 4));
  for (Scalar v : s.c.data()) CHECK(v == 0);
  for (Scalar v : s.h.data()) CHECK(v == 0);
}

TEST_CASE("convlstm: zero weights with c = 1 halves the cell") {
  Rng rng(1);
  ConvLstmCell cell(2, 3, 3, rng);
  cell.gates.zero_();
  RecurrentState st = cell.initial_state(1, 4, 4);
  st.c = Tensor::full(st.c.shape(), 1);
  const auto s = cell.forward(Tensor::zeros({1, 2, 4, 4}), st);
  for (Scalar v : s.c.data()) CHECK(v == doctest::Approx(0.5));
  for (Scalar v : s.h.data()) CHECK(v == doctest::Approx(0.5 * std::tanh(0.5)).epsilon(1e-6));
  CHECK(s.h.data()[0] == doctest::Approx(0.23106).epsilon(1e-4));
}

TEST_CASE("convlstm rejects a mismatched state") {
  Rng rng(1);
  ConvLstmCell cell(2, 3, 3, rng);
  CHECK_THROWS_AS(cell.forward(Tensor::zeros({1, 2, 4, 4}), cell.initial_state(1, 2, 2)), ShapeError);
}

TEST_CASE("backward: linear and quadratic") {
  Tensor x = Tensor::full({5}, 1.5);
  x.set_requires_grad(true);
  {
    Tape tape;
    Tensor loss;
    {
      TapeScope scope(tape);
      loss = ops::sum(ops::mul_scalar(x, 2));
    }
    tape.backward(loss);
  }
  for (Scalar g : std::as_const(x).grad()) CHECK(g == 2);

  Tensor y = Tensor::full({1}, 3);
  y.set_requires_grad(true);
  Tape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = ops::sum(ops::square(y));
  }
  tape.backward(loss);
  CHECK(std::as_const(y).grad()[0] == 6);
  CHECK(tape.consumed());
}

TEST_CASE("without an active tape nothing is recorded") {
  Tensor x = Tensor::full({3}, 1);
  x.set_requires_grad(true);
  const Tensor y = ops::mul_scalar(x, 3);
  CHECK_FALSE(autograd::should_record({&x}));
  CHECK(y.impl()->tape_id == 0);
}

TEST_CASE("every reachable parameter gets a gradient") {
  Rng rng(3);
  struct Net : Module {
    explicit Net(Rng& r) : c1(3, 4, 3, 1, 1, r), g(4, false), a(4), c2(4, 2, 3, 2, 1, r) {
      register_module("c1", c1);
      register_module("g", g);
      register_module("a", a);
      register_module("c2", c2);
    }
    Conv2d c1;
    Gdn g;
    PRelu a;
    Conv2d c2;
  } net(rng);
  const Tensor x = random_tensor({2, 3, 8, 8}, 17);
  Tape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = ops::sum(net.c2.forward(net.a.forward(net.g.forward(net.c1.forward(x)))));
  }
  tape.backward(loss);
  std::set<std::string> names;
  for (const auto& p : net.parameters()) {
    CHECK(p.tensor.has_grad());
    CHECK(std::as_const(p.tensor).grad().size() == p.tensor.numel());
    CHECK(names.insert(p.name).second);
  }
  CHECK(names.count("c1.weight") == 1);
  CHECK(names.count("g.gamma") == 1);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Tensor w = Tensor::full({3}, 0.7);
  w.set_requires_grad(true);
  Adam opt({{"w", w}}, {.lr = 0.1});
  w.grad();  // allocates zeros
  opt.step();
  for (Scalar v : w.data()) CHECK(v == doctest::Approx(0.7));
}

TEST_CASE("adam: first step with unit gradient moves by lr") {
  Tensor w = Tensor::full({1}, 0);
  w.set_requires_grad(true);
  Adam opt({{"w", w}}, {.lr = 0.1});
  w.grad()[0] = 1;
  opt.step();
  CHECK(w.data()[0] == doctest::Approx(-0.1).epsilon(1e-6));
}

TEST_CASE("adam: converges on a quadratic bowl") {
  Tensor w = Tensor::full({1}, 0);
  w.set_requires_grad(true);
  Adam opt({{"w", w}}, {.lr = 1e-2});
  for (int i = 0; i < 500; ++i) {
    w.zero_grad();
    Tape tape;
    Tensor loss;
    {
      TapeScope scope(tape);
      loss = ops::sum(ops::square(ops::add_scalar(w, -3)));
    }
    tape.backward(loss);
    opt.step();
  }
  // Reference Adam recursion in double precision lands at 2.8070189 after 500 steps.
  CHECK(w.data()[0] == doctest::Approx(2.8070189).epsilon(1e-5));
}

TEST_CASE("adam refuses parameters without gradients") {
  Tensor w = Tensor::full({1}, 0);
  Adam opt({{"w", w}});
  CHECK_THROWS_AS(opt.step(), Error);
}

TEST_CASE("step decay schedule") {
  CHECK(step_decay_lr(1e-4, 0) == doctest::Approx(1e-4));
  CHECK(step_decay_lr(1e-4, 29) == doctest::Approx(1e-4));
  CHECK(step_decay_lr(1e-4, 30) == doctest::Approx(5e-5));
  CHECK(step_decay_lr(1e-4, 65) == doctest::Approx(2.5e-5));
}

TEST_CASE("gradient clipping bounds the global norm") {
  Tensor a = Tensor::full({2}, 0), b = Tensor::full({1}, 0);
  a.grad()[0] = 3;
  a.grad()[1] = 0;
  b.grad()[0] = 4;
  const double before = clip_grad_norm({{"a", a}, {"b", b}}, 1.0);
  CHECK(before == doctest::Approx(5));
  CHECK(std::as_const(a).grad()[0] == doctest::Approx(0.6));
  CHECK(std::as_const(b).grad()[0] == doctest::Approx(0.8));
}

TEST_CASE("masked conv only sees earlier raster positions") {
  Rng rng(2);
  MaskedConv2d m(2, 3, 5, rng);
  for (int ky = 0; ky < 5; ++ky)
    for (int kx = 0; kx < 5; ++kx) CHECK(m.tap_live(ky, kx) == (ky < 2 || (ky == 2 && kx < 2)));
  CHECK_THROWS_AS(MaskedConv2d(2, 3, 4, rng), ShapeError);
}

TEST_CASE("parallel kernels agree with the serial reference") {
  for (int stride : {1, 2}) {
    kernels::ConvGeometry g;
    g.batch = 3;
    g.in_channels = 4;
    g.in_height = 9;
    g.in_width = 11;
    g.out_channels = 5;
    g.kernel_h = g.kernel_w = 3;
    g.stride = stride;
    g.pad = 1;
    const Tensor in = random_tensor({g.batch, g.in_channels, g.in_height, g.in_width}, 21);
    const Tensor w = random_tensor({g.out_channels, g.in_channels, 3, 3}, 22);
    const Tensor b = random_tensor({g.out_channels}, 23);
    const std::size_t out_n = static_cast<std::size_t>(g.batch) * g.out_channels * g.out_height() * g.out_width();
    std::vector<Scalar> fast(out_n), slow(out_n);
    kernels::conv2d_forward(g, in.data(), w.data(), b.data(), fast);
    kernels::reference::conv2d_forward(g, in.data(), w.data(), b.data(), slow);
    CHECK(max_abs_diff(fast, slow) < 1e-5);

    const Tensor go = random_tensor({static_cast<int>(out_n)}, 24);
    std::vector<Scalar> gi_f(in.numel()), gi_s(in.numel());
    kernels::conv2d_backward_input(g, go.data(), w.data(), gi_f);
    kernels::reference::conv2d_backward_input(g, go.data(), w.data(), gi_s);
    CHECK(max_abs_diff(gi_f, gi_s) < 1e-5);

    std::vector<Scalar> gw_f(w.numel()), gw_s(w.numel()), gb_f(b.numel()), gb_s(b.numel());
    kernels::conv2d_backward_weight(g, in.data(), go.data(), gw_f, gb_f);
    kernels::reference::conv2d_backward_weight(g, in.data(), go.data(), gw_s, gb_s);
    CHECK(max_abs_diff(gw_f, gw_s) < 1e-4);
    CHECK(max_abs_diff(gb_f, gb_s) < 1e-4);
  }

  kernels::PointwiseGeometry pg{2, 4, 30};
  const Tensor x = random_tensor({2, 4, 30}, 31);
  const Tensor beta = random_tensor({4}, 32, 0.5, 1.5);
  const Tensor gamma = random_tensor({4, 4}, 33, 0.0, 0.3);
  for (bool inverse : {false, true}) {
    std::vector<Scalar> yf(x.numel()), ys(x.numel());
    kernels::gdn_forward(pg, x.data(), beta.data(), gamma.data(), inverse, yf);
    kernels::reference::gdn_forward(pg, x.data(), beta.data(), gamma.data(), inverse, ys);
    CHECK(max_abs_diff(yf, ys) < 1e-6);
    const Tensor gy = random_tensor({2, 4, 30}, 34);
    std::vector<Scalar> gxf(x.numel()), gxs(x.numel()), gbf(4), gbs(4), ggf(16), ggs(16);
    kernels::gdn_backward(pg, x.data(), beta.data(), gamma.data(), inverse, gy.data(), gxf, gbf, ggf);
    kernels::reference::gdn_backward(pg, x.data(), beta.data(), gamma.data(), inverse, gy.data(), gxs, gbs, ggs);
    CHECK(max_abs_diff(gxf, gxs) < 1e-5);
    CHECK(max_abs_diff(gbf, gbs) < 1e-4);
    CHECK(max_abs_diff(ggf, ggs) < 1e-4);
  }

  kernels::WarpGeometry wg{2, 3, 8, 10};
  const Tensor img = random_tensor({2, 3, 8, 10}, 41, 0, 1);
  const Tensor flow = random_tensor({2, 2, 8, 10}, 42, -3, 3);
  std::vector<Scalar> of(img.numel()), os(img.numel());
  kernels::warp_forward(wg, img.data(), flow.data(), of);
  kernels::reference::warp_forward(wg, img.data(), flow.data(), os);
  CHECK(max_abs_diff(of, os) < 1e-6);
  const Tensor gout = random_tensor({2, 3, 8, 10}, 43);
  std::vector<Scalar> gif(img.numel()), gis(img.numel()), gff(flow.numel()), gfs(flow.numel());
  kernels::warp_backward(wg, img.data(), flow.data(), gout.data(), gif, gff);
  kernels::reference::warp_backward(wg, img.data(), flow.data(), gout.data(), gis, gfs);
  CHECK(max_abs_diff(gif, gis) < 1e-5);
  CHECK(max_abs_diff(gff, gfs) < 1e-5);
}
