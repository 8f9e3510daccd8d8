#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nvc/error.hpp"
#include "nvc/frame_tensor.hpp"
#include "nvc/metrics.hpp"
#include "nvc/ms_ssim_diff.hpp"
#include "nvc/rng.hpp"

using namespace nvc;
namespace fs = std::filesystem;

namespace {

// Same generator and pair construction as tests/oracle/ms_ssim_oracle.py.
struct Lcg {
  std::uint64_t s;
  std::uint64_t next() {
    s = s * 6364136223846793005ull + 1442695040888963407ull;
    return s;
  }
};

std::pair<Frame, Frame> oracle_pair(int i, int size = 256) {
  Lcg rng{static_cast<std::uint64_t>(1000 + i)};
  const int k = 8 * (i + 1);
  Frame a(size, size), b(size, size);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        const int base = ((x * 3 + y * 5 + c * 7 + i * 11) % 64) * 2 + static_cast<int>(rng.next() >> 57);
        const int noise = static_cast<int>((rng.next() >> 56) % static_cast<std::uint64_t>(2 * k + 1)) - k;
        a.at(c, y, x) = static_cast<float>(base / 255.0);
        b.at(c, y, x) = static_cast<float>(std::clamp(base + noise, 0, 255) / 255.0);
      }
  return {a, b};
}

// pytorch_msssim.ms_ssim(data_range=1) in float64 on the pairs above.
constexpr double kOracle[10] = {0.9983497955, 0.9939757383, 0.9861332392, 0.9771272817, 0.9628205367,
                                0.9527933427, 0.9304780120, 0.9177016359, 0.9097235355, 0.8895290027};

Frame random_frame(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  Frame f(w, h);
  for (float& v : f.rgb) v = static_cast<float>(rng.uniform());
  return f;
}

Frame blend(const Frame& a, const Frame& b, float t) {
  Frame out = a;
  for (std::size_t i = 0; i < out.rgb.size(); ++i) out.rgb[i] = (1 - t) * a.rgb[i] + t * b.rgb[i];
  return out;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nvc_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("ms_ssim: identity and symmetry") {
  for (int i = 0; i < 5; ++i) {
    const Frame a = random_frame(48, 40, 10 + i), b = random_frame(48, 40, 20 + i);
    const Frame c = blend(a, b, 0.3f);
    CHECK(ms_ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ms_ssim(a, c) == doctest::Approx(ms_ssim(c, a)).epsilon(1e-12));
    const double v = ms_ssim(a, c);
    CHECK(v >= 0);
    CHECK(v < 1);
  }
  CHECK_THROWS_AS(ms_ssim(Frame(8, 8), Frame(8, 9)), ShapeError);
}

TEST_CASE("ms_ssim agrees with the reference implementation") {
  for (int i = 0; i < 10; ++i) {
    const auto [a, b] = oracle_pair(i);
    CHECK_MESSAGE(std::abs(ms_ssim(a, b) - kOracle[i]) < 1e-4, "pair " << i);
  }
}

TEST_CASE("ms_ssim scale count follows the frame size") {
  CHECK(ms_ssim_scales(256) == 5);
  CHECK(ms_ssim_scales(160) == 5);
  CHECK(ms_ssim_scales(159) == 4);
  CHECK(ms_ssim_scales(32) == 2);
  CHECK(ms_ssim_scales(16) == 1);
  CHECK(ms_ssim_scales(4) == 1);
  double s = 0;
  for (double w : ms_ssim_weights(3)) s += w;
  CHECK(s == doctest::Approx(1.0));
  CHECK_THROWS_AS(ms_ssim_weights(6), Error);
  const auto g = gaussian_window(11, 1.5);
  CHECK(g[5] > g[4]);
  CHECK(g[0] == doctest::Approx(g[10]));
}

TEST_CASE("differentiable ms_ssim matches the evaluation metric") {
  for (int size : {32, 64}) {
    const Frame a = random_frame(size, size, 31), b = blend(a, random_frame(size, size, 32), 0.4f);
    const Tensor m = ms_ssim_map(to_tensor(a), to_tensor(b));
    REQUIRE(m.shape() == Shape{1, 3});
    double mean = 0;
    for (Scalar v : m.data()) mean += v / 3.0;
    CHECK(mean == doctest::Approx(ms_ssim(a, b)).epsilon(1e-4));
    CHECK(ms_ssim_distortion(to_tensor(a), to_tensor(b)).item() == doctest::Approx(1 - mean).epsilon(1e-4));
  }
}

TEST_CASE("to_db") {
  CHECK(to_db(0.9) == 10.0);
  CHECK(to_db(0.0) == 0.0);
  CHECK(to_db(0.99) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(to_db(1.0) == 100.0);
  CHECK_THROWS_AS(to_db(1.5), Error);
}

TEST_CASE("bd_rate: identity and half rate") {
  const RDCurve a = RDCurve::from("a", {0.1, 0.2, 0.4, 0.8}, {0.90, 0.94, 0.965, 0.98});
  CHECK(bd_rate(a, a) == doctest::Approx(0.0).epsilon(1e-12));
  RDCurve half = a;
  for (auto& p : half.points) p.rate /= 2;
  CHECK(std::abs(bd_rate(a, half) + 50.0) < 1e-6);
  CHECK(std::abs(bd_rate(half, a) - 100.0) < 1e-6);
}

TEST_CASE("bd_rate agrees with the reference PCHIP integration") {
  const RDCurve anchor = RDCurve::from("anchor", {0.10, 0.22, 0.41, 0.80}, {0.900, 0.940, 0.962, 0.978});
  const RDCurve test = RDCurve::from("test", {0.08, 0.15, 0.33, 0.61}, {0.895, 0.931, 0.960, 0.981});
  CHECK(bd_rate(anchor, test) == doctest::Approx(-17.3303224190).epsilon(1e-8));
}

TEST_CASE("bd_rate input validation") {
  const RDCurve three = RDCurve::from("t", {0.1, 0.2, 0.4}, {0.9, 0.94, 0.96});
  CHECK_THROWS_AS(bd_rate(three, three), Error);
  const RDCurve dup = RDCurve::from("d", {0.1, 0.1, 0.4, 0.5}, {0.9, 0.92, 0.96, 0.97});
  CHECK_THROWS_AS(dup.validate(), Error);
  const RDCurve lo = RDCurve::from("lo", {0.1, 0.2, 0.3, 0.4}, {0.50, 0.55, 0.60, 0.65});
  const RDCurve hi = RDCurve::from("hi", {0.1, 0.2, 0.3, 0.4}, {0.90, 0.92, 0.94, 0.96});
  CHECK_THROWS_AS(bd_rate(lo, hi), Error);
}

TEST_CASE("pchip reproduces scipy slopes and integrates exactly") {
  const Pchip p({0, 1, 2, 4}, {0, 1, 4, 16});
  CHECK(p(1) == doctest::Approx(1));
  CHECK(p(2) == doctest::Approx(4));
  // Cubic Hermite pieces are integrated in closed form: compare with Simpson.
  double simpson = 0;
  const int n = 2000;
  for (int i = 0; i <= n; ++i) {
    const double x = 0.3 + 3.4 * i / n;
    const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
    simpson += w * p(x);
  }
  simpson *= 3.4 / n / 3;
  CHECK(p.integral(0.3, 3.7) == doctest::Approx(simpson).epsilon(1e-9));
}

TEST_CASE("published BD-rate average") {
  const double per_sequence[6] = {-96.96, -54.32, -12.07, -49.15, -2.27, -13.92};
  double s = 0;
  for (double v : per_sequence) s += v;
  CHECK(s / 6 == doctest::Approx(-38.115).epsilon(1e-12));
  CHECK(std::abs(s / 6 - (-38.12)) <= 0.01);
}

TEST_CASE("report: csv rows, determinism, per-sequence plots") {
  const RDCurve two = RDCurve::from("seq", {0.1, 0.3}, {0.9, 0.95});
  const std::string csv = rd_points_csv({two});
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.rfind("sequence,rate_bpp,ms_ssim,ms_ssim_db\n", 0) == 0);
  CHECK(csv == rd_points_csv({two}));
  CHECK(rd_svg(two) == rd_svg(two));

  std::vector<RDCurve> tests, anchors;
  for (int i = 0; i < 6; ++i) {
    const std::string name = "seq" + std::to_string(i);
    anchors.push_back(RDCurve::from(name, {0.1, 0.2, 0.4, 0.8}, {0.90, 0.94, 0.965, 0.98}));
    tests.push_back(RDCurve::from(name, {0.08, 0.17, 0.3, 0.7}, {0.90, 0.94, 0.965, 0.98}));
  }
  const fs::path dir = scratch_dir("report");
  const ReportFiles files = rd_table_report(tests, dir.string(), anchors);
  CHECK(files.plots.size() == 6);
  for (const auto& p : files.plots) CHECK(fs::exists(p));
  const std::string summary = slurp(files.summary_csv);
  CHECK(summary.find("\naverage,") != std::string::npos);
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 8);
  const std::string first = slurp(files.points_csv);
  rd_table_report(tests, dir.string(), anchors);
  CHECK(slurp(files.points_csv) == first);

  const auto back = read_rd_csv(files.points_csv);
  REQUIRE(back.size() == 6);
  CHECK(back.at("seq2").points.size() == 4);
  CHECK(back.at("seq2").points[1].rate == doctest::Approx(0.17));
  fs::remove_all(dir);
}
