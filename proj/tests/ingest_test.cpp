#include <doctest.h>

#include <filesystem>
#include <string>

#include "nvc/bytes.hpp"
#include "nvc/error.hpp"
#include "nvc/ingest.hpp"

using namespace nvc;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nvc_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

// 4x2 4:2:0 stream with two frames: luma ramp, neutral chroma.
std::vector<std::uint8_t> two_frame_y4m() {
  std::vector<std::uint8_t> out = bytes_of("YUV4MPEG2 W4 H2 F30000:1001 Ip A1:1 C420jpeg\n");
  for (int f = 0; f < 2; ++f) {
    const auto marker = bytes_of("FRAME\n");
    out.insert(out.end(), marker.begin(), marker.end());
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(16 * i + 40 * f));
    for (int i = 0; i < 4; ++i) out.push_back(128);
  }
  return out;
}

}  // namespace

TEST_CASE("y4m: two-frame fixture") {
  const VideoSequence seq = parse_y4m(two_frame_y4m());
  REQUIRE(seq.frames.size() == 2);
  CHECK(seq.width() == 4);
  CHECK(seq.height() == 2);
  CHECK(seq.fps_num == 30000);
  CHECK(seq.fps_den == 1001);
  // Neutral chroma: R = G = B = Y / 255.
  for (int c = 0; c < 3; ++c) CHECK(seq.frames[1].at(c, 1, 3) == doctest::Approx((16 * 7 + 40) / 255.0));
}

TEST_CASE("y4m: gray frames survive RGB and back losslessly") {
  VideoSequence seq;
  for (int level : {0, 17, 128, 200, 255}) {
    Frame f(6, 4);
    for (float& v : f.rgb) v = static_cast<float>(level / 255.0);
    seq.frames.push_back(f);
  }
  const auto bytes = encode_y4m(seq);
  const VideoSequence back = parse_y4m(bytes);
  REQUIRE(back.frames.size() == seq.frames.size());
  for (std::size_t i = 0; i < seq.frames.size(); ++i) CHECK(back.frames[i] == seq.frames[i]);
  CHECK(encode_y4m(back) == bytes);
}

TEST_CASE("y4m: malformed headers report the byte offset") {
  try {
    parse_y4m(bytes_of("YUV4MPEG2 W4 Hx C420jpeg\nFRAME\n"));
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(e.offset() == 13);
    CHECK(std::string(e.what()).find("offset 13") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_y4m(bytes_of("RIFF....")), DataError);
  CHECK_THROWS_AS(parse_y4m(bytes_of("YUV4MPEG2 W4 H2 C420jpeg")), DataError);
  auto truncated = two_frame_y4m();
  truncated.resize(truncated.size() - 3);
  CHECK_THROWS_AS(parse_y4m(truncated), DataError);
  CHECK_THROWS_AS(parse_y4m(bytes_of("YUV4MPEG2 W4 H2 It C420jpeg\n")), DataError);
}

TEST_CASE("png sequence: round trip and gap detection") {
  const fs::path dir = scratch_dir("png_seq");
  VideoSequence seq;
  for (int i = 0; i < 3; ++i) {
    Frame f(5, 3);
    for (std::size_t k = 0; k < f.rgb.size(); ++k) f.rgb[k] = static_cast<float>(((k * 7 + i * 31) % 256) / 255.0);
    seq.frames.push_back(f);
  }
  write_png_sequence(dir.string(), seq);
  const VideoSequence back = ingest(dir.string());
  REQUIRE(back.frames.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(back.frames[i] == seq.frames[i]);

  fs::remove(dir / "frame_0001.png");
  try {
    read_png_sequence(dir.string());
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("missing frame index 1") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("raw planar rgb with extents in the name") {
  const fs::path dir = scratch_dir("raw");
  std::vector<std::uint8_t> bytes;
  for (int f = 0; f < 2; ++f)
    for (int i = 0; i < 3 * 4 * 2; ++i) bytes.push_back(static_cast<std::uint8_t>(i * 10 + f));
  const std::string path = (dir / "clip_4x2.rgb").string();
  write_file(path, bytes);
  const VideoSequence seq = ingest(path);
  REQUIRE(seq.frames.size() == 2);
  CHECK(seq.width() == 4);
  CHECK(seq.frames[1].at(2, 1, 3) == doctest::Approx((23 * 10 + 1) / 255.0));
  write_file((dir / "clip_5x2.rgb").string(), bytes);
  CHECK_THROWS_AS(ingest((dir / "clip_5x2.rgb").string()), DataError);
  write_file((dir / "clip.rgb").string(), bytes);
  CHECK_THROWS_AS(ingest((dir / "clip.rgb").string()), DataError);
  fs::remove_all(dir);
}

TEST_CASE("frame padding and cropping") {
  Frame f(3, 2);
  for (std::size_t k = 0; k < f.rgb.size(); ++k) f.rgb[k] = static_cast<float>(k) / 20;
  const Frame p = pad_replicate(f, 5, 4);
  CHECK(p.at(1, 3, 4) == f.at(1, 1, 2));
  CHECK(p.at(0, 0, 4) == f.at(0, 0, 2));
  CHECK(crop(p, 3, 2) == f);
  CHECK(to_u8(1.0f) == 255);
  CHECK(to_u8(-0.2f) == 0);
  CHECK(to_u8(0.5f) == 128);
}

TEST_CASE("byte reader bounds") {
  ByteWriter w;
  w.put_u16(0xBEEF);
  w.put_segment(std::vector<std::uint8_t>{1, 2, 3});
  const auto bytes = w.take();
  ByteReader r(bytes);
  CHECK(r.get_u16() == 0xBEEF);
  CHECK(r.get_segment().size() == 3);
  CHECK(r.at_end());
  CHECK_THROWS_AS(r.get_u8(), DataError);
  CHECK(hex64(fnv1a64(bytes_of(""))) == "cbf29ce484222325");
}
