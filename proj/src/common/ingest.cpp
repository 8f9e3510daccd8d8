#include "nvc/ingest.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <regex>
#include <sstream>

#include "nvc/bytes.hpp"
#include "nvc/error.hpp"

namespace fs = std::filesystem;

namespace nvc {

namespace {

bool has_ext(const std::string& path, const char* ext) {
  std::string e = fs::path(path).extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return e == ext;
}

// Full-range BT.601 (JFIF).
void ycbcr_to_rgb(double y, double cb, double cr, float out[3]) {
  const double r = y + 1.402 * (cr - 128.0);
  const double g = y - 0.344136 * (cb - 128.0) - 0.714136 * (cr - 128.0);
  const double b = y + 1.772 * (cb - 128.0);
  out[0] = static_cast<float>(std::clamp(std::round(r), 0.0, 255.0) / 255.0);
  out[1] = static_cast<float>(std::clamp(std::round(g), 0.0, 255.0) / 255.0);
  out[2] = static_cast<float>(std::clamp(std::round(b), 0.0, 255.0) / 255.0);
}

std::uint8_t clamp8(double v) { return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0)); }

enum class Chroma { C420, C444, Mono };

}  // namespace

VideoSequence parse_y4m(std::span<const std::uint8_t> bytes) {
  static const std::string magic = "YUV4MPEG2";
  if (bytes.size() < magic.size() || !std::equal(magic.begin(), magic.end(), bytes.begin())) {
    throw DataError("not a Y4M stream: missing YUV4MPEG2 signature", 0);
  }
  std::size_t pos = magic.size();
  auto read_line = [&](std::size_t& p) {
    const std::size_t start = p;
    while (p < bytes.size() && bytes[p] != '\n') ++p;
    if (p >= bytes.size()) throw DataError("Y4M: unterminated header line", start);
    std::string line(bytes.begin() + start, bytes.begin() + p);
    ++p;
    return std::make_pair(line, start);
  };
  auto [header, header_at] = read_line(pos);
  int width = 0, height = 0;
  VideoSequence seq;
  Chroma chroma = Chroma::C420;
  std::istringstream tokens(header);
  std::string tok;
  while (tokens >> tok) {
    const std::size_t tok_at = header_at + header.find(tok);
    try {
      switch (tok[0]) {
        case 'W': width = std::stoi(tok.substr(1)); break;
        case 'H': height = std::stoi(tok.substr(1)); break;
        case 'F': {
          const auto colon = tok.find(':');
          if (colon == std::string::npos) throw DataError("Y4M: malformed frame rate '" + tok + "'", tok_at);
          seq.fps_num = std::stoi(tok.substr(1, colon - 1));
          seq.fps_den = std::stoi(tok.substr(colon + 1));
          break;
        }
        case 'C': {
          const std::string c = tok.substr(1);
          if (c.rfind("420", 0) == 0) {
            chroma = Chroma::C420;
          } else if (c == "444") {
            chroma = Chroma::C444;
          } else if (c == "mono") {
            chroma = Chroma::Mono;
          } else {
            throw DataError("Y4M: unsupported colour space '" + c + "'", tok_at);
          }
          break;
        }
        case 'I':
          if (tok != "Ip" && tok != "I?") throw DataError("Y4M: interlaced input is not supported", tok_at);
          break;
        default: break;  // A (aspect), X (comment)
      }
    } catch (const std::invalid_argument&) {
      throw DataError("Y4M: malformed header token '" + tok + "'", tok_at);
    } catch (const std::out_of_range&) {
      throw DataError("Y4M: header value out of range '" + tok + "'", tok_at);
    }
  }
  if (width <= 0 || height <= 0) throw DataError("Y4M: header lacks positive W/H", header_at);
  const std::size_t luma = static_cast<std::size_t>(width) * height;
  const int cw = (width + 1) / 2, ch = (height + 1) / 2;
  const std::size_t chroma_size =
      chroma == Chroma::C420 ? static_cast<std::size_t>(cw) * ch : (chroma == Chroma::C444 ? luma : 0);
  const std::size_t frame_bytes = luma + 2 * chroma_size;
  while (pos < bytes.size()) {
    auto [line, line_at] = read_line(pos);
    if (line.rfind("FRAME", 0) != 0) throw DataError("Y4M: expected FRAME marker", line_at);
    if (bytes.size() - pos < frame_bytes) {
      throw DataError("Y4M: truncated frame " + std::to_string(seq.frames.size()), pos);
    }
    const std::uint8_t* yp = bytes.data() + pos;
    const std::uint8_t* up = yp + luma;
    const std::uint8_t* vp = up + chroma_size;
    Frame f(width, height);
    float px[3];
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        double cb = 128, cr = 128;
        if (chroma == Chroma::C420) {
          cb = up[static_cast<std::size_t>(y / 2) * cw + x / 2];
          cr = vp[static_cast<std::size_t>(y / 2) * cw + x / 2];
        } else if (chroma == Chroma::C444) {
          cb = up[static_cast<std::size_t>(y) * width + x];
          cr = vp[static_cast<std::size_t>(y) * width + x];
        }
        ycbcr_to_rgb(yp[static_cast<std::size_t>(y) * width + x], cb, cr, px);
        for (int c = 0; c < 3; ++c) f.at(c, y, x) = px[c];
      }
    seq.frames.push_back(std::move(f));
    pos += frame_bytes;
  }
  return seq;
}

VideoSequence read_y4m(const std::string& path) { return parse_y4m(read_file(path)); }

std::vector<std::uint8_t> encode_y4m(const VideoSequence& seq) {
  if (seq.frames.empty()) throw DataError("encode_y4m: empty sequence");
  const int w = seq.width(), h = seq.height();
  const int cw = (w + 1) / 2, ch = (h + 1) / 2;
  ByteWriter out;
  out.put_string("YUV4MPEG2 W" + std::to_string(w) + " H" + std::to_string(h) + " F" + std::to_string(seq.fps_num) +
                 ":" + std::to_string(seq.fps_den) + " Ip A1:1 C420jpeg\n");
  std::vector<double> cb(static_cast<std::size_t>(w) * h), cr(cb.size());
  for (const Frame& f : seq.frames) {
    require_same_extent(f, seq.frames.front(), "encode_y4m");
    out.put_string("FRAME\n");
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double r = to_u8(f.at(0, y, x)), g = to_u8(f.at(1, y, x)), b = to_u8(f.at(2, y, x));
        out.put_u8(clamp8(0.299 * r + 0.587 * g + 0.114 * b));
        cb[static_cast<std::size_t>(y) * w + x] = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b;
        cr[static_cast<std::size_t>(y) * w + x] = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b;
      }
    for (const auto* plane : {&cb, &cr}) {
      for (int y = 0; y < ch; ++y)
        for (int x = 0; x < cw; ++x) {
          double s = 0;
          int n = 0;
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const int yy = 2 * y + dy, xx = 2 * x + dx;
              if (yy < h && xx < w) {
                s += (*plane)[static_cast<std::size_t>(yy) * w + xx];
                ++n;
              }
            }
          out.put_u8(clamp8(s / n));
        }
    }
  }
  return out.take();
}

void write_y4m(const std::string& path, const VideoSequence& seq) { write_file(path, encode_y4m(seq)); }

Frame read_png(const std::string& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw DataError("cannot read PNG " + path + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&image);
    throw DataError("cannot decode PNG " + path + ": " + image.message);
  }
  Frame f(static_cast<int>(image.width), static_cast<int>(image.height));
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x)
      for (int c = 0; c < 3; ++c) f.at(c, y, x) = buf[(static_cast<std::size_t>(y) * f.width + x) * 3 + c] / 255.0f;
  return f;
}

void write_png(const std::string& path, const Frame& frame) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(frame.width);
  image.height = static_cast<png_uint_32>(frame.height);
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(frame.width) * frame.height * 3);
  for (int y = 0; y < frame.height; ++y)
    for (int x = 0; x < frame.width; ++x)
      for (int c = 0; c < 3; ++c)
        buf[(static_cast<std::size_t>(y) * frame.width + x) * 3 + c] = to_u8(frame.at(c, y, x));
  if (!png_image_write_to_file(&image, path.c_str(), 0, buf.data(), 0, nullptr)) {
    throw Error("cannot write PNG " + path + ": " + image.message);
  }
}

VideoSequence read_png_sequence(const std::string& dir) {
  if (!fs::is_directory(dir)) throw DataError("PNG sequence: " + dir + " is not a directory");
  static const std::regex digits(R"((\d+)(?!.*\d))");
  std::map<long, std::string> by_index;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || !has_ext(entry.path().string(), ".png")) continue;
    const std::string stem = entry.path().stem().string();
    std::smatch m;
    if (!std::regex_search(stem, m, digits)) continue;
    const long index = std::stol(m[1].str());
    if (!by_index.emplace(index, entry.path().string()).second) {
      throw DataError("PNG sequence: frame index " + std::to_string(index) + " appears twice in " + dir);
    }
  }
  if (by_index.empty()) throw DataError("PNG sequence: no numbered .png files in " + dir);
  std::vector<long> missing;
  for (long i = by_index.begin()->first; i <= by_index.rbegin()->first; ++i) {
    if (!by_index.count(i)) missing.push_back(i);
  }
  if (!missing.empty()) {
    std::string list;
    for (long m : missing) list += (list.empty() ? "" : ", ") + std::to_string(m);
    throw DataError("PNG sequence: missing frame index " + list + " in " + dir);
  }
  VideoSequence seq;
  for (const auto& [index, path] : by_index) {
    seq.frames.push_back(read_png(path));
    require_same_extent(seq.frames.back(), seq.frames.front(), "PNG sequence");
  }
  return seq;
}

void write_png_sequence(const std::string& dir, const VideoSequence& seq) {
  fs::create_directories(dir);
  char name[32];
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    std::snprintf(name, sizeof name, "frame_%04zu.png", i);
    write_png((fs::path(dir) / name).string(), seq.frames[i]);
  }
}

VideoSequence read_raw_rgb(const std::string& path, int width, int height) {
  if (width <= 0 || height <= 0) throw DataError("raw RGB: extents must be positive");
  const auto bytes = read_file(path);
  const std::size_t frame_bytes = 3 * static_cast<std::size_t>(width) * height;
  if (bytes.empty() || bytes.size() % frame_bytes != 0) {
    throw DataError("raw RGB: file size " + std::to_string(bytes.size()) + " is not a multiple of the " +
                        std::to_string(frame_bytes) + "-byte frame",
                    bytes.size() - bytes.size() % frame_bytes);
  }
  VideoSequence seq;
  for (std::size_t off = 0; off < bytes.size(); off += frame_bytes) {
    Frame f(width, height);
    for (std::size_t i = 0; i < frame_bytes; ++i) f.rgb[i] = bytes[off + i] / 255.0f;
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

VideoSequence read_raw_rgb(const std::string& path) {
  static const std::regex dims(R"((\d+)x(\d+))");
  const std::string stem = fs::path(path).stem().string();
  std::smatch m;
  if (!std::regex_search(stem, m, dims)) {
    throw DataError("raw RGB: file name " + stem + " carries no WxH extents");
  }
  return read_raw_rgb(path, std::stoi(m[1].str()), std::stoi(m[2].str()));
}

VideoSequence ingest(const std::string& path, VideoFormat format) {
  if (format == VideoFormat::Auto) {
    if (fs::is_directory(path)) {
      format = VideoFormat::PngSequence;
    } else if (has_ext(path, ".y4m")) {
      format = VideoFormat::Y4M;
    } else if (has_ext(path, ".rgb") || has_ext(path, ".raw")) {
      format = VideoFormat::RawRgb;
    } else {
      throw DataError("cannot infer video format of " + path);
    }
  }
  switch (format) {
    case VideoFormat::Y4M: return read_y4m(path);
    case VideoFormat::PngSequence: return read_png_sequence(path);
    case VideoFormat::RawRgb: return read_raw_rgb(path);
    case VideoFormat::Auto: break;
  }
  throw DataError("unknown video format");
}

}  // namespace nvc
