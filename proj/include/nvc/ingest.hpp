#pragma once

#include <string>

#include "nvc/frame.hpp"

namespace nvc {

enum class VideoFormat { Auto, Y4M, PngSequence, RawRgb };

// Loads a video. Auto picks Y4M for *.y4m, a PNG sequence for directories and
// raw planar RGB for *.rgb (extents taken from a "WxH" token in the file name,
// e.g. clip_64x48.rgb).
VideoSequence ingest(const std::string& path, VideoFormat format = VideoFormat::Auto);

VideoSequence read_y4m(const std::string& path);
VideoSequence parse_y4m(std::span<const std::uint8_t> bytes);
// Writes 4:2:0 (C420jpeg), full-range BT.601.
std::vector<std::uint8_t> encode_y4m(const VideoSequence& seq);
void write_y4m(const std::string& path, const VideoSequence& seq);

// Every *.png in `dir` whose name carries a frame number (last digit run);
// numbers must be contiguous.
VideoSequence read_png_sequence(const std::string& dir);
Frame read_png(const std::string& path);
void write_png(const std::string& path, const Frame& frame);
// Writes frame_0000.png, frame_0001.png, ... into dir (created if needed).
void write_png_sequence(const std::string& dir, const VideoSequence& seq);

VideoSequence read_raw_rgb(const std::string& path, int width, int height);
VideoSequence read_raw_rgb(const std::string& path);

}  // namespace nvc
