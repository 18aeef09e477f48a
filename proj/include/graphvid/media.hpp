#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace graphvid {

/// One RGB frame, row-major and channel-interleaved, samples in [0,1].
struct Frame {
  int height = 0;
  int width = 0;
  std::vector<float> data;

  Frame() = default;
  Frame(int h, int w);
  Frame(int h, int w, std::vector<float> samples);

  std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }

  float at(int y, int x, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  float& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
};

/// Addresses frames start, start + stride, ... within one source video.
struct ClipSpec {
  std::size_t start_frame = 0;
  std::size_t frame_count = 0;
  std::size_t frame_stride = 1;
  std::string source_video_id;

  std::size_t frame_index(std::size_t k) const { return start_frame + k * frame_stride; }
  std::size_t last_frame() const { return frame_index(frame_count - 1); }
};

enum class FrameFormat { Ppm, RawRgb };

FrameFormat parse_frame_format(const std::string& name);

/// Decodes a binary P6 image with maxval 255.
Frame decode_ppm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_ppm(const Frame& frame);

Frame read_ppm(const std::filesystem::path& path);
void write_ppm(const Frame& frame, const std::filesystem::path& path);

/// For Ppm, `path` is a directory of .ppm files read in lexicographic order.
/// For RawRgb, `path` is either the .rgb data file or a directory holding
/// exactly one; the sidecar is the data path with ".json" appended
/// (clip.rgb -> clip.rgb.json) or, failing that, with the extension replaced.
std::vector<Frame> load_frame_sequence(const std::filesystem::path& path, FrameFormat format);

/// Writes frames as raw RGB24 plus its JSON sidecar.
void write_raw_rgb(const std::vector<Frame>& frames, const std::filesystem::path& data_path);

std::vector<ClipSpec> enumerate_clips(std::size_t total_frames, std::size_t window, std::size_t frame_stride,
                                      std::size_t clip_stride, const std::string& video_id = {});

/// Copies the frames a clip addresses out of the full sequence.
std::vector<Frame> gather_clip(const std::vector<Frame>& video, const ClipSpec& clip);

}  // namespace graphvid
