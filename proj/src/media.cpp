#include "graphvid/media.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "graphvid/error.hpp"

namespace graphvid {

namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "short write to " + path.string());
}

std::uint8_t quantize(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

// Header tokenizer for P6: whitespace separated, '#' comments to end of line.
class PpmHeaderReader {
 public:
  explicit PpmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::string token() {
    skip_space_and_comments();
    std::string out;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]) && bytes_[pos_] != '#') {
      out.push_back(static_cast<char>(bytes_[pos_++]));
    }
    if (out.empty()) throw Error(ErrorKind::Format, "truncated PPM header");
    return out;
  }

  long number() {
    const std::string t = token();
    if (!std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }) ||
        t.size() > 9) {
      throw Error(ErrorKind::Format, "bad PPM header field '" + t + "'");
    }
    return std::stol(t);
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw Error(ErrorKind::Format, "truncated PPM header");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

fs::path sidecar_for(const fs::path& data_path) {
  fs::path appended = data_path;
  appended += ".json";
  if (fs::exists(appended)) return appended;
  fs::path replaced = data_path;
  replaced.replace_extension(".json");
  if (fs::exists(replaced)) return replaced;
  throw Error(ErrorKind::Format, "missing sidecar for " + data_path.string());
}

}  // namespace

Frame::Frame(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3, 0.0f) {
  if (h < 1 || w < 1) throw Error(ErrorKind::InvalidArgument, "frame dimensions must be positive");
}

Frame::Frame(int h, int w, std::vector<float> samples) : height(h), width(w), data(std::move(samples)) {
  if (h < 1 || w < 1) throw Error(ErrorKind::InvalidArgument, "frame dimensions must be positive");
  if (data.size() != static_cast<std::size_t>(h) * w * 3) {
    throw Error(ErrorKind::InvalidArgument, "frame sample count does not match dimensions");
  }
}

FrameFormat parse_frame_format(const std::string& name) {
  if (name == "ppm") return FrameFormat::Ppm;
  if (name == "raw_rgb") return FrameFormat::RawRgb;
  throw Error(ErrorKind::InvalidArgument, "unknown frame format '" + name + "'");
}

Frame decode_ppm(std::span<const std::uint8_t> bytes) {
  PpmHeaderReader header(bytes);
  if (header.token() != "P6") throw Error(ErrorKind::Format, "not a binary P6 PPM");
  const long width = header.number();
  const long height = header.number();
  const long maxval = header.number();
  if (maxval != 255) throw Error(ErrorKind::Format, "unsupported maxval " + std::to_string(maxval));
  if (width < 1 || height < 1) throw Error(ErrorKind::Format, "PPM dimensions must be positive");
  const std::size_t offset = header.raster_offset();
  const std::size_t expected = static_cast<std::size_t>(width) * height * 3;
  if (bytes.size() - offset < expected) throw Error(ErrorKind::Format, "truncated PPM raster");

  Frame frame(static_cast<int>(height), static_cast<int>(width));
  for (std::size_t i = 0; i < expected; ++i) frame.data[i] = bytes[offset + i] / 255.0f;
  return frame;
}

std::vector<std::uint8_t> encode_ppm(const Frame& frame) {
  const std::string header =
      "P6\n" + std::to_string(frame.width) + " " + std::to_string(frame.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + frame.data.size());
  for (float v : frame.data) out.push_back(quantize(v));
  return out;
}

Frame read_ppm(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_ppm(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void write_ppm(const Frame& frame, const fs::path& path) { write_file_bytes(path, encode_ppm(frame)); }

std::vector<Frame> load_frame_sequence(const fs::path& path, FrameFormat format) {
  if (!fs::exists(path)) throw Error(ErrorKind::Io, "no such path " + path.string());

  if (format == FrameFormat::Ppm) {
    if (!fs::is_directory(path)) throw Error(ErrorKind::InvalidArgument, path.string() + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".ppm") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    std::vector<Frame> frames;
    frames.reserve(files.size());
    for (const auto& file : files) {
      frames.push_back(read_ppm(file));
      if (frames.back().height != frames.front().height || frames.back().width != frames.front().width) {
        throw Error(ErrorKind::Format, "inconsistent frame dimensions at " + file.string());
      }
    }
    return frames;
  }

  fs::path data_path = path;
  if (fs::is_directory(path)) {
    std::vector<fs::path> candidates;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".rgb") candidates.push_back(entry.path());
    }
    if (candidates.size() != 1) {
      throw Error(ErrorKind::InvalidArgument, path.string() + " must contain exactly one .rgb file");
    }
    data_path = candidates.front();
  }

  nlohmann::json sidecar;
  const fs::path sidecar_path = sidecar_for(data_path);
  try {
    std::ifstream in(sidecar_path);
    sidecar = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Format, sidecar_path.string() + ": " + e.what());
  }
  long height = 0, width = 0, count = 0;
  try {
    height = sidecar.at("height").get<long>();
    width = sidecar.at("width").get<long>();
    count = sidecar.at("frames").get<long>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Format, sidecar_path.string() + ": " + e.what());
  }
  if (height < 1 || width < 1 || count < 0) throw Error(ErrorKind::Format, "sidecar dimensions must be positive");

  const auto bytes = read_file_bytes(data_path);
  const std::size_t frame_bytes = static_cast<std::size_t>(height) * width * 3;
  if (bytes.size() != frame_bytes * count) {
    throw Error(ErrorKind::Format, "raw_rgb length " + std::to_string(bytes.size()) + " does not match sidecar (" +
                                       std::to_string(frame_bytes * count) + " expected): truncated file");
  }
  std::vector<Frame> frames;
  frames.reserve(count);
  for (long f = 0; f < count; ++f) {
    Frame frame(static_cast<int>(height), static_cast<int>(width));
    const std::uint8_t* src = bytes.data() + f * frame_bytes;
    for (std::size_t i = 0; i < frame_bytes; ++i) frame.data[i] = src[i] / 255.0f;
    frames.push_back(std::move(frame));
  }
  return frames;
}

void write_raw_rgb(const std::vector<Frame>& frames, const fs::path& data_path) {
  std::vector<std::uint8_t> bytes;
  for (const auto& f : frames) {
    if (f.height != frames.front().height || f.width != frames.front().width) {
      throw Error(ErrorKind::InvalidArgument, "inconsistent frame dimensions");
    }
    for (float v : f.data) bytes.push_back(quantize(v));
  }
  write_file_bytes(data_path, bytes);
  nlohmann::json sidecar = {{"height", frames.empty() ? 0 : frames.front().height},
                            {"width", frames.empty() ? 0 : frames.front().width},
                            {"frames", frames.size()}};
  fs::path sidecar_path = data_path;
  sidecar_path += ".json";
  std::ofstream(sidecar_path) << sidecar.dump() << "\n";
}

std::vector<ClipSpec> enumerate_clips(std::size_t total_frames, std::size_t window, std::size_t frame_stride,
                                      std::size_t clip_stride, const std::string& video_id) {
  if (window < 1 || frame_stride < 1 || clip_stride < 1) {
    throw Error(ErrorKind::InvalidArgument, "clip window and strides must be >= 1");
  }
  std::vector<ClipSpec> clips;
  const std::size_t span = (window - 1) * frame_stride;
  for (std::size_t start = 0; start + span < total_frames; start += clip_stride) {
    clips.push_back(ClipSpec{start, window, frame_stride, video_id});
  }
  return clips;
}

std::vector<Frame> gather_clip(const std::vector<Frame>& video, const ClipSpec& clip) {
  if (clip.frame_count == 0 || clip.last_frame() >= video.size()) {
    throw Error(ErrorKind::InvalidArgument, "clip addresses frames outside the video");
  }
  std::vector<Frame> frames;
  frames.reserve(clip.frame_count);
  for (std::size_t k = 0; k < clip.frame_count; ++k) frames.push_back(video[clip.frame_index(k)]);
  return frames;
}

}  // namespace graphvid
