#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "graphvid/augment.hpp"
#include "graphvid/bench.hpp"
#include "graphvid/media.hpp"

namespace graphvid::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,         // reserved for argument parsing
  kPrecondition = 3,  // invalid argument or precondition violation
  kDataError = 4,     // malformed input files, manifest/label mismatches
  kIoError = 5,
  kNumericError = 6,
};

struct BuildOptions {
  std::filesystem::path input;
  std::filesystem::path output;
  FrameFormat format = FrameFormat::Ppm;
  int superpixels = 800;
  std::optional<double> d_proximity;  // default 2 / sqrt(superpixels)
  double compactness = 10.0;
  int iterations = 10;
  std::size_t window = 20;
  std::size_t frame_stride = 2;
  std::size_t clip_stride = 10;
  unsigned jobs = 1;
  /// Video-level labels (CSV video,label). When set, a clip manifest is written.
  std::optional<std::filesystem::path> labels;
  /// Defaults to $GRAPHVID_CACHE_DIR.
  std::optional<std::filesystem::path> cache_dir;
  bool json_debug = false;
};

struct AugmentOptions {
  std::filesystem::path input;
  std::filesystem::path output;
  AugmentConfig config;
  std::optional<std::filesystem::path> config_file;
  bool json_debug = false;
};

struct TrainCommandOptions {
  std::filesystem::path manifest;
  std::filesystem::path output;
  int epochs = 10;
  std::size_t batch_size = 200;
  double lr = 1e-3;
  AugmentConfig augmentation;
  bool augment = true;
  std::uint64_t seed = 0;
  int embed_dim = 256;
  int hidden_dim = 512;
  int gnn_layers = 4;
  double dropout = 0.2;
  int num_classes = 0;  // 0 = max label + 1
};

struct InferOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path manifest;
  std::size_t views = 8;
};

struct BenchCommandOptions {
  BenchOptions bench;
  std::optional<std::filesystem::path> json_out;
  std::optional<std::filesystem::path> csv_out;
};

struct StatsOptions {
  std::vector<std::filesystem::path> graphs;
  int height = 224;
  int width = 224;
};

struct SynthOptions {
  std::filesystem::path output;
  int videos = 10;
  int frames = 20;
  int height = 48;
  int width = 48;
  std::uint64_t seed = 0;
};

/// One row of a training/inference manifest (CSV: file,label).
struct ManifestEntry {
  std::filesystem::path file;
  int label = 0;
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

/// Splits "<video>_<start>.gvg" into its parts.
std::optional<std::pair<std::string, std::size_t>> parse_clip_name(const std::filesystem::path& file);

int cmd_build(const BuildOptions& options, std::ostream& out, std::ostream& err);
int cmd_augment(const AugmentOptions& options, std::ostream& out, std::ostream& err);
int cmd_train(const TrainCommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_infer(const InferOptions& options, std::ostream& out, std::ostream& err);
int cmd_bench(const BenchCommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_stats(const StatsOptions& options, std::ostream& out, std::ostream& err);
/// Moving square / circle videos as PPM directories plus labels.csv.
int cmd_synth(const SynthOptions& options, std::ostream& out, std::ostream& err);

}  // namespace graphvid::cli
