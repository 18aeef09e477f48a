#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace graphvid {

struct BenchOptions {
  std::vector<int> superpixels{200, 400, 600, 800, 1000, 1200, 1400, 1600, 1800, 2000};
  int frames = 20;
  int repetitions = 3;
  int height = 224;
  int width = 224;
  std::uint64_t seed = 0;
};

struct BenchRow {
  int superpixels = 0;
  /// Whole pipeline per clip, in thread CPU seconds so that time spent
  /// descheduled by other processes is not counted.
  double mean_seconds = 0.0;
  double std_seconds = 0.0;
  double mean_wall_seconds = 0.0;
  double mean_segmentation_seconds = 0.0;
  double mean_graph_seconds = 0.0;
  int clips_measured = 0;
  double mean_nodes = 0.0;
};

/// Rows ascend by superpixel count.
struct BenchReport {
  std::vector<BenchRow> rows;
  std::string environment;
};

/// Times segmentation and graph construction separately on synthetic
/// clips. One warm-up pass is discarded; each repetition then segments
/// every frame at every S value in turn so slow drift affects all rows alike.
BenchReport run_bench(const BenchOptions& options);

std::string bench_to_json(const BenchReport& report);
std::string bench_to_csv(const BenchReport& report);

}  // namespace graphvid
