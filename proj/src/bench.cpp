#include "graphvid/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include <time.h>

#include <nlohmann/json.hpp>

#include "graphvid/error.hpp"
#include "graphvid/graph.hpp"
#include "graphvid/synthetic.hpp"

namespace graphvid {

namespace {

struct Sample {
  double segmentation = 0.0;
  double graph = 0.0;
  double wall = 0.0;
  std::size_t nodes = 0;
};

double thread_cpu_seconds() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

// One repetition over every S value. Frames are segmented round-robin across
// the S values, so a slow spell on a shared machine lands on all rows alike
// instead of on whichever clip happened to be running.
std::vector<Sample> time_round(const std::vector<Frame>& frames, const std::vector<int>& sizes) {
  using clock = std::chrono::steady_clock;
  std::vector<Sample> samples(sizes.size());
  std::vector<std::vector<Segmentation>> segs(sizes.size());
  std::vector<SlicConfig> configs(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) configs[i].target_superpixels = sizes[i];
  for (std::size_t t = 0; t < frames.size(); ++t) {
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      const auto w0 = clock::now();
      const double t0 = thread_cpu_seconds();
      segs[i].push_back(segment(frames[t], configs[i], static_cast<int>(t)));
      samples[i].segmentation += thread_cpu_seconds() - t0;
      samples[i].wall += std::chrono::duration<double>(clock::now() - w0).count();
    }
  }
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const auto w0 = clock::now();
    const double t0 = thread_cpu_seconds();
    const VideoGraph graph = assemble_video_graph(segs[i], BuilderConfig::defaults_for(sizes[i]));
    samples[i].graph = thread_cpu_seconds() - t0;
    samples[i].wall += std::chrono::duration<double>(clock::now() - w0).count();
    samples[i].nodes = graph.nodes.size();
  }
  return samples;
}

}  // namespace

BenchReport run_bench(const BenchOptions& options) {
  if (options.superpixels.empty() || options.frames < 1 || options.repetitions < 1) {
    throw Error(ErrorKind::InvalidArgument, "bench needs superpixel counts, frames >= 1 and repetitions >= 1");
  }
  std::vector<int> sizes = options.superpixels;
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  for (int s : sizes) {
    if (s < 1 || static_cast<long>(s) > static_cast<long>(options.height) * options.width) {
      throw Error(ErrorKind::InvalidArgument, "superpixel count " + std::to_string(s) + " out of range");
    }
  }

  const auto frames = synthetic::drifting_blobs(options.frames, options.height, options.width, options.seed);
  time_round(frames, sizes);  // warm-up

  std::vector<std::vector<Sample>> samples(sizes.size());
  for (int rep = 0; rep < options.repetitions; ++rep) {
    const auto round = time_round(frames, sizes);
    for (std::size_t i = 0; i < sizes.size(); ++i) samples[i].push_back(round[i]);
  }

  BenchReport report;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    BenchRow row;
    row.superpixels = sizes[i];
    row.clips_measured = static_cast<int>(samples[i].size());
    double sum = 0.0;
    for (const auto& s : samples[i]) {
      sum += s.segmentation + s.graph;
      row.mean_segmentation_seconds += s.segmentation;
      row.mean_graph_seconds += s.graph;
      row.mean_wall_seconds += s.wall;
      row.mean_nodes += static_cast<double>(s.nodes);
    }
    const double n = static_cast<double>(samples[i].size());
    row.mean_seconds = sum / n;
    row.mean_segmentation_seconds /= n;
    row.mean_graph_seconds /= n;
    row.mean_wall_seconds /= n;
    row.mean_nodes /= n;
    double var = 0.0;
    for (const auto& s : samples[i]) var += std::pow(s.segmentation + s.graph - row.mean_seconds, 2);
    row.std_seconds = samples[i].size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    report.rows.push_back(row);
  }
  std::ostringstream env;
  env << "synthetic drifting-blob clips " << options.frames << "x" << options.height << "x" << options.width
      << ", seed " << options.seed << ", single-threaded, thread CPU time, hardware threads " << std::thread::hardware_concurrency();
  report.environment = env.str();
  return report;
}

std::string bench_to_json(const BenchReport& report) {
  nlohmann::json j;
  j["environment"] = report.environment;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : report.rows) {
    j["rows"].push_back({{"superpixels", r.superpixels},
                         {"mean_seconds", r.mean_seconds},
                         {"std_seconds", r.std_seconds},
                         {"mean_segmentation_seconds", r.mean_segmentation_seconds},
                         {"mean_graph_seconds", r.mean_graph_seconds},
                         {"mean_wall_seconds", r.mean_wall_seconds},
                         {"clips_measured", r.clips_measured},
                         {"mean_nodes", r.mean_nodes}});
  }
  return j.dump(2);
}

std::string bench_to_csv(const BenchReport& report) {
  std::ostringstream out;
  out << "superpixels,mean_seconds,std_seconds,mean_segmentation_seconds,mean_graph_seconds,mean_wall_seconds,"
         "clips_measured,mean_nodes\n";
  for (const auto& r : report.rows) {
    out << r.superpixels << ',' << r.mean_seconds << ',' << r.std_seconds << ',' << r.mean_segmentation_seconds
        << ',' << r.mean_graph_seconds << ',' << r.mean_wall_seconds << ',' << r.clips_measured << ',' << r.mean_nodes << '\n';
  }
  return out.str();
}

}  // namespace graphvid
