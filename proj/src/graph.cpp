#include "graphvid/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "graphvid/error.hpp"

namespace graphvid {

void BuilderConfig::validate() const {
  if (!(d_proximity > 0.0 && d_proximity <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "d_proximity must lie in (0,1]");
  }
}

BuilderConfig BuilderConfig::defaults_for(int target_superpixels) {
  return BuilderConfig{std::min(1.0, 2.0 / std::sqrt(static_cast<double>(std::max(target_superpixels, 1))))};
}

double centroid_distance(double ay, double ax, double by, double bx, int height, int width) {
  const double dy = (ay - by) / height;
  const double dx = (ax - bx) / width;
  return std::sqrt(dy * dy + dx * dx);
}

double centroid_distance(const Superpixel& a, const Superpixel& b, int height, int width) {
  return centroid_distance(a.centroid_y, a.centroid_x, b.centroid_y, b.centroid_x, height, width);
}

double centroid_distance(const Node& a, const Node& b) {
  const double dy = static_cast<double>(a.norm_y) - b.norm_y;
  const double dx = static_cast<double>(a.norm_x) - b.norm_x;
  return std::sqrt(dy * dy + dx * dx);
}

std::vector<Node> make_nodes(const Segmentation& segmentation, std::uint32_t first_id, std::uint16_t frame_index) {
  std::vector<Node> nodes;
  nodes.reserve(segmentation.regions.size());
  for (const auto& region : segmentation.regions) {
    Node node;
    node.id = first_id + static_cast<std::uint32_t>(nodes.size());
    node.frame_index = frame_index;
    node.norm_y = static_cast<float>(region.centroid_y / segmentation.height);
    node.norm_x = static_cast<float>(region.centroid_x / segmentation.width);
    for (int c = 0; c < 3; ++c) node.color[c] = static_cast<float>(region.mean_color[c]);
    nodes.push_back(node);
  }
  return nodes;
}

std::vector<Edge> build_spatial_edges(const Segmentation& segmentation, const std::vector<Node>& nodes) {
  if (nodes.size() != segmentation.regions.size()) {
    throw Error(ErrorKind::InvalidArgument, "node list does not match segmentation");
  }
  const int height = segmentation.height, width = segmentation.width;
  std::vector<std::uint64_t> pairs;
  auto note = [&](std::int32_t a, std::int32_t b) {
    if (a == b) return;
    const auto lo = static_cast<std::uint64_t>(std::min(a, b));
    const auto hi = static_cast<std::uint64_t>(std::max(a, b));
    pairs.push_back(lo << 32 | hi);
  };
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const auto here = segmentation.label_at(y, x);
      if (x + 1 < width) note(here, segmentation.label_at(y, x + 1));
      if (y + 1 < height) note(here, segmentation.label_at(y + 1, x));
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (auto key : pairs) {
    const Node& a = nodes[key >> 32];
    const Node& b = nodes[key & 0xffffffffu];
    edges.push_back({a.id, b.id, Relation::Spatial, static_cast<float>(centroid_distance(a, b))});
  }
  return edges;
}

std::vector<Edge> build_temporal_edges(const std::vector<Node>& frame_t, const std::vector<Node>& frame_t1,
                                       double d_proximity) {
  std::vector<Edge> edges;
  edges.reserve(frame_t.size());
  for (const Node& a : frame_t) {
    const Node* best = nullptr;
    double best_color = std::numeric_limits<double>::infinity();
    double best_dist = std::numeric_limits<double>::infinity();
    for (const Node& b : frame_t1) {
      const double dist = centroid_distance(a, b);
      if (!(dist < d_proximity)) continue;
      double color = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double d = static_cast<double>(a.color[c]) - b.color[c];
        color += d * d;
      }
      // frame_t1 is scanned in ascending id order, so strict comparison keeps the lower id.
      if (color < best_color || (color == best_color && dist < best_dist)) {
        best = &b;
        best_color = color;
        best_dist = dist;
      }
    }
    if (best) edges.push_back({a.id, best->id, Relation::Temporal, static_cast<float>(best_dist)});
  }
  return edges;
}

VideoGraph assemble_video_graph(const std::vector<Segmentation>& segmentations, const BuilderConfig& builder) {
  builder.validate();
  if (segmentations.empty()) throw Error(ErrorKind::InvalidArgument, "a video graph needs at least one frame");
  if (segmentations.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(ErrorKind::InvalidArgument, "too many frames for one graph");
  }
  VideoGraph graph;
  graph.frame_count = static_cast<std::uint16_t>(segmentations.size());
  std::vector<Node> previous;
  for (std::size_t t = 0; t < segmentations.size(); ++t) {
    auto nodes = make_nodes(segmentations[t], static_cast<std::uint32_t>(graph.nodes.size()),
                            static_cast<std::uint16_t>(t));
    auto spatial = build_spatial_edges(segmentations[t], nodes);
    graph.spatial_edges.insert(graph.spatial_edges.end(), spatial.begin(), spatial.end());
    if (t > 0) {
      auto temporal = build_temporal_edges(previous, nodes, builder.d_proximity);
      graph.temporal_edges.insert(graph.temporal_edges.end(), temporal.begin(), temporal.end());
    }
    graph.nodes.insert(graph.nodes.end(), nodes.begin(), nodes.end());
    previous = std::move(nodes);
  }
  return graph;
}

VideoGraph build_video_graph(const std::vector<Frame>& frames, const SlicConfig& slic, const BuilderConfig& builder,
                             unsigned jobs) {
  if (frames.empty()) throw Error(ErrorKind::InvalidArgument, "a video graph needs at least one frame");
  slic.validate();
  builder.validate();
  std::vector<Segmentation> segmentations(frames.size());
  jobs = std::clamp<unsigned>(jobs, 1, static_cast<unsigned>(frames.size()));
  if (jobs == 1) {
    for (std::size_t t = 0; t < frames.size(); ++t) segmentations[t] = segment(frames[t], slic, static_cast<int>(t));
  } else {
    std::vector<std::exception_ptr> failures(jobs);
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::size_t t = w; t < frames.size(); t += jobs) {
            segmentations[t] = segment(frames[t], slic, static_cast<int>(t));
          }
        } catch (...) {
          failures[w] = std::current_exception();
        }
      });
    }
    for (auto& worker : workers) worker.join();
    for (auto& failure : failures) {
      if (failure) std::rethrow_exception(failure);
    }
  }
  return assemble_video_graph(segmentations, builder);
}

RepresentationSize representation_size(const VideoGraph& graph) {
  return {3 * static_cast<std::uint64_t>(graph.edge_count()), 5 * static_cast<std::uint64_t>(graph.nodes.size())};
}

CompressionReport compression_report(const VideoGraph& graph, int height, int width, int channels) {
  CompressionReport report;
  report.graph = representation_size(graph);
  report.pixel_values = static_cast<std::uint64_t>(graph.frame_count) * channels * height * width;
  report.ratio = report.graph.total() == 0 ? 0.0
                                           : static_cast<double>(report.pixel_values) / report.graph.total();
  return report;
}

std::uint64_t closed_form_value_budget(std::uint64_t superpixels, std::uint64_t frames, std::uint64_t channels) {
  if (frames == 0) return 0;
  return 3 * (4 * superpixels + (frames - 1) * superpixels) + channels * frames * superpixels;
}

}  // namespace graphvid
