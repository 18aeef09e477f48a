#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "graphvid/media.hpp"
#include "graphvid/slic.hpp"

namespace graphvid {

enum class Relation : std::uint8_t { Spatial = 0, Temporal = 1 };

struct Node {
  std::uint32_t id = 0;
  std::uint16_t frame_index = 0;
  float norm_y = 0.0f;  // centroid_y / H
  float norm_x = 0.0f;  // centroid_x / W
  std::array<float, 3> color{};

  friend bool operator==(const Node&, const Node&) = default;
};

struct Edge {
  std::uint32_t source = 0;
  std::uint32_t target = 0;
  Relation relation = Relation::Spatial;
  float distance = 0.0f;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Superpixel nodes with spatial (intra-frame, undirected, stored low->high
/// id) and temporal (frame t -> t+1) edges.
struct VideoGraph {
  std::vector<Node> nodes;
  std::vector<Edge> spatial_edges;
  std::vector<Edge> temporal_edges;
  std::uint16_t frame_count = 0;

  std::size_t edge_count() const { return spatial_edges.size() + temporal_edges.size(); }
  bool empty() const { return nodes.empty(); }

  friend bool operator==(const VideoGraph&, const VideoGraph&) = default;
};

struct BuilderConfig {
  /// Radius of the temporal candidate ball in normalized coordinates.
  double d_proximity = 0.0;

  void validate() const;
  /// 2 / sqrt(S): about one superpixel diameter.
  static BuilderConfig defaults_for(int target_superpixels);
};

/// Normalized Euclidean distance between two centroids given in pixels.
double centroid_distance(double ay, double ax, double by, double bx, int height, int width);
double centroid_distance(const Superpixel& a, const Superpixel& b, int height, int width);
/// Same distance on normalized node coordinates.
double centroid_distance(const Node& a, const Node& b);

/// Nodes for one frame; ids start at `first_id` in region order.
std::vector<Node> make_nodes(const Segmentation& segmentation, std::uint32_t first_id, std::uint16_t frame_index);

/// Region-adjacency edges under 4-connectivity, one per unordered pair,
/// sorted by (source, target).
std::vector<Edge> build_spatial_edges(const Segmentation& segmentation, const std::vector<Node>& nodes);

/// For each node of frame t, one edge to the most color-similar node of
/// frame t+1 among those strictly closer than d_proximity. Ties on color
/// distance go to the smaller centroid distance, then the lower id.
std::vector<Edge> build_temporal_edges(const std::vector<Node>& frame_t, const std::vector<Node>& frame_t1,
                                       double d_proximity);

/// Assembles the graph from already segmented frames.
VideoGraph assemble_video_graph(const std::vector<Segmentation>& segmentations, const BuilderConfig& builder);

/// Segments every frame and builds the graph. `jobs` > 1 segments frames
/// concurrently; the result does not depend on it.
VideoGraph build_video_graph(const std::vector<Frame>& frames, const SlicConfig& slic, const BuilderConfig& builder,
                             unsigned jobs = 1);

struct RepresentationSize {
  std::uint64_t edge_values = 0;  // 3 per edge: distance, source, target
  std::uint64_t node_values = 0;  // 3 color + 2 centroid per node
  std::uint64_t total() const { return edge_values + node_values; }
};

RepresentationSize representation_size(const VideoGraph& graph);

struct CompressionReport {
  RepresentationSize graph;
  std::uint64_t pixel_values = 0;  // T * C * H * W
  double ratio = 0.0;              // pixel_values / graph values
};

CompressionReport compression_report(const VideoGraph& graph, int height, int width, int channels = 3);

/// 3 * (4S + (T-1)S) + C*T*S, the closed-form value budget for a clip.
std::uint64_t closed_form_value_budget(std::uint64_t superpixels, std::uint64_t frames, std::uint64_t channels = 3);

}  // namespace graphvid
