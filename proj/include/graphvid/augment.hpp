#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "graphvid/graph.hpp"
#include "graphvid/rng.hpp"

namespace graphvid {

/// Training-time graph augmentation parameters. Defaults are the tuned
/// values: sigma_edge 0.4, sigma_node 0.2, p_edge 1, p_node 0.8.
struct AugmentConfig {
  double sigma_edge = 0.4;
  double sigma_node = 0.2;
  double p_edge = 1.0;
  double p_node = 0.8;
  std::uint64_t seed = 0;

  void validate() const;

  /// No-op configuration.
  static AugmentConfig identity(std::uint64_t seed = 0) { return {0.0, 0.0, 1.0, 1.0, seed}; }
};

void to_json(nlohmann::json& j, const AugmentConfig& config);
void from_json(const nlohmann::json& j, AugmentConfig& config);

/// Adds N(0, sigma) to every edge attribute, spatial edges first.
VideoGraph apply_agen(VideoGraph graph, double sigma_edge, Rng& rng);

/// Adds N_3(0, sigma I) to every node color. Results are not clamped.
VideoGraph apply_agnn(VideoGraph graph, double sigma_node, Rng& rng);

/// Keeps each spatial edge with probability p_edge; temporal edges untouched.
VideoGraph apply_rrse(VideoGraph graph, double p_edge, Rng& rng);

struct NodeRemoval {
  VideoGraph graph;
  /// old id -> new id, or -1 when the node was dropped.
  std::vector<std::int64_t> remap;
};

/// Keeps each node with probability p_node, drops incident edges and
/// re-densifies ids in their original order.
NodeRemoval apply_rrs(VideoGraph graph, double p_node, Rng& rng);

/// RRS -> RRSE -> AGEN -> AGNN from a generator seeded with config.seed.
VideoGraph augment(const VideoGraph& graph, const AugmentConfig& config);

}  // namespace graphvid
