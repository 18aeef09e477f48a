#include "graphvid/augment.hpp"

#include <nlohmann/json.hpp>

#include "graphvid/error.hpp"

namespace graphvid {

namespace {

void require_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::InvalidArgument, std::string(name) + " must lie in [0,1]");
}

void require_sigma(double sigma, const char* name) {
  if (!(sigma >= 0.0)) throw Error(ErrorKind::InvalidArgument, std::string(name) + " must be >= 0");
}

}  // namespace

void AugmentConfig::validate() const {
  require_sigma(sigma_edge, "sigma_edge");
  require_sigma(sigma_node, "sigma_node");
  require_probability(p_edge, "p_edge");
  require_probability(p_node, "p_node");
}

void to_json(nlohmann::json& j, const AugmentConfig& config) {
  j = nlohmann::json{{"sigma_edge", config.sigma_edge},
                     {"sigma_node", config.sigma_node},
                     {"p_edge", config.p_edge},
                     {"p_node", config.p_node},
                     {"seed", config.seed}};
}

void from_json(const nlohmann::json& j, AugmentConfig& config) {
  AugmentConfig out;
  j.at("sigma_edge").get_to(out.sigma_edge);
  j.at("sigma_node").get_to(out.sigma_node);
  j.at("p_edge").get_to(out.p_edge);
  j.at("p_node").get_to(out.p_node);
  j.at("seed").get_to(out.seed);
  out.validate();
  config = out;
}

VideoGraph apply_agen(VideoGraph graph, double sigma_edge, Rng& rng) {
  require_sigma(sigma_edge, "sigma_edge");
  if (sigma_edge == 0.0) return graph;
  for (auto* edges : {&graph.spatial_edges, &graph.temporal_edges}) {
    for (auto& e : *edges) e.distance = static_cast<float>(e.distance + rng.normal(0.0, sigma_edge));
  }
  return graph;
}

VideoGraph apply_agnn(VideoGraph graph, double sigma_node, Rng& rng) {
  require_sigma(sigma_node, "sigma_node");
  if (sigma_node == 0.0) return graph;
  for (auto& node : graph.nodes) {
    for (auto& c : node.color) c = static_cast<float>(c + rng.normal(0.0, sigma_node));
  }
  return graph;
}

VideoGraph apply_rrse(VideoGraph graph, double p_edge, Rng& rng) {
  require_probability(p_edge, "p_edge");
  if (p_edge == 1.0) return graph;
  std::vector<Edge> kept;
  kept.reserve(graph.spatial_edges.size());
  for (const auto& e : graph.spatial_edges) {
    if (rng.bernoulli(p_edge)) kept.push_back(e);
  }
  graph.spatial_edges = std::move(kept);
  return graph;
}

NodeRemoval apply_rrs(VideoGraph graph, double p_node, Rng& rng) {
  require_probability(p_node, "p_node");
  NodeRemoval out;
  out.remap.assign(graph.nodes.size(), -1);
  if (p_node == 1.0) {
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) out.remap[i] = static_cast<std::int64_t>(i);
    out.graph = std::move(graph);
    return out;
  }

  std::vector<Node> nodes;
  nodes.reserve(graph.nodes.size());
  for (const auto& node : graph.nodes) {
    if (!rng.bernoulli(p_node)) continue;
    out.remap[node.id] = static_cast<std::int64_t>(nodes.size());
    Node kept = node;
    kept.id = static_cast<std::uint32_t>(nodes.size());
    nodes.push_back(kept);
  }
  auto filter = [&](const std::vector<Edge>& edges) {
    std::vector<Edge> result;
    for (const auto& e : edges) {
      const auto s = out.remap[e.source], t = out.remap[e.target];
      if (s < 0 || t < 0) continue;
      result.push_back({static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(t), e.relation, e.distance});
    }
    return result;
  };
  out.graph.frame_count = graph.frame_count;
  out.graph.spatial_edges = filter(graph.spatial_edges);
  out.graph.temporal_edges = filter(graph.temporal_edges);
  out.graph.nodes = std::move(nodes);
  return out;
}

VideoGraph augment(const VideoGraph& graph, const AugmentConfig& config) {
  config.validate();
  Rng rng(config.seed);
  VideoGraph g = apply_rrs(graph, config.p_node, rng).graph;
  g = apply_rrse(std::move(g), config.p_edge, rng);
  g = apply_agen(std::move(g), config.sigma_edge, rng);
  return apply_agnn(std::move(g), config.sigma_node, rng);
}

}  // namespace graphvid
