#include "graphvid/graph_store.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include <nlohmann/json.hpp>
#include <unistd.h>

#include "graphvid/error.hpp"

namespace graphvid {

namespace fs = std::filesystem;

namespace {

static_assert(std::numeric_limits<float>::is_iec559, "graph files store IEEE-754 binary32");

class Writer {
 public:
  explicit Writer(std::size_t reserve) { bytes_.reserve(reserve); }

  template <typename T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    bytes_.insert(bytes_.end(), raw, raw + sizeof(T));
  }

  void put_index(std::uint32_t value, std::uint8_t width) {
    if (width == 2) {
      put(static_cast<std::uint16_t>(value));
    } else {
      put(value);
    }
  }

  void put_raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }

  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, raw, sizeof(T));
    return value;
  }

  std::uint32_t get_index(std::uint8_t width) { return width == 2 ? get<std::uint16_t>() : get<std::uint32_t>(); }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw Error(ErrorKind::Format, "truncated graph file");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::size_t edge_record_size(std::uint8_t index_width) { return 2 * index_width + 4; }

}  // namespace

std::uint8_t select_index_width(std::size_t node_count) { return node_count < 65536 ? 2 : 4; }

std::vector<std::uint8_t> serialize_graph(const VideoGraph& graph) {
  if (graph.nodes.size() > std::numeric_limits<std::uint32_t>::max() ||
      graph.spatial_edges.size() > std::numeric_limits<std::uint32_t>::max() ||
      graph.temporal_edges.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorKind::InvalidArgument, "graph too large for the file format");
  }
  const std::uint8_t width = select_index_width(graph.nodes.size());
  Writer w(GraphFileHeader::kSize + graph.nodes.size() * kNodeRecordSize +
           graph.edge_count() * edge_record_size(width));
  w.put_raw(GraphFileHeader::kMagic, 4);
  w.put(static_cast<std::uint32_t>(graph.nodes.size()));
  w.put(static_cast<std::uint32_t>(graph.spatial_edges.size()));
  w.put(static_cast<std::uint32_t>(graph.temporal_edges.size()));
  w.put(graph.frame_count);
  w.put(width);
  w.put(std::uint8_t{0});
  for (const auto& node : graph.nodes) {
    w.put(node.frame_index);
    w.put(node.norm_y);
    w.put(node.norm_x);
    for (float c : node.color) w.put(c);
  }
  for (const auto* edges : {&graph.spatial_edges, &graph.temporal_edges}) {
    for (const auto& e : *edges) {
      w.put_index(e.source, width);
      w.put_index(e.target, width);
      w.put(e.distance);
    }
  }
  return w.take();
}

GraphFileHeader read_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), GraphFileHeader::kMagic, 4) != 0) {
    throw Error(ErrorKind::Format, "not a graph file");
  }
  Reader r(bytes.subspan(4));
  GraphFileHeader h;
  h.node_count = r.get<std::uint32_t>();
  h.spatial_edge_count = r.get<std::uint32_t>();
  h.temporal_edge_count = r.get<std::uint32_t>();
  h.frame_count = r.get<std::uint16_t>();
  h.index_width = r.get<std::uint8_t>();
  h.flags = r.get<std::uint8_t>();
  if (h.index_width != 2 && h.index_width != 4) throw Error(ErrorKind::Format, "bad index width");
  if (h.index_width == 2 && h.node_count >= 65536) {
    throw Error(ErrorKind::Format, "16-bit indices with more than 65535 nodes");
  }
  return h;
}

VideoGraph deserialize_graph(std::span<const std::uint8_t> bytes) {
  const GraphFileHeader h = read_header(bytes);
  const std::uint64_t expected = GraphFileHeader::kSize + std::uint64_t{h.node_count} * kNodeRecordSize +
                                 (std::uint64_t{h.spatial_edge_count} + h.temporal_edge_count) *
                                     edge_record_size(h.index_width);
  if (bytes.size() < expected) throw Error(ErrorKind::Format, "truncated graph file");
  if (bytes.size() > expected) throw Error(ErrorKind::Format, "trailing bytes after graph tables");

  Reader r(bytes.subspan(GraphFileHeader::kSize));
  VideoGraph g;
  g.frame_count = h.frame_count;
  g.nodes.resize(h.node_count);
  for (std::uint32_t i = 0; i < h.node_count; ++i) {
    Node& node = g.nodes[i];
    node.id = i;
    node.frame_index = r.get<std::uint16_t>();
    node.norm_y = r.get<float>();
    node.norm_x = r.get<float>();
    for (float& c : node.color) c = r.get<float>();
    if (node.frame_index >= h.frame_count) {
      throw Error(ErrorKind::Format, "node " + std::to_string(i) + " frame index out of range");
    }
  }
  auto read_edges = [&](std::uint32_t count, Relation relation, std::vector<Edge>& out) {
    out.resize(count);
    for (auto& e : out) {
      e.source = r.get_index(h.index_width);
      e.target = r.get_index(h.index_width);
      e.distance = r.get<float>();
      e.relation = relation;
      if (e.source >= h.node_count || e.target >= h.node_count) {
        throw Error(ErrorKind::Format, "edge index out of bounds (node_count " + std::to_string(h.node_count) + ")");
      }
    }
  };
  read_edges(h.spatial_edge_count, Relation::Spatial, g.spatial_edges);
  read_edges(h.temporal_edge_count, Relation::Temporal, g.temporal_edges);
  return g;
}

void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes) {
  static std::atomic<unsigned> counter{0};
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::Io, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorKind::Io, "cannot rename into " + path.string() + ": " + ec.message());
  }
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::size_t write_graph(const VideoGraph& graph, const fs::path& path) {
  const auto bytes = serialize_graph(graph);
  write_file_atomic(path, bytes);
  return bytes.size();
}

VideoGraph read_graph(const fs::path& path) {
  const auto bytes = read_file(path);
  try {
    return deserialize_graph(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

std::string graph_to_json(const VideoGraph& graph, int indent) {
  nlohmann::json j;
  j["frame_count"] = graph.frame_count;
  auto& nodes = j["nodes"] = nlohmann::json::array();
  for (const auto& n : graph.nodes) {
    nodes.push_back({{"id", n.id},
                     {"frame", n.frame_index},
                     {"y", n.norm_y},
                     {"x", n.norm_x},
                     {"color", {n.color[0], n.color[1], n.color[2]}}});
  }
  auto dump_edges = [](const std::vector<Edge>& edges) {
    auto arr = nlohmann::json::array();
    for (const auto& e : edges) arr.push_back({e.source, e.target, e.distance});
    return arr;
  };
  j["spatial_edges"] = dump_edges(graph.spatial_edges);
  j["temporal_edges"] = dump_edges(graph.temporal_edges);
  return j.dump(indent);
}

}  // namespace graphvid
