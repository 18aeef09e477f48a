#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "graphvid/graph.hpp"

namespace graphvid {

/// Little-endian file layout:
///
///   header (20 bytes)
///     magic               4  "GVG1"
///     node_count          u32
///     spatial_edge_count  u32
///     temporal_edge_count u32
///     frame_count         u16
///     index_width         u8   2 or 4
///     flags               u8   reserved, 0
///   node table     frame_index u16, norm_y f32, norm_x f32, color 3 x f32
///   spatial edges  source, target (index_width bytes each), distance f32
///   temporal edges same as spatial
struct GraphFileHeader {
  static constexpr std::size_t kSize = 20;
  static constexpr char kMagic[4] = {'G', 'V', 'G', '1'};

  std::uint32_t node_count = 0;
  std::uint32_t spatial_edge_count = 0;
  std::uint32_t temporal_edge_count = 0;
  std::uint16_t frame_count = 0;
  std::uint8_t index_width = 2;
  std::uint8_t flags = 0;
};

constexpr std::size_t kNodeRecordSize = 2 + 4 * 5;

/// 2 when every node id fits in 16 bits, else 4.
std::uint8_t select_index_width(std::size_t node_count);

std::vector<std::uint8_t> serialize_graph(const VideoGraph& graph);
VideoGraph deserialize_graph(std::span<const std::uint8_t> bytes);
GraphFileHeader read_header(std::span<const std::uint8_t> bytes);

/// Writes via a temporary sibling and rename. Returns the byte count.
std::size_t write_graph(const VideoGraph& graph, const std::filesystem::path& path);
VideoGraph read_graph(const std::filesystem::path& path);

/// Human-readable dump; float values are printed, so it is lossy.
std::string graph_to_json(const VideoGraph& graph, int indent = 2);

/// Atomic byte write (temp file + rename).
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace graphvid
