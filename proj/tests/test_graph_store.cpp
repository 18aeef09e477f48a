#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "graphvid/error.hpp"
#include "graphvid/graph_store.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace graphvid;

namespace {

// Hand encoder for the documented little-endian layout.
struct ByteWriter {
  std::vector<std::uint8_t> bytes;
  void uint(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { uint(std::bit_cast<std::uint32_t>(v), 4); }
};

std::vector<std::uint8_t> reference_encoding(const VideoGraph& g, int width) {
  ByteWriter w;
  for (char c : {'G', 'V', 'G', '1'}) w.bytes.push_back(static_cast<std::uint8_t>(c));
  w.uint(g.nodes.size(), 4);
  w.uint(g.spatial_edges.size(), 4);
  w.uint(g.temporal_edges.size(), 4);
  w.uint(g.frame_count, 2);
  w.uint(width, 1);
  w.uint(0, 1);
  for (const auto& n : g.nodes) {
    w.uint(n.frame_index, 2);
    w.f32(n.norm_y);
    w.f32(n.norm_x);
    for (float c : n.color) w.f32(c);
  }
  for (const auto* edges : {&g.spatial_edges, &g.temporal_edges}) {
    for (const auto& e : *edges) {
      w.uint(e.source, width);
      w.uint(e.target, width);
      w.f32(e.distance);
    }
  }
  return w.bytes;
}

std::string format_error(const std::vector<std::uint8_t>& bytes) {
  try {
    deserialize_graph(bytes);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Format);
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("graph_store") {
  TEST_CASE("empty graph is a bare header") {
    const auto bytes = serialize_graph(VideoGraph{});
    CHECK(bytes.size() == GraphFileHeader::kSize);
    CHECK(bytes.size() == 20);
    CHECK(deserialize_graph(bytes) == VideoGraph{});
    testing::TempDir dir;
    CHECK(write_graph(VideoGraph{}, dir / "e.gvg") == 20);
    CHECK(std::filesystem::file_size(dir / "e.gvg") == 20);
  }

  TEST_CASE("index width threshold") {
    CHECK(select_index_width(0) == 2);
    CHECK(select_index_width(65535) == 2);
    CHECK(select_index_width(65536) == 4);
    CHECK(select_index_width(70000) == 4);
  }

  TEST_CASE("serialization matches a hand encoding of the layout") {
    Rng rng(2);
    const auto g = oracle::random_graph(rng, 3, 7);
    const auto bytes = serialize_graph(g);
    CHECK(bytes == reference_encoding(g, 2));
    CHECK(bytes.size() == 20 + 22 * g.nodes.size() + 8 * g.edge_count());
    const auto header = read_header(bytes);
    CHECK(header.node_count == g.nodes.size());
    CHECK(header.spatial_edge_count == g.spatial_edges.size());
    CHECK(header.temporal_edge_count == g.temporal_edges.size());
    CHECK(header.frame_count == 3);
    CHECK(header.index_width == 2);
  }

  TEST_CASE("70,000 nodes use 32-bit indices and round-trip") {
    VideoGraph g;
    g.frame_count = 1;
    g.nodes.resize(70000);
    for (std::uint32_t i = 0; i < g.nodes.size(); ++i) {
      g.nodes[i].id = i;
      g.nodes[i].norm_y = static_cast<float>(i) / 70000.0f;
    }
    g.spatial_edges.push_back({1, 69999, Relation::Spatial, 0.25f});
    g.temporal_edges.push_back({0, 65536, Relation::Temporal, 0.125f});
    const auto bytes = serialize_graph(g);
    CHECK(read_header(bytes).index_width == 4);
    CHECK(bytes == reference_encoding(g, 4));
    CHECK(deserialize_graph(bytes) == g);
  }

  TEST_CASE("round trips are bit exact and byte identical") {
    testing::TempDir dir;
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
      auto g = oracle::random_graph(rng, 1 + trial % 5, 1 + trial * 3);
      // Noise-shifted values including negatives and tiny magnitudes.
      if (!g.nodes.empty()) g.nodes[0].color = {-0.25f, 1.5f, 1e-30f};
      if (!g.spatial_edges.empty()) g.spatial_edges[0].distance = -0.75f;
      const auto path = dir / ("g" + std::to_string(trial) + ".gvg");
      const auto written = write_graph(g, path);
      CHECK(written == std::filesystem::file_size(path));
      const auto back = read_graph(path);
      CHECK(back == g);
      write_graph(back, dir / "again.gvg");
      CHECK(read_file(path) == read_file(dir / "again.gvg"));
    }
  }

  TEST_CASE("corrupt magic") {
    auto bytes = serialize_graph(VideoGraph{});
    bytes[0] = 'X';
    CHECK(format_error(bytes).find("not a graph file") != std::string::npos);
  }

  TEST_CASE("edge referencing node_count is out of bounds") {
    VideoGraph g;
    g.frame_count = 1;
    g.nodes.resize(3);
    for (std::uint32_t i = 0; i < 3; ++i) g.nodes[i].id = i;
    g.spatial_edges.push_back({0, 2, Relation::Spatial, 0.1f});
    auto bytes = serialize_graph(g);
    const std::size_t target_offset = 20 + 3 * 22 + 2;
    bytes[target_offset] = 3;
    CHECK(format_error(bytes).find("out of bounds") != std::string::npos);
  }

  TEST_CASE("invalid header fields") {
    Rng rng(6);
    const auto g = oracle::random_graph(rng, 2, 3);
    auto bytes = serialize_graph(g);
    auto bad_width = bytes;
    bad_width[18] = 3;
    CHECK(!format_error(bad_width).empty());
    auto bad_frames = bytes;
    bad_frames[16] = 1;  // frame_count 1 while nodes sit in frame 1
    CHECK(format_error(bad_frames).find("frame index") != std::string::npos);
    auto trailing = bytes;
    trailing.push_back(0);
    CHECK(format_error(trailing).find("trailing") != std::string::npos);
  }

  TEST_CASE("every truncation is rejected") {
    Rng rng(9);
    const auto g = oracle::random_graph(rng, 3, 5);
    const auto bytes = serialize_graph(g);
    for (std::size_t n = 0; n < bytes.size(); ++n) {
      const std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + n);
      CHECK_THROWS_AS(deserialize_graph(cut), Error);
    }
  }

  TEST_CASE("random byte corruption never crashes") {
    Rng rng(10);
    const auto g = oracle::random_graph(rng, 3, 6);
    const auto bytes = serialize_graph(g);
    for (int trial = 0; trial < 2000; ++trial) {
      auto copy = bytes;
      const int flips = 1 + static_cast<int>(rng.next_u64() % 4);
      for (int f = 0; f < flips; ++f) copy[rng.next_u64() % copy.size()] = static_cast<std::uint8_t>(rng.next_u64());
      try {
        const auto parsed = deserialize_graph(copy);
        for (const auto* edges : {&parsed.spatial_edges, &parsed.temporal_edges}) {
          for (const auto& e : *edges) {
            CHECK(e.source < parsed.nodes.size());
            CHECK(e.target < parsed.nodes.size());
          }
        }
      } catch (const Error&) {
      }
    }
  }

  TEST_CASE("file level errors carry the path") {
    testing::TempDir dir;
    CHECK_THROWS_AS(read_graph(dir / "missing.gvg"), Error);
    std::ofstream(dir / "junk.gvg") << "hello";
    try {
      read_graph(dir / "junk.gvg");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("junk.gvg") != std::string::npos);
    }
  }

  TEST_CASE("atomic write leaves no temporary behind") {
    testing::TempDir dir;
    const std::vector<std::uint8_t> data{1, 2, 3};
    write_file_atomic(dir / "x.bin", data);
    write_file_atomic(dir / "x.bin", data);
    int entries = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++entries;
    CHECK(entries == 1);
    CHECK(read_file(dir / "x.bin") == data);
  }

  TEST_CASE("JSON export lists every node and edge") {
    Rng rng(3);
    const auto g = oracle::random_graph(rng, 2, 4);
    const auto text = graph_to_json(g);
    const auto j = nlohmann::json::parse(text);
    CHECK(j.at("nodes").size() == g.nodes.size());
    CHECK(j.dump().find("temporal") != std::string::npos);
  }
}
