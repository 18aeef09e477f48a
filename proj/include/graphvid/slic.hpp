#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "graphvid/media.hpp"

namespace graphvid {

struct SlicConfig {
  int target_superpixels = 800;
  double compactness = 10.0;
  int iterations = 10;
  /// Components smaller than this fraction of the grid-cell area are merged away.
  double min_region_fraction = 0.25;

  void validate() const;
};

struct Superpixel {
  int frame_index = 0;
  int region_index = 0;
  double centroid_y = 0.0;  // pixel center of mass
  double centroid_x = 0.0;
  std::array<double, 3> mean_color{};
  std::int64_t pixel_count = 0;
};

struct Segmentation {
  int height = 0;
  int width = 0;
  std::vector<std::int32_t> labels;  // row-major, dense in [0, regions.size())
  std::vector<Superpixel> regions;

  std::int32_t label_at(int y, int x) const { return labels[static_cast<std::size_t>(y) * width + x]; }
};

/// Per-iteration k-means objective: sum over pixels of the squared joint
/// color/space distance to the assigned center, measured after each
/// assignment step.
struct SlicTrace {
  std::vector<double> residuals;
};

/// SLIC over CIELAB color. Deterministic: seeds sit on a regular grid and
/// move to the lowest-gradient pixel of their 3x3 neighborhood.
Segmentation segment(const Frame& frame, const SlicConfig& config, int frame_index = 0, SlicTrace* trace = nullptr);

/// Per-region arithmetic mean of RGB values.
std::vector<std::array<double, 3>> mean_colors(const Segmentation& segmentation, const Frame& frame);

/// Recomputes centroids, colors and counts from a label map. Labels must be
/// dense in [0, max_label] with every label present.
Segmentation segmentation_from_labels(int height, int width, std::vector<std::int32_t> labels, const Frame& frame,
                                      int frame_index = 0);

/// Seed grid (rows, cols) used for a frame of the given size.
std::array<int, 2> seed_grid(int height, int width, int target_superpixels);

/// 16-bit binary PGM of the label map.
void write_label_pgm(const Segmentation& segmentation, const std::filesystem::path& path);

}  // namespace graphvid
