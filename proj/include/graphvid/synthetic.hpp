#pragma once

#include <cstdint>
#include <vector>

#include "graphvid/media.hpp"
#include "graphvid/rng.hpp"

namespace graphvid::synthetic {

enum class Shape { Square = 0, Circle = 1 };

struct MotionClipOptions {
  int frames = 6;
  int height = 32;
  int width = 32;
  /// Square side, and circle diameter.
  double shape_size = 12.0;
  /// Pixels per frame; direction is drawn uniformly.
  double speed = 2.0;
};

/// A single shape of one color moving in a straight line (reflecting off the
/// borders) over a plain background. Colors and positions come from `rng`.
std::vector<Frame> moving_shape_clip(Shape shape, const MotionClipOptions& options, Rng& rng);

/// Smooth drifting color blobs plus mild pixel noise; a stand-in for natural
/// footage when timing or sizing the pipeline.
std::vector<Frame> drifting_blobs(int frames, int height, int width, std::uint64_t seed, int blob_count = 24);

}  // namespace graphvid::synthetic
