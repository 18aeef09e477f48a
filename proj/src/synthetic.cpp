#include "graphvid/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "graphvid/error.hpp"

namespace graphvid::synthetic {

namespace {

double reflect(double pos, double lo, double hi) {
  const double span = hi - lo;
  if (span <= 0.0) return lo;
  double t = std::fmod(pos - lo, 2.0 * span);
  if (t < 0.0) t += 2.0 * span;
  return lo + (t <= span ? t : 2.0 * span - t);
}

}  // namespace

std::vector<Frame> moving_shape_clip(Shape shape, const MotionClipOptions& o, Rng& rng) {
  if (o.frames < 1 || o.height < 1 || o.width < 1 || !(o.shape_size > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "invalid synthetic clip options");
  }
  std::array<float, 3> background{}, foreground{};
  for (int c = 0; c < 3; ++c) background[c] = static_cast<float>(0.1 + 0.3 * rng.uniform());
  for (int c = 0; c < 3; ++c) foreground[c] = static_cast<float>(0.6 + 0.4 * rng.uniform());

  const double half = o.shape_size / 2.0;
  const double lo_y = half, hi_y = o.height - half, lo_x = half, hi_x = o.width - half;
  const double y0 = lo_y + (hi_y - lo_y) * rng.uniform();
  const double x0 = lo_x + (hi_x - lo_x) * rng.uniform();
  const double angle = 2.0 * std::numbers::pi * rng.uniform();
  const double vy = o.speed * std::sin(angle), vx = o.speed * std::cos(angle);

  std::vector<Frame> frames;
  for (int t = 0; t < o.frames; ++t) {
    const double cy = reflect(y0 + vy * t, lo_y, hi_y);
    const double cx = reflect(x0 + vx * t, lo_x, hi_x);
    Frame frame(o.height, o.width);
    for (int y = 0; y < o.height; ++y) {
      for (int x = 0; x < o.width; ++x) {
        const double dy = y + 0.5 - cy, dx = x + 0.5 - cx;
        const bool inside = shape == Shape::Square ? (std::abs(dy) <= half && std::abs(dx) <= half)
                                                   : (dy * dy + dx * dx <= half * half);
        for (int c = 0; c < 3; ++c) frame.at(y, x, c) = inside ? foreground[c] : background[c];
      }
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

std::vector<Frame> drifting_blobs(int frames, int height, int width, std::uint64_t seed, int blob_count) {
  if (frames < 1 || height < 1 || width < 1 || blob_count < 1) {
    throw Error(ErrorKind::InvalidArgument, "invalid synthetic clip options");
  }
  Rng rng(seed);
  struct Blob {
    double y, x, vy, vx, radius;
    std::array<double, 3> color;
  };
  std::vector<Blob> blobs;
  const double scale = std::min(height, width);
  for (int b = 0; b < blob_count; ++b) {
    Blob blob{rng.uniform() * height, rng.uniform() * width, (rng.uniform() - 0.5) * 0.04 * scale,
              (rng.uniform() - 0.5) * 0.04 * scale, (0.08 + 0.2 * rng.uniform()) * scale, {}};
    for (auto& c : blob.color) c = rng.uniform();
    blobs.push_back(blob);
  }

  std::vector<Frame> out;
  for (int t = 0; t < frames; ++t) {
    Frame frame(height, width);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        std::array<double, 3> acc{0.5, 0.5, 0.5};
        double weight = 1.0;
        for (const auto& b : blobs) {
          const double dy = y - (b.y + b.vy * t), dx = x - (b.x + b.vx * t);
          const double w = 4.0 * std::exp(-(dy * dy + dx * dx) / (2.0 * b.radius * b.radius));
          for (int c = 0; c < 3; ++c) acc[c] += w * b.color[c];
          weight += w;
        }
        for (int c = 0; c < 3; ++c) {
          const double v = acc[c] / weight + 0.02 * (rng.uniform() - 0.5);
          frame.at(y, x, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
      }
    }
    out.push_back(std::move(frame));
  }
  return out;
}

}  // namespace graphvid::synthetic
