#include "graphvid/slic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "graphvid/error.hpp"

namespace graphvid {

namespace {

struct Lab {
  double l, a, b;
};

double srgb_to_linear(double c) { return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4); }

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

// sRGB (D65) -> CIELAB.
Lab to_lab(double r, double g, double b) {
  r = srgb_to_linear(r);
  g = srgb_to_linear(g);
  b = srgb_to_linear(b);
  const double x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
  const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
  const double fx = lab_f(x), fy = lab_f(y), fz = lab_f(z);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

struct Center {
  Lab color;
  double y, x;
};

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }

  void attach(std::size_t child_root, std::size_t parent_root) { parent_[child_root] = parent_root; }

 private:
  std::vector<std::size_t> parent_;
};

// Splits every label into 4-connected components, folds small components
// into their largest neighbor, and caps the region count at 2 * target.
std::vector<std::int32_t> enforce_connectivity(int height, int width, const std::vector<std::int32_t>& labels,
                                               const SlicConfig& config) {
  const std::size_t n = labels.size();
  std::vector<std::int32_t> comp(n, -1);
  std::vector<std::vector<std::size_t>> members;
  std::vector<std::size_t> queue;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (comp[seed] >= 0) continue;
    const auto id = static_cast<std::int32_t>(members.size());
    members.emplace_back();
    auto& list = members.back();
    comp[seed] = id;
    queue.assign(1, seed);
    while (!queue.empty()) {
      const std::size_t p = queue.back();
      queue.pop_back();
      list.push_back(p);
      const int y = static_cast<int>(p / width), x = static_cast<int>(p % width);
      const std::size_t nbrs[4] = {p - 1, p + 1, p - width, p + width};
      const bool ok[4] = {x > 0, x + 1 < width, y > 0, y + 1 < height};
      for (int k = 0; k < 4; ++k) {
        if (ok[k] && comp[nbrs[k]] < 0 && labels[nbrs[k]] == labels[p]) {
          comp[nbrs[k]] = id;
          queue.push_back(nbrs[k]);
        }
      }
    }
  }

  const std::size_t count = members.size();
  UnionFind groups(count);
  std::vector<std::size_t> size(count);
  for (std::size_t c = 0; c < count; ++c) size[c] = members[c].size();

  // Largest adjacent group of `root`, or `root` itself when isolated.
  auto largest_neighbor = [&](std::size_t root) {
    std::size_t best = root;
    for (std::size_t p : members[root]) {
      const int y = static_cast<int>(p / width), x = static_cast<int>(p % width);
      const std::size_t nbrs[4] = {p - 1, p + 1, p - width, p + width};
      const bool ok[4] = {x > 0, x + 1 < width, y > 0, y + 1 < height};
      for (int k = 0; k < 4; ++k) {
        if (!ok[k]) continue;
        const std::size_t other = groups.find(static_cast<std::size_t>(comp[nbrs[k]]));
        if (other == root) continue;
        if (best == root || size[other] > size[best] || (size[other] == size[best] && other < best)) best = other;
      }
    }
    return best;
  };
  auto merge = [&](std::size_t from, std::size_t into) {
    groups.attach(from, into);
    size[into] += size[from];
    auto& dst = members[into];
    dst.insert(dst.end(), members[from].begin(), members[from].end());
    members[from].clear();
    members[from].shrink_to_fit();
  };

  const double threshold = config.min_region_fraction * static_cast<double>(n) / config.target_superpixels;
  std::size_t live = count;
  for (std::size_t c = 0; c < count; ++c) {
    if (groups.find(c) != c || static_cast<double>(size[c]) >= threshold) continue;
    const std::size_t into = largest_neighbor(c);
    if (into == c) continue;
    merge(c, into);
    --live;
  }

  const std::size_t cap = 2 * static_cast<std::size_t>(config.target_superpixels);
  while (live > cap) {
    std::size_t smallest = count;
    for (std::size_t c = 0; c < count; ++c) {
      if (groups.find(c) == c && (smallest == count || size[c] < size[smallest])) smallest = c;
    }
    const std::size_t into = largest_neighbor(smallest);
    if (into == smallest) break;
    merge(smallest, into);
    --live;
  }

  std::vector<std::int32_t> dense(count, -1);
  std::vector<std::int32_t> out(n);
  std::int32_t next = 0;
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t root = groups.find(static_cast<std::size_t>(comp[p]));
    if (dense[root] < 0) dense[root] = next++;
    out[p] = dense[root];
  }
  return out;
}

}  // namespace

void SlicConfig::validate() const {
  if (target_superpixels < 1) throw Error(ErrorKind::InvalidArgument, "target_superpixels must be >= 1");
  if (iterations < 1) throw Error(ErrorKind::InvalidArgument, "iterations must be >= 1");
  if (!(compactness > 0.0)) throw Error(ErrorKind::InvalidArgument, "compactness must be > 0");
  if (!(min_region_fraction > 0.0 && min_region_fraction <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "min_region_fraction must lie in (0,1]");
  }
}

std::array<int, 2> seed_grid(int height, int width, int target) {
  std::array<int, 2> best{1, 1};
  double best_cost = std::numeric_limits<double>::infinity();
  for (int cols = 1; cols <= std::min(target, width); ++cols) {
    const int low = std::clamp(target / cols, 1, height);
    for (const int rows : {low, std::min(low + 1, height)}) {
      const double aspect =
          std::abs(std::log((static_cast<double>(width) / cols) / (static_cast<double>(height) / rows)));
      const double cost = aspect + 2.0 * std::abs(rows * cols - target) / target;
      if (cost < best_cost - 1e-12 || (std::abs(cost - best_cost) <= 1e-12 && cols > best[1])) {
        best_cost = cost;
        best = {rows, cols};
      }
    }
  }
  return best;
}

Segmentation segment(const Frame& frame, const SlicConfig& config, int frame_index, SlicTrace* trace) {
  config.validate();
  const int height = frame.height, width = frame.width;
  const std::size_t n = frame.pixel_count();
  if (static_cast<std::size_t>(config.target_superpixels) > n) {
    throw Error(ErrorKind::InvalidArgument, "requested " + std::to_string(config.target_superpixels) +
                                                " superpixels for a frame of " + std::to_string(n) + " pixels");
  }

  std::vector<Lab> lab(n);
  for (std::size_t p = 0; p < n; ++p) lab[p] = to_lab(frame.data[3 * p], frame.data[3 * p + 1], frame.data[3 * p + 2]);

  // Gradient: L2 norm of forward differences in RGB.
  std::vector<double> gradient(n, 0.0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double sum = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double v = frame.at(y, x, c);
        const double dx = x + 1 < width ? frame.at(y, x + 1, c) - v : 0.0;
        const double dy = y + 1 < height ? frame.at(y + 1, x, c) - v : 0.0;
        sum += dx * dx + dy * dy;
      }
      gradient[static_cast<std::size_t>(y) * width + x] = std::sqrt(sum);
    }
  }

  const auto [rows, cols] = seed_grid(height, width, config.target_superpixels);
  const double cell_h = static_cast<double>(height) / rows;
  const double cell_w = static_cast<double>(width) / cols;
  const double step = std::sqrt(cell_h * cell_w);
  const double spatial_weight = (config.compactness / step) * (config.compactness / step);

  std::vector<Center> centers;
  centers.reserve(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double cy = (r + 0.5) * cell_h - 0.5;
      const double cx = (c + 0.5) * cell_w - 0.5;
      const int py = std::clamp(static_cast<int>(std::lround(cy)), 0, height - 1);
      const int px = std::clamp(static_cast<int>(std::lround(cx)), 0, width - 1);
      int best_y = py, best_x = px;
      double best_g = gradient[static_cast<std::size_t>(py) * width + px];
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int y = py + dy, x = px + dx;
          if (y < 0 || y >= height || x < 0 || x >= width) continue;
          const double g = gradient[static_cast<std::size_t>(y) * width + x];
          if (g < best_g) {
            best_g = g;
            best_y = y;
            best_x = x;
          }
        }
      }
      const bool moved = best_y != py || best_x != px;
      centers.push_back({lab[static_cast<std::size_t>(best_y) * width + best_x], moved ? best_y : cy,
                         moved ? best_x : cx});
    }
  }

  auto distance2 = [&](const Center& k, std::size_t p, int y, int x) {
    const Lab& v = lab[p];
    const double dl = v.l - k.color.l, da = v.a - k.color.a, db = v.b - k.color.b;
    const double sy = y - k.y, sx = x - k.x;
    return dl * dl + da * da + db * db + (sy * sy + sx * sx) * spatial_weight;
  };

  std::vector<std::int32_t> labels(n, -1);
  std::vector<double> dist(n);
  constexpr double inf = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < config.iterations; ++iter) {
    // Each pixel keeps its current center as a candidate, so the objective
    // cannot rise when a center drifts out of the pixel's search window.
    for (std::size_t p = 0; p < n; ++p) {
      dist[p] = labels[p] < 0 ? inf
                              : distance2(centers[labels[p]], p, static_cast<int>(p / width),
                                          static_cast<int>(p % width));
    }
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const Center& center = centers[k];
      const int y0 = std::max(0, static_cast<int>(std::floor(center.y - cell_h)));
      const int y1 = std::min(height - 1, static_cast<int>(std::ceil(center.y + cell_h)));
      const int x0 = std::max(0, static_cast<int>(std::floor(center.x - cell_w)));
      const int x1 = std::min(width - 1, static_cast<int>(std::ceil(center.x + cell_w)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const std::size_t p = static_cast<std::size_t>(y) * width + x;
          const double d = distance2(center, p, y, x);
          if (d < dist[p]) {
            dist[p] = d;
            labels[p] = static_cast<std::int32_t>(k);
          }
        }
      }
    }
    for (std::size_t p = 0; p < n; ++p) {
      if (labels[p] >= 0) continue;
      const int y = static_cast<int>(p / width), x = static_cast<int>(p % width);
      for (std::size_t k = 0; k < centers.size(); ++k) {
        const double d = distance2(centers[k], p, y, x);
        if (d < dist[p]) {
          dist[p] = d;
          labels[p] = static_cast<std::int32_t>(k);
        }
      }
    }
    if (trace) trace->residuals.push_back(std::accumulate(dist.begin(), dist.end(), 0.0));

    std::vector<std::array<double, 6>> sums(centers.size(), std::array<double, 6>{});
    for (std::size_t p = 0; p < n; ++p) {
      auto& s = sums[labels[p]];
      s[0] += lab[p].l;
      s[1] += lab[p].a;
      s[2] += lab[p].b;
      s[3] += static_cast<double>(p / width);
      s[4] += static_cast<double>(p % width);
      s[5] += 1.0;
    }
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const auto& s = sums[k];
      if (s[5] == 0.0) continue;
      centers[k] = {{s[0] / s[5], s[1] / s[5], s[2] / s[5]}, s[3] / s[5], s[4] / s[5]};
    }
  }

  return segmentation_from_labels(height, width, enforce_connectivity(height, width, labels, config), frame,
                                  frame_index);
}

Segmentation segmentation_from_labels(int height, int width, std::vector<std::int32_t> labels, const Frame& frame,
                                      int frame_index) {
  const std::size_t n = static_cast<std::size_t>(height) * width;
  if (frame.height != height || frame.width != width || labels.size() != n) {
    throw Error(ErrorKind::InvalidArgument, "label map does not match frame dimensions");
  }
  std::int32_t max_label = -1;
  for (auto l : labels) {
    if (l < 0) throw Error(ErrorKind::InvalidArgument, "negative label");
    max_label = std::max(max_label, l);
  }
  Segmentation seg;
  seg.height = height;
  seg.width = width;
  seg.labels = std::move(labels);
  seg.regions.resize(static_cast<std::size_t>(max_label + 1));
  std::vector<std::array<double, 2>> pos(seg.regions.size(), std::array<double, 2>{});
  for (std::size_t p = 0; p < n; ++p) {
    auto& r = seg.regions[seg.labels[p]];
    ++r.pixel_count;
    pos[seg.labels[p]][0] += static_cast<double>(p / width);
    pos[seg.labels[p]][1] += static_cast<double>(p % width);
  }
  const auto colors = mean_colors(seg, frame);
  for (std::size_t i = 0; i < seg.regions.size(); ++i) {
    auto& r = seg.regions[i];
    if (r.pixel_count == 0) throw Error(ErrorKind::InvalidArgument, "label " + std::to_string(i) + " is empty");
    r.frame_index = frame_index;
    r.region_index = static_cast<int>(i);
    r.centroid_y = pos[i][0] / r.pixel_count;
    r.centroid_x = pos[i][1] / r.pixel_count;
    r.mean_color = colors[i];
  }
  return seg;
}

std::vector<std::array<double, 3>> mean_colors(const Segmentation& segmentation, const Frame& frame) {
  if (frame.height != segmentation.height || frame.width != segmentation.width ||
      segmentation.labels.size() != frame.pixel_count()) {
    throw Error(ErrorKind::InvalidArgument, "segmentation does not match frame dimensions");
  }
  std::size_t region_count = segmentation.regions.size();
  for (auto l : segmentation.labels) region_count = std::max(region_count, static_cast<std::size_t>(l) + 1);
  std::vector<std::array<double, 3>> sums(region_count, std::array<double, 3>{});
  std::vector<std::int64_t> counts(region_count, 0);
  for (std::size_t p = 0; p < segmentation.labels.size(); ++p) {
    const auto l = segmentation.labels[p];
    for (int c = 0; c < 3; ++c) sums[l][c] += frame.data[3 * p + c];
    ++counts[l];
  }
  for (std::size_t i = 0; i < region_count; ++i) {
    if (counts[i] == 0) continue;
    for (int c = 0; c < 3; ++c) sums[i][c] /= static_cast<double>(counts[i]);
  }
  return sums;
}

void write_label_pgm(const Segmentation& segmentation, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "P5\n" << segmentation.width << " " << segmentation.height << "\n65535\n";
  for (auto l : segmentation.labels) {
    const auto v = static_cast<std::uint16_t>(std::min<std::int32_t>(l, 65535));
    const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
    out.write(bytes, 2);
  }
}

}  // namespace graphvid
