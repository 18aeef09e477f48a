#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>

namespace graphvid {

/// Seedable generator with a frozen variate recipe so streams match across
/// platforms: std::mt19937_64 raw output (sequence fixed by the standard),
/// uniform = top 53 bits * 2^-53, normal = Box-Muller on (1 - u1, u2)
/// emitting the cosine branch first and caching the sine branch.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform();

  /// Standard normal.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Per-clip seed derived from a global seed and clip identifier.
std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t clip_id);

/// FNV-1a over a string; used to turn clip names into clip ids.
std::uint64_t hash_string(std::string_view text);

}  // namespace graphvid
