#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "graphvid/augment.hpp"
#include "graphvid/rgcn.hpp"

namespace graphvid::rgcn {

struct TrainOptions {
  int epochs = 10;
  std::size_t batch_size = 200;
  double lr = 1e-3;
  bool augment = true;
  AugmentConfig augmentation;  // seed is replaced per clip and epoch
  std::uint64_t seed = 0;
};

struct StepReport {
  std::uint64_t step = 0;
  int epoch = 0;
  double loss = 0.0;
};

/// Return false to stop training early.
using StepCallback = std::function<bool(const StepReport&)>;

/// Shuffled mini-batch Adam over `graphs`, augmenting each clip afresh per
/// epoch. Returns the number of optimizer steps taken.
std::uint64_t train(Model<float>& model, const std::vector<VideoGraph>& graphs, const std::vector<int>& labels,
                    const TrainOptions& options, const StepCallback& on_step = {});

/// Eval-mode top-1 accuracy.
template <typename T>
double accuracy(const Model<T>& model, const std::vector<PreparedGraph>& graphs, const std::vector<int>& labels);

/// Indices of the k largest logits, best first.
template <typename T>
std::vector<int> top_k(const RowVector<T>& logits, int k);

}  // namespace graphvid::rgcn
