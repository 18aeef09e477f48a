#include "graphvid/trainer.hpp"

#include <algorithm>
#include <numeric>

#include "graphvid/error.hpp"

namespace graphvid::rgcn {

std::uint64_t train(Model<float>& model, const std::vector<VideoGraph>& graphs, const std::vector<int>& labels,
                    const TrainOptions& options, const StepCallback& on_step) {
  if (graphs.empty() || graphs.size() != labels.size()) {
    throw Error(ErrorKind::InvalidArgument, "training needs one label per graph");
  }
  if (options.batch_size == 0 || options.epochs < 0) throw Error(ErrorKind::InvalidArgument, "bad training options");
  for (int label : labels) {
    if (label < 0 || label >= model.config.num_classes) throw Error(ErrorKind::InvalidArgument, "label out of range");
  }
  if (options.augment) options.augmentation.validate();

  std::vector<PreparedGraph> plain;
  if (!options.augment) {
    for (const auto& g : graphs) plain.push_back(prepare(g, model.config.relations));
  }

  Rng order_rng(derive_seed(options.seed, 0x5eed));
  Rng dropout_rng(derive_seed(options.seed, 0xd80b));
  auto adam = AdamState<float>::create(model.config);
  std::vector<std::size_t> order(graphs.size());
  std::iota(order.begin(), order.end(), 0);

  std::uint64_t steps = 0;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[order_rng.next_u64() % i]);
    }
    for (std::size_t begin = 0; begin < order.size(); begin += options.batch_size) {
      const std::size_t end = std::min(order.size(), begin + options.batch_size);
      std::vector<PreparedGraph> batch;
      std::vector<int> batch_labels;
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t idx = order[k];
        batch_labels.push_back(labels[idx]);
        if (!options.augment) {
          batch.push_back(plain[idx]);
          continue;
        }
        AugmentConfig aug = options.augmentation;
        aug.seed = derive_seed(options.seed, (static_cast<std::uint64_t>(epoch) << 32) ^ idx);
        VideoGraph g = graphvid::augment(graphs[idx], aug);
        if (g.empty()) g = graphs[idx];  // every node dropped; fall back to the clean clip
        batch.push_back(prepare(g, model.config.relations));
      }
      const float loss = train_step(model, batch, batch_labels, adam, options.lr, dropout_rng);
      ++steps;
      if (on_step && !on_step({steps, epoch, static_cast<double>(loss)})) return steps;
    }
  }
  return steps;
}

template <typename T>
double accuracy(const Model<T>& model, const std::vector<PreparedGraph>& graphs, const std::vector<int>& labels) {
  if (graphs.size() != labels.size() || graphs.empty()) {
    throw Error(ErrorKind::InvalidArgument, "accuracy needs one label per graph");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const auto logits = forward(model, graphs[i], Mode::Eval);
    Eigen::Index best = 0;
    logits.maxCoeff(&best);
    if (best == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(graphs.size());
}

template <typename T>
std::vector<int> top_k(const RowVector<T>& logits, int k) {
  std::vector<int> idx(static_cast<std::size_t>(logits.cols()));
  std::iota(idx.begin(), idx.end(), 0);
  k = std::clamp(k, 0, static_cast<int>(idx.size()));
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
    return logits(a) > logits(b) || (logits(a) == logits(b) && a < b);
  });
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

template double accuracy(const Model<float>&, const std::vector<PreparedGraph>&, const std::vector<int>&);
template double accuracy(const Model<double>&, const std::vector<PreparedGraph>&, const std::vector<int>&);
template std::vector<int> top_k(const RowVector<float>&, int);
template std::vector<int> top_k(const RowVector<double>&, int);

}  // namespace graphvid::rgcn
