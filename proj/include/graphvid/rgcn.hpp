#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "graphvid/graph.hpp"
#include "graphvid/rng.hpp"

namespace graphvid::rgcn {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using RowVector = Eigen::Matrix<T, 1, Eigen::Dynamic>;

/// Two ELU-activated dense layers embed node colors, then `gnn_layers`
/// relational layers of width `hidden_dim`, global mean pooling, dropout
/// and a linear head.
struct ModelConfig {
  std::string variant = "rgcn";
  int input_dim = 3;
  int embed_dim = 256;
  int hidden_dim = 512;
  int gnn_layers = 4;
  int relations = 2;
  int edge_feature_dim = 1;
  double dropout_p = 0.2;
  int num_classes = 400;

  void validate() const;
  int layer_input_dim(int layer) const { return layer == 0 ? embed_dim : hidden_dim; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

void to_json(nlohmann::json& j, const ModelConfig& config);
void from_json(const nlohmann::json& j, ModelConfig& config);

/// Weights are stored (in x out) so a row of activations multiplies on the
/// left; biases are 1 x out. Relation weights act on [h_j, e_ij], so their
/// last row is the edge-feature row.
template <typename T>
struct Parameters {
  Matrix<T> fc1_weight, fc1_bias;
  Matrix<T> fc2_weight, fc2_bias;
  std::vector<std::vector<Matrix<T>>> relation_weight;  // [layer][relation]
  std::vector<Matrix<T>> self_weight;                   // [layer]
  std::vector<Matrix<T>> layer_bias;                    // [layer]
  Matrix<T> head_weight, head_bias;

  static Parameters zeros(const ModelConfig& config);

  /// Visits every tensor in a fixed order with a stable name.
  void for_each(const std::function<void(const std::string&, Matrix<T>&)>& fn);
  void for_each(const std::function<void(const std::string&, const Matrix<T>&)>& fn) const;

  std::size_t size() const;
};

template <typename T>
struct Model {
  ModelConfig config;
  Parameters<T> params;

  /// Glorot-uniform weights, zero biases.
  static Model initialize(const ModelConfig& config, std::uint64_t seed);

  template <typename U>
  Model<U> cast() const;
};

/// Node colors and per-relation symmetrized neighbor lists of a graph.
struct PreparedGraph {
  struct Adjacency {
    std::vector<std::uint32_t> offsets;  // CSR over receiving node
    std::vector<std::uint32_t> neighbors;
    std::vector<float> features;
    std::size_t message_count() const { return neighbors.size(); }
  };

  std::size_t node_count = 0;
  std::vector<float> colors;  // node_count x 3
  std::vector<Adjacency> relations;
};

/// An r-edge between i and j puts j in N_i^r and i in N_j^r. With a single
/// relation both edge sets share it.
PreparedGraph prepare(const VideoGraph& graph, int relations);

enum class Mode { Train, Eval };

template <typename T>
struct ForwardTrace {
  bool valid = false;
  Matrix<T> input;
  Matrix<T> fc1_pre, fc1_out, fc2_pre;
  std::vector<Matrix<T>> layer_input;                 // h^(l), N x in
  std::vector<std::vector<Matrix<T>>> aggregated;     // [layer][relation] mean of neighbor h, N x in
  std::vector<std::vector<Matrix<T>>> edge_mean;      // [layer][relation] mean edge feature, N x 1
  std::vector<Matrix<T>> layer_pre;                   // pre-activation, N x out
  Matrix<T> final_nodes;                              // h^(L)
  RowVector<T> pooled, dropout_scale, dropped;
  RowVector<T> logits;
};

template <typename T>
ForwardTrace<T> forward_trace(const Model<T>& model, const PreparedGraph& graph, Mode mode, Rng* rng = nullptr);

template <typename T>
RowVector<T> forward(const Model<T>& model, const PreparedGraph& graph, Mode mode, Rng* rng = nullptr);

template <typename T>
RowVector<T> forward(const Model<T>& model, const VideoGraph& graph, Mode mode, Rng* rng = nullptr);

/// Reverse-mode gradients of <loss_grad, logits> w.r.t. every parameter,
/// accumulated into `grads`.
template <typename T>
void backward(const Model<T>& model, const PreparedGraph& graph, const ForwardTrace<T>& trace,
              const RowVector<T>& loss_grad, Parameters<T>& grads);

template <typename T>
Parameters<T> backward(const Model<T>& model, const PreparedGraph& graph, const ForwardTrace<T>& trace,
                       const RowVector<T>& loss_grad);

/// Softmax cross-entropy; writes d loss / d logits into `grad` when given.
template <typename T>
T cross_entropy(const RowVector<T>& logits, int label, RowVector<T>* grad = nullptr);

template <typename T>
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  Parameters<T> first_moment;
  Parameters<T> second_moment;

  static AdamState create(const ModelConfig& config);
};

template <typename T>
void adam_update(Parameters<T>& params, const Parameters<T>& grads, AdamState<T>& state, double lr);

/// Mean cross-entropy over the batch followed by one Adam step. Throws on a
/// non-finite loss without touching the parameters.
template <typename T>
T train_step(Model<T>& model, const std::vector<PreparedGraph>& batch, const std::vector<int>& labels,
             AdamState<T>& adam, double lr, Rng& rng);

template <typename T>
struct LogitsView {
  std::vector<std::size_t> clip_indices;
  std::vector<RowVector<T>> views;
  RowVector<T> aggregated;
};

/// Clip indices for `num_views` evenly spaced views over `clip_count` clips:
/// first 0, last clip_count - 1, rounded in between; a single view takes the
/// middle clip. Repeats indices when views exceed clips.
std::vector<std::size_t> view_indices(std::size_t clip_count, std::size_t num_views);

template <typename T>
LogitsView<T> infer_views(const Model<T>& model, const std::vector<PreparedGraph>& clips, std::size_t num_views);

std::uint64_t count_params(const ModelConfig& config);

struct FlopCount {
  std::uint64_t embedding = 0;
  std::uint64_t messages = 0;
  std::uint64_t self = 0;
  std::uint64_t head = 0;
  std::uint64_t total() const { return embedding + messages + self + head; }
};

/// Two FLOPs per multiply-add. Each directed message costs (in + edge) * out
/// multiply-adds in every relational layer.
FlopCount count_flops(const ModelConfig& config, const PreparedGraph& graph);
FlopCount count_flops(const ModelConfig& config, const VideoGraph& graph);

/// JSON header (config + tensor manifest) then little-endian binary32 data.
void save_checkpoint(const Model<float>& model, const std::filesystem::path& path);
Model<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace graphvid::rgcn
