#include "graphvid/rgcn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "graphvid/error.hpp"
#include "graphvid/graph_store.hpp"

namespace graphvid::rgcn {

namespace {

template <typename T>
Matrix<T> elu(const Matrix<T>& z) {
  return z.unaryExpr([](T v) { return v > T(0) ? v : std::expm1(v); });
}

template <typename T>
Matrix<T> elu_grad(const Matrix<T>& z) {
  return z.unaryExpr([](T v) { return v > T(0) ? T(1) : std::exp(v); });
}

// Row-wise mean of neighbor rows and neighbor edge features.
template <typename T>
void aggregate(const PreparedGraph::Adjacency& adj, const Matrix<T>& h, Matrix<T>& mean_h, Matrix<T>& mean_e) {
  const auto n = static_cast<Eigen::Index>(adj.offsets.size() - 1);
  mean_h.setZero(n, h.cols());
  mean_e.setZero(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto begin = adj.offsets[i], end = adj.offsets[i + 1];
    if (begin == end) continue;
    for (auto k = begin; k < end; ++k) {
      mean_h.row(i) += h.row(adj.neighbors[k]);
      mean_e(i, 0) += static_cast<T>(adj.features[k]);
    }
    const T inv = T(1) / static_cast<T>(end - begin);
    mean_h.row(i) *= inv;
    mean_e(i, 0) *= inv;
  }
}

// Transpose of `aggregate` applied to d(mean_h): scatters back to senders.
template <typename T>
void scatter(const PreparedGraph::Adjacency& adj, const Matrix<T>& d_mean_h, Matrix<T>& d_h) {
  const auto n = static_cast<Eigen::Index>(adj.offsets.size() - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto begin = adj.offsets[i], end = adj.offsets[i + 1];
    if (begin == end) continue;
    const T inv = T(1) / static_cast<T>(end - begin);
    for (auto k = begin; k < end; ++k) d_h.row(adj.neighbors[k]) += inv * d_mean_h.row(i);
  }
}

void require_positive(int v, const char* name) {
  if (v < 1) throw Error(ErrorKind::InvalidArgument, std::string(name) + " must be >= 1");
}

template <typename T>
void glorot(Matrix<T>& m, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>((2.0 * rng.uniform() - 1.0) * limit);
}

}  // namespace

void ModelConfig::validate() const {
  if (variant == "gcn" || variant == "gat") {
    throw Error(ErrorKind::InvalidArgument, "model variant '" + variant + "' is not implemented; only rgcn is");
  }
  if (variant != "rgcn") throw Error(ErrorKind::InvalidArgument, "unknown model variant '" + variant + "'");
  require_positive(input_dim, "input_dim");
  require_positive(embed_dim, "embed_dim");
  require_positive(hidden_dim, "hidden_dim");
  require_positive(gnn_layers, "gnn_layers");
  require_positive(num_classes, "num_classes");
  if (input_dim != 3) throw Error(ErrorKind::InvalidArgument, "input_dim must be 3 (node RGB color)");
  if (relations != 1 && relations != 2) throw Error(ErrorKind::InvalidArgument, "relations must be 1 or 2");
  if (edge_feature_dim != 1) throw Error(ErrorKind::InvalidArgument, "edge_feature_dim must be 1 (distance)");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw Error(ErrorKind::InvalidArgument, "dropout_p must lie in [0,1)");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"variant", c.variant},       {"input_dim", c.input_dim},
                     {"embed_dim", c.embed_dim},   {"hidden_dim", c.hidden_dim},
                     {"gnn_layers", c.gnn_layers}, {"relations", c.relations},
                     {"edge_feature_dim", c.edge_feature_dim}, {"dropout_p", c.dropout_p},
                     {"num_classes", c.num_classes}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  ModelConfig out;
  j.at("variant").get_to(out.variant);
  j.at("input_dim").get_to(out.input_dim);
  j.at("embed_dim").get_to(out.embed_dim);
  j.at("hidden_dim").get_to(out.hidden_dim);
  j.at("gnn_layers").get_to(out.gnn_layers);
  j.at("relations").get_to(out.relations);
  j.at("edge_feature_dim").get_to(out.edge_feature_dim);
  j.at("dropout_p").get_to(out.dropout_p);
  j.at("num_classes").get_to(out.num_classes);
  out.validate();
  c = out;
}

template <typename T>
Parameters<T> Parameters<T>::zeros(const ModelConfig& config) {
  config.validate();
  Parameters p;
  p.fc1_weight = Matrix<T>::Zero(config.input_dim, config.embed_dim);
  p.fc1_bias = Matrix<T>::Zero(1, config.embed_dim);
  p.fc2_weight = Matrix<T>::Zero(config.embed_dim, config.embed_dim);
  p.fc2_bias = Matrix<T>::Zero(1, config.embed_dim);
  for (int l = 0; l < config.gnn_layers; ++l) {
    const int in = config.layer_input_dim(l);
    p.relation_weight.emplace_back();
    for (int r = 0; r < config.relations; ++r) {
      p.relation_weight.back().push_back(Matrix<T>::Zero(in + config.edge_feature_dim, config.hidden_dim));
    }
    p.self_weight.push_back(Matrix<T>::Zero(in, config.hidden_dim));
    p.layer_bias.push_back(Matrix<T>::Zero(1, config.hidden_dim));
  }
  p.head_weight = Matrix<T>::Zero(config.hidden_dim, config.num_classes);
  p.head_bias = Matrix<T>::Zero(1, config.num_classes);
  return p;
}

template <typename T>
void Parameters<T>::for_each(const std::function<void(const std::string&, Matrix<T>&)>& fn) {
  fn("fc1.weight", fc1_weight);
  fn("fc1.bias", fc1_bias);
  fn("fc2.weight", fc2_weight);
  fn("fc2.bias", fc2_bias);
  for (std::size_t l = 0; l < self_weight.size(); ++l) {
    const std::string prefix = "rgcn" + std::to_string(l) + ".";
    for (std::size_t r = 0; r < relation_weight[l].size(); ++r) {
      fn(prefix + "relation" + std::to_string(r) + ".weight", relation_weight[l][r]);
    }
    fn(prefix + "self.weight", self_weight[l]);
    fn(prefix + "bias", layer_bias[l]);
  }
  fn("head.weight", head_weight);
  fn("head.bias", head_bias);
}

template <typename T>
void Parameters<T>::for_each(const std::function<void(const std::string&, const Matrix<T>&)>& fn) const {
  const_cast<Parameters*>(this)->for_each([&](const std::string& name, Matrix<T>& m) { fn(name, m); });
}

template <typename T>
std::size_t Parameters<T>::size() const {
  std::size_t total = 0;
  for_each([&](const std::string&, const Matrix<T>& m) { total += static_cast<std::size_t>(m.size()); });
  return total;
}

template <typename T>
Model<T> Model<T>::initialize(const ModelConfig& config, std::uint64_t seed) {
  Model model{config, Parameters<T>::zeros(config)};
  Rng rng(seed);
  model.params.for_each([&](const std::string& name, Matrix<T>& m) {
    if (!name.ends_with("bias")) glorot(m, rng);
  });
  return model;
}

template <typename T>
template <typename U>
Model<U> Model<T>::cast() const {
  Model<U> out{config, Parameters<U>::zeros(config)};
  std::vector<const Matrix<T>*> src;
  params.for_each([&](const std::string&, const Matrix<T>& m) { src.push_back(&m); });
  std::size_t k = 0;
  out.params.for_each([&](const std::string&, Matrix<U>& m) { m = src[k++]->template cast<U>(); });
  return out;
}

PreparedGraph prepare(const VideoGraph& graph, int relations) {
  if (relations != 1 && relations != 2) throw Error(ErrorKind::InvalidArgument, "relations must be 1 or 2");
  PreparedGraph out;
  const std::size_t n = graph.nodes.size();
  out.node_count = n;
  out.colors.resize(n * 3);
  for (std::size_t i = 0; i < n; ++i) {
    if (graph.nodes[i].id != i) throw Error(ErrorKind::InvalidArgument, "node ids must be dense and ordered");
    for (int c = 0; c < 3; ++c) out.colors[3 * i + c] = graph.nodes[i].color[c];
  }

  out.relations.resize(static_cast<std::size_t>(relations));
  std::vector<std::vector<const Edge*>> by_relation(out.relations.size());
  for (const auto* edges : {&graph.spatial_edges, &graph.temporal_edges}) {
    for (const auto& e : *edges) {
      if (e.source >= n || e.target >= n) throw Error(ErrorKind::InvalidArgument, "edge references a missing node");
      by_relation[relations == 1 ? 0 : static_cast<std::size_t>(e.relation)].push_back(&e);
    }
  }
  for (std::size_t r = 0; r < out.relations.size(); ++r) {
    auto& adj = out.relations[r];
    adj.offsets.assign(n + 1, 0);
    for (const Edge* e : by_relation[r]) {
      ++adj.offsets[e->source + 1];
      ++adj.offsets[e->target + 1];
    }
    for (std::size_t i = 0; i < n; ++i) adj.offsets[i + 1] += adj.offsets[i];
    adj.neighbors.resize(adj.offsets[n]);
    adj.features.resize(adj.offsets[n]);
    std::vector<std::uint32_t> cursor(adj.offsets.begin(), adj.offsets.end() - 1);
    for (const Edge* e : by_relation[r]) {
      adj.neighbors[cursor[e->source]] = e->target;
      adj.features[cursor[e->source]++] = e->distance;
      adj.neighbors[cursor[e->target]] = e->source;
      adj.features[cursor[e->target]++] = e->distance;
    }
  }
  return out;
}

template <typename T>
ForwardTrace<T> forward_trace(const Model<T>& model, const PreparedGraph& graph, Mode mode, Rng* rng) {
  const ModelConfig& cfg = model.config;
  const Parameters<T>& p = model.params;
  if (graph.node_count == 0) throw Error(ErrorKind::InvalidArgument, "cannot run the model on an empty graph");
  if (graph.relations.size() != static_cast<std::size_t>(cfg.relations)) {
    throw Error(ErrorKind::InvalidArgument, "graph prepared for a different relation count");
  }
  if (mode == Mode::Train && cfg.dropout_p > 0.0 && rng == nullptr) {
    throw Error(ErrorKind::InvalidArgument, "training-mode forward needs a random generator");
  }
  const auto n = static_cast<Eigen::Index>(graph.node_count);

  ForwardTrace<T> t;
  t.input.resize(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) t.input(i, c) = static_cast<T>(graph.colors[3 * i + c]);
  }
  t.fc1_pre = (t.input * p.fc1_weight).rowwise() + p.fc1_bias.row(0);
  t.fc1_out = elu(t.fc1_pre);
  t.fc2_pre = (t.fc1_out * p.fc2_weight).rowwise() + p.fc2_bias.row(0);
  Matrix<T> h = elu(t.fc2_pre);

  for (int l = 0; l < cfg.gnn_layers; ++l) {
    const int in = cfg.layer_input_dim(l);
    Matrix<T> z = (h * p.self_weight[l]).rowwise() + p.layer_bias[l].row(0);
    t.aggregated.emplace_back(cfg.relations);
    t.edge_mean.emplace_back(cfg.relations);
    for (int r = 0; r < cfg.relations; ++r) {
      Matrix<T>& mean_h = t.aggregated.back()[r];
      Matrix<T>& mean_e = t.edge_mean.back()[r];
      aggregate(graph.relations[r], h, mean_h, mean_e);
      const Matrix<T>& w = p.relation_weight[l][r];
      z.noalias() += mean_h * w.topRows(in);
      z.noalias() += mean_e * w.bottomRows(cfg.edge_feature_dim);
    }
    t.layer_input.push_back(std::move(h));
    h = elu(z);
    t.layer_pre.push_back(std::move(z));
  }
  t.final_nodes = std::move(h);
  t.pooled = t.final_nodes.colwise().mean();

  t.dropout_scale = RowVector<T>::Ones(t.pooled.cols());
  if (mode == Mode::Train && cfg.dropout_p > 0.0) {
    const T keep_scale = T(1) / static_cast<T>(1.0 - cfg.dropout_p);
    for (Eigen::Index k = 0; k < t.dropout_scale.cols(); ++k) {
      t.dropout_scale(k) = rng->bernoulli(cfg.dropout_p) ? T(0) : keep_scale;
    }
  }
  t.dropped = t.pooled.cwiseProduct(t.dropout_scale);
  t.logits = t.dropped * p.head_weight + p.head_bias.row(0);
  t.valid = true;
  return t;
}

template <typename T>
RowVector<T> forward(const Model<T>& model, const PreparedGraph& graph, Mode mode, Rng* rng) {
  return forward_trace(model, graph, mode, rng).logits;
}

template <typename T>
RowVector<T> forward(const Model<T>& model, const VideoGraph& graph, Mode mode, Rng* rng) {
  return forward(model, prepare(graph, model.config.relations), mode, rng);
}

template <typename T>
void backward(const Model<T>& model, const PreparedGraph& graph, const ForwardTrace<T>& trace,
              const RowVector<T>& loss_grad, Parameters<T>& g) {
  if (!trace.valid) throw Error(ErrorKind::State, "backward called without a cached forward pass");
  const ModelConfig& cfg = model.config;
  const Parameters<T>& p = model.params;
  if (loss_grad.cols() != cfg.num_classes) throw Error(ErrorKind::InvalidArgument, "loss gradient has wrong width");
  const auto n = static_cast<Eigen::Index>(graph.node_count);

  g.head_weight.noalias() += trace.dropped.transpose() * loss_grad;
  g.head_bias += loss_grad;
  const RowVector<T> d_pooled = (loss_grad * p.head_weight.transpose()).cwiseProduct(trace.dropout_scale);
  Matrix<T> d_h = d_pooled.replicate(n, 1) / static_cast<T>(n);

  for (int l = cfg.gnn_layers - 1; l >= 0; --l) {
    const int in = cfg.layer_input_dim(l);
    const Matrix<T> d_z = d_h.cwiseProduct(elu_grad(trace.layer_pre[l]));
    const Matrix<T>& h = trace.layer_input[l];
    g.self_weight[l].noalias() += h.transpose() * d_z;
    g.layer_bias[l] += d_z.colwise().sum();
    Matrix<T> d_in = d_z * p.self_weight[l].transpose();
    for (int r = 0; r < cfg.relations; ++r) {
      const Matrix<T>& w = p.relation_weight[l][r];
      Matrix<T>& gw = g.relation_weight[l][r];
      gw.topRows(in).noalias() += trace.aggregated[l][r].transpose() * d_z;
      gw.bottomRows(cfg.edge_feature_dim).noalias() += trace.edge_mean[l][r].transpose() * d_z;
      const Matrix<T> d_mean = d_z * w.topRows(in).transpose();
      scatter(graph.relations[r], d_mean, d_in);
    }
    d_h = std::move(d_in);
  }

  const Matrix<T> d_fc2 = d_h.cwiseProduct(elu_grad(trace.fc2_pre));
  g.fc2_weight.noalias() += trace.fc1_out.transpose() * d_fc2;
  g.fc2_bias += d_fc2.colwise().sum();
  const Matrix<T> d_fc1 = (d_fc2 * p.fc2_weight.transpose()).cwiseProduct(elu_grad(trace.fc1_pre));
  g.fc1_weight.noalias() += trace.input.transpose() * d_fc1;
  g.fc1_bias += d_fc1.colwise().sum();
}

template <typename T>
Parameters<T> backward(const Model<T>& model, const PreparedGraph& graph, const ForwardTrace<T>& trace,
                       const RowVector<T>& loss_grad) {
  auto grads = Parameters<T>::zeros(model.config);
  backward(model, graph, trace, loss_grad, grads);
  return grads;
}

template <typename T>
T cross_entropy(const RowVector<T>& logits, int label, RowVector<T>* grad) {
  if (label < 0 || label >= logits.cols()) throw Error(ErrorKind::InvalidArgument, "label out of range");
  const T max = logits.maxCoeff();
  const RowVector<T> shifted = logits.array() - max;
  const RowVector<T> expv = shifted.array().exp();
  const T sum = expv.sum();
  if (grad) {
    *grad = expv / sum;
    (*grad)(label) -= T(1);
  }
  return std::log(sum) - shifted(label);
}

template <typename T>
AdamState<T> AdamState<T>::create(const ModelConfig& config) {
  AdamState s;
  s.first_moment = Parameters<T>::zeros(config);
  s.second_moment = Parameters<T>::zeros(config);
  return s;
}

template <typename T>
void adam_update(Parameters<T>& params, const Parameters<T>& grads, AdamState<T>& state, double lr) {
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  std::vector<const Matrix<T>*> g;
  std::vector<Matrix<T>*> m, v;
  grads.for_each([&](const std::string&, const Matrix<T>& x) { g.push_back(&x); });
  state.first_moment.for_each([&](const std::string&, Matrix<T>& x) { m.push_back(&x); });
  state.second_moment.for_each([&](const std::string&, Matrix<T>& x) { v.push_back(&x); });
  std::size_t k = 0;
  const T b1 = static_cast<T>(state.beta1), b2 = static_cast<T>(state.beta2);
  params.for_each([&](const std::string&, Matrix<T>& theta) {
    Matrix<T>& mk = *m[k];
    Matrix<T>& vk = *v[k];
    const Matrix<T>& gk = *g[k];
    mk = b1 * mk + (T(1) - b1) * gk;
    vk = b2 * vk + (T(1) - b2) * gk.cwiseProduct(gk);
    if (lr != 0.0) {
      const auto m_hat = mk.array() / static_cast<T>(c1);
      const auto v_hat = vk.array() / static_cast<T>(c2);
      theta.array() -= static_cast<T>(lr) * m_hat / (v_hat.sqrt() + static_cast<T>(state.epsilon));
    }
    ++k;
  });
}

template <typename T>
T train_step(Model<T>& model, const std::vector<PreparedGraph>& batch, const std::vector<int>& labels,
             AdamState<T>& adam, double lr, Rng& rng) {
  if (batch.empty() || batch.size() != labels.size()) {
    throw Error(ErrorKind::InvalidArgument, "batch and labels must be non-empty and the same length");
  }
  auto grads = Parameters<T>::zeros(model.config);
  const T scale = T(1) / static_cast<T>(batch.size());
  T loss = 0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto trace = forward_trace(model, batch[b], Mode::Train, &rng);
    RowVector<T> d_logits;
    loss += cross_entropy(trace.logits, labels[b], &d_logits);
    backward(model, batch[b], trace, RowVector<T>(d_logits * scale), grads);
  }
  loss *= scale;
  if (!std::isfinite(static_cast<double>(loss))) throw Error(ErrorKind::Numeric, "non-finite training loss");
  adam_update(model.params, grads, adam, lr);
  return loss;
}

std::vector<std::size_t> view_indices(std::size_t clip_count, std::size_t num_views) {
  if (clip_count == 0) throw Error(ErrorKind::InvalidArgument, "no clips to draw views from");
  if (num_views == 0) throw Error(ErrorKind::InvalidArgument, "num_views must be >= 1");
  if (num_views == 1) return {clip_count / 2};
  std::vector<std::size_t> out;
  out.reserve(num_views);
  for (std::size_t k = 0; k < num_views; ++k) {
    const double pos = static_cast<double>(k) * static_cast<double>(clip_count - 1) / static_cast<double>(num_views - 1);
    out.push_back(static_cast<std::size_t>(std::lround(pos)));
  }
  return out;
}

template <typename T>
LogitsView<T> infer_views(const Model<T>& model, const std::vector<PreparedGraph>& clips, std::size_t num_views) {
  LogitsView<T> out;
  out.clip_indices = view_indices(clips.size(), num_views);
  out.aggregated = RowVector<T>::Zero(model.config.num_classes);
  for (std::size_t idx : out.clip_indices) {
    out.views.push_back(forward(model, clips[idx], Mode::Eval));
    out.aggregated += out.views.back();
  }
  out.aggregated /= static_cast<T>(out.views.size());
  return out;
}

std::uint64_t count_params(const ModelConfig& c) {
  c.validate();
  auto dense = [](std::uint64_t in, std::uint64_t out) { return in * out + out; };
  std::uint64_t total = dense(c.input_dim, c.embed_dim) + dense(c.embed_dim, c.embed_dim);
  for (int l = 0; l < c.gnn_layers; ++l) {
    const std::uint64_t in = c.layer_input_dim(l);
    total += static_cast<std::uint64_t>(c.relations) * (in + c.edge_feature_dim) * c.hidden_dim;
    total += in * c.hidden_dim + c.hidden_dim;
  }
  return total + dense(c.hidden_dim, c.num_classes);
}

FlopCount count_flops(const ModelConfig& c, const PreparedGraph& graph) {
  c.validate();
  const std::uint64_t n = graph.node_count;
  FlopCount f;
  f.embedding = 2 * n * (static_cast<std::uint64_t>(c.input_dim) * c.embed_dim +
                         static_cast<std::uint64_t>(c.embed_dim) * c.embed_dim);
  std::uint64_t messages = 0;
  for (const auto& adj : graph.relations) messages += adj.message_count();
  for (int l = 0; l < c.gnn_layers; ++l) {
    const std::uint64_t in = c.layer_input_dim(l);
    f.messages += 2 * messages * (in + c.edge_feature_dim) * c.hidden_dim;
    f.self += 2 * n * in * c.hidden_dim;
  }
  f.head = 2 * static_cast<std::uint64_t>(c.hidden_dim) * c.num_classes;
  return f;
}

FlopCount count_flops(const ModelConfig& config, const VideoGraph& graph) {
  return count_flops(config, prepare(graph, config.relations));
}

void save_checkpoint(const Model<float>& model, const std::filesystem::path& path) {
  nlohmann::json header;
  header["config"] = model.config;
  header["tensors"] = nlohmann::json::array();
  std::vector<float> payload;
  model.params.for_each([&](const std::string& name, const Matrix<float>& m) {
    header["tensors"].push_back({{"name", name},
                                 {"shape", {m.rows(), m.cols()}},
                                 {"offset", payload.size() * sizeof(float)}});
    payload.insert(payload.end(), m.data(), m.data() + m.size());
  });
  const std::string text = header.dump();
  std::vector<std::uint8_t> bytes;
  std::uint64_t len = text.size();
  for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<std::uint8_t>(len >> (8 * b)));
  bytes.insert(bytes.end(), text.begin(), text.end());
  for (float v : payload) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
  }
  write_file_atomic(path, bytes);
}

Model<float> load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  auto fail = [&](const std::string& why) { return Error(ErrorKind::Format, path.string() + ": " + why); };
  if (bytes.size() < 8) throw fail("truncated checkpoint");
  std::uint64_t len = 0;
  for (int b = 0; b < 8; ++b) len |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
  if (len > bytes.size() - 8) throw fail("truncated checkpoint header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(len));
  } catch (const nlohmann::json::exception& e) {
    throw fail(e.what());
  }
  const std::size_t data_start = 8 + len;
  Model<float> model{header.at("config").get<ModelConfig>(), {}};
  model.params = Parameters<float>::zeros(model.config);
  const auto& tensors = header.at("tensors");
  std::size_t k = 0;
  model.params.for_each([&](const std::string& name, Matrix<float>& m) {
    if (k >= tensors.size()) throw fail("missing tensor " + name);
    const auto& entry = tensors[k++];
    if (entry.at("name").get<std::string>() != name) throw fail("unexpected tensor " + entry.at("name").dump());
    const auto shape = entry.at("shape").get<std::vector<std::int64_t>>();
    if (shape.size() != 2 || shape[0] != m.rows() || shape[1] != m.cols()) throw fail("shape mismatch for " + name);
    const std::size_t offset = data_start + entry.at("offset").get<std::size_t>();
    if (offset + static_cast<std::size_t>(m.size()) * 4 > bytes.size()) throw fail("truncated tensor " + name);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[offset + 4 * i + b]) << (8 * b);
      m.data()[i] = std::bit_cast<float>(bits);
    }
  });
  return model;
}

#define GRAPHVID_INSTANTIATE(T)                                                                                   \
  template struct Parameters<T>;                                                                                 \
  template struct Model<T>;                                                                                      \
  template struct AdamState<T>;                                                                                  \
  template ForwardTrace<T> forward_trace(const Model<T>&, const PreparedGraph&, Mode, Rng*);                     \
  template RowVector<T> forward(const Model<T>&, const PreparedGraph&, Mode, Rng*);                              \
  template RowVector<T> forward(const Model<T>&, const VideoGraph&, Mode, Rng*);                                 \
  template void backward(const Model<T>&, const PreparedGraph&, const ForwardTrace<T>&, const RowVector<T>&,     \
                         Parameters<T>&);                                                                        \
  template Parameters<T> backward(const Model<T>&, const PreparedGraph&, const ForwardTrace<T>&,                 \
                                  const RowVector<T>&);                                                          \
  template T cross_entropy(const RowVector<T>&, int, RowVector<T>*);                                             \
  template void adam_update(Parameters<T>&, const Parameters<T>&, AdamState<T>&, double);                        \
  template T train_step(Model<T>&, const std::vector<PreparedGraph>&, const std::vector<int>&, AdamState<T>&,    \
                        double, Rng&);                                                                           \
  template LogitsView<T> infer_views(const Model<T>&, const std::vector<PreparedGraph>&, std::size_t);

GRAPHVID_INSTANTIATE(float)
GRAPHVID_INSTANTIATE(double)
#undef GRAPHVID_INSTANTIATE

template Model<double> Model<float>::cast<double>() const;
template Model<float> Model<double>::cast<float>() const;
template Model<float> Model<float>::cast<float>() const;
template Model<double> Model<double>::cast<double>() const;

}  // namespace graphvid::rgcn
