#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "graphvid/error.hpp"
#include "graphvid/graph_store.hpp"
#include "graphvid/rgcn.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace graphvid;
using namespace graphvid::rgcn;

namespace {

ModelConfig small_config(int relations = 2, int layers = 4) {
  ModelConfig c;
  c.embed_dim = 6;
  c.hidden_dim = 5;
  c.gnn_layers = layers;
  c.relations = relations;
  c.num_classes = 4;
  c.dropout_p = 0.0;
  return c;
}

// Biases start at zero; random ones exercise their gradients properly.
template <typename T>
Model<T> random_model(const ModelConfig& config, std::uint64_t seed) {
  auto model = Model<T>::initialize(config, seed);
  Rng rng(seed ^ 0xabcdef);
  model.params.for_each([&](const std::string&, Matrix<T>& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] += static_cast<T>(0.3 * (rng.uniform() - 0.5));
  });
  return model;
}

VideoGraph permuted(const VideoGraph& g, const std::vector<std::uint32_t>& perm) {
  // perm[old] = new
  VideoGraph out = g;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    Node n = g.nodes[i];
    n.id = perm[i];
    out.nodes[perm[i]] = n;
  }
  for (auto* edges : {&out.spatial_edges, &out.temporal_edges}) {
    for (auto& e : *edges) {
      e.source = perm[e.source];
      e.target = perm[e.target];
    }
  }
  return out;
}

VideoGraph disjoint_double(const VideoGraph& g) {
  VideoGraph out = g;
  const auto n = static_cast<std::uint32_t>(g.nodes.size());
  for (auto node : g.nodes) {
    node.id += n;
    out.nodes.push_back(node);
  }
  for (auto e : g.spatial_edges) out.spatial_edges.push_back({e.source + n, e.target + n, e.relation, e.distance});
  for (auto e : g.temporal_edges) out.temporal_edges.push_back({e.source + n, e.target + n, e.relation, e.distance});
  return out;
}

double norm_relative(const RowVector<float>& a, const RowVector<float>& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), 1e-12f);
}

}  // namespace

TEST_SUITE("rgcn_engine") {
  TEST_CASE("configuration validation") {
    ModelConfig c;
    CHECK_NOTHROW(c.validate());
    c.variant = "gcn";
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("not implemented"), Error);
    c.variant = "gat";
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.relations = 3;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.dropout_p = 1.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.edge_feature_dim = 2;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.gnn_layers = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    const nlohmann::json j = ModelConfig{};
    CHECK(j.get<ModelConfig>() == ModelConfig{});
  }

  TEST_CASE("parameter count of the reference configuration") {
    // fc1 3*256+256, fc2 256*256+256,
    // layer 1: two relations of (256+1)*512, self 256*512, bias 512,
    // layers 2-4: two relations of (512+1)*512, self 512*512, bias 512,
    // head 512*400+400.
    const std::uint64_t fc = (3 * 256 + 256) + (256 * 256 + 256);
    const std::uint64_t first = 2 * 257 * 512 + 256 * 512 + 512;
    const std::uint64_t rest = 2 * 513 * 512 + 512 * 512 + 512;
    const std::uint64_t head = 512 * 400 + 400;
    const std::uint64_t expected = fc + first + 3 * rest + head;
    CHECK(expected == 3030672);
    const ModelConfig paper;
    CHECK(count_params(paper) == expected);
    CHECK(std::abs(static_cast<double>(count_params(paper)) - 2.99e6) / 2.99e6 <= 0.05);
    CHECK(Parameters<float>::zeros(paper).size() == expected);
  }

  TEST_CASE("parameter count differences") {
    const ModelConfig paper;
    const auto params = Parameters<float>::zeros(paper);
    CHECK(static_cast<std::uint64_t>(params.head_weight.size() + params.head_bias.size()) == 512 * 400 + 400);
    ModelConfig single = paper;
    single.relations = 1;
    CHECK(count_params(paper) - count_params(single) == 257 * 512 + 3 * 513 * 512);
  }

  TEST_CASE("initialization is seeded and bounded") {
    const auto config = small_config();
    const auto a = Model<float>::initialize(config, 5);
    const auto b = Model<float>::initialize(config, 5);
    const auto c = Model<float>::initialize(config, 6);
    CHECK(a.params.fc1_weight == b.params.fc1_weight);
    CHECK(a.params.head_weight != c.params.head_weight);
    CHECK(a.params.layer_bias[0].isZero());
    const double bound = std::sqrt(6.0 / (config.embed_dim + 1 + config.hidden_dim));
    CHECK(a.params.relation_weight[0][0].cwiseAbs().maxCoeff() <= bound);
  }

  TEST_CASE("zero weights give zero logits") {
    Rng rng(1);
    const auto g = oracle::random_graph(rng, 3, 5);
    Model<float> model;
    model.config = ModelConfig{};
    model.params = Parameters<float>::zeros(model.config);
    const auto logits = forward(model, g, Mode::Eval);
    CHECK(logits.size() == 400);
    CHECK(logits.isZero());
  }

  TEST_CASE("single node reduces to the self-weight chain") {
    const auto config = small_config();
    const auto model = random_model<double>(config, 3);
    VideoGraph g;
    g.frame_count = 1;
    g.nodes.push_back(Node{0, 0, 0.3f, 0.7f, {0.2f, 0.5f, 0.9f}});
    const auto& p = model.params;
    auto elu = [](Matrix<double> z) {
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        if (z.data()[i] <= 0) z.data()[i] = std::exp(z.data()[i]) - 1;
      }
      return z;
    };
    Matrix<double> h(1, 3);
    h << 0.2f, 0.5f, 0.9f;
    h = elu(h * p.fc1_weight + p.fc1_bias);
    h = elu(h * p.fc2_weight + p.fc2_bias);
    for (int l = 0; l < config.gnn_layers; ++l) h = elu(h * p.self_weight[l] + p.layer_bias[l]);
    const Matrix<double> expected = h * p.head_weight + p.head_bias;
    const auto logits = forward(model, g, Mode::Eval);
    for (int k = 0; k < config.num_classes; ++k) CHECK(logits(k) == doctest::Approx(expected(0, k)).epsilon(1e-12));
  }

  TEST_CASE("every layer equals the dense adjacency oracle") {
    for (const int relations : {1, 2}) {
      const auto config = small_config(relations);
      Rng rng(40 + relations);
      const auto g = oracle::random_graph(rng, 3, 10, 0.35);
      REQUIRE(g.nodes.size() == 30);
      const auto model = random_model<double>(config, 8);
      const auto prepared = prepare(g, relations);
      const auto trace = forward_trace(model, prepared, Mode::Eval);
      const auto states = oracle::dense_node_states(model, g);
      REQUIRE(states.size() == static_cast<std::size_t>(config.gnn_layers) + 1);
      for (int l = 0; l < config.gnn_layers; ++l) {
        CHECK(oracle::max_relative_error(trace.layer_input[l], states[l], 1e-9) <= 1e-5);
      }
      CHECK(oracle::max_relative_error(trace.final_nodes, states.back(), 1e-9) <= 1e-5);
      CHECK(oracle::max_relative_error(trace.logits, oracle::dense_eval_logits(model, g), 1e-9) <= 1e-5);

      // The single-precision path agrees with the double oracle.
      const auto single = model.cast<float>();
      const auto logits = forward(single, prepared, Mode::Eval);
      const auto reference = oracle::dense_eval_logits(model, g);
      CHECK((logits.cast<double>() - reference).cwiseAbs().maxCoeff() <= 1e-4 * reference.cwiseAbs().maxCoeff());
    }
  }

  TEST_CASE("prepared adjacency is symmetric") {
    Rng rng(2);
    const auto g = oracle::random_graph(rng, 2, 6);
    const auto p = prepare(g, 2);
    CHECK(p.node_count == 12);
    CHECK(p.relations[0].message_count() == 2 * g.spatial_edges.size());
    CHECK(p.relations[1].message_count() == 2 * g.temporal_edges.size());
    const auto merged = prepare(g, 1);
    REQUIRE(merged.relations.size() == 1);
    CHECK(merged.relations[0].message_count() == 2 * g.edge_count());
    VideoGraph broken = g;
    broken.spatial_edges.push_back({0, 99, Relation::Spatial, 0.1f});
    CHECK_THROWS_AS(prepare(broken, 2), Error);
  }

  TEST_CASE("gradients match central finite differences") {
    for (const int relations : {1, 2}) {
      const auto config = small_config(relations);
      Rng rng(7 + relations);
      const auto g = oracle::random_graph(rng, 4, 5, 0.5);
      REQUIRE(g.nodes.size() == 20);
      auto model = random_model<double>(config, 11);
      const auto prepared = prepare(g, relations);
      const int label = 2;

      const auto trace = forward_trace(model, prepared, Mode::Eval);
      RowVector<double> d_logits;
      cross_entropy(trace.logits, label, &d_logits);
      const auto grads = backward(model, prepared, trace, d_logits);

      std::vector<std::pair<std::string, const Matrix<double>*>> analytic;
      grads.for_each([&](const std::string& name, const Matrix<double>& m) { analytic.push_back({name, &m}); });
      std::size_t tensor = 0;
      const double eps = 1e-3;
      model.params.for_each([&](const std::string& name, Matrix<double>& m) {
        const Matrix<double>& expected = *analytic.at(tensor++).second;
        double worst = 0;
        for (Eigen::Index i = 0; i < m.size(); ++i) {
          const double saved = m.data()[i];
          m.data()[i] = saved + eps;
          const double up = cross_entropy(forward(model, prepared, Mode::Eval), label);
          m.data()[i] = saved - eps;
          const double down = cross_entropy(forward(model, prepared, Mode::Eval), label);
          m.data()[i] = saved;
          const double numeric = (up - down) / (2 * eps);
          const double a = expected.data()[i];
          worst = std::max(worst, std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6}));
        }
        INFO(name);
        CHECK(worst <= 1e-4);
      });
      CHECK(tensor == analytic.size());
    }
  }

  TEST_CASE("gradient through a fixed dropout mask") {
    auto config = small_config();
    config.dropout_p = 0.5;
    Rng rng(3);
    const auto g = oracle::random_graph(rng, 2, 4);
    auto model = random_model<double>(config, 4);
    const auto prepared = prepare(g, 2);
    Rng mask_rng(77);
    const auto trace = forward_trace(model, prepared, Mode::Train, &mask_rng);
    for (Eigen::Index k = 0; k < trace.dropout_scale.size(); ++k) {
      CHECK((trace.dropout_scale(k) == 0.0 || trace.dropout_scale(k) == 2.0));
    }
    RowVector<double> d_logits;
    cross_entropy(trace.logits, 1, &d_logits);
    const auto grads = backward(model, prepared, trace, d_logits);
    auto loss_at = [&] {
      Rng r(77);
      return cross_entropy(forward(model, prepared, Mode::Train, &r), 1);
    };
    const double eps = 1e-4;
    auto& w = model.params.head_weight;
    for (Eigen::Index i = 0; i < w.size(); i += 3) {
      const double saved = w.data()[i];
      w.data()[i] = saved + eps;
      const double up = loss_at();
      w.data()[i] = saved - eps;
      const double down = loss_at();
      w.data()[i] = saved;
      CHECK(grads.head_weight.data()[i] == doctest::Approx((up - down) / (2 * eps)).epsilon(1e-5));
    }
  }

  TEST_CASE("zero upstream gradient gives zero parameter gradients") {
    const auto config = small_config();
    Rng rng(5);
    const auto g = oracle::random_graph(rng, 3, 4);
    const auto model = random_model<double>(config, 2);
    const auto prepared = prepare(g, 2);
    const auto trace = forward_trace(model, prepared, Mode::Eval);
    const auto grads = backward(model, prepared, trace, RowVector<double>(RowVector<double>::Zero(config.num_classes)));
    grads.for_each([](const std::string& name, const Matrix<double>& m) {
      INFO(name);
      CHECK(m.isZero());
    });
    CHECK_THROWS_AS(backward(model, prepared, ForwardTrace<double>{}, RowVector<double>(RowVector<double>::Zero(4))), Error);
  }

  TEST_CASE("mean pooling spreads the gradient evenly") {
    const auto config = small_config();
    Rng rng(6);
    const auto g = oracle::random_graph(rng, 2, 5);
    const auto model = random_model<double>(config, 3);
    const auto prepared = prepare(g, 2);
    const auto trace = forward_trace(model, prepared, Mode::Eval);
    RowVector<double> upstream = RowVector<double>::Zero(config.num_classes);
    upstream(0) = 1.0;
    const auto grads = backward(model, prepared, trace, upstream);
    // d logit_0 / d head_weight(k, 0) = pooled(k) = mean of final node states.
    for (int k = 0; k < config.hidden_dim; ++k) {
      CHECK(grads.head_weight(k, 0) == doctest::Approx(trace.final_nodes.col(k).sum() / 10.0));
    }
  }

  TEST_CASE("logits are invariant to node relabeling") {
    const auto config = small_config();
    const auto model = random_model<float>(config, 12);
    Rng rng(13);
    for (int trial = 0; trial < 5; ++trial) {
      const auto g = oracle::random_graph(rng, 3, 8);
      std::vector<std::uint32_t> perm(g.nodes.size());
      std::iota(perm.begin(), perm.end(), 0u);
      for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.next_u64() % (i + 1)]);
      const auto a = forward(model, g, Mode::Eval);
      const auto b = forward(model, permuted(g, perm), Mode::Eval);
      CHECK(norm_relative(b, a) < 1e-5);
    }
  }

  TEST_CASE("reversing temporal edges leaves logits unchanged") {
    const auto config = small_config();
    const auto model = random_model<float>(config, 14);
    Rng rng(15);
    const auto g = oracle::random_graph(rng, 4, 6);
    VideoGraph reversed = g;
    for (auto& e : reversed.temporal_edges) std::swap(e.source, e.target);
    CHECK(norm_relative(forward(model, reversed, Mode::Eval), forward(model, g, Mode::Eval)) < 1e-6);
  }

  TEST_CASE("eval mode is deterministic and train mode needs a generator") {
    auto config = small_config();
    config.dropout_p = 0.3;
    const auto model = random_model<float>(config, 16);
    Rng rng(17);
    const auto g = oracle::random_graph(rng, 2, 6);
    const auto a = forward(model, g, Mode::Eval);
    CHECK(a == forward(model, g, Mode::Eval));
    Rng r1(1), r2(1);
    CHECK(forward(model, g, Mode::Train, &r1) == forward(model, g, Mode::Train, &r2));
    CHECK_THROWS_AS(forward(model, g, Mode::Train), Error);
    CHECK_THROWS_AS(forward(model, VideoGraph{}, Mode::Eval), Error);
  }

  TEST_CASE("cross entropy matches log-sum-exp and is stable") {
    RowVector<double> logits(3);
    logits << 1.0, 2.0, 0.5;
    RowVector<double> grad;
    const double loss = cross_entropy(logits, 1, &grad);
    const double lse = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(0.5));
    CHECK(loss == doctest::Approx(lse - 2.0));
    CHECK(grad(0) == doctest::Approx(std::exp(1.0 - lse)));
    CHECK(grad(1) == doctest::Approx(std::exp(2.0 - lse) - 1.0));
    CHECK(grad.sum() == doctest::Approx(0.0).epsilon(1e-12));
    RowVector<float> big(2);
    big << 1000.0f, 0.0f;
    CHECK(std::isfinite(cross_entropy(big, 1)));
    CHECK(cross_entropy(big, 1) == doctest::Approx(1000.0f));
    CHECK_THROWS_AS(cross_entropy(big, 2), Error);
  }

  TEST_CASE("zero learning rate leaves parameters unchanged") {
    const auto config = small_config();
    auto model = random_model<float>(config, 18);
    const auto before = model.params;
    auto adam = AdamState<float>::create(config);
    Rng rng(19), data(20);
    const std::vector<PreparedGraph> batch{prepare(oracle::random_graph(data, 2, 5), 2)};
    train_step(model, batch, {1}, adam, 0.0, rng);
    std::vector<const Matrix<float>*> old;
    before.for_each([&](const std::string&, const Matrix<float>& m) { old.push_back(&m); });
    std::size_t k = 0;
    model.params.for_each([&](const std::string& name, const Matrix<float>& m) {
      INFO(name);
      CHECK(m == *old[k++]);
    });
    CHECK(adam.step == 1);
  }

  TEST_CASE("duplicated batch has the single-sample loss") {
    const auto config = small_config();
    Rng data(21);
    const auto graph = prepare(oracle::random_graph(data, 2, 5), 2);
    auto one = random_model<float>(config, 22);
    auto two = one;
    auto adam1 = AdamState<float>::create(config);
    auto adam2 = AdamState<float>::create(config);
    Rng r1(0), r2(0);
    CHECK(train_step(one, {graph}, {3}, adam1, 1e-3, r1) == train_step(two, {graph, graph}, {3, 3}, adam2, 1e-3, r2));
    CHECK(one.params.head_weight == two.params.head_weight);
  }

  TEST_CASE("training overfits a tiny dataset") {
    auto config = small_config();
    config.embed_dim = 16;
    config.hidden_dim = 16;
    config.num_classes = 2;
    auto model = Model<float>::initialize(config, 23);
    auto adam = AdamState<float>::create(config);
    Rng data(24), rng(25);
    std::vector<PreparedGraph> batch;
    std::vector<int> labels;
    for (int i = 0; i < 6; ++i) {
      auto g = oracle::random_graph(data, 2, 4 + i);
      // Class 1 graphs are brighter.
      for (auto& n : g.nodes) {
        for (auto& c : n.color) c = 0.5f * c + (i % 2 ? 0.5f : 0.0f);
      }
      batch.push_back(prepare(g, 2));
      labels.push_back(i % 2);
    }
    float loss = 0;
    for (int step = 0; step < 300; ++step) loss = train_step(model, batch, labels, adam, 1e-2, rng);
    CHECK(loss < 0.01f);
  }

  TEST_CASE("view selection") {
    CHECK(view_indices(5, 1) == std::vector<std::size_t>{2});
    CHECK(view_indices(4, 1) == std::vector<std::size_t>{2});
    CHECK(view_indices(8, 8) == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7});
    CHECK(view_indices(10, 3) == std::vector<std::size_t>{0, 5, 9});
    CHECK(view_indices(2, 4) == std::vector<std::size_t>{0, 0, 1, 1});
    CHECK_THROWS_AS(view_indices(0, 1), Error);
    CHECK_THROWS_AS(view_indices(3, 0), Error);
  }

  TEST_CASE("multi-view aggregation") {
    const auto config = small_config();
    const auto model = random_model<float>(config, 26);
    Rng data(27);
    std::vector<PreparedGraph> clips;
    for (int i = 0; i < 5; ++i) clips.push_back(prepare(oracle::random_graph(data, 2, 3 + i), 2));

    const auto middle = infer_views(model, clips, 1);
    CHECK(middle.clip_indices == std::vector<std::size_t>{2});
    CHECK(middle.aggregated == forward(model, clips[2], Mode::Eval));

    const auto all = infer_views(model, clips, 5);
    RowVector<float> mean = RowVector<float>::Zero(config.num_classes);
    for (const auto& c : clips) mean += forward(model, c, Mode::Eval);
    mean /= 5.0f;
    CHECK(norm_relative(all.aggregated, mean) < 1e-6);

    const std::vector<PreparedGraph> same(4, clips[0]);
    const auto repeated = infer_views(model, same, 4);
    CHECK(norm_relative(repeated.aggregated, repeated.views[0]) < 1e-6);
  }

  TEST_CASE("FLOP counting") {
    const ModelConfig paper;
    Rng rng(28);
    auto g = oracle::random_graph(rng, 3, 10);
    VideoGraph no_edges = g;
    no_edges.spatial_edges.clear();
    no_edges.temporal_edges.clear();
    const auto bare = count_flops(paper, no_edges);
    CHECK(bare.messages == 0);
    const std::uint64_t n = 30;
    CHECK(bare.embedding == 2 * n * (3 * 256 + 256 * 256));
    CHECK(bare.self == 2 * n * (256 * 512 + 3 * 512 * 512));
    CHECK(bare.head == 2 * 512 * 400);

    const auto f = count_flops(paper, g);
    const std::uint64_t directed = 2 * g.edge_count();
    CHECK(f.messages == 2 * directed * (257 * 512 + 3 * 513 * 512));

    const auto doubled = count_flops(paper, disjoint_double(g));
    CHECK(doubled.embedding == 2 * f.embedding);
    CHECK(doubled.messages == 2 * f.messages);
    CHECK(doubled.self == 2 * f.self);
    CHECK(doubled.head == f.head);
    CHECK(doubled.total() - doubled.head == 2 * (f.total() - f.head));
  }

  TEST_CASE("checkpoint round trip") {
    testing::TempDir dir;
    auto config = small_config();
    config.dropout_p = 0.25;
    const auto model = random_model<float>(config, 29);
    save_checkpoint(model, dir / "m.ckpt");
    const auto loaded = load_checkpoint(dir / "m.ckpt");
    CHECK(loaded.config == config);
    Rng data(30);
    const auto g = oracle::random_graph(data, 3, 6);
    CHECK(forward(loaded, g, Mode::Eval) == forward(model, g, Mode::Eval));

    auto bytes = read_file(dir / "m.ckpt");
    bytes.resize(bytes.size() - 4);
    write_file_atomic(dir / "cut.ckpt", bytes);
    CHECK_THROWS_AS(load_checkpoint(dir / "cut.ckpt"), Error);
    CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), Error);
  }
}
