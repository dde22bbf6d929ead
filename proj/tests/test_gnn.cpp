#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "linkpred/errors.hpp"
#include "linkpred/gnn.hpp"
#include "linkpred/graph.hpp"
#include "linkpred/rng.hpp"
#include "linkpred/subgraph.hpp"

using namespace linkpred;

namespace {

Graph random_graph(int n, double density, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::pair<NodeId, NodeId>> e;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (rng.next_double() < density) e.emplace_back(u, v);
  return Graph::from_edges(n, std::move(e));
}

EnclosingSubgraph manual_subgraph(int n, const std::vector<std::pair<NodeId, NodeId>>& edges) {
  EnclosingSubgraph sub;
  sub.k = 1;
  for (NodeId i = 0; i < n; ++i) sub.nodes.push_back(i);
  std::vector<std::vector<NodeId>> rows(static_cast<std::size_t>(n));
  for (auto [a, b] : edges) {
    rows[static_cast<std::size_t>(a)].push_back(b);
    rows[static_cast<std::size_t>(b)].push_back(a);
  }
  sub.offsets.push_back(0);
  for (auto& row : rows) {
    std::sort(row.begin(), row.end());
    sub.adj.insert(sub.adj.end(), row.begin(), row.end());
    sub.offsets.push_back(static_cast<std::int64_t>(sub.adj.size()));
  }
  sub.dist_u.assign(static_cast<std::size_t>(n), 1);
  sub.dist_v.assign(static_cast<std::size_t>(n), 1);
  sub.dist_u[0] = 0;
  sub.dist_v[1] = 0;
  return sub;
}

FeatureMatrix identity_features(int n) {
  FeatureMatrix fm;
  std::vector<double> v(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i * n + i)] = 1.0;
  fm.x = Tensor::from({n, n}, std::move(v));
  fm.label_width = n;
  return fm;
}

void set_values(Tensor& t, const std::vector<double>& v) {
  auto data = t.data();
  REQUIRE(data.size() == v.size());
  std::copy(v.begin(), v.end(), data.begin());
}

Tensor random_side(NodeId n, int dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(static_cast<std::size_t>(n) * static_cast<std::size_t>(dim));
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return Tensor::from({n, dim}, std::move(v));
}

double score_of(const ModelParams& params, const GnnConfig& cfg, const Graph& g, NodeId u,
                NodeId v, const Tensor* side) {
  EnclosingSubgraph sub = extract_enclosing_subgraph(g, u, v, cfg.k);
  FeatureMatrix fm = assemble_features(sub, drnl_label(sub), side, 10,
                                       side ? FeatureMode::drnl_plus_embed
                                            : FeatureMode::drnl_only);
  Tape tape(false);
  return score_subgraph(tape, params, cfg, sub, fm).value();
}

}  // namespace

TEST_CASE("config validation") {
  GnnConfig cfg;
  validate_config(cfg);
  cfg.k = 0;
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
  cfg.k = 4;
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
  cfg.k = 2;
  cfg.arch = Arch::dgcnn;
  cfg.sortpool_k = 1;
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
  cfg.sortpool_k = 4;
  validate_config(cfg);

  CHECK(arch_from_string("gin") == Arch::gin);
  CHECK(arch_name(Arch::sage) == "sage");
  CHECK_THROWS_AS(arch_from_string("transformer"), ConfigError);
  CHECK(embedding_width(cfg) == cfg.k * cfg.hidden);
}

TEST_CASE("parameter shapes depend only on config and feature width") {
  for (Arch arch : {Arch::gcn, Arch::gin, Arch::sage, Arch::dgcnn}) {
    GnnConfig cfg;
    cfg.arch = arch;
    cfg.sortpool_k = 6;
    ModelParams a = init_params(cfg, 15, 3);
    ModelParams b = init_params(cfg, 15, 3);
    ModelParams c = init_params(cfg, 15, 4);
    REQUIRE(a.items.size() == b.items.size());
    for (std::size_t i = 0; i < a.items.size(); ++i) {
      CHECK(a.items[i].first == b.items[i].first);
      CHECK(a.items[i].second.shape() == b.items[i].second.shape());
      auto av = a.items[i].second.data();
      auto bv = b.items[i].second.data();
      CHECK(std::equal(av.begin(), av.end(), bv.begin()));  // same seed, same bits
      auto cv = c.items[i].second.data();
      bool same = std::equal(av.begin(), av.end(), cv.begin());
      if (a.items[i].first.find(".b") == std::string::npos) CHECK(!same);
    }
  }
}

TEST_CASE("gcn normalization on a single edge") {
  EnclosingSubgraph sub = manual_subgraph(2, {{0, 1}});
  SparseMatrix adj = sym_norm_adj(sub);
  // D̃ = diag(2,2) with self-loops: every entry 1/2
  std::vector<std::vector<double>> dense(2, std::vector<double>(2, 0.0));
  for (int r = 0; r < 2; ++r)
    for (auto idx = adj.offsets[r]; idx < adj.offsets[r + 1]; ++idx)
      dense[static_cast<std::size_t>(r)][static_cast<std::size_t>(adj.col[static_cast<std::size_t>(idx)])] =
          adj.val[static_cast<std::size_t>(idx)];
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) CHECK(dense[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] == doctest::Approx(0.5));

  GnnConfig cfg;
  cfg.k = 1;
  cfg.hidden = 2;
  ModelParams params = init_params(cfg, 2, 1);
  set_values(params.at("gcn.w1"), {1, 0, 0, 1});  // W = I
  FeatureMatrix fm = identity_features(2);
  Tape tape(false);
  Tensor emb = embed_nodes(tape, params, cfg, sub, fm);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) CHECK(emb.at(r, c) == doctest::Approx(0.5));
}

TEST_CASE("gin sum aggregation on a star") {
  // center 0 with feature 0, three leaves with feature 1
  EnclosingSubgraph sub = manual_subgraph(4, {{0, 1}, {0, 2}, {0, 3}});
  FeatureMatrix fm;
  fm.x = Tensor::from({4, 1}, {0.0, 1.0, 1.0, 1.0});
  fm.label_width = 1;

  GnnConfig cfg;
  cfg.arch = Arch::gin;
  cfg.k = 1;
  cfg.hidden = 1;
  ModelParams params = init_params(cfg, 1, 1);
  set_values(params.at("gin.l1.w1"), {1});  // identity MLP
  set_values(params.at("gin.l1.b1"), {0});
  set_values(params.at("gin.l1.w2"), {1});
  set_values(params.at("gin.l1.b2"), {0});

  Tape tape(false);
  Tensor emb = embed_nodes(tape, params, cfg, sub, fm);
  CHECK(emb.at(0, 0) == 3.0);  // (1+0)*0 + 1+1+1
  CHECK(emb.at(1, 0) == 1.0);  // leaf: self 1 + center 0
}

TEST_CASE("aggregation matrices") {
  // path 0-1-2 plus isolated node 3
  EnclosingSubgraph sub = manual_subgraph(4, {{0, 1}, {1, 2}});
  SparseMatrix mean = mean_adj(sub);
  auto row = [&](const SparseMatrix& m, int r) {
    std::vector<double> out(4, 0.0);
    for (auto idx = m.offsets[r]; idx < m.offsets[r + 1]; ++idx)
      out[static_cast<std::size_t>(m.col[static_cast<std::size_t>(idx)])] =
          m.val[static_cast<std::size_t>(idx)];
    return out;
  };
  CHECK(row(mean, 1) == std::vector<double>{0.5, 0.0, 0.5, 0.0});
  CHECK(row(mean, 3) == std::vector<double>{0.0, 0.0, 0.0, 0.0});  // isolated: zero row

  SparseMatrix rn = row_norm_adj(sub);
  for (int r = 0; r < 4; ++r) {
    double sum = 0;
    for (double v : row(rn, r)) sum += v;
    CHECK(sum == doctest::Approx(1.0));  // D̃^{-1}(A+I) rows sum to one
  }
}

TEST_CASE("pair scores are symmetric bit-for-bit") {
  Graph g = random_graph(24, 0.25, 6);
  Tensor side = random_side(24, 5, 7);
  for (Arch arch : {Arch::gcn, Arch::gin, Arch::sage, Arch::dgcnn}) {
    const std::string an = arch_name(arch);
    CAPTURE(an);
    GnnConfig cfg;
    cfg.arch = arch;
    cfg.k = 2;
    cfg.hidden = 8;
    cfg.sortpool_k = 6;
    ModelParams params = init_params(cfg, 16, 11);
    int checked = 0;
    for (auto [u, v] : std::vector<std::pair<NodeId, NodeId>>{{0, 1}, {2, 9}, {5, 17}, {3, 4}}) {
      double suv = score_of(params, cfg, g, u, v, &side);
      double svu = score_of(params, cfg, g, v, u, &side);
      CHECK(suv == svu);  // exact
      ++checked;
    }
    CHECK(checked == 4);
  }
}

TEST_CASE("scores are invariant under graph relabeling") {
  Graph g = random_graph(20, 0.3, 13);
  Tensor side = random_side(20, 4, 14);
  auto perm = [](NodeId x) { return static_cast<NodeId>((x * 7 + 3) % 20); };
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId u = 0; u < 20; ++u)
    for (NodeId v : g.neighbors(u))
      if (u < v) edges.emplace_back(perm(u), perm(v));
  Graph h = Graph::from_edges(20, std::move(edges));
  std::vector<double> side_perm(static_cast<std::size_t>(20 * 4));
  for (NodeId u = 0; u < 20; ++u)
    for (int d = 0; d < 4; ++d)
      side_perm[static_cast<std::size_t>(perm(u) * 4 + d)] = side.at(u, d);
  Tensor hside = Tensor::from({20, 4}, std::move(side_perm));

  for (Arch arch : {Arch::gcn, Arch::gin, Arch::sage, Arch::dgcnn}) {
    const std::string an = arch_name(arch);
    CAPTURE(an);
    GnnConfig cfg;
    cfg.arch = arch;
    cfg.k = 2;
    cfg.hidden = 6;
    cfg.sortpool_k = 5;
    ModelParams params = init_params(cfg, 15, 21);
    for (auto [u, v] : std::vector<std::pair<NodeId, NodeId>>{{0, 1}, {4, 11}, {6, 2}}) {
      double a = score_of(params, cfg, g, u, v, &side);
      double b = score_of(params, cfg, h, perm(u), perm(v), &hside);
      CHECK(a == doctest::Approx(b).epsilon(1e-9));
    }
  }
}

TEST_CASE("inductivity: frozen params score a disjoint graph") {
  Graph a = random_graph(18, 0.3, 31);
  Graph b = random_graph(40, 0.12, 32);  // different size, same feature width
  for (Arch arch : {Arch::gcn, Arch::gin, Arch::sage, Arch::dgcnn}) {
    GnnConfig cfg;
    cfg.arch = arch;
    cfg.k = 2;
    cfg.hidden = 6;
    cfg.sortpool_k = 4;
    ModelParams params = init_params(cfg, 11, 5);
    double sa = score_of(params, cfg, a, 0, 1, nullptr);
    double sb = score_of(params, cfg, b, 3, 9, nullptr);
    CHECK(std::isfinite(sa));
    CHECK(std::isfinite(sb));
  }
}

TEST_CASE("feature width mismatch is a shape error") {
  Graph g = random_graph(12, 0.4, 41);
  GnnConfig cfg;
  cfg.k = 1;
  ModelParams params = init_params(cfg, 11, 2);  // drnl_only width
  Tensor side = random_side(12, 3, 2);
  CHECK_THROWS_AS(score_of(params, cfg, g, 0, 1, &side), ContractError);  // width 14 vs 11
}

TEST_CASE("scorer handles identical pair embeddings") {
  GnnConfig cfg;
  cfg.k = 1;
  cfg.hidden = 3;
  ModelParams params = init_params(cfg, 5, 9);
  std::vector<double> rowvals{0.3, -0.7, 1.1};
  std::vector<double> flat;
  for (int r = 0; r < 2; ++r) flat.insert(flat.end(), rowvals.begin(), rowvals.end());
  Tensor emb = Tensor::from({2, 3}, std::move(flat));
  Tape tape(false);
  double s = score_pair(tape, params, cfg, emb).value();
  // same value from a hand-rolled MLP over [u⊙u ⊕ 0]
  const Tensor& w1 = params.at("scorer.w1");
  const Tensor& b1 = params.at("scorer.b1");
  const Tensor& w2 = params.at("scorer.w2");
  const Tensor& b2 = params.at("scorer.b2");
  std::vector<double> feat(6, 0.0);
  for (int i = 0; i < 3; ++i) feat[static_cast<std::size_t>(i)] = rowvals[static_cast<std::size_t>(i)] * rowvals[static_cast<std::size_t>(i)];
  double expect = b2.at(0);
  for (std::int64_t hcol = 0; hcol < w1.cols(); ++hcol) {
    double h = b1.at(hcol);
    for (std::int64_t i = 0; i < 6; ++i) h += feat[static_cast<std::size_t>(i)] * w1.at(i, hcol);
    expect += std::max(h, 0.0) * w2.at(hcol, 0);
  }
  CHECK(s == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("sortpooling pads short subgraphs and sorts full ones") {
  Graph g = random_graph(14, 0.3, 55);
  GnnConfig cfg;
  cfg.arch = Arch::dgcnn;
  cfg.k = 1;
  cfg.hidden = 4;
  ModelParams params;

  SUBCASE("subgraph smaller than sortpool_k still scores") {
    cfg.sortpool_k = 50;  // force padding
    params = init_params(cfg, 11, 6);
    CHECK(std::isfinite(score_of(params, cfg, g, 0, 1, nullptr)));
  }
  SUBCASE("permuting input node order leaves the score unchanged") {
    cfg.sortpool_k = 6;
    params = init_params(cfg, 11, 6);
    EnclosingSubgraph sub = extract_enclosing_subgraph(g, 2, 7, 1);
    FeatureMatrix fm = assemble_features(sub, drnl_label(sub), nullptr, 10, FeatureMode::drnl_only);
    Tape tape(false);
    double base = score_subgraph(tape, params, cfg, sub, fm).value();

    Rng rng(91);
    int tested = 0;
    for (int trial = 0; trial < 100; ++trial) {
      // permute the non-target tail of the local ordering
      std::vector<std::size_t> order(sub.num_nodes());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::vector<std::size_t> tail(order.begin() + 2, order.end());
      rng.shuffle(tail);
      std::copy(tail.begin(), tail.end(), order.begin() + 2);

      EnclosingSubgraph p;
      p.k = sub.k;
      p.nodes.resize(sub.num_nodes());
      p.dist_u.resize(sub.num_nodes());
      p.dist_v.resize(sub.num_nodes());
      std::vector<std::size_t> inv(sub.num_nodes());
      for (std::size_t i = 0; i < order.size(); ++i) inv[order[i]] = i;
      for (std::size_t i = 0; i < order.size(); ++i) {
        p.nodes[i] = sub.nodes[order[i]];
        p.dist_u[i] = sub.dist_u[order[i]];
        p.dist_v[i] = sub.dist_v[order[i]];
      }
      p.offsets.push_back(0);
      for (std::size_t i = 0; i < order.size(); ++i) {
        std::vector<NodeId> row;
        for (NodeId nb : sub.neighbors(static_cast<NodeId>(order[i])))
          row.push_back(static_cast<NodeId>(inv[static_cast<std::size_t>(nb)]));
        std::sort(row.begin(), row.end());
        p.adj.insert(p.adj.end(), row.begin(), row.end());
        p.offsets.push_back(static_cast<std::int64_t>(p.adj.size()));
      }
      FeatureMatrix pf = assemble_features(p, drnl_label(p), nullptr, 10, FeatureMode::drnl_only);
      Tape t2(false);
      double got = score_subgraph(t2, params, cfg, p, pf).value();
      CHECK(got == doctest::Approx(base).epsilon(1e-9));
      ++tested;
    }
    CHECK(tested == 100);
  }
}

TEST_CASE("score gradients pass finite differences for every parameter") {
  Graph g = random_graph(8, 0.45, 71);
  Tensor side = random_side(8, 3, 72);
  for (Arch arch : {Arch::gcn, Arch::gin, Arch::sage, Arch::dgcnn}) {
    const std::string an = arch_name(arch);
    CAPTURE(an);
    GnnConfig cfg;
    cfg.arch = arch;
    cfg.k = 2;
    cfg.hidden = 4;
    cfg.sortpool_k = 4;
    cfg.conv_channels = 3;
    cfg.scorer_hidden = 5;
    ModelParams params = init_params(cfg, 14, 81);
    EnclosingSubgraph sub = extract_enclosing_subgraph(g, 0, 3, cfg.k);
    FeatureMatrix fm = assemble_features(sub, drnl_label(sub), &side, 10,
                                         FeatureMode::drnl_plus_embed);
    for (std::size_t pi = 0; pi < params.items.size(); ++pi) {
      CAPTURE(params.items[pi].first);
      auto f = [&](Tape& tape, const Tensor& x) {
        ModelParams sub_params = params.clone();
        sub_params.items[pi].second = x;
        return score_subgraph(tape, sub_params, cfg, sub, fm);
      };
      double err = finite_difference_check(f, params.items[pi].second, 1e-6);
      CHECK_MESSAGE(err < 1e-4, params.items[pi].first);
    }
  }
}

TEST_CASE("sortpool_k resolution") {
  CHECK(resolve_sortpool_k({3, 5, 7, 9, 11}) == 7);  // 60th percentile
  CHECK(resolve_sortpool_k({4}) == 4);
  CHECK(resolve_sortpool_k({1, 1}) == 2);  // floor
  CHECK(resolve_sortpool_k({10, 20}, 1.0) == 20);
  CHECK_THROWS_AS(resolve_sortpool_k({}), ContractError);
}

TEST_CASE("checkpoints round trip") {
  GnnConfig cfg;
  cfg.arch = Arch::gin;
  cfg.k = 2;
  cfg.hidden = 5;
  ModelParams params = init_params(cfg, 13, 19);
  save_checkpoint("/tmp/linkpred_ckpt.bin", cfg, 13, params);

  Checkpoint back = load_checkpoint("/tmp/linkpred_ckpt.bin");
  CHECK(back.cfg.arch == Arch::gin);
  CHECK(back.cfg.k == 2);
  CHECK(back.cfg.hidden == 5);
  CHECK(back.feature_width == 13);
  REQUIRE(back.params.items.size() == params.items.size());
  for (std::size_t i = 0; i < params.items.size(); ++i) {
    CHECK(back.params.items[i].first == params.items[i].first);
    auto a = params.items[i].second.data();
    auto b = back.params.items[i].second.data();
    CHECK(std::equal(a.begin(), a.end(), b.begin()));
  }

  SUBCASE("manifest lists every tensor") {
    std::ifstream mf("/tmp/linkpred_ckpt.bin.manifest.csv");
    REQUIRE(mf.good());
    std::string line;
    std::size_t rows = 0;
    std::getline(mf, line);  // header
    while (std::getline(mf, line))
      if (!line.empty()) ++rows;
    CHECK(rows == params.items.size());
  }
  SUBCASE("corrupt checkpoint rejected") {
    std::ofstream f("/tmp/linkpred_ckpt2.bin", std::ios::binary);
    f << "LPCKPT1\ngarbage";
    f.close();
    CHECK_THROWS_AS(load_checkpoint("/tmp/linkpred_ckpt2.bin"), DataError);
  }
}
