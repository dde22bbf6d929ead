#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <vector>

#include "linkpred/errors.hpp"
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

// independent BFS over the full graph with (u,v) removed, restricted afterwards
std::vector<int> oracle_dists(const Graph& g, const std::vector<NodeId>& members, NodeId from,
                              NodeId u, NodeId v) {
  std::set<NodeId> member_set(members.begin(), members.end());
  std::map<NodeId, int> dist;
  std::queue<NodeId> q;
  dist[from] = 0;
  q.push(from);
  while (!q.empty()) {
    NodeId x = q.front();
    q.pop();
    for (NodeId y : g.neighbors(x)) {
      if (!member_set.count(y)) continue;
      if ((x == u && y == v) || (x == v && y == u)) continue;
      if (!dist.count(y)) {
        dist[y] = dist[x] + 1;
        q.push(y);
      }
    }
  }
  std::vector<int> out;
  for (NodeId m : members) out.push_back(dist.count(m) ? dist[m] : -1);
  return out;
}

std::set<std::pair<NodeId, NodeId>> local_edges(const EnclosingSubgraph& sub) {
  std::set<std::pair<NodeId, NodeId>> edges;
  for (NodeId a = 0; a < static_cast<NodeId>(sub.num_nodes()); ++a)
    for (NodeId b : sub.neighbors(a)) {
      NodeId ga = sub.nodes[static_cast<std::size_t>(a)];
      NodeId gb = sub.nodes[static_cast<std::size_t>(b)];
      edges.insert({std::min(ga, gb), std::max(ga, gb)});
    }
  return edges;
}

}  // namespace

TEST_CASE("triangle extraction removes the target edge") {
  Graph g = Graph::from_edges(3, {{0, 1}, {1, 2}, {2, 0}});
  EnclosingSubgraph sub = extract_enclosing_subgraph(g, 0, 1, 1);
  CHECK(sub.nodes == std::vector<NodeId>{0, 1, 2});
  CHECK(local_edges(sub) == std::set<std::pair<NodeId, NodeId>>{{0, 2}, {1, 2}});
  CHECK(sub.dist_u[0] == 0);
  CHECK(sub.dist_v[1] == 0);
  CHECK(sub.dist_u[1] == 2);  // via node 2 once (0,1) is gone
}

TEST_CASE("disjoint balls on a path") {
  Graph g = Graph::from_edges(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
  EnclosingSubgraph sub = extract_enclosing_subgraph(g, 0, 4, 1);
  CHECK(sub.nodes == std::vector<NodeId>{0, 4, 1, 3});
  CHECK(local_edges(sub) == std::set<std::pair<NodeId, NodeId>>{{0, 1}, {3, 4}});
  // the v-side is unreachable from u inside the subgraph
  CHECK(sub.dist_u[1] == -1);
  CHECK(sub.dist_v[0] == -1);
}

TEST_CASE("node ordering and ball membership") {
  Graph g = random_graph(30, 0.15, 4);
  EnclosingSubgraph sub = extract_enclosing_subgraph(g, 2, 9, 2);
  CHECK(sub.nodes[0] == 2);
  CHECK(sub.nodes[1] == 9);
  // membership equals the union of 2-hop balls
  auto ball = [&](NodeId s) {
    std::set<NodeId> seen{s};
    std::vector<NodeId> frontier{s};
    for (int hop = 0; hop < 2; ++hop) {
      std::vector<NodeId> next;
      for (NodeId x : frontier)
        for (NodeId y : g.neighbors(x))
          if (seen.insert(y).second) next.push_back(y);
      frontier = std::move(next);
    }
    return seen;
  };
  std::set<NodeId> want = ball(2);
  for (NodeId x : ball(9)) want.insert(x);
  CHECK(std::set<NodeId>(sub.nodes.begin(), sub.nodes.end()) == want);
  // the rest section is sorted by (min-dist, id)
  for (std::size_t i = 3; i < sub.num_nodes(); ++i) {
    auto key = [&](std::size_t j) {
      int du = sub.dist_u[j] < 0 ? 1 << 20 : sub.dist_u[j];
      int dv = sub.dist_v[j] < 0 ? 1 << 20 : sub.dist_v[j];
      return std::pair<int, NodeId>(std::min(du, dv), sub.nodes[j]);
    };
    CHECK(key(i - 1) < key(i));
  }
}

TEST_CASE("distances match a BFS oracle on random graphs") {
  Rng rng(123);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Graph g = random_graph(30, 0.1 + 0.01 * static_cast<double>(trial % 10), 1000 + trial);
    NodeId u = static_cast<NodeId>(rng.next_below(30));
    NodeId v = static_cast<NodeId>(rng.next_below(30));
    if (u == v) continue;
    int k = 1 + static_cast<int>(rng.next_below(3));
    EnclosingSubgraph sub = extract_enclosing_subgraph(g, u, v, k);
    std::vector<int> du = oracle_dists(g, sub.nodes, u, u, v);
    std::vector<int> dv = oracle_dists(g, sub.nodes, v, u, v);
    for (std::size_t i = 0; i < sub.num_nodes(); ++i) {
      CHECK(sub.dist_u[i] == du[i]);
      CHECK(sub.dist_v[i] == dv[i]);
    }
    ++checked;
  }
  CHECK(checked > 150);
}

TEST_CASE("target edge never leaks for existing edges") {
  Graph g = random_graph(25, 0.3, 8);
  for (NodeId u = 0; u < g.num_nodes(); ++u)
    for (NodeId v : g.neighbors(u)) {
      if (v <= u) continue;
      EnclosingSubgraph sub = extract_enclosing_subgraph(g, u, v, 1);
      CHECK(!local_edges(sub).count({u, v}));
    }
}

TEST_CASE("drnl formula values") {
  CHECK(drnl_label_from_dists(1, 1) == 2);
  CHECK(drnl_label_from_dists(1, 2) == 3);
  CHECK(drnl_label_from_dists(2, 1) == 3);
  CHECK(drnl_label_from_dists(2, 2) == 5);
  CHECK_THROWS_AS(drnl_label_from_dists(0, 1), ContractError);
}

TEST_CASE("drnl is symmetric and injective over (min,d) classes up to 10") {
  std::map<std::pair<int, int>, int> class_label;
  std::set<int> used;
  for (int du = 1; du <= 10; ++du)
    for (int dv = 1; dv <= 10; ++dv) {
      int f = drnl_label_from_dists(du, dv);
      CHECK(f == drnl_label_from_dists(dv, du));
      std::pair<int, int> cls{std::min(du, dv), du + dv};
      auto it = class_label.find(cls);
      if (it == class_label.end()) {
        CHECK(!used.count(f));  // new class, new label
        class_label[cls] = f;
        used.insert(f);
      } else {
        CHECK(it->second == f);  // same class, same label
      }
    }
}

TEST_CASE("per-node labels: targets 1, unreachable 0") {
  Graph g = Graph::from_edges(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
  EnclosingSubgraph sub = extract_enclosing_subgraph(g, 0, 4, 1);
  std::vector<int> labels = drnl_label(sub);
  CHECK(labels[0] == 1);
  CHECK(labels[1] == 1);
  CHECK(labels[2] == 0);  // node 1: unreachable from v
  CHECK(labels[3] == 0);  // node 3: unreachable from u
}

TEST_CASE("extraction is invariant under node relabeling") {
  Graph g = random_graph(20, 0.25, 40);
  // relabel x -> (x + 7) mod 20
  auto perm = [](NodeId x) { return static_cast<NodeId>((x + 7) % 20); };
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId u = 0; u < 20; ++u)
    for (NodeId v : g.neighbors(u))
      if (u < v) edges.emplace_back(perm(u), perm(v));
  Graph h = Graph::from_edges(20, std::move(edges));

  for (auto [u, v] : std::vector<std::pair<NodeId, NodeId>>{{0, 1}, {3, 11}, {5, 19}}) {
    EnclosingSubgraph a = extract_enclosing_subgraph(g, u, v, 2);
    EnclosingSubgraph b = extract_enclosing_subgraph(h, perm(u), perm(v), 2);
    CHECK(a.num_nodes() == b.num_nodes());
    CHECK(a.num_edges() == b.num_edges());
    std::multiset<int> la, lb;
    for (int x : drnl_label(a)) la.insert(x);
    for (int x : drnl_label(b)) lb.insert(x);
    CHECK(la == lb);
  }
}

TEST_CASE("feature assembly") {
  Graph g = Graph::from_edges(3, {{0, 1}, {1, 2}, {2, 0}});
  EnclosingSubgraph sub = extract_enclosing_subgraph(g, 0, 1, 1);
  std::vector<int> labels = drnl_label(sub);

  SUBCASE("drnl_only width is max_label+1") {
    FeatureMatrix fm = assemble_features(sub, labels, nullptr, 10, FeatureMode::drnl_only);
    CHECK(fm.x.rows() == 3);
    CHECK(fm.x.cols() == 11);
    CHECK(fm.label_width == 11);
    CHECK(fm.side_width == 0);
    for (std::int64_t r = 0; r < 3; ++r) {
      double sum = 0;
      for (std::int64_t c = 0; c < 11; ++c) sum += fm.x.at(r, c);
      CHECK(sum == 1.0);  // one-hot
    }
    CHECK(fm.x.at(0, 1) == 1.0);  // target label 1
  }
  SUBCASE("side features concatenate after the DRNL block") {
    Tensor side = Tensor::from({3, 2}, {10, 11, 20, 21, 30, 31});
    FeatureMatrix fm = assemble_features(sub, labels, &side, 10, FeatureMode::drnl_plus_embed);
    CHECK(fm.x.cols() == 13);
    CHECK(fm.x.at(0, 11) == 10.0);  // node 0's side row
    CHECK(fm.x.at(2, 12) == 31.0);  // node 2's side row
  }
  SUBCASE("overflow labels share the cap slot") {
    std::vector<int> big{1, 1, 25};
    FeatureMatrix fm = assemble_features(sub, big, nullptr, 10, FeatureMode::drnl_only);
    CHECK(fm.x.at(2, 10) == 1.0);
  }
  SUBCASE("missing side vector names the node") {
    Tensor side = Tensor::from({2, 2}, {1, 2, 3, 4});  // node 2 has no row
    CHECK_THROWS_WITH_AS(
        assemble_features(sub, labels, &side, 10, FeatureMode::drnl_plus_embed),
        doctest::Contains("2"), ContractError);
  }
  SUBCASE("side table required outside drnl_only") {
    CHECK_THROWS_AS(assemble_features(sub, labels, nullptr, 10, FeatureMode::drnl_plus_embed),
                    ContractError);
  }
}
