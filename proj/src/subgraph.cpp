#include "linkpred/subgraph.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <string>

#include "linkpred/errors.hpp"

namespace linkpred {

namespace {

// Depth-limited BFS over the full graph; fills dist (-1 = beyond limit).
void ball_bfs(const Graph& g, NodeId src, int limit, std::vector<std::int32_t>& dist) {
  dist.assign(static_cast<std::size_t>(g.num_nodes()), -1);
  dist[static_cast<std::size_t>(src)] = 0;
  std::deque<NodeId> frontier{src};
  while (!frontier.empty()) {
    NodeId cur = frontier.front();
    frontier.pop_front();
    std::int32_t d = dist[static_cast<std::size_t>(cur)];
    if (d >= limit) continue;
    for (NodeId w : g.neighbors(cur))
      if (dist[static_cast<std::size_t>(w)] < 0) {
        dist[static_cast<std::size_t>(w)] = d + 1;
        frontier.push_back(w);
      }
  }
}

// BFS restricted to subgraph members with the target edge removed.
void member_bfs(const Graph& g, NodeId src, NodeId u, NodeId v, const std::vector<char>& member,
                std::vector<std::int32_t>& dist) {
  dist.assign(static_cast<std::size_t>(g.num_nodes()), -1);
  dist[static_cast<std::size_t>(src)] = 0;
  std::deque<NodeId> frontier{src};
  while (!frontier.empty()) {
    NodeId cur = frontier.front();
    frontier.pop_front();
    std::int32_t d = dist[static_cast<std::size_t>(cur)];
    for (NodeId w : g.neighbors(cur)) {
      if ((cur == u && w == v) || (cur == v && w == u)) continue;
      if (!member[static_cast<std::size_t>(w)] || dist[static_cast<std::size_t>(w)] >= 0) continue;
      dist[static_cast<std::size_t>(w)] = d + 1;
      frontier.push_back(w);
    }
  }
}

}  // namespace

EnclosingSubgraph extract_enclosing_subgraph(const Graph& g, NodeId u, NodeId v, int k) {
  g.check_range(u, "extract_enclosing_subgraph");
  g.check_range(v, "extract_enclosing_subgraph");
  if (u == v) throw ContractError("extract_enclosing_subgraph: u == v");
  if (k < 1) throw ContractError("extract_enclosing_subgraph: k must be >= 1");

  std::vector<std::int32_t> ball_u, ball_v;
  ball_bfs(g, u, k, ball_u);
  ball_bfs(g, v, k, ball_v);
  std::vector<char> member(static_cast<std::size_t>(g.num_nodes()), 0);
  for (std::size_t i = 0; i < member.size(); ++i)
    member[i] = (ball_u[i] >= 0 || ball_v[i] >= 0) ? 1 : 0;

  std::vector<std::int32_t> du, dv;
  member_bfs(g, u, u, v, member, du);
  member_bfs(g, v, u, v, member, dv);

  EnclosingSubgraph sub;
  sub.k = k;
  sub.nodes.push_back(u);
  sub.nodes.push_back(v);
  std::vector<NodeId> rest;
  for (std::size_t i = 0; i < member.size(); ++i) {
    NodeId id = static_cast<NodeId>(i);
    if (member[i] && id != u && id != v) rest.push_back(id);
  }
  constexpr std::int32_t kFar = std::numeric_limits<std::int32_t>::max();
  auto min_dist = [&](NodeId id) {
    std::int32_t a = du[static_cast<std::size_t>(id)], b = dv[static_cast<std::size_t>(id)];
    std::int32_t m = kFar;
    if (a >= 0) m = std::min(m, a);
    if (b >= 0) m = std::min(m, b);
    return m;
  };
  std::sort(rest.begin(), rest.end(), [&](NodeId a, NodeId b) {
    auto ma = min_dist(a), mb = min_dist(b);
    if (ma != mb) return ma < mb;
    return a < b;
  });
  sub.nodes.insert(sub.nodes.end(), rest.begin(), rest.end());

  std::vector<NodeId> local(static_cast<std::size_t>(g.num_nodes()), -1);
  for (std::size_t i = 0; i < sub.nodes.size(); ++i)
    local[static_cast<std::size_t>(sub.nodes[i])] = static_cast<NodeId>(i);

  sub.offsets.assign(sub.nodes.size() + 1, 0);
  sub.dist_u.reserve(sub.nodes.size());
  sub.dist_v.reserve(sub.nodes.size());
  for (std::size_t i = 0; i < sub.nodes.size(); ++i) {
    NodeId orig = sub.nodes[i];
    sub.dist_u.push_back(du[static_cast<std::size_t>(orig)]);
    sub.dist_v.push_back(dv[static_cast<std::size_t>(orig)]);
    std::size_t row_begin = sub.adj.size();
    for (NodeId w : g.neighbors(orig)) {
      if ((orig == u && w == v) || (orig == v && w == u)) continue;
      if (NodeId lw = local[static_cast<std::size_t>(w)]; lw >= 0) sub.adj.push_back(lw);
    }
    std::sort(sub.adj.begin() + static_cast<std::ptrdiff_t>(row_begin), sub.adj.end());
    sub.offsets[i + 1] = static_cast<std::int64_t>(sub.adj.size());
  }
  return sub;
}

int drnl_label_from_dists(int du, int dv) {
  if (du < 1 || dv < 1)
    throw ContractError("drnl_label_from_dists: distances must be >= 1, got (" +
                        std::to_string(du) + "," + std::to_string(dv) + ")");
  int d = du + dv;
  int h = d / 2;
  return 1 + std::min(du, dv) + h * (h + d % 2 - 1);
}

std::vector<int> drnl_label(const EnclosingSubgraph& sub) {
  std::vector<int> labels(sub.num_nodes(), 0);
  for (std::size_t i = 0; i < sub.num_nodes(); ++i) {
    if (i < 2) {
      labels[i] = 1;  // the target pair itself
      continue;
    }
    auto du = sub.dist_u[i], dv = sub.dist_v[i];
    labels[i] = (du < 0 || dv < 0) ? 0 : drnl_label_from_dists(du, dv);
  }
  return labels;
}

FeatureMatrix assemble_features(const EnclosingSubgraph& sub, const std::vector<int>& labels,
                                const Tensor* side, int max_label, FeatureMode mode) {
  if (labels.size() != sub.num_nodes())
    throw ContractError("assemble_features: " + std::to_string(labels.size()) + " labels for " +
                        std::to_string(sub.num_nodes()) + " nodes");
  if (max_label < 1) throw ContractError("assemble_features: max_label must be >= 1");
  if ((mode == FeatureMode::drnl_only) != (side == nullptr))
    throw ContractError("assemble_features: side table presence inconsistent with mode");

  const int label_width = max_label + 1;
  std::int64_t side_width = 0;
  if (side) side_width = side->cols();
  const std::int64_t width = label_width + side_width;
  const auto n = static_cast<std::int64_t>(sub.num_nodes());

  std::vector<double> rows(static_cast<std::size_t>(n * width), 0.0);
  for (std::int64_t i = 0; i < n; ++i) {
    int lab = std::min(labels[static_cast<std::size_t>(i)], max_label);
    rows[static_cast<std::size_t>(i * width + lab)] = 1.0;
    if (side) {
      NodeId orig = sub.nodes[static_cast<std::size_t>(i)];
      if (orig >= side->rows())
        throw ContractError("assemble_features: no side vector for node " + std::to_string(orig));
      auto src = side->data().subspan(static_cast<std::size_t>(orig * side_width),
                                      static_cast<std::size_t>(side_width));
      std::copy(src.begin(), src.end(),
                rows.begin() + static_cast<std::size_t>(i * width + label_width));
    }
  }

  FeatureMatrix fm;
  fm.x = Tensor::from({n, width}, std::move(rows));
  fm.label_width = label_width;
  fm.side_width = static_cast<int>(side_width);
  fm.mode = mode;
  return fm;
}

}  // namespace linkpred
