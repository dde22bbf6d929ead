#include "linkpred/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <queue>
#include <sstream>

#include "linkpred/errors.hpp"
#include "linkpred/rng.hpp"

namespace linkpred {

void Graph::check_range(NodeId u, const char* op) const {
  if (u < 0 || u >= num_nodes_)
    throw ContractError(std::string(op) + ": node id " + std::to_string(u) +
                        " out of range [0, " + std::to_string(num_nodes_) + ")");
}

Graph Graph::from_edges(NodeId num_nodes, std::vector<std::pair<NodeId, NodeId>> edges) {
  for (auto& [u, v] : edges) {
    if (u == v) throw ContractError("from_edges: self-loop " + std::to_string(u));
    if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes)
      throw ContractError("from_edges: endpoint out of range");
    if (u > v) std::swap(u, v);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  Graph g;
  g.num_nodes_ = num_nodes;
  g.num_edges_ = static_cast<std::int64_t>(edges.size());
  std::vector<std::int64_t> deg(static_cast<std::size_t>(num_nodes), 0);
  for (auto [u, v] : edges) {
    ++deg[static_cast<std::size_t>(u)];
    ++deg[static_cast<std::size_t>(v)];
  }
  g.offsets_.assign(static_cast<std::size_t>(num_nodes) + 1, 0);
  for (NodeId u = 0; u < num_nodes; ++u)
    g.offsets_[static_cast<std::size_t>(u) + 1] =
        g.offsets_[static_cast<std::size_t>(u)] + deg[static_cast<std::size_t>(u)];
  g.adj_.resize(static_cast<std::size_t>(2) * edges.size());
  std::vector<std::int64_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  for (auto [u, v] : edges) {
    g.adj_[static_cast<std::size_t>(cursor[static_cast<std::size_t>(u)]++)] = v;
    g.adj_[static_cast<std::size_t>(cursor[static_cast<std::size_t>(v)]++)] = u;
  }
  // Sorted edge insertion keeps each row ascending already; assert cheaply.
  for (NodeId u = 0; u < num_nodes; ++u) {
    auto row = g.neighbors(u);
    if (!std::is_sorted(row.begin(), row.end()))
      std::sort(g.adj_.begin() + g.offsets_[static_cast<std::size_t>(u)],
                g.adj_.begin() + g.offsets_[static_cast<std::size_t>(u) + 1]);
  }
  g.original_ids_.resize(static_cast<std::size_t>(num_nodes));
  for (NodeId u = 0; u < num_nodes; ++u) g.original_ids_[static_cast<std::size_t>(u)] = u;
  return g;
}

std::span<const NodeId> Graph::neighbors(NodeId u) const {
  check_range(u, "neighbors");
  auto b = offsets_[static_cast<std::size_t>(u)];
  auto e = offsets_[static_cast<std::size_t>(u) + 1];
  return {adj_.data() + b, static_cast<std::size_t>(e - b)};
}

NodeId Graph::degree(NodeId u) const {
  check_range(u, "degree");
  return static_cast<NodeId>(offsets_[static_cast<std::size_t>(u) + 1] -
                             offsets_[static_cast<std::size_t>(u)]);
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  check_range(u, "has_edge");
  check_range(v, "has_edge");
  auto row = neighbors(u);
  return std::binary_search(row.begin(), row.end(), v);
}

Graph Graph::without_edges(const std::vector<std::pair<NodeId, NodeId>>& edges) const {
  std::vector<std::pair<NodeId, NodeId>> drop;
  drop.reserve(edges.size());
  for (auto [u, v] : edges) {
    if (u > v) std::swap(u, v);
    drop.emplace_back(u, v);
  }
  std::sort(drop.begin(), drop.end());
  drop.erase(std::unique(drop.begin(), drop.end()), drop.end());

  std::vector<std::pair<NodeId, NodeId>> kept;
  kept.reserve(static_cast<std::size_t>(num_edges_));
  for (NodeId u = 0; u < num_nodes_; ++u) {
    for (NodeId v : neighbors(u)) {
      if (u < v && !std::binary_search(drop.begin(), drop.end(), std::make_pair(u, v)))
        kept.emplace_back(u, v);
    }
  }
  Graph g = from_edges(num_nodes_, std::move(kept));
  g.original_ids_ = original_ids_;
  return g;
}

std::uint64_t Graph::structure_hash() const {
  std::uint64_t h = 1469598103934665603ull;
  auto feed = [&h](std::uint64_t x) {
    for (int i = 0; i < 8; ++i) {
      h ^= (x >> (8 * i)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  feed(static_cast<std::uint64_t>(num_nodes_));
  feed(static_cast<std::uint64_t>(num_edges_));
  for (NodeId v : adj_) feed(static_cast<std::uint64_t>(v));
  return h;
}

LoadResult load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge list: " + path);

  std::vector<std::pair<std::int64_t, std::int64_t>> raw;
  std::int64_t self_loops = 0;
  std::string line;
  std::int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t i = line.find_first_not_of(" \t\r");
    if (i == std::string::npos) continue;
    if (line[i] == '#') continue;
    std::istringstream ls(line);
    std::int64_t u, v;
    std::string extra;
    if (!(ls >> u >> v) || u < 0 || v < 0 || (ls >> extra)) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": malformed edge line (want two non-negative integer ids): " + line);
    }
    if (u == v) {
      ++self_loops;
      continue;
    }
    if (u > v) std::swap(u, v);
    raw.emplace_back(u, v);
  }
  const std::int64_t total_lines = static_cast<std::int64_t>(raw.size());
  std::sort(raw.begin(), raw.end());
  raw.erase(std::unique(raw.begin(), raw.end()), raw.end());
  if (raw.empty()) throw DataError(path + ": empty edge set");

  // Compact ids, ascending by original id.
  std::vector<std::int64_t> ids;
  ids.reserve(raw.size() * 2);
  for (auto [u, v] : raw) {
    ids.push_back(u);
    ids.push_back(v);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(raw.size());
  auto compact = [&ids](std::int64_t x) {
    return static_cast<NodeId>(std::lower_bound(ids.begin(), ids.end(), x) - ids.begin());
  };
  for (auto [u, v] : raw) edges.emplace_back(compact(u), compact(v));

  LoadResult r;
  r.graph = Graph::from_edges(static_cast<NodeId>(ids.size()), std::move(edges));
  r.graph.set_original_ids(std::move(ids));
  r.self_loops_dropped = self_loops;
  r.duplicate_lines_merged = total_lines - r.graph.num_edges();
  return r;
}

std::vector<NodeId> neighbors_closed(const Graph& g, NodeId u) {
  g.check_range(u, "neighbors_closed");
  auto row = g.neighbors(u);
  std::vector<NodeId> out;
  out.reserve(row.size() + 1);
  bool placed = false;
  for (NodeId v : row) {
    if (!placed && u < v) {
      out.push_back(u);
      placed = true;
    }
    out.push_back(v);
  }
  if (!placed) out.push_back(u);
  return out;
}

std::vector<NodeId> non_neighbors(const Graph& g, NodeId u) {
  g.check_range(u, "non_neighbors");
  auto closed = neighbors_closed(g, u);
  std::vector<NodeId> out;
  out.reserve(static_cast<std::size_t>(g.num_nodes()) - closed.size());
  std::size_t k = 0;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (k < closed.size() && closed[k] == v) {
      ++k;
      continue;
    }
    out.push_back(v);
  }
  return out;
}

std::vector<NodeId> query_nodes(const Graph& g) {
  std::vector<char> in_triangle(static_cast<std::size_t>(g.num_nodes()), 0);
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    auto au = g.neighbors(u);
    for (NodeId v : au) {
      if (v <= u) continue;
      auto av = g.neighbors(v);
      // Sorted-merge intersection of adj(u) and adj(v).
      std::size_t i = 0, j = 0;
      while (i < au.size() && j < av.size()) {
        if (au[i] < av[j])
          ++i;
        else if (au[i] > av[j])
          ++j;
        else {
          in_triangle[static_cast<std::size_t>(u)] = 1;
          in_triangle[static_cast<std::size_t>(v)] = 1;
          in_triangle[static_cast<std::size_t>(au[i])] = 1;
          ++i;
          ++j;
        }
      }
    }
  }
  std::vector<NodeId> out;
  for (NodeId u = 0; u < g.num_nodes(); ++u)
    if (in_triangle[static_cast<std::size_t>(u)]) out.push_back(u);
  return out;
}

SplitSizes split_sizes(std::int64_t n) {
  const double frac[3] = {0.7, 0.1, 0.2};
  std::int64_t base[3];
  double rem[3];
  std::int64_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    double share = frac[i] * static_cast<double>(n);
    base[i] = static_cast<std::int64_t>(share);
    rem[i] = share - static_cast<double>(base[i]);
    assigned += base[i];
  }
  std::int64_t left = n - assigned;
  // Hand out leftovers by descending fractional part; ties go to the later
  // split (test, then val) so degree-2 queries remain evaluable.
  int order[3] = {2, 1, 0};
  std::sort(order, order + 3, [&](int a, int b) {
    if (rem[a] != rem[b]) return rem[a] > rem[b];
    return a > b;
  });
  for (int k = 0; k < 3 && left > 0; ++k, --left) ++base[order[k]];
  return {base[0], base[1], base[2]};
}

QuerySplit split_per_query(const Graph& g, NodeId q, std::uint64_t seed) {
  g.check_range(q, "split_per_query");
  {
    bool in_triangle = false;
    auto aq = g.neighbors(q);
    for (NodeId v : aq) {
      auto av = g.neighbors(v);
      std::size_t i = 0, j = 0;
      while (i < aq.size() && j < av.size()) {
        if (aq[i] < av[j])
          ++i;
        else if (aq[i] > av[j])
          ++j;
        else {
          in_triangle = true;
          break;
        }
      }
      if (in_triangle) break;
    }
    if (!in_triangle)
      throw ContractError("split_per_query: node " + std::to_string(q) +
                          " participates in no triangle");
  }
  QuerySplit s;
  s.query = q;
  s.seed = seed;

  auto cut = [](std::vector<NodeId> pool, Rng& rng, std::vector<NodeId>& tr,
                std::vector<NodeId>& va, std::vector<NodeId>& te) {
    SplitSizes sz = split_sizes(static_cast<std::int64_t>(pool.size()));
    rng.shuffle(pool);
    tr.assign(pool.begin(), pool.begin() + sz.train);
    va.assign(pool.begin() + sz.train, pool.begin() + sz.train + sz.val);
    te.assign(pool.begin() + sz.train + sz.val, pool.end());
    std::sort(tr.begin(), tr.end());
    std::sort(va.begin(), va.end());
    std::sort(te.begin(), te.end());
  };

  auto row = g.neighbors(q);
  std::vector<NodeId> pos(row.begin(), row.end());
  std::vector<NodeId> neg = non_neighbors(g, q);
  Rng rng_pos(derive_seed(seed, "split/pos", static_cast<std::uint64_t>(q)));
  Rng rng_neg(derive_seed(seed, "split/neg", static_cast<std::uint64_t>(q)));
  cut(std::move(pos), rng_pos, s.train_pos, s.val_pos, s.test_pos);
  cut(std::move(neg), rng_neg, s.train_neg, s.val_neg, s.test_neg);
  return s;
}

namespace {

// Returns eccentricity of src within its component, and the component nodes.
std::int64_t bfs_eccentricity(const Graph& g, NodeId src, std::vector<std::int32_t>& dist) {
  std::fill(dist.begin(), dist.end(), -1);
  std::queue<NodeId> q;
  q.push(src);
  dist[static_cast<std::size_t>(src)] = 0;
  std::int64_t ecc = 0;
  while (!q.empty()) {
    NodeId u = q.front();
    q.pop();
    for (NodeId v : g.neighbors(u)) {
      if (dist[static_cast<std::size_t>(v)] < 0) {
        dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
        ecc = std::max<std::int64_t>(ecc, dist[static_cast<std::size_t>(v)]);
        q.push(v);
      }
    }
  }
  return ecc;
}

}  // namespace

GraphStats graph_stats(const Graph& g) {
  GraphStats st;
  st.num_nodes = g.num_nodes();
  st.num_edges = g.num_edges();
  st.num_query_nodes = static_cast<std::int64_t>(query_nodes(g).size());

  // Largest connected component (ties to the one with the smallest node).
  std::vector<std::int32_t> comp(static_cast<std::size_t>(g.num_nodes()), -1);
  std::int32_t ncomp = 0;
  std::vector<std::int64_t> comp_size;
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    if (comp[static_cast<std::size_t>(u)] >= 0) continue;
    std::queue<NodeId> q;
    q.push(u);
    comp[static_cast<std::size_t>(u)] = ncomp;
    std::int64_t size = 0;
    while (!q.empty()) {
      NodeId x = q.front();
      q.pop();
      ++size;
      for (NodeId v : g.neighbors(x)) {
        if (comp[static_cast<std::size_t>(v)] < 0) {
          comp[static_cast<std::size_t>(v)] = ncomp;
          q.push(v);
        }
      }
    }
    comp_size.push_back(size);
    ++ncomp;
  }
  std::int32_t biggest = 0;
  for (std::int32_t c = 1; c < ncomp; ++c)
    if (comp_size[static_cast<std::size_t>(c)] > comp_size[static_cast<std::size_t>(biggest)])
      biggest = c;

  std::vector<std::int32_t> dist(static_cast<std::size_t>(g.num_nodes()));
  std::int64_t diameter = 0;
  for (NodeId u = 0; u < g.num_nodes(); ++u)
    if (comp[static_cast<std::size_t>(u)] == biggest)
      diameter = std::max(diameter, bfs_eccentricity(g, u, dist));
  st.diameter = diameter;
  return st;
}

std::vector<std::pair<NodeId, NodeId>> holdout_edges(const std::vector<QuerySplit>& splits) {
  std::vector<std::pair<NodeId, NodeId>> out;
  for (const auto& s : splits) {
    for (NodeId v : s.val_pos)
      out.emplace_back(std::min(s.query, v), std::max(s.query, v));
    for (NodeId v : s.test_pos)
      out.emplace_back(std::min(s.query, v), std::max(s.query, v));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Graph observed_graph(const Graph& g, const std::vector<QuerySplit>& splits) {
  return g.without_edges(holdout_edges(splits));
}

}  // namespace linkpred
