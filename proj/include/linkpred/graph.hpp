#pragma once
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace linkpred {

using NodeId = std::int32_t;

// Immutable undirected graph in compressed adjacency form. Neighbor lists are
// sorted ascending, hold no duplicates and no self-loops, and are symmetric.
class Graph {
 public:
  Graph() = default;

  // Builds from an (unsorted, possibly duplicated) undirected edge list over
  // compact ids in [0, num_nodes). Self-loops must already be removed.
  static Graph from_edges(NodeId num_nodes, std::vector<std::pair<NodeId, NodeId>> edges);

  NodeId num_nodes() const { return num_nodes_; }
  std::int64_t num_edges() const { return num_edges_; }

  std::span<const NodeId> neighbors(NodeId u) const;
  NodeId degree(NodeId u) const;
  bool has_edge(NodeId u, NodeId v) const;

  // Compact id -> id used in the input file. Identity when built in-process.
  const std::vector<std::int64_t>& original_ids() const { return original_ids_; }
  void set_original_ids(std::vector<std::int64_t> ids) { original_ids_ = std::move(ids); }

  // Copy with the given undirected edges deleted; unknown edges are ignored.
  Graph without_edges(const std::vector<std::pair<NodeId, NodeId>>& edges) const;

  // FNV-1a over the adjacency structure; used for provenance stamps.
  std::uint64_t structure_hash() const;

  void check_range(NodeId u, const char* op) const;

 private:
  NodeId num_nodes_ = 0;
  std::int64_t num_edges_ = 0;
  std::vector<std::int64_t> offsets_;  // size num_nodes+1
  std::vector<NodeId> adj_;            // size 2*num_edges
  std::vector<std::int64_t> original_ids_;
};

struct LoadResult {
  Graph graph;
  std::int64_t self_loops_dropped = 0;
  std::int64_t duplicate_lines_merged = 0;
};

// Reads "u v" lines, '#' comment lines and blank lines ignored. Reversed and
// repeated lines merge into one undirected edge; self-loop lines are dropped
// and counted. Node ids are compacted to 0..n-1 in ascending original order.
LoadResult load_edge_list(const std::string& path);

// adj(u) together with u itself.
std::vector<NodeId> neighbors_closed(const Graph& g, NodeId u);

// All nodes outside the closed neighborhood of u.
std::vector<NodeId> non_neighbors(const Graph& g, NodeId u);

// Nodes that participate in at least one triangle.
std::vector<NodeId> query_nodes(const Graph& g);

// Per-query 70/10/20 split of neighbors (positives) and non-neighbors
// (negatives), deterministic in (g, q, seed). Lists are sorted ascending.
struct QuerySplit {
  NodeId query = -1;
  std::vector<NodeId> train_pos, val_pos, test_pos;
  std::vector<NodeId> train_neg, val_neg, test_neg;
  std::uint64_t seed = 0;
};

QuerySplit split_per_query(const Graph& g, NodeId q, std::uint64_t seed);

// Largest-remainder apportionment of n items into the 70/10/20 fractions.
// Leftover slots go to the largest fractional parts; ties favor the later
// split so low-degree queries keep a test positive.
struct SplitSizes {
  std::int64_t train = 0, val = 0, test = 0;
};
SplitSizes split_sizes(std::int64_t n);

struct GraphStats {
  std::int64_t num_nodes = 0;
  std::int64_t num_edges = 0;
  std::int64_t diameter = 0;  // max BFS eccentricity over the largest component
  std::int64_t num_query_nodes = 0;
};

GraphStats graph_stats(const Graph& g);

// Every edge assigned to some query's validation or test positive list. The
// message-passing graph excludes all of them so no held-out edge leaks into
// training structure, regardless of which endpoint's split claimed it.
std::vector<std::pair<NodeId, NodeId>> holdout_edges(const std::vector<QuerySplit>& splits);

// g minus holdout_edges(splits).
Graph observed_graph(const Graph& g, const std::vector<QuerySplit>& splits);

}  // namespace linkpred
