#pragma once
#include <cstdint>
#include <span>
#include <vector>

#include "linkpred/graph.hpp"
#include "linkpred/tensor.hpp"

namespace linkpred {

// K-hop pair-centered subgraph. Node 0 is u, node 1 is v; remaining nodes are
// ordered by (min hop distance, original id). The candidate edge (u,v) is
// never present in the local adjacency, and distances are measured after its
// removal.
struct EnclosingSubgraph {
  std::vector<NodeId> nodes;          // original ids
  std::vector<std::int64_t> offsets;  // local CSR
  std::vector<NodeId> adj;            // local neighbor ids, sorted per row
  std::vector<std::int32_t> dist_u;   // -1 = unreachable
  std::vector<std::int32_t> dist_v;
  int k = 0;

  std::size_t num_nodes() const { return nodes.size(); }
  std::size_t num_edges() const { return adj.size() / 2; }
  std::span<const NodeId> neighbors(NodeId local) const {
    return {adj.data() + offsets[static_cast<std::size_t>(local)],
            adj.data() + offsets[static_cast<std::size_t>(local) + 1]};
  }
};

EnclosingSubgraph extract_enclosing_subgraph(const Graph& g, NodeId u, NodeId v, int k);

// f = 1 + min(du,dv) + (d/2)(d/2 + d%2 - 1) with d = du+dv, injective over
// (min, d) classes. Both distances must be >= 1 (non-target, reachable).
int drnl_label_from_dists(int du, int dv);

// Per-node labels: targets get 1, unreachable nodes get 0.
std::vector<int> drnl_label(const EnclosingSubgraph& sub);

enum class FeatureMode { drnl_only, drnl_plus_embed, drnl_plus_attr };

struct FeatureMatrix {
  Tensor x;  // num_nodes × (label_width + side_width)
  int label_width = 0;
  int side_width = 0;
  FeatureMode mode = FeatureMode::drnl_only;
};

// Row i = onehot(min(label_i, max_label)) ⊕ side row for nodes[i]. The side
// table is indexed by original node id; null only in drnl_only mode.
FeatureMatrix assemble_features(const EnclosingSubgraph& sub, const std::vector<int>& labels,
                                const Tensor* side, int max_label, FeatureMode mode);

}  // namespace linkpred
