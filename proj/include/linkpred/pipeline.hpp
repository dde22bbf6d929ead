#pragma once
#include <cstdint>
#include <vector>

#include "linkpred/gnn.hpp"
#include "linkpred/graph.hpp"
#include "linkpred/metrics.hpp"
#include "linkpred/subgraph.hpp"
#include "linkpred/tensor.hpp"

namespace linkpred {

// Everything needed to turn a candidate pair into GNN input. `side` is the
// embedding table (or raw attribute matrix) indexed by graph node id; null in
// drnl_only mode. Extraction happens on the observed graph, never the full one.
struct FeatureContext {
  const Graph* observed = nullptr;
  FeatureMode mode = FeatureMode::drnl_only;
  const Tensor* side = nullptr;
  int max_label = 10;
  int hops = 1;

  int feature_width() const {
    return max_label + 1 + (side ? static_cast<int>(side->cols()) : 0);
  }
};

FeatureMatrix pair_features(const FeatureContext& ctx, NodeId u, NodeId v,
                            EnclosingSubgraph* sub_out = nullptr);

// Frozen-parameter score; no tape recording.
double score_candidate(const ModelParams& params, const GnnConfig& cfg,
                       const FeatureContext& ctx, NodeId u, NodeId v);

Tensor score_candidate_taped(Tape& tape, const ModelParams& params, const GnnConfig& cfg,
                             const FeatureContext& ctx, NodeId u, NodeId v);

// Node counts of the train-positive subgraphs (for SortPooling sizing),
// sampled deterministically up to `cap` pairs.
std::vector<int> train_subgraph_sizes(const FeatureContext& ctx,
                                      const std::vector<QuerySplit>& splits,
                                      std::size_t cap = 500);

// One ranked list per query over its positive and negative candidates of the
// chosen split. neg_cap > 0 subsamples negatives per query (seeded).
enum class SplitPart { train, val, test };
std::vector<RankedList> rank_candidates(const ModelParams& params, const GnnConfig& cfg,
                                        const FeatureContext& ctx,
                                        const std::vector<QuerySplit>& splits, SplitPart part,
                                        int jobs, int neg_cap = 0, std::uint64_t cap_seed = 0);

double validation_map(const ModelParams& params, const GnnConfig& cfg, const FeatureContext& ctx,
                      const std::vector<QuerySplit>& splits, int jobs, int neg_cap = 0,
                      std::uint64_t cap_seed = 0);

}  // namespace linkpred
