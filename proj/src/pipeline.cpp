#include "linkpred/pipeline.hpp"

#include <algorithm>

#include "linkpred/errors.hpp"
#include "linkpred/parallel.hpp"
#include "linkpred/rng.hpp"

namespace linkpred {

FeatureMatrix pair_features(const FeatureContext& ctx, NodeId u, NodeId v,
                            EnclosingSubgraph* sub_out) {
  if (!ctx.observed) throw ContractError("pair_features: no observed graph");
  EnclosingSubgraph sub = extract_enclosing_subgraph(*ctx.observed, u, v, ctx.hops);
  auto labels = drnl_label(sub);
  FeatureMatrix fm = assemble_features(sub, labels, ctx.side, ctx.max_label, ctx.mode);
  if (sub_out) *sub_out = std::move(sub);
  return fm;
}

double score_candidate(const ModelParams& params, const GnnConfig& cfg,
                       const FeatureContext& ctx, NodeId u, NodeId v) {
  Tape tape(false);
  EnclosingSubgraph sub;
  FeatureMatrix fm = pair_features(ctx, u, v, &sub);
  return score_subgraph(tape, params, cfg, sub, fm).value();
}

Tensor score_candidate_taped(Tape& tape, const ModelParams& params, const GnnConfig& cfg,
                             const FeatureContext& ctx, NodeId u, NodeId v) {
  EnclosingSubgraph sub;
  FeatureMatrix fm = pair_features(ctx, u, v, &sub);
  return score_subgraph(tape, params, cfg, sub, fm);
}

std::vector<int> train_subgraph_sizes(const FeatureContext& ctx,
                                      const std::vector<QuerySplit>& splits, std::size_t cap) {
  std::vector<int> sizes;
  for (const auto& split : splits) {
    for (NodeId pos : split.train_pos) {
      if (sizes.size() >= cap) return sizes;
      sizes.push_back(static_cast<int>(
          extract_enclosing_subgraph(*ctx.observed, split.query, pos, ctx.hops).num_nodes()));
    }
  }
  if (sizes.empty()) throw ContractError("train_subgraph_sizes: no training positives");
  return sizes;
}

namespace {

std::vector<NodeId> capped(const std::vector<NodeId>& pool, int cap, std::uint64_t seed) {
  if (cap <= 0 || static_cast<std::size_t>(cap) >= pool.size()) return pool;
  auto shuffled = pool;
  Rng rng(seed);
  rng.shuffle(shuffled);
  shuffled.resize(static_cast<std::size_t>(cap));
  std::sort(shuffled.begin(), shuffled.end());
  return shuffled;
}

}  // namespace

std::vector<RankedList> rank_candidates(const ModelParams& params, const GnnConfig& cfg,
                                        const FeatureContext& ctx,
                                        const std::vector<QuerySplit>& splits, SplitPart part,
                                        int jobs, int neg_cap, std::uint64_t cap_seed) {
  std::vector<RankedList> lists(splits.size());
  parallel_for(splits.size(), jobs, [&](std::size_t qi) {
    const auto& split = splits[qi];
    const auto& pos = part == SplitPart::train ? split.train_pos
                     : part == SplitPart::val  ? split.val_pos
                                               : split.test_pos;
    const auto& neg_all = part == SplitPart::train ? split.train_neg
                          : part == SplitPart::val ? split.val_neg
                                                   : split.test_neg;
    auto neg = capped(neg_all, neg_cap,
                      derive_seed(cap_seed, "negcap", static_cast<std::uint64_t>(split.query)));
    std::vector<RankedEntry> entries;
    entries.reserve(pos.size() + neg.size());
    for (NodeId c : pos)
      entries.push_back({c, score_candidate(params, cfg, ctx, split.query, c), 1});
    for (NodeId c : neg)
      entries.push_back({c, score_candidate(params, cfg, ctx, split.query, c), 0});
    lists[qi] = make_ranked_list(split.query, std::move(entries));
  });
  return lists;
}

double validation_map(const ModelParams& params, const GnnConfig& cfg, const FeatureContext& ctx,
                      const std::vector<QuerySplit>& splits, int jobs, int neg_cap,
                      std::uint64_t cap_seed) {
  auto lists = rank_candidates(params, cfg, ctx, splits, SplitPart::val, jobs, neg_cap, cap_seed);
  return aggregate(lists).map;
}

}  // namespace linkpred
