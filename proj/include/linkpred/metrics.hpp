#pragma once
#include <vector>

#include "linkpred/graph.hpp"

namespace linkpred {

struct RankedEntry {
  NodeId candidate = -1;
  double score = 0.0;
  int label = 0;  // 1 = true link
};

// Entries sorted by score descending, ties by candidate id ascending.
struct RankedList {
  NodeId query = -1;
  std::vector<RankedEntry> entries;
};

RankedList make_ranked_list(NodeId query, std::vector<RankedEntry> entries);
int count_positives(const RankedList& list);

// AP = (1/#pos) Σ_{rank i with label 1} (#pos among top-i)/i, summed in rank
// order with a single final division so independent implementations agree
// bit-for-bit. Requires at least one positive.
double average_precision(const RankedList& list);

// 1 / rank of the first positive. Requires at least one positive.
double reciprocal_rank(const RankedList& list);

struct EvalReport {
  std::vector<NodeId> queries;  // evaluated queries, in input order
  std::vector<double> ap;
  std::vector<double> rr;
  double map = 0.0;
  double mrr = 0.0;
  int skipped = 0;  // queries with no positive candidates
};

// Means over queries holding at least one positive; lists without positives
// are counted as skipped. Throws when nothing is evaluable.
EvalReport aggregate(const std::vector<RankedList>& lists);

struct GainRow {
  NodeId query = -1;
  double ap_ours = 0.0;
  double ap_baseline = 0.0;
  double gain = 0.0;
};

struct GainReport {
  std::vector<GainRow> rows;  // sorted by gain descending, ties by query id
  double positive_fraction = 0.0;
};

GainReport gain_report(const EvalReport& ours, const EvalReport& baseline);

}  // namespace linkpred
