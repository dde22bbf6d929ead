#include "linkpred/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <unordered_map>

#include "linkpred/errors.hpp"

namespace linkpred {

RankedList make_ranked_list(NodeId query, std::vector<RankedEntry> entries) {
  for (const auto& e : entries)
    if (e.label != 0 && e.label != 1)
      throw ContractError("ranked entry label must be 0 or 1, got " + std::to_string(e.label));
  std::sort(entries.begin(), entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.candidate < b.candidate;
  });
  return RankedList{query, std::move(entries)};
}

int count_positives(const RankedList& list) {
  int n = 0;
  for (const auto& e : list.entries) n += e.label;
  return n;
}

double average_precision(const RankedList& list) {
  int total_pos = count_positives(list);
  if (total_pos == 0)
    throw ContractError("average_precision: no positives for query " +
                        std::to_string(list.query));
  double sum = 0.0;
  int seen_pos = 0;
  for (std::size_t i = 0; i < list.entries.size(); ++i) {
    if (list.entries[i].label == 1) {
      ++seen_pos;
      sum += static_cast<double>(seen_pos) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(total_pos);
}

double reciprocal_rank(const RankedList& list) {
  for (std::size_t i = 0; i < list.entries.size(); ++i)
    if (list.entries[i].label == 1) return 1.0 / static_cast<double>(i + 1);
  throw ContractError("reciprocal_rank: no positives for query " + std::to_string(list.query));
}

EvalReport aggregate(const std::vector<RankedList>& lists) {
  EvalReport report;
  double ap_sum = 0.0, rr_sum = 0.0;
  for (const auto& list : lists) {
    if (count_positives(list) == 0) {
      ++report.skipped;
      continue;
    }
    double ap = average_precision(list);
    double rr = reciprocal_rank(list);
    report.queries.push_back(list.query);
    report.ap.push_back(ap);
    report.rr.push_back(rr);
    ap_sum += ap;
    rr_sum += rr;
  }
  if (report.queries.empty())
    throw DataError("aggregate: every query was skipped (no test positives)");
  report.map = ap_sum / static_cast<double>(report.queries.size());
  report.mrr = rr_sum / static_cast<double>(report.queries.size());
  return report;
}

GainReport gain_report(const EvalReport& ours, const EvalReport& baseline) {
  auto sorted_queries = [](const EvalReport& r) {
    auto q = r.queries;
    std::sort(q.begin(), q.end());
    return q;
  };
  if (sorted_queries(ours) != sorted_queries(baseline)) {
    std::ostringstream os;
    os << "gain_report: query sets differ;";
    auto a = sorted_queries(ours), b = sorted_queries(baseline);
    std::vector<NodeId> only_a, only_b;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(only_a));
    std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(only_b));
    os << " only in first:";
    for (auto q : only_a) os << ' ' << q;
    os << "; only in second:";
    for (auto q : only_b) os << ' ' << q;
    throw ContractError(os.str());
  }

  std::unordered_map<NodeId, double> base_ap;
  for (std::size_t i = 0; i < baseline.queries.size(); ++i)
    base_ap[baseline.queries[i]] = baseline.ap[i];

  GainReport out;
  int positive = 0;
  for (std::size_t i = 0; i < ours.queries.size(); ++i) {
    GainRow row;
    row.query = ours.queries[i];
    row.ap_ours = ours.ap[i];
    row.ap_baseline = base_ap.at(row.query);
    row.gain = row.ap_ours - row.ap_baseline;
    if (row.gain > 0.0) ++positive;
    out.rows.push_back(row);
  }
  std::sort(out.rows.begin(), out.rows.end(), [](const GainRow& a, const GainRow& b) {
    if (a.gain != b.gain) return a.gain > b.gain;
    return a.query < b.query;
  });
  out.positive_fraction =
      ours.queries.empty() ? 0.0 : static_cast<double>(positive) / static_cast<double>(ours.queries.size());
  return out;
}

}  // namespace linkpred
