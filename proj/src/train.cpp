#include "linkpred/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "linkpred/errors.hpp"
#include "linkpred/parallel.hpp"
#include "linkpred/rng.hpp"

namespace linkpred {

namespace {

double softplus_val(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }

double sigmoid_val(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

double bce_loss(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw ContractError("bce_loss: " + std::to_string(scores.size()) + " scores vs " +
                        std::to_string(labels.size()) + " labels");
  double loss = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1)
      throw ContractError("bce_loss: label must be 0 or 1, got " + std::to_string(labels[i]));
    loss += labels[i] == 1 ? softplus_val(-scores[i]) : softplus_val(scores[i]);
  }
  return loss;
}

double ranking_loss(const std::vector<std::vector<double>>& pos_by_query,
                    const std::vector<std::vector<double>>& neg_by_query, double delta) {
  if (pos_by_query.size() != neg_by_query.size())
    throw ContractError("ranking_loss: query count mismatch");
  double loss = 0.0;
  for (std::size_t q = 0; q < pos_by_query.size(); ++q)
    for (double sp : pos_by_query[q])
      for (double sn : neg_by_query[q]) loss += std::max(0.0, sn - sp + delta);
  return loss;
}

Tensor bce_loss_taped(Tape& tape, const Tensor& scores, const std::vector<int>& labels) {
  if (scores.shape().size() != 1 ||
      scores.shape()[0] != static_cast<std::int64_t>(labels.size()))
    throw ContractError("bce_loss_taped: scores/labels mismatch");
  std::vector<double> pos_mask(labels.size()), neg_mask(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    pos_mask[i] = labels[i] == 1 ? 1.0 : 0.0;
    neg_mask[i] = 1.0 - pos_mask[i];
  }
  Shape shape{static_cast<std::int64_t>(labels.size())};
  Tensor m1 = Tensor::from(shape, std::move(pos_mask));
  Tensor m0 = Tensor::from(shape, std::move(neg_mask));
  Tensor sp_neg = tape.softplus(tape.scale(scores, -1.0));
  Tensor sp_pos = tape.softplus(scores);
  return tape.reduce_sum(tape.add(tape.hadamard(m1, sp_neg), tape.hadamard(m0, sp_pos)));
}

Tensor ranking_loss_taped(Tape& tape, const Tensor& pos, const Tensor& neg, double delta) {
  if (pos.shape().size() != 1 || neg.shape().size() != 1)
    throw ContractError("ranking_loss_taped: expected rank-1 score vectors");
  const auto np = pos.shape()[0], nn = neg.shape()[0];
  Tensor pos_col = tape.reshape(pos, {np, 1});
  Tensor ones_row = Tensor::constant({1, nn}, 1.0);
  Tensor rep = tape.matmul(pos_col, ones_row);               // rep[p][n] = s_p
  Tensor diff = tape.add_rowwise(tape.scale(rep, -1.0), neg);  // s_n − s_p
  return tape.reduce_sum(tape.relu(tape.add_scalar(diff, delta)));
}

void adam_step(ModelParams& params, const std::vector<std::vector<double>>& grads,
               AdamState& state, double lr) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  if (grads.size() != params.items.size())
    throw ContractError("adam_step: gradient count does not match parameter count");
  if (state.m.empty()) {
    state.m.resize(params.items.size());
    state.v.resize(params.items.size());
    for (std::size_t i = 0; i < params.items.size(); ++i) {
      auto n = static_cast<std::size_t>(params.items[i].second.numel());
      state.m[i].assign(n, 0.0);
      state.v[i].assign(n, 0.0);
    }
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.items.size(); ++i) {
    auto& [name, tensor] = params.items[i];
    const auto& g = grads[i];
    if (g.size() != static_cast<std::size_t>(tensor.numel()))
      throw ContractError("adam_step: gradient size mismatch for " + name);
    for (double gv : g)
      if (!std::isfinite(gv)) throw NumericError("non-finite gradient for parameter " + name);
    auto data = tensor.data();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < g.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      data[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps);
    }
  }
}

bool EarlyStopper::observe(int epoch, double value) {
  if (value > best) {
    best = value;
    best_epoch = epoch;
    since_improvement = 0;
    return false;
  }
  ++since_improvement;
  return since_improvement >= patience;
}

namespace {

struct PairEval {
  double score = 0.0;
  Gradients grads;
};

// dL/ds-weighted sum of per-pair parameter gradients, in slot order.
void accumulate(const ModelParams& params, const std::vector<PairEval>& evals,
                const std::vector<double>& coeffs, std::vector<std::vector<double>>& acc) {
  for (std::size_t e = 0; e < evals.size(); ++e) {
    if (coeffs[e] == 0.0) continue;
    for (std::size_t p = 0; p < params.items.size(); ++p) {
      const auto* g = evals[e].grads.find(params.items[p].second);
      if (!g) continue;
      auto& dst = acc[p];
      for (std::size_t j = 0; j < g->size(); ++j) dst[j] += coeffs[e] * (*g)[j];
    }
  }
}

std::vector<std::vector<double>> zero_grads(const ModelParams& params) {
  std::vector<std::vector<double>> acc(params.items.size());
  for (std::size_t p = 0; p < params.items.size(); ++p)
    acc[p].assign(static_cast<std::size_t>(params.items[p].second.numel()), 0.0);
  return acc;
}

std::vector<NodeId> sample_from(const std::vector<NodeId>& pool, std::size_t want, Rng& rng) {
  if (want >= pool.size()) return pool;
  auto copy = pool;
  rng.shuffle(copy);
  copy.resize(want);
  return copy;
}

struct TrainPair {
  NodeId query;
  NodeId candidate;
  int label;
};

}  // namespace

TrainResult train_model(const std::vector<QuerySplit>& splits, const FeatureContext& ctx,
                        const GnnConfig& cfg, const TrainConfig& tcfg, int jobs) {
  if (splits.empty()) throw ContractError("train_model: no query splits");
  if (tcfg.lr <= 0.0) throw ConfigError("train lr must be positive");
  if (tcfg.patience < 1) throw ConfigError("patience must be >= 1");
  validate_config(cfg);

  const std::uint64_t seed = tcfg.seed;
  ModelParams params = init_params(cfg, ctx.feature_width(), derive_seed(seed, "init"));
  AdamState state;
  TrainResult result;
  result.margin = tcfg.margin;
  result.params = params.clone();
  EarlyStopper stopper{tcfg.patience};

  for (int epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
    auto epoch_start = std::chrono::steady_clock::now();
    double loss_sum = 0.0;
    std::int64_t loss_terms = 0;

    if (tcfg.loss == LossKind::bce) {
      std::vector<TrainPair> pairs;
      for (const auto& split : splits) {
        for (NodeId pos : split.train_pos) pairs.push_back({split.query, pos, 1});
        Rng rq(derive_seed(seed, "bce/neg", static_cast<std::uint64_t>(epoch),
                           static_cast<std::uint64_t>(split.query)));
        auto negs = sample_from(split.train_neg,
                                split.train_pos.size() * static_cast<std::size_t>(tcfg.neg_per_pos),
                                rq);
        for (NodeId neg : negs) pairs.push_back({split.query, neg, 0});
      }
      Rng order_rng(derive_seed(seed, "bce/order", static_cast<std::uint64_t>(epoch)));
      order_rng.shuffle(pairs);

      for (std::size_t start = 0; start < pairs.size(); start += static_cast<std::size_t>(tcfg.batch_size)) {
        std::size_t count = std::min(pairs.size() - start, static_cast<std::size_t>(tcfg.batch_size));
        std::vector<PairEval> evals(count);
        parallel_for(count, jobs, [&](std::size_t i) {
          const auto& pr = pairs[start + i];
          Tape tape;
          Tensor s = score_candidate_taped(tape, params, cfg, ctx, pr.query, pr.candidate);
          evals[i].score = s.value();
          evals[i].grads = tape.backward(s);
        });
        std::vector<double> coeffs(count);
        for (std::size_t i = 0; i < count; ++i) {
          const auto& pr = pairs[start + i];
          loss_sum += pr.label == 1 ? softplus_val(-evals[i].score) : softplus_val(evals[i].score);
          coeffs[i] = (sigmoid_val(evals[i].score) - static_cast<double>(pr.label)) /
                      static_cast<double>(count);
        }
        loss_terms += static_cast<std::int64_t>(count);
        auto acc = zero_grads(params);
        accumulate(params, evals, coeffs, acc);
        adam_step(params, acc, state, tcfg.lr);
      }
    } else {
      std::vector<std::size_t> query_order(splits.size());
      for (std::size_t i = 0; i < query_order.size(); ++i) query_order[i] = i;
      Rng order_rng(derive_seed(seed, "rank/order", static_cast<std::uint64_t>(epoch)));
      order_rng.shuffle(query_order);

      for (std::size_t qi : query_order) {
        const auto& split = splits[qi];
        if (split.train_pos.empty() || split.train_neg.empty()) continue;
        Rng rq(derive_seed(seed, "rank/sample", static_cast<std::uint64_t>(epoch),
                           static_cast<std::uint64_t>(split.query)));
        auto pos = sample_from(split.train_pos, static_cast<std::size_t>(tcfg.rank_pos_cap), rq);
        auto neg = sample_from(split.train_neg, static_cast<std::size_t>(tcfg.rank_neg_cap), rq);

        std::vector<TrainPair> cands;
        for (NodeId c : pos) cands.push_back({split.query, c, 1});
        for (NodeId c : neg) cands.push_back({split.query, c, 0});
        std::vector<PairEval> evals(cands.size());
        parallel_for(cands.size(), jobs, [&](std::size_t i) {
          Tape tape;
          Tensor s = score_candidate_taped(tape, params, cfg, ctx, cands[i].query,
                                           cands[i].candidate);
          evals[i].score = s.value();
          evals[i].grads = tape.backward(s);
        });

        const std::size_t np = pos.size(), nn = neg.size();
        const double norm = static_cast<double>(np * nn);
        std::vector<double> coeffs(cands.size(), 0.0);
        for (std::size_t p = 0; p < np; ++p)
          for (std::size_t n = 0; n < nn; ++n) {
            double margin = evals[np + n].score - evals[p].score + tcfg.margin;
            if (margin > 0.0) {
              loss_sum += margin;
              coeffs[p] -= 1.0 / norm;
              coeffs[np + n] += 1.0 / norm;
            }
          }
        loss_terms += static_cast<std::int64_t>(np * nn);
        auto acc = zero_grads(params);
        accumulate(params, evals, coeffs, acc);
        adam_step(params, acc, state, tcfg.lr);
      }
    }

    double val_map = validation_map(params, cfg, ctx, splits, jobs, tcfg.val_neg_cap,
                                    derive_seed(seed, "val/cap"));
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - epoch_start)
                       .count();
    double train_loss = loss_terms > 0 ? loss_sum / static_cast<double>(loss_terms) : 0.0;
    result.trace.push_back({epoch, train_loss, val_map, elapsed});

    bool improved = val_map > stopper.best;
    bool stop = stopper.observe(epoch, val_map);
    if (improved) {
      result.params = params.clone();
      result.best_val_map = val_map;
      result.best_epoch = epoch;
    }
    if (stop) break;
  }
  return result;
}

TrainResult cross_validate_margin(const std::vector<QuerySplit>& splits,
                                  const FeatureContext& ctx, const GnnConfig& cfg,
                                  const TrainConfig& tcfg, int jobs) {
  if (tcfg.loss != LossKind::rank)
    throw ContractError("cross_validate_margin requires the ranking loss");
  if (tcfg.margin_grid.empty()) throw ConfigError("margin_grid must be non-empty");
  auto grid = tcfg.margin_grid;
  std::sort(grid.begin(), grid.end());  // ties resolve toward the smaller δ

  TrainResult best;
  std::vector<std::pair<double, double>> margin_results;
  bool have = false;
  for (double delta : grid) {
    TrainConfig tc = tcfg;
    tc.margin = delta;
    TrainResult r = train_model(splits, ctx, cfg, tc, jobs);
    margin_results.emplace_back(delta, r.best_val_map);
    if (!have || r.best_val_map > best.best_val_map) {
      best = std::move(r);
      have = true;
    }
  }
  best.margin_results = std::move(margin_results);
  return best;
}

}  // namespace linkpred
