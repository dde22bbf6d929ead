#pragma once
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "linkpred/gnn.hpp"
#include "linkpred/pipeline.hpp"

namespace linkpred {

enum class LossKind { bce, rank };

struct TrainConfig {
  LossKind loss = LossKind::bce;
  double lr = 1e-3;
  int patience = 6;
  std::vector<double> margin_grid{0.1, 1.0, 10.0};
  double margin = 0.1;  // the active δ for a single ranking run
  int max_epochs = 200;
  int neg_per_pos = 1;    // bce training negatives per positive
  int batch_size = 32;    // bce pairs per optimizer step
  int rank_pos_cap = 20;  // ranking samples per query per epoch
  int rank_neg_cap = 20;
  int val_neg_cap = 0;  // 0 = uncapped
  std::uint64_t seed = 0;
};

// Eq.-style sums over the supplied pairs, in overflow-proof softplus form.
double bce_loss(std::span<const double> scores, std::span<const int> labels);
double ranking_loss(const std::vector<std::vector<double>>& pos_by_query,
                    const std::vector<std::vector<double>>& neg_by_query, double delta);

// Taped forms for gradient checking.
Tensor bce_loss_taped(Tape& tape, const Tensor& scores, const std::vector<int>& labels);
Tensor ranking_loss_taped(Tape& tape, const Tensor& pos, const Tensor& neg, double delta);

struct AdamState {
  std::vector<std::vector<double>> m, v;  // indexed like ModelParams.items
  std::int64_t t = 0;
};

// Standard Adam (β1=0.9, β2=0.999, ε=1e-8, bias-corrected). grads holds one
// vector per parameter, in ModelParams order.
void adam_step(ModelParams& params, const std::vector<std::vector<double>>& grads,
               AdamState& state, double lr);

// "No strict improvement for `patience` consecutive epochs" stopping rule.
struct EarlyStopper {
  int patience = 6;
  double best = -std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int since_improvement = 0;

  // Feed one epoch's validation metric; true = stop after this epoch.
  bool observe(int epoch, double value);
};

struct EpochTrace {
  int epoch = 0;
  double train_loss = 0.0;
  double val_map = 0.0;
  std::int64_t elapsed_ms = 0;
};

struct TrainResult {
  ModelParams params;  // checkpoint with the best validation MAP
  std::vector<EpochTrace> trace;
  double best_val_map = 0.0;
  int best_epoch = 0;
  double margin = 0.0;  // δ used (ranking runs)
  std::vector<std::pair<double, double>> margin_results;  // (δ, val MAP) per grid entry
};

TrainResult train_model(const std::vector<QuerySplit>& splits, const FeatureContext& ctx,
                        const GnnConfig& cfg, const TrainConfig& tcfg, int jobs);

// Trains one model per δ in tcfg.margin_grid and keeps the best validation
// MAP; ties go to the smaller δ.
TrainResult cross_validate_margin(const std::vector<QuerySplit>& splits,
                                  const FeatureContext& ctx, const GnnConfig& cfg,
                                  const TrainConfig& tcfg, int jobs);

}  // namespace linkpred
