#pragma once
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "linkpred/subgraph.hpp"
#include "linkpred/tensor.hpp"

namespace linkpred {

enum class Arch { gcn, gin, sage, dgcnn };

Arch arch_from_string(const std::string& s);
std::string arch_name(Arch a);

struct GnnConfig {
  Arch arch = Arch::gcn;
  int k = 2;  // hop radius of extraction and layer count, 1..3
  int hidden = 32;
  double gin_epsilon = 0.0;
  int sortpool_k = 0;  // dgcnn only; resolve before init_params
  int conv_channels = 16;
  int scorer_hidden = 32;
};

void validate_config(const GnnConfig& cfg);
int embedding_width(const GnnConfig& cfg);  // k·hidden (jumping-knowledge concat)

// Named parameter tensors in a stable order; shapes depend only on
// (config, feature width), never on the graph.
struct ModelParams {
  std::vector<std::pair<std::string, Tensor>> items;

  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  ModelParams clone() const;  // fresh storage, same values
};

ModelParams init_params(const GnnConfig& cfg, int feature_width, std::uint64_t seed);

// Aggregation structures over the subgraph.
SparseMatrix plain_adj(const EnclosingSubgraph& sub);
SparseMatrix sym_norm_adj(const EnclosingSubgraph& sub);  // D̃^{-1/2}(A+I)D̃^{-1/2}
SparseMatrix row_norm_adj(const EnclosingSubgraph& sub);  // D̃^{-1}(A+I)
SparseMatrix mean_adj(const EnclosingSubgraph& sub);      // D^{-1}A; zero row if isolated

// Per-node embeddings: K layer applications, then concatenation of all K
// layer outputs per node.
Tensor embed_nodes(Tape& tape, const ModelParams& params, const GnnConfig& cfg,
                   const EnclosingSubgraph& sub, const FeatureMatrix& feats);

// MLP over [e_u ⊙ e_v ⊕ |e_u − e_v|]; rows 0 and 1 of emb are the pair.
// Symmetric by construction: swapping u and v gives the bit-identical score.
Tensor score_pair(Tape& tape, const ModelParams& params, const GnnConfig& cfg,
                  const Tensor& emb);

// SortPooling readout: sort rows by trailing channels (descending, ties by
// earlier channels then local index), keep sortpool_k rows with zero padding,
// one conv stage, then a dense layer.
Tensor score_pair_dgcnn(Tape& tape, const ModelParams& params, const GnnConfig& cfg,
                        const Tensor& emb);

Tensor score_subgraph(Tape& tape, const ModelParams& params, const GnnConfig& cfg,
                      const EnclosingSubgraph& sub, const FeatureMatrix& feats);

// Smallest node count covering `coverage` of the observed sizes, floored at 2.
int resolve_sortpool_k(const std::vector<int>& train_subgraph_sizes, double coverage = 0.6);

struct Checkpoint {
  GnnConfig cfg;
  int feature_width = 0;
  ModelParams params;
};

// Versioned binary checkpoint plus a "<path>.manifest.csv" shape listing.
void save_checkpoint(const std::string& path, const GnnConfig& cfg, int feature_width,
                     const ModelParams& params);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace linkpred
