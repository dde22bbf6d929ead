#pragma once
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "linkpred/graph.hpp"
#include "linkpred/tensor.hpp"

namespace linkpred {

struct EmbeddingTable {
  int dim = 0;
  std::vector<double> vec;  // num_nodes × dim, row-major
  std::string method;       // "node2vec" | "mf"

  std::size_t num_nodes() const {
    return dim == 0 ? 0 : vec.size() / static_cast<std::size_t>(dim);
  }
  std::span<const double> row(NodeId u) const {
    return {vec.data() + static_cast<std::size_t>(u) * static_cast<std::size_t>(dim),
            static_cast<std::size_t>(dim)};
  }
  std::span<double> row(NodeId u) {
    return {vec.data() + static_cast<std::size_t>(u) * static_cast<std::size_t>(dim),
            static_cast<std::size_t>(dim)};
  }
  Tensor to_tensor() const;
};

struct WalkCorpus {
  std::vector<std::vector<NodeId>> walks;
  int walk_length = 0;  // steps per walk; a walk holds walk_length+1 nodes at most
  int walks_per_node = 0;
  double p = 1.0, q = 1.0;
  int window = 5;
};

// Second-order biased walks: from current node c with predecessor t, the
// unnormalized weight of candidate x is 1/p if x==t, 1 if x~t, else 1/q.
// First step is uniform. Isolated sources yield singleton walks.
WalkCorpus sample_walks(const Graph& g, double p, double q, int walk_length, int walks_per_node,
                        int window, std::uint64_t seed);

// Applies fn(center, context) to every window pair of the corpus, in corpus order.
void for_each_context_pair(const WalkCorpus& corpus,
                           const std::function<void(NodeId, NodeId)>& fn);

// Full-softmax skip-gram objective: sum over context pairs (u,v) of
// log Σ_w exp(z_u·z_w) − z_u·z_v. Exact; the test oracle and the exact-mode
// training loss.
double node2vec_loss_exact(const EmbeddingTable& z, const WalkCorpus& corpus);
std::vector<double> node2vec_grad_exact(const EmbeddingTable& z, const WalkCorpus& corpus);

enum class N2vMode { automatic, sgns, exact };

struct Node2VecConfig {
  int dim = 128;
  double p = 1.0, q = 1.0;
  int walk_length = 0;  // 0 → max(2, round(0.05·|V|))
  int walks_per_node = 10;
  int window = 5;
  int epochs = 10;
  int negatives = 5;  // per context pair (SGNS)
  double lr = 0.025;
  N2vMode mode = N2vMode::automatic;  // automatic: exact softmax when |V| ≤ 64
};

EmbeddingTable train_node2vec(const Graph& g, const Node2VecConfig& cfg, std::uint64_t seed);

// Σ_u Σ_v (y_uv − z_u·z_v)² + λ Σ_u ‖z_u‖², y from the closed neighborhood
// (y_uu = 1) unless closed_diagonal is off. Literal O(|V|²·dim) evaluation.
double mf_loss(const EmbeddingTable& z, const Graph& g, double lambda,
               bool closed_diagonal = true);

// ∇ of mf_loss w.r.t. every table entry, flattened like EmbeddingTable::vec.
std::vector<double> mf_grad(const EmbeddingTable& z, const Graph& g, double lambda,
                            bool closed_diagonal = true);

struct MfConfig {
  int dim = 128;
  double lambda = 0.1;
  int epochs = 500;
  double lr = 0.01;
  bool closed_diagonal = true;
};

EmbeddingTable train_mf(const Graph& g, const MfConfig& cfg, std::uint64_t seed);

void save_embedding_csv(const std::string& path, const EmbeddingTable& table,
                        const std::vector<std::string>& provenance);
EmbeddingTable load_embedding_csv(const std::string& path);
void save_embedding_binary(const std::string& path, const EmbeddingTable& table);
EmbeddingTable load_embedding_binary(const std::string& path);

}  // namespace linkpred
