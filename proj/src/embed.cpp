#include "linkpred/embed.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "linkpred/errors.hpp"
#include "linkpred/rng.hpp"

namespace linkpred {

Tensor EmbeddingTable::to_tensor() const {
  return Tensor::from({static_cast<std::int64_t>(num_nodes()), dim}, vec);
}

// ------------------------------------------------------------------ walks

WalkCorpus sample_walks(const Graph& g, double p, double q, int walk_length, int walks_per_node,
                        int window, std::uint64_t seed) {
  if (p <= 0.0 || q <= 0.0) throw ContractError("sample_walks: p and q must be positive");
  if (walk_length < 1) throw ContractError("sample_walks: walk_length must be >= 1");
  if (walks_per_node < 1) throw ContractError("sample_walks: walks_per_node must be >= 1");
  if (window < 1) throw ContractError("sample_walks: window must be >= 1");

  WalkCorpus corpus;
  corpus.walk_length = walk_length;
  corpus.walks_per_node = walks_per_node;
  corpus.p = p;
  corpus.q = q;
  corpus.window = window;
  corpus.walks.reserve(static_cast<std::size_t>(g.num_nodes()) *
                       static_cast<std::size_t>(walks_per_node));

  std::vector<double> weights;
  for (NodeId src = 0; src < g.num_nodes(); ++src) {
    for (int w = 0; w < walks_per_node; ++w) {
      Rng rng(derive_seed(seed, "walk", static_cast<std::uint64_t>(src),
                          static_cast<std::uint64_t>(w)));
      std::vector<NodeId> walk{src};
      if (g.degree(src) > 0) {
        auto first = g.neighbors(src);
        walk.push_back(first[static_cast<std::size_t>(rng.next_below(first.size()))]);
        for (int step = 1; step < walk_length; ++step) {
          NodeId cur = walk.back();
          NodeId prev = walk[walk.size() - 2];
          auto cand = g.neighbors(cur);
          weights.resize(cand.size());
          double total = 0.0;
          for (std::size_t i = 0; i < cand.size(); ++i) {
            double wgt;
            if (cand[i] == prev)
              wgt = 1.0 / p;
            else if (g.has_edge(prev, cand[i]))
              wgt = 1.0;
            else
              wgt = 1.0 / q;
            weights[i] = wgt;
            total += wgt;
          }
          double pick = rng.uniform(0.0, total);
          std::size_t idx = 0;
          for (; idx + 1 < cand.size(); ++idx) {
            pick -= weights[idx];
            if (pick < 0.0) break;
          }
          walk.push_back(cand[idx]);
        }
      }
      corpus.walks.push_back(std::move(walk));
    }
  }
  return corpus;
}

void for_each_context_pair(const WalkCorpus& corpus,
                           const std::function<void(NodeId, NodeId)>& fn) {
  const int window = corpus.window;
  for (const auto& walk : corpus.walks) {
    const int len = static_cast<int>(walk.size());
    for (int i = 0; i < len; ++i) {
      int lo = std::max(0, i - window), hi = std::min(len - 1, i + window);
      for (int j = lo; j <= hi; ++j)
        if (j != i) fn(walk[static_cast<std::size_t>(i)], walk[static_cast<std::size_t>(j)]);
    }
  }
}

// ----------------------------------------------------------- exact softmax

namespace {

// Row u of Z·Zᵀ plus its log-sum-exp, max-shifted for stability.
struct SoftmaxRow {
  std::vector<double> scores;
  double lse = 0.0;
};

SoftmaxRow softmax_row(const EmbeddingTable& z, NodeId u) {
  const auto n = z.num_nodes();
  SoftmaxRow r;
  r.scores.resize(n);
  auto zu = z.row(u);
  for (std::size_t w = 0; w < n; ++w) {
    auto zw = z.row(static_cast<NodeId>(w));
    double s = 0.0;
    for (int d = 0; d < z.dim; ++d) s += zu[static_cast<std::size_t>(d)] * zw[static_cast<std::size_t>(d)];
    r.scores[w] = s;
  }
  double mx = *std::max_element(r.scores.begin(), r.scores.end());
  double acc = 0.0;
  for (double s : r.scores) acc += std::exp(s - mx);
  r.lse = mx + std::log(acc);
  return r;
}

// context-pair multiplicities keyed by center node
std::map<NodeId, std::map<NodeId, std::int64_t>> pair_counts(const WalkCorpus& corpus) {
  std::map<NodeId, std::map<NodeId, std::int64_t>> counts;
  for_each_context_pair(corpus, [&](NodeId u, NodeId v) { counts[u][v] += 1; });
  return counts;
}

}  // namespace

double node2vec_loss_exact(const EmbeddingTable& z, const WalkCorpus& corpus) {
  if (z.num_nodes() == 0) throw ContractError("node2vec_loss_exact: empty table");
  double loss = 0.0;
  for (const auto& [u, ctx] : pair_counts(corpus)) {
    SoftmaxRow row = softmax_row(z, u);
    for (const auto& [v, c] : ctx)
      loss += static_cast<double>(c) * (row.lse - row.scores[static_cast<std::size_t>(v)]);
  }
  return loss;
}

std::vector<double> node2vec_grad_exact(const EmbeddingTable& z, const WalkCorpus& corpus) {
  const auto n = z.num_nodes();
  const int dim = z.dim;
  std::vector<double> grad(n * static_cast<std::size_t>(dim), 0.0);
  auto add_row = [&](NodeId a, double coeff, std::span<const double> src) {
    double* dst = grad.data() + static_cast<std::size_t>(a) * static_cast<std::size_t>(dim);
    for (int d = 0; d < dim; ++d) dst[d] += coeff * src[static_cast<std::size_t>(d)];
  };
  for (const auto& [u, ctx] : pair_counts(corpus)) {
    SoftmaxRow row = softmax_row(z, u);
    std::int64_t total = 0;
    for (const auto& [v, c] : ctx) total += c;
    // d/dZ of total·lse_u: both sides of each score S_uw get the softmax weight
    for (std::size_t w = 0; w < n; ++w) {
      double pw = std::exp(row.scores[w] - row.lse) * static_cast<double>(total);
      add_row(u, pw, z.row(static_cast<NodeId>(w)));
      add_row(static_cast<NodeId>(w), pw, z.row(u));
    }
    for (const auto& [v, c] : ctx) {
      add_row(u, -static_cast<double>(c), z.row(v));
      add_row(v, -static_cast<double>(c), z.row(u));
    }
  }
  return grad;
}

// --------------------------------------------------------------- training

namespace {

EmbeddingTable init_table(std::size_t n, int dim, const char* method, std::uint64_t seed) {
  EmbeddingTable t;
  t.dim = dim;
  t.method = method;
  t.vec.resize(n * static_cast<std::size_t>(dim));
  Rng rng(seed);
  double half = 0.5 / static_cast<double>(dim);
  for (auto& v : t.vec) v = rng.uniform(-half, half);
  return t;
}

int auto_walk_length(const Graph& g, int requested) {
  if (requested > 0) return requested;
  return std::max(2, static_cast<int>(std::lround(0.05 * static_cast<double>(g.num_nodes()))));
}

void train_n2v_exact(EmbeddingTable& z, const WalkCorpus& corpus, int epochs) {
  double lr = 0.1;
  double loss = node2vec_loss_exact(z, corpus);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::vector<double> grad = node2vec_grad_exact(z, corpus);
    bool accepted = false;
    for (int attempt = 0; attempt < 40; ++attempt) {
      EmbeddingTable trial = z;
      for (std::size_t i = 0; i < trial.vec.size(); ++i) trial.vec[i] -= lr * grad[i];
      double trial_loss = node2vec_loss_exact(trial, corpus);
      if (std::isfinite(trial_loss) && trial_loss < loss) {
        z = std::move(trial);
        loss = trial_loss;
        lr *= 1.2;  // cautious growth after an accepted step
        accepted = true;
        break;
      }
      lr *= 0.5;
    }
    if (!accepted) break;  // at a (numerical) stationary point
  }
}

void train_n2v_sgns(EmbeddingTable& z, const Graph& g, const WalkCorpus& corpus,
                    const Node2VecConfig& cfg, std::uint64_t seed) {
  std::vector<std::pair<NodeId, NodeId>> pairs;
  for_each_context_pair(corpus, [&](NodeId u, NodeId v) { pairs.emplace_back(u, v); });
  if (pairs.empty()) return;

  // unigram^0.75 table over corpus occurrences
  std::vector<double> counts(static_cast<std::size_t>(g.num_nodes()), 0.0);
  for (const auto& walk : corpus.walks)
    for (NodeId node : walk) counts[static_cast<std::size_t>(node)] += 1.0;
  std::vector<double> cum(counts.size());
  double total = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    total += std::pow(counts[i], 0.75);
    cum[i] = total;
  }
  auto sample_negative = [&](Rng& rng) {
    double pick = rng.uniform(0.0, total);
    auto it = std::upper_bound(cum.begin(), cum.end(), pick);
    std::size_t idx = static_cast<std::size_t>(it - cum.begin());
    return static_cast<NodeId>(std::min(idx, cum.size() - 1));
  };
  auto sigmoid = [](double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  };

  const int dim = z.dim;
  std::vector<double> zu_old(static_cast<std::size_t>(dim));
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(derive_seed(seed, "n2v/epoch", static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);
    for (std::size_t oi : order) {
      auto [u, v] = pairs[oi];
      auto zu = z.row(u);
      std::copy(zu.begin(), zu.end(), zu_old.begin());
      auto zv = z.row(v);
      double s = 0.0;
      for (int d = 0; d < dim; ++d) s += zu_old[static_cast<std::size_t>(d)] * zv[static_cast<std::size_t>(d)];
      double gpos = sigmoid(s) - 1.0;
      for (int d = 0; d < dim; ++d) {
        zu[static_cast<std::size_t>(d)] -= cfg.lr * gpos * zv[static_cast<std::size_t>(d)];
        zv[static_cast<std::size_t>(d)] -= cfg.lr * gpos * zu_old[static_cast<std::size_t>(d)];
      }
      for (int neg = 0; neg < cfg.negatives; ++neg) {
        NodeId w = sample_negative(rng);
        auto zw = z.row(w);
        double sw = 0.0;
        for (int d = 0; d < dim; ++d) sw += zu_old[static_cast<std::size_t>(d)] * zw[static_cast<std::size_t>(d)];
        double gneg = sigmoid(sw);
        for (int d = 0; d < dim; ++d) {
          zu[static_cast<std::size_t>(d)] -= cfg.lr * gneg * zw[static_cast<std::size_t>(d)];
          zw[static_cast<std::size_t>(d)] -= cfg.lr * gneg * zu_old[static_cast<std::size_t>(d)];
        }
      }
    }
  }
}

}  // namespace

EmbeddingTable train_node2vec(const Graph& g, const Node2VecConfig& cfg, std::uint64_t seed) {
  if (cfg.dim < 1) throw ContractError("train_node2vec: dim must be >= 1");
  EmbeddingTable z = init_table(static_cast<std::size_t>(g.num_nodes()), cfg.dim, "node2vec",
                                derive_seed(seed, "n2v/init"));
  if (cfg.epochs == 0) return z;
  WalkCorpus corpus =
      sample_walks(g, cfg.p, cfg.q, auto_walk_length(g, cfg.walk_length), cfg.walks_per_node,
                   cfg.window, derive_seed(seed, "n2v/walks"));
  bool exact = cfg.mode == N2vMode::exact ||
               (cfg.mode == N2vMode::automatic && g.num_nodes() <= 64);
  if (exact)
    train_n2v_exact(z, corpus, cfg.epochs);
  else
    train_n2v_sgns(z, g, corpus, cfg, seed);
  for (double v : z.vec)
    if (!std::isfinite(v)) throw NumericError("train_node2vec produced non-finite embeddings");
  return z;
}

// ------------------------------------------------------------------- MF

double mf_loss(const EmbeddingTable& z, const Graph& g, double lambda, bool closed_diagonal) {
  if (static_cast<std::int64_t>(z.num_nodes()) != static_cast<std::int64_t>(g.num_nodes()))
    throw ContractError("mf_loss: table rows do not match graph nodes");
  double loss = 0.0;
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    auto zu = z.row(u);
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
      auto zv = z.row(v);
      double s = 0.0;
      for (int d = 0; d < z.dim; ++d) s += zu[static_cast<std::size_t>(d)] * zv[static_cast<std::size_t>(d)];
      double y = (u == v) ? (closed_diagonal ? 1.0 : 0.0) : (g.has_edge(u, v) ? 1.0 : 0.0);
      loss += (y - s) * (y - s);
    }
    double norm2 = 0.0;
    for (int d = 0; d < z.dim; ++d)
      norm2 += zu[static_cast<std::size_t>(d)] * zu[static_cast<std::size_t>(d)];
    loss += lambda * norm2;
  }
  return loss;
}

namespace {

// Same objective as mf_loss in O(n·dim² + E·dim) using
// Σ(z_u·z_v)² = ‖ZᵀZ‖²_F and the sparse y support.
double mf_loss_fast(const EmbeddingTable& z, const Graph& g, double lambda,
                    bool closed_diagonal) {
  const auto n = static_cast<std::size_t>(g.num_nodes());
  const int dim = z.dim;
  std::vector<double> gram(static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim), 0.0);
  for (std::size_t u = 0; u < n; ++u) {
    auto zu = z.row(static_cast<NodeId>(u));
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b)
        gram[static_cast<std::size_t>(a * dim + b)] +=
            zu[static_cast<std::size_t>(a)] * zu[static_cast<std::size_t>(b)];
  }
  double sum_s2 = 0.0, trace = 0.0;
  for (int a = 0; a < dim; ++a) {
    trace += gram[static_cast<std::size_t>(a * dim + a)];
    for (int b = 0; b < dim; ++b) {
      double v = gram[static_cast<std::size_t>(a * dim + b)];
      sum_s2 += v * v;
    }
  }
  double sum_ys = 0.0, count_y = 0.0;
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    auto zu = z.row(u);
    for (NodeId v : g.neighbors(u)) {
      auto zv = z.row(v);
      double s = 0.0;
      for (int d = 0; d < dim; ++d) s += zu[static_cast<std::size_t>(d)] * zv[static_cast<std::size_t>(d)];
      sum_ys += s;
      count_y += 1.0;
    }
    if (closed_diagonal) {
      double s = 0.0;
      for (int d = 0; d < dim; ++d) s += zu[static_cast<std::size_t>(d)] * zu[static_cast<std::size_t>(d)];
      sum_ys += s;
      count_y += 1.0;
    }
  }
  return count_y - 2.0 * sum_ys + sum_s2 + lambda * trace;
}

}  // namespace

std::vector<double> mf_grad(const EmbeddingTable& z, const Graph& g, double lambda,
                            bool closed_diagonal) {
  const auto n = static_cast<std::size_t>(g.num_nodes());
  const int dim = z.dim;
  std::vector<double> gram(static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim), 0.0);
  for (std::size_t u = 0; u < n; ++u) {
    auto zu = z.row(static_cast<NodeId>(u));
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b)
        gram[static_cast<std::size_t>(a * dim + b)] +=
            zu[static_cast<std::size_t>(a)] * zu[static_cast<std::size_t>(b)];
  }
  // ∇_u = 4[(Z ZᵀZ)_u − (Y Z)_u] + 2λ z_u
  std::vector<double> grad(z.vec.size());
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    auto zu = z.row(u);
    double* gu = grad.data() + static_cast<std::size_t>(u) * static_cast<std::size_t>(dim);
    for (int a = 0; a < dim; ++a) {
      double acc = 0.0;
      for (int b = 0; b < dim; ++b)
        acc += zu[static_cast<std::size_t>(b)] * gram[static_cast<std::size_t>(b * dim + a)];
      gu[a] = 4.0 * acc + 2.0 * lambda * zu[static_cast<std::size_t>(a)];
    }
    for (NodeId v : g.neighbors(u)) {
      auto zv = z.row(v);
      for (int a = 0; a < dim; ++a) gu[a] -= 4.0 * zv[static_cast<std::size_t>(a)];
    }
    if (closed_diagonal)
      for (int a = 0; a < dim; ++a) gu[a] -= 4.0 * zu[static_cast<std::size_t>(a)];
  }
  return grad;
}

EmbeddingTable train_mf(const Graph& g, const MfConfig& cfg, std::uint64_t seed) {
  if (cfg.lambda < 0.0) throw ContractError("train_mf: lambda must be >= 0");
  if (cfg.dim < 1) throw ContractError("train_mf: dim must be >= 1");
  const auto n = static_cast<std::size_t>(g.num_nodes());
  const int dim = cfg.dim;
  EmbeddingTable z = init_table(n, dim, "mf", derive_seed(seed, "mf/init"));
  EmbeddingTable best = z;
  double best_loss = mf_loss_fast(z, g, cfg.lambda, cfg.closed_diagonal);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<double> grad = mf_grad(z, g, cfg.lambda, cfg.closed_diagonal);
    for (std::size_t i = 0; i < z.vec.size(); ++i) z.vec[i] -= cfg.lr * grad[i];

    double loss = mf_loss_fast(z, g, cfg.lambda, cfg.closed_diagonal);
    if (!std::isfinite(loss) || loss > 1e12)
      throw NumericError("train_mf diverged (loss=" + std::to_string(loss) +
                         "); try a smaller lr");
    if (loss < best_loss) {
      best_loss = loss;
      best = z;
    }
  }
  return best;
}

// ---------------------------------------------------------- serialization

void save_embedding_csv(const std::string& path, const EmbeddingTable& table,
                        const std::vector<std::string>& provenance) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  for (const auto& line : provenance) out << "# " << line << "\n";
  out << "node_id";
  for (int d = 1; d <= table.dim; ++d) out << ",v" << d;
  out << "\n";
  char buf[40];
  for (std::size_t u = 0; u < table.num_nodes(); ++u) {
    out << u;
    auto row = table.row(static_cast<NodeId>(u));
    for (int d = 0; d < table.dim; ++d) {
      std::snprintf(buf, sizeof buf, "%.17g", row[static_cast<std::size_t>(d)]);
      out << ',' << buf;
    }
    out << "\n";
  }
  if (!out) throw DataError("write failed on " + path);
}

EmbeddingTable load_embedding_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  EmbeddingTable table;
  std::string line;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;  // "node_id,v1,…"
      table.dim = static_cast<int>(std::count(line.begin(), line.end(), ','));
      if (table.dim < 1) throw DataError(path + ":" + std::to_string(line_no) + ": bad header");
      continue;
    }
    std::istringstream ss(line);
    std::string cell;
    if (!std::getline(ss, cell, ',')) throw DataError(path + ":" + std::to_string(line_no));
    for (int d = 0; d < table.dim; ++d) {
      if (!std::getline(ss, cell, ','))
        throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(table.dim) + " values");
      table.vec.push_back(std::stod(cell));
    }
  }
  if (!header_seen || table.vec.empty()) throw DataError(path + ": no embedding rows");
  table.method = "file";
  return table;
}

void save_embedding_binary(const std::string& path, const EmbeddingTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  const char magic[8] = {'L', 'P', 'E', 'M', 'B', '0', '1', '\n'};
  out.write(magic, sizeof magic);
  std::int64_t n = static_cast<std::int64_t>(table.num_nodes()), dim = table.dim,
               mlen = static_cast<std::int64_t>(table.method.size());
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
  out.write(reinterpret_cast<const char*>(&mlen), sizeof mlen);
  out.write(table.method.data(), mlen);
  out.write(reinterpret_cast<const char*>(table.vec.data()),
            static_cast<std::streamsize>(table.vec.size() * sizeof(double)));
  if (!out) throw DataError("write failed on " + path);
}

EmbeddingTable load_embedding_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  const char expect[8] = {'L', 'P', 'E', 'M', 'B', '0', '1', '\n'};
  if (!in || !std::equal(magic, magic + 8, expect))
    throw DataError(path + ": not an embedding cache file");
  std::int64_t n = 0, dim = 0, mlen = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  in.read(reinterpret_cast<char*>(&dim), sizeof dim);
  in.read(reinterpret_cast<char*>(&mlen), sizeof mlen);
  if (!in || n < 0 || dim < 1 || mlen < 0 || mlen > 64)
    throw DataError(path + ": corrupt embedding cache header");
  EmbeddingTable table;
  table.dim = static_cast<int>(dim);
  table.method.resize(static_cast<std::size_t>(mlen));
  in.read(table.method.data(), mlen);
  table.vec.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(dim));
  in.read(reinterpret_cast<char*>(table.vec.data()),
          static_cast<std::streamsize>(table.vec.size() * sizeof(double)));
  if (!in) throw DataError(path + ": truncated embedding cache");
  return table;
}

}  // namespace linkpred
