#include "linkpred/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "linkpred/errors.hpp"
#include "linkpred/rng.hpp"

namespace linkpred {

Arch arch_from_string(const std::string& s) {
  if (s == "gcn") return Arch::gcn;
  if (s == "gin") return Arch::gin;
  if (s == "sage") return Arch::sage;
  if (s == "dgcnn") return Arch::dgcnn;
  throw ConfigError("unknown architecture '" + s + "' (expected gcn|gin|sage|dgcnn)");
}

std::string arch_name(Arch a) {
  switch (a) {
    case Arch::gcn: return "gcn";
    case Arch::gin: return "gin";
    case Arch::sage: return "sage";
    case Arch::dgcnn: return "dgcnn";
  }
  throw ContractError("bad Arch value");
}

void validate_config(const GnnConfig& cfg) {
  if (cfg.k < 1 || cfg.k > 3)
    throw ConfigError("gnn k must be in {1,2,3}, got " + std::to_string(cfg.k));
  if (cfg.hidden < 1) throw ConfigError("gnn hidden must be >= 1");
  if (cfg.scorer_hidden < 1) throw ConfigError("scorer_hidden must be >= 1");
  if (cfg.arch == Arch::dgcnn) {
    if (cfg.sortpool_k < 2)
      throw ConfigError("dgcnn needs sortpool_k >= 2 (resolve it from training sizes first)");
    if (cfg.conv_channels < 1) throw ConfigError("conv_channels must be >= 1");
  }
}

int embedding_width(const GnnConfig& cfg) { return cfg.k * cfg.hidden; }

Tensor& ModelParams::at(const std::string& name) {
  for (auto& [n, t] : items)
    if (n == name) return t;
  throw ContractError("no parameter named '" + name + "'");
}

const Tensor& ModelParams::at(const std::string& name) const {
  for (const auto& [n, t] : items)
    if (n == name) return t;
  throw ContractError("no parameter named '" + name + "'");
}

ModelParams ModelParams::clone() const {
  ModelParams copy;
  for (const auto& [n, t] : items) {
    Tensor fresh = Tensor::from(t.shape(), std::vector<double>(t.data().begin(), t.data().end()));
    fresh.set_requires_grad(t.requires_grad());
    copy.items.emplace_back(n, std::move(fresh));
  }
  return copy;
}

namespace {

Tensor glorot(const Shape& shape, std::uint64_t seed) {
  std::int64_t fan_in = shape.size() == 2 ? shape[0] : shape[0];
  std::int64_t fan_out = shape.size() == 2 ? shape[1] : shape[0];
  double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Rng rng(seed);
  std::vector<double> vals(static_cast<std::size_t>(shape.size() == 2 ? shape[0] * shape[1]
                                                                      : shape[0]));
  for (auto& v : vals) v = rng.uniform(-limit, limit);
  return Tensor::from(shape, std::move(vals));
}

void add_weight(ModelParams& p, const std::string& name, const Shape& shape,
                std::uint64_t seed) {
  Tensor t = glorot(shape, derive_seed(seed, name));
  t.set_requires_grad(true);
  p.items.emplace_back(name, std::move(t));
}

void add_bias(ModelParams& p, const std::string& name, std::int64_t width) {
  Tensor t = Tensor::zeros({width});
  t.set_requires_grad(true);
  p.items.emplace_back(name, std::move(t));
}

}  // namespace

ModelParams init_params(const GnnConfig& cfg, int feature_width, std::uint64_t seed) {
  validate_config(cfg);
  if (feature_width < 1) throw ContractError("init_params: feature_width must be >= 1");
  ModelParams p;
  const int h = cfg.hidden;
  switch (cfg.arch) {
    case Arch::gcn:
      for (int i = 1; i <= cfg.k; ++i)
        add_weight(p, "gcn.w" + std::to_string(i), {i == 1 ? feature_width : h, h}, seed);
      break;
    case Arch::gin:
      for (int i = 1; i <= cfg.k; ++i) {
        const std::string base = "gin.l" + std::to_string(i) + ".";
        add_weight(p, base + "w1", {i == 1 ? feature_width : h, h}, seed);
        add_bias(p, base + "b1", h);
        add_weight(p, base + "w2", {h, h}, seed);
        add_bias(p, base + "b2", h);
      }
      break;
    case Arch::sage:
      for (int i = 1; i <= cfg.k; ++i)
        add_weight(p, "sage.w" + std::to_string(i), {2 * (i == 1 ? feature_width : h), h}, seed);
      break;
    case Arch::dgcnn: {
      for (int i = 1; i <= cfg.k; ++i)
        add_weight(p, "dgcnn.w" + std::to_string(i), {i == 1 ? feature_width : h, h}, seed);
      const int kh = cfg.k * h;
      add_weight(p, "dgcnn.conv.w", {kh, cfg.conv_channels}, seed);
      add_bias(p, "dgcnn.conv.b", cfg.conv_channels);
      add_weight(p, "dgcnn.out.w",
                 {static_cast<std::int64_t>(cfg.sortpool_k) * cfg.conv_channels, 1}, seed);
      add_bias(p, "dgcnn.out.b", 1);
      break;
    }
  }
  if (cfg.arch != Arch::dgcnn) {
    add_weight(p, "scorer.w1", {2 * embedding_width(cfg), cfg.scorer_hidden}, seed);
    add_bias(p, "scorer.b1", cfg.scorer_hidden);
    add_weight(p, "scorer.w2", {cfg.scorer_hidden, 1}, seed);
    add_bias(p, "scorer.b2", 1);
  }
  return p;
}

// ------------------------------------------------------------ adjacency

SparseMatrix plain_adj(const EnclosingSubgraph& sub) {
  const auto n = static_cast<std::int64_t>(sub.num_nodes());
  std::vector<std::tuple<std::int32_t, std::int32_t, double>> items;
  items.reserve(sub.adj.size());
  for (std::int64_t i = 0; i < n; ++i)
    for (NodeId j : sub.neighbors(static_cast<NodeId>(i)))
      items.emplace_back(static_cast<std::int32_t>(i), j, 1.0);
  return SparseMatrix::from_triplets(n, n, items);
}

SparseMatrix sym_norm_adj(const EnclosingSubgraph& sub) {
  const auto n = static_cast<std::int64_t>(sub.num_nodes());
  std::vector<double> inv_sqrt(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    auto deg = static_cast<double>(sub.neighbors(static_cast<NodeId>(i)).size()) + 1.0;
    inv_sqrt[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(deg);
  }
  std::vector<std::tuple<std::int32_t, std::int32_t, double>> items;
  for (std::int64_t i = 0; i < n; ++i) {
    double si = inv_sqrt[static_cast<std::size_t>(i)];
    items.emplace_back(static_cast<std::int32_t>(i), static_cast<std::int32_t>(i), si * si);
    for (NodeId j : sub.neighbors(static_cast<NodeId>(i)))
      items.emplace_back(static_cast<std::int32_t>(i), j, si * inv_sqrt[static_cast<std::size_t>(j)]);
  }
  return SparseMatrix::from_triplets(n, n, items);
}

SparseMatrix row_norm_adj(const EnclosingSubgraph& sub) {
  const auto n = static_cast<std::int64_t>(sub.num_nodes());
  std::vector<std::tuple<std::int32_t, std::int32_t, double>> items;
  for (std::int64_t i = 0; i < n; ++i) {
    double inv = 1.0 / (static_cast<double>(sub.neighbors(static_cast<NodeId>(i)).size()) + 1.0);
    items.emplace_back(static_cast<std::int32_t>(i), static_cast<std::int32_t>(i), inv);
    for (NodeId j : sub.neighbors(static_cast<NodeId>(i)))
      items.emplace_back(static_cast<std::int32_t>(i), j, inv);
  }
  return SparseMatrix::from_triplets(n, n, items);
}

SparseMatrix mean_adj(const EnclosingSubgraph& sub) {
  const auto n = static_cast<std::int64_t>(sub.num_nodes());
  std::vector<std::tuple<std::int32_t, std::int32_t, double>> items;
  for (std::int64_t i = 0; i < n; ++i) {
    auto nbrs = sub.neighbors(static_cast<NodeId>(i));
    if (nbrs.empty()) continue;
    double inv = 1.0 / static_cast<double>(nbrs.size());
    for (NodeId j : nbrs) items.emplace_back(static_cast<std::int32_t>(i), j, inv);
  }
  return SparseMatrix::from_triplets(n, n, items);
}

// --------------------------------------------------------------- forward

Tensor embed_nodes(Tape& tape, const ModelParams& params, const GnnConfig& cfg,
                   const EnclosingSubgraph& sub, const FeatureMatrix& feats) {
  validate_config(cfg);
  if (feats.x.rows() != static_cast<std::int64_t>(sub.num_nodes()))
    throw ContractError("embed_nodes: feature rows " + std::to_string(feats.x.rows()) +
                        " do not match subgraph nodes " + std::to_string(sub.num_nodes()));
  Tensor x = feats.x;
  std::vector<Tensor> layers;
  switch (cfg.arch) {
    case Arch::gcn: {
      SparseMatrix s = sym_norm_adj(sub);
      for (int i = 1; i <= cfg.k; ++i) {
        x = tape.relu(tape.matmul(tape.spmm(s, x), params.at("gcn.w" + std::to_string(i))));
        layers.push_back(x);
      }
      break;
    }
    case Arch::gin: {
      SparseMatrix a = plain_adj(sub);
      for (int i = 1; i <= cfg.k; ++i) {
        const std::string base = "gin.l" + std::to_string(i) + ".";
        Tensor agg = tape.add(tape.scale(x, 1.0 + cfg.gin_epsilon), tape.spmm(a, x));
        Tensor hidden = tape.relu(
            tape.add_rowwise(tape.matmul(agg, params.at(base + "w1")), params.at(base + "b1")));
        x = tape.add_rowwise(tape.matmul(hidden, params.at(base + "w2")),
                             params.at(base + "b2"));
        layers.push_back(x);
      }
      break;
    }
    case Arch::sage: {
      SparseMatrix m = mean_adj(sub);
      for (int i = 1; i <= cfg.k; ++i) {
        Tensor both = tape.concat_cols({x, tape.spmm(m, x)});
        x = tape.relu(tape.matmul(both, params.at("sage.w" + std::to_string(i))));
        layers.push_back(x);
      }
      break;
    }
    case Arch::dgcnn: {
      SparseMatrix s = row_norm_adj(sub);
      for (int i = 1; i <= cfg.k; ++i) {
        x = tape.tanh(tape.matmul(tape.spmm(s, x), params.at("dgcnn.w" + std::to_string(i))));
        layers.push_back(x);
      }
      break;
    }
  }
  return tape.concat_cols(layers);
}

Tensor score_pair(Tape& tape, const ModelParams& params, const GnnConfig& cfg,
                  const Tensor& emb) {
  (void)cfg;
  Tensor eu = tape.slice_rows(emb, 0, 1);
  Tensor ev = tape.slice_rows(emb, 1, 2);
  Tensor prod = tape.hadamard(eu, ev);
  Tensor diff = tape.abs(tape.sub(eu, ev));
  Tensor h = tape.concat_cols({prod, diff});
  Tensor z = tape.relu(tape.add_rowwise(tape.matmul(h, params.at("scorer.w1")),
                                        params.at("scorer.b1")));
  return tape.add_rowwise(tape.matmul(z, params.at("scorer.w2")), params.at("scorer.b2"));
}

Tensor score_pair_dgcnn(Tape& tape, const ModelParams& params, const GnnConfig& cfg,
                        const Tensor& emb) {
  const auto n = emb.rows();
  const auto width = emb.cols();
  // canonical node order from embedding values: trailing channel descending,
  // earlier channels break ties, then local index
  std::vector<std::int32_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
    for (std::int64_t c = width - 1; c >= 0; --c) {
      double va = emb.at(a, c), vb = emb.at(b, c);
      if (va != vb) return va > vb;
    }
    return a < b;
  });
  const auto keep = std::min<std::int64_t>(n, cfg.sortpool_k);
  order.resize(static_cast<std::size_t>(keep));
  Tensor pooled = tape.embedding_lookup(emb, order);
  if (keep < cfg.sortpool_k) pooled = tape.pad_rows(pooled, cfg.sortpool_k);
  Tensor conv = tape.relu(tape.add_rowwise(tape.matmul(pooled, params.at("dgcnn.conv.w")),
                                           params.at("dgcnn.conv.b")));
  Tensor flat = tape.reshape(conv, {1, static_cast<std::int64_t>(cfg.sortpool_k) * cfg.conv_channels});
  return tape.add_rowwise(tape.matmul(flat, params.at("dgcnn.out.w")), params.at("dgcnn.out.b"));
}

Tensor score_subgraph(Tape& tape, const ModelParams& params, const GnnConfig& cfg,
                      const EnclosingSubgraph& sub, const FeatureMatrix& feats) {
  Tensor emb = embed_nodes(tape, params, cfg, sub, feats);
  return cfg.arch == Arch::dgcnn ? score_pair_dgcnn(tape, params, cfg, emb)
                                 : score_pair(tape, params, cfg, emb);
}

int resolve_sortpool_k(const std::vector<int>& train_subgraph_sizes, double coverage) {
  if (train_subgraph_sizes.empty())
    throw ContractError("resolve_sortpool_k: no training subgraph sizes");
  auto sizes = train_subgraph_sizes;
  std::sort(sizes.begin(), sizes.end());
  auto idx = static_cast<std::size_t>(
      std::ceil(coverage * static_cast<double>(sizes.size())));
  idx = std::min(std::max<std::size_t>(idx, 1), sizes.size()) - 1;
  return std::max(2, sizes[idx]);
}

// ------------------------------------------------------------ checkpoint

void save_checkpoint(const std::string& path, const GnnConfig& cfg, int feature_width,
                     const ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  const char magic[8] = {'L', 'P', 'C', 'K', 'P', 'T', '1', '\n'};
  out.write(magic, sizeof magic);
  auto put = [&](std::int64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
  put(static_cast<std::int64_t>(cfg.arch));
  put(cfg.k);
  put(cfg.hidden);
  put(cfg.sortpool_k);
  put(cfg.conv_channels);
  put(cfg.scorer_hidden);
  out.write(reinterpret_cast<const char*>(&cfg.gin_epsilon), sizeof cfg.gin_epsilon);
  put(feature_width);
  put(static_cast<std::int64_t>(params.items.size()));
  for (const auto& [name, t] : params.items) {
    put(static_cast<std::int64_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put(static_cast<std::int64_t>(t.shape().size()));
    for (auto d : t.shape()) put(d);
    out.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(t.data().size() * sizeof(double)));
  }
  if (!out) throw DataError("write failed on " + path);

  std::ofstream manifest(path + ".manifest.csv");
  manifest << "name,rows,cols\n";
  for (const auto& [name, t] : params.items) {
    manifest << name << ',' << t.shape()[0] << ','
             << (t.shape().size() == 2 ? t.shape()[1] : 1) << "\n";
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  const char expect[8] = {'L', 'P', 'C', 'K', 'P', 'T', '1', '\n'};
  if (!in || !std::equal(magic, magic + 8, expect))
    throw DataError(path + ": not a checkpoint file");
  auto get = [&]() {
    std::int64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
  };
  Checkpoint ck;
  ck.cfg.arch = static_cast<Arch>(get());
  ck.cfg.k = static_cast<int>(get());
  ck.cfg.hidden = static_cast<int>(get());
  ck.cfg.sortpool_k = static_cast<int>(get());
  ck.cfg.conv_channels = static_cast<int>(get());
  ck.cfg.scorer_hidden = static_cast<int>(get());
  in.read(reinterpret_cast<char*>(&ck.cfg.gin_epsilon), sizeof ck.cfg.gin_epsilon);
  ck.feature_width = static_cast<int>(get());
  auto count = get();
  if (!in || count < 0 || count > 4096) throw DataError(path + ": corrupt checkpoint header");
  for (std::int64_t i = 0; i < count; ++i) {
    auto name_len = get();
    if (!in || name_len < 1 || name_len > 256) throw DataError(path + ": corrupt parameter name");
    std::string name(static_cast<std::size_t>(name_len), '\0');
    in.read(name.data(), name_len);
    auto rank = get();
    if (rank < 1 || rank > 2) throw DataError(path + ": corrupt parameter rank");
    Shape shape;
    std::int64_t numel = 1;
    for (std::int64_t r = 0; r < rank; ++r) {
      shape.push_back(get());
      numel *= shape.back();
    }
    if (!in || numel < 0 || numel > (1LL << 30)) throw DataError(path + ": corrupt shape");
    std::vector<double> vals(static_cast<std::size_t>(numel));
    in.read(reinterpret_cast<char*>(vals.data()),
            static_cast<std::streamsize>(vals.size() * sizeof(double)));
    Tensor t = Tensor::from(shape, std::move(vals));
    t.set_requires_grad(true);
    ck.params.items.emplace_back(std::move(name), std::move(t));
  }
  if (!in) throw DataError(path + ": truncated checkpoint");
  return ck;
}

}  // namespace linkpred
