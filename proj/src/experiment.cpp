#include "linkpred/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "linkpred/embed.hpp"
#include "linkpred/errors.hpp"
#include "linkpred/gnn.hpp"
#include "linkpred/pipeline.hpp"
#include "linkpred/rng.hpp"
#include "linkpred/train.hpp"

namespace linkpred {

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string full(double v) { return fmt("%.17g", v); }
std::string fixed6(double v) { return fmt("%.6f", v); }

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    int x = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": not an integer: '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": not a number: '" + v + "'");
  }
}

std::string join_strings(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += v[i];
  }
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += full(v[i]);
  }
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  f << text;
  if (!f) throw DataError("write failed for " + path);
}

}  // namespace

std::string serialize_config(const ExperimentConfig& c) {
  std::string out;
  auto kv = [&out](const std::string& k, const std::string& v) { out += k + "=" + v + "\n"; };
  kv("dataset", c.dataset);
  kv("archs", join_strings(c.archs));
  kv("modes", join_strings(c.modes));
  kv("loss", c.loss);
  kv("k", std::to_string(c.k));
  kv("hidden", std::to_string(c.hidden));
  kv("scorer_hidden", std::to_string(c.scorer_hidden));
  kv("conv_channels", std::to_string(c.conv_channels));
  kv("gin_epsilon", full(c.gin_epsilon));
  kv("dim", std::to_string(c.dim));
  kv("p", full(c.p));
  kv("q", full(c.q));
  kv("r", std::to_string(c.r));
  kv("walks_per_node", std::to_string(c.walks_per_node));
  kv("window", std::to_string(c.window));
  kv("n2v_epochs", std::to_string(c.n2v_epochs));
  kv("negatives", std::to_string(c.negatives));
  kv("n2v_lr", full(c.n2v_lr));
  kv("mf_lambda", full(c.mf_lambda));
  kv("mf_epochs", std::to_string(c.mf_epochs));
  kv("mf_lr", full(c.mf_lr));
  kv("lr", full(c.lr));
  kv("patience", std::to_string(c.patience));
  kv("max_epochs", std::to_string(c.max_epochs));
  kv("batch_size", std::to_string(c.batch_size));
  kv("neg_per_pos", std::to_string(c.neg_per_pos));
  kv("margin_grid", join_doubles(c.margin_grid));
  kv("rank_pos_cap", std::to_string(c.rank_pos_cap));
  kv("rank_neg_cap", std::to_string(c.rank_neg_cap));
  kv("val_neg_cap", std::to_string(c.val_neg_cap));
  kv("test_neg_cap", std::to_string(c.test_neg_cap));
  kv("seeds", join_ints(c.seeds));
  kv("attr_path", c.attr_path);
  kv("out_dir", c.out_dir);
  return out;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("config line missing '=': " + t);
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    if (key == "dataset")
      c.dataset = val;
    else if (key == "archs")
      c.archs = split_list(val);
    else if (key == "modes")
      c.modes = split_list(val);
    else if (key == "loss")
      c.loss = val;
    else if (key == "k")
      c.k = parse_int(key, val);
    else if (key == "hidden")
      c.hidden = parse_int(key, val);
    else if (key == "scorer_hidden")
      c.scorer_hidden = parse_int(key, val);
    else if (key == "conv_channels")
      c.conv_channels = parse_int(key, val);
    else if (key == "gin_epsilon")
      c.gin_epsilon = parse_double(key, val);
    else if (key == "dim")
      c.dim = parse_int(key, val);
    else if (key == "p")
      c.p = parse_double(key, val);
    else if (key == "q")
      c.q = parse_double(key, val);
    else if (key == "r")
      c.r = parse_int(key, val);
    else if (key == "walks_per_node")
      c.walks_per_node = parse_int(key, val);
    else if (key == "window")
      c.window = parse_int(key, val);
    else if (key == "n2v_epochs")
      c.n2v_epochs = parse_int(key, val);
    else if (key == "negatives")
      c.negatives = parse_int(key, val);
    else if (key == "n2v_lr")
      c.n2v_lr = parse_double(key, val);
    else if (key == "mf_lambda")
      c.mf_lambda = parse_double(key, val);
    else if (key == "mf_epochs")
      c.mf_epochs = parse_int(key, val);
    else if (key == "mf_lr")
      c.mf_lr = parse_double(key, val);
    else if (key == "lr")
      c.lr = parse_double(key, val);
    else if (key == "patience")
      c.patience = parse_int(key, val);
    else if (key == "max_epochs")
      c.max_epochs = parse_int(key, val);
    else if (key == "batch_size")
      c.batch_size = parse_int(key, val);
    else if (key == "neg_per_pos")
      c.neg_per_pos = parse_int(key, val);
    else if (key == "margin_grid") {
      c.margin_grid.clear();
      for (const auto& item : split_list(val)) c.margin_grid.push_back(parse_double(key, item));
    } else if (key == "rank_pos_cap")
      c.rank_pos_cap = parse_int(key, val);
    else if (key == "rank_neg_cap")
      c.rank_neg_cap = parse_int(key, val);
    else if (key == "val_neg_cap")
      c.val_neg_cap = parse_int(key, val);
    else if (key == "test_neg_cap")
      c.test_neg_cap = parse_int(key, val);
    else if (key == "seeds") {
      c.seeds.clear();
      for (const auto& item : split_list(val)) c.seeds.push_back(parse_int(key, item));
    } else if (key == "attr_path")
      c.attr_path = val;
    else if (key == "out_dir")
      c.out_dir = val;
    else
      throw ConfigError("unknown config key: " + key);
  }
  return c;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

Graph planted_partition(int n, int blocks, double p_in, double p_out, std::uint64_t seed) {
  if (n < 2 || blocks < 1 || blocks > n) throw ConfigError("planted_partition: bad n/blocks");
  if (p_in < 0 || p_in > 1 || p_out < 0 || p_out > 1)
    throw ConfigError("planted_partition: probabilities must lie in [0,1]");
  auto block_of = [&](int i) {
    return static_cast<int>(static_cast<std::int64_t>(i) * blocks / n);
  };
  Rng rng(derive_seed(seed, "planted"));
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) {
      double prob = block_of(u) == block_of(v) ? p_in : p_out;
      if (rng.next_double() < prob) edges.emplace_back(u, v);
    }
  return Graph::from_edges(n, std::move(edges));
}

Graph load_dataset(const std::string& spec) {
  const std::string prefix = "planted:";
  if (spec.rfind(prefix, 0) == 0) {
    auto parts = split_list(spec.substr(prefix.size()));
    if (parts.size() != 5)
      throw ConfigError("planted dataset needs n,blocks,p_in,p_out,seed: " + spec);
    int n = parse_int("planted n", parts[0]);
    int b = parse_int("planted blocks", parts[1]);
    double pin = parse_double("planted p_in", parts[2]);
    double pout = parse_double("planted p_out", parts[3]);
    int s = parse_int("planted seed", parts[4]);
    return planted_partition(n, b, pin, pout, static_cast<std::uint64_t>(s));
  }
  return load_edge_list(spec).graph;
}

void write_fixtures(const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_text_file(dir + "/triangle.edges", "# triangle fixture\n0 1\n1 2\n0 2\n");
  write_text_file(dir + "/path5.edges", "# five-node path fixture\n0 1\n1 2\n2 3\n3 4\n");
  Graph g = planted_partition(60, 2, 0.4, 0.05, 7);
  std::string text = "# planted-partition fixture: 60 nodes, 2 blocks, p_in=0.4, p_out=0.05, seed 7\n";
  for (NodeId u = 0; u < g.num_nodes(); ++u)
    for (NodeId v : g.neighbors(u))
      if (u < v) text += std::to_string(u) + " " + std::to_string(v) + "\n";
  write_text_file(dir + "/planted60.edges", text);
}

Tensor load_attributes(const std::string& path, NodeId num_nodes) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read attribute file " + path);
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(num_nodes));
  std::vector<bool> seen(static_cast<std::size_t>(num_nodes), false);
  std::int64_t width = -1;
  std::string line;
  while (std::getline(f, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    for (char& c : t)
      if (c == ',' || c == '\t') c = ' ';
    std::vector<std::string> cells;
    {
      std::stringstream row(t);
      std::string cell;
      while (row >> cell) cells.push_back(cell);
    }
    if (cells.empty()) continue;
    if (cells[0] == "node_id" || cells[0] == "id") continue;  // header
    int u = parse_int("attribute node_id", cells[0]);
    if (u < 0 || u >= num_nodes)
      throw DataError("attribute row for node " + std::to_string(u) + " outside graph");
    std::vector<double> vals;
    for (std::size_t i = 1; i < cells.size(); ++i)
      vals.push_back(parse_double("attribute value", cells[i]));
    if (width < 0) width = static_cast<std::int64_t>(vals.size());
    if (width != static_cast<std::int64_t>(vals.size()) || width == 0)
      throw DataError("attribute rows have inconsistent width in " + path);
    if (seen[static_cast<std::size_t>(u)])
      throw DataError("duplicate attribute row for node " + std::to_string(u));
    seen[static_cast<std::size_t>(u)] = true;
    rows[static_cast<std::size_t>(u)] = std::move(vals);
  }
  for (NodeId u = 0; u < num_nodes; ++u)
    if (!seen[static_cast<std::size_t>(u)])
      throw DataError("attribute file " + path + " is missing node " + std::to_string(u));
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(num_nodes) * static_cast<std::size_t>(width));
  for (const auto& row : rows) flat.insert(flat.end(), row.begin(), row.end());
  return Tensor::from({num_nodes, width}, std::move(flat));
}

namespace {

enum class Side { none, n2v, mf, attr };

struct ModeInfo {
  FeatureMode fmode = FeatureMode::drnl_only;
  Side side = Side::none;
};

ModeInfo mode_info(const std::string& s) {
  if (s == "drnl_only") return {FeatureMode::drnl_only, Side::none};
  if (s == "drnl_plus_n2v") return {FeatureMode::drnl_plus_embed, Side::n2v};
  if (s == "drnl_plus_mf") return {FeatureMode::drnl_plus_embed, Side::mf};
  if (s == "drnl_plus_attr") return {FeatureMode::drnl_plus_attr, Side::attr};
  throw ConfigError("unknown feature mode: " + s);
}

std::string file_safe(const std::string& cell) {
  std::string out = cell;
  for (char& c : out)
    if (c == '/') c = '_';
  return out;
}

std::string trace_csv(const std::vector<EpochTrace>& trace) {
  std::string text = "epoch,train_loss,val_map,elapsed_ms\n";
  for (const auto& row : trace)
    text += std::to_string(row.epoch) + "," + fixed6(row.train_loss) + "," +
            fixed6(row.val_map) + "," + std::to_string(row.elapsed_ms) + "\n";
  return text;
}

}  // namespace

void write_report_csv(const std::string& path, const EvalReport& rep) {
  std::string text = "query,ap,rr\n";
  for (std::size_t i = 0; i < rep.queries.size(); ++i)
    text += std::to_string(rep.queries[i]) + "," + fixed6(rep.ap[i]) + "," + fixed6(rep.rr[i]) +
            "\n";
  text += "summary," + fixed6(rep.map) + "," + fixed6(rep.mrr) + "\n";
  write_text_file(path, text);
}

EvalReport read_report_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read report " + path);
  EvalReport rep;
  std::string line;
  bool saw_summary = false;
  while (std::getline(f, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto cells = split_list(t);
    if (cells.size() != 3) throw DataError("malformed report row in " + path + ": " + t);
    if (cells[0] == "query") continue;
    if (cells[0] == "summary") {
      rep.map = parse_double("map", cells[1]);
      rep.mrr = parse_double("mrr", cells[2]);
      saw_summary = true;
      continue;
    }
    rep.queries.push_back(static_cast<NodeId>(parse_int("query", cells[0])));
    rep.ap.push_back(parse_double("ap", cells[1]));
    rep.rr.push_back(parse_double("rr", cells[2]));
  }
  if (rep.queries.empty()) throw DataError("report " + path + " holds no query rows");
  if (!saw_summary) throw DataError("report " + path + " is missing its summary row");
  return rep;
}

void write_gain_files(const std::string& csv_path, const std::string& plot_path,
                      const GainReport& gain) {
  std::string text = "query,ap_ours,ap_baseline,gain\n";
  for (const auto& row : gain.rows)
    text += std::to_string(row.query) + "," + fixed6(row.ap_ours) + "," +
            fixed6(row.ap_baseline) + "," + fixed6(row.gain) + "\n";
  text += "positive_fraction," + fixed6(gain.positive_fraction) + "\n";
  write_text_file(csv_path, text);

  std::string plot;
  for (std::size_t i = 0; i < gain.rows.size(); ++i)
    plot += std::to_string(i) + " " + fixed6(gain.rows[i].gain) + "\n";
  write_text_file(plot_path, plot);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::uint64_t master_seed, int jobs,
                                bool write_outputs) {
  if (cfg.archs.empty()) throw ConfigError("archs must be non-empty");
  if (cfg.modes.empty()) throw ConfigError("modes must be non-empty");
  if (cfg.seeds.empty()) throw ConfigError("seeds must be non-empty");
  if (cfg.loss != "bce" && cfg.loss != "rank")
    throw ConfigError("loss must be bce or rank, got " + cfg.loss);
  for (const auto& a : cfg.archs) arch_from_string(a);
  bool needs_attr = false;
  for (const auto& m : cfg.modes) needs_attr |= mode_info(m).side == Side::attr;
  if (needs_attr && cfg.attr_path.empty())
    throw ConfigError("drnl_plus_attr mode requires attr_path");

  Graph g = load_dataset(cfg.dataset);
  std::vector<NodeId> queries = query_nodes(g);
  if (queries.empty()) throw DataError("dataset has no query nodes (no triangles)");

  Tensor attrs;
  if (needs_attr) attrs = load_attributes(cfg.attr_path, g.num_nodes());

  if (write_outputs) std::filesystem::create_directories(cfg.out_dir);

  ExperimentResult result;
  std::vector<std::pair<std::string, std::vector<double>>> grid_maps;
  for (const auto& arch : cfg.archs)
    for (const auto& mode : cfg.modes) grid_maps.emplace_back(arch + "/" + mode, std::vector<double>{});

  for (int si : cfg.seeds) {
    std::uint64_t split_seed = derive_seed(master_seed, "split", static_cast<std::uint64_t>(si));
    std::vector<QuerySplit> splits;
    splits.reserve(queries.size());
    for (NodeId q : queries) splits.push_back(split_per_query(g, q, split_seed));
    Graph observed = observed_graph(g, splits);

    bool needs_n2v = false, needs_mf = false;
    for (const auto& m : cfg.modes) {
      Side s = mode_info(m).side;
      needs_n2v |= s == Side::n2v;
      needs_mf |= s == Side::mf;
    }
    Tensor n2v_side, mf_side;
    if (needs_n2v) {
      Node2VecConfig nc;
      nc.dim = cfg.dim;
      nc.p = cfg.p;
      nc.q = cfg.q;
      nc.walk_length = cfg.r;
      nc.walks_per_node = cfg.walks_per_node;
      nc.window = cfg.window;
      nc.epochs = cfg.n2v_epochs;
      nc.negatives = cfg.negatives;
      nc.lr = cfg.n2v_lr;
      n2v_side = train_node2vec(observed, nc,
                                derive_seed(master_seed, "embed/n2v", static_cast<std::uint64_t>(si)))
                     .to_tensor();
    }
    if (needs_mf) {
      MfConfig mc;
      mc.dim = cfg.dim;
      mc.lambda = cfg.mf_lambda;
      mc.epochs = cfg.mf_epochs;
      mc.lr = cfg.mf_lr;
      mf_side = train_mf(observed, mc,
                         derive_seed(master_seed, "embed/mf", static_cast<std::uint64_t>(si)))
                    .to_tensor();
    }

    std::size_t grid_idx = 0;
    for (const auto& arch : cfg.archs) {
      for (const auto& mode : cfg.modes) {
        ModeInfo mi = mode_info(mode);
        const Tensor* side = nullptr;
        if (mi.side == Side::n2v) side = &n2v_side;
        if (mi.side == Side::mf) side = &mf_side;
        if (mi.side == Side::attr) side = &attrs;

        FeatureContext ctx;
        ctx.observed = &observed;
        ctx.mode = mi.fmode;
        ctx.side = side;
        ctx.hops = cfg.k;

        GnnConfig gcfg;
        gcfg.arch = arch_from_string(arch);
        gcfg.k = cfg.k;
        gcfg.hidden = cfg.hidden;
        gcfg.gin_epsilon = cfg.gin_epsilon;
        gcfg.conv_channels = cfg.conv_channels;
        gcfg.scorer_hidden = cfg.scorer_hidden;
        if (gcfg.arch == Arch::dgcnn)
          gcfg.sortpool_k = resolve_sortpool_k(train_subgraph_sizes(ctx, splits));

        std::string cell = arch + "/" + mode + "/s" + std::to_string(si);
        std::uint64_t tseed = derive_seed(master_seed, cell);

        TrainConfig tcfg;
        tcfg.loss = cfg.loss == "bce" ? LossKind::bce : LossKind::rank;
        tcfg.lr = cfg.lr;
        tcfg.patience = cfg.patience;
        tcfg.margin_grid = cfg.margin_grid;
        tcfg.max_epochs = cfg.max_epochs;
        tcfg.neg_per_pos = cfg.neg_per_pos;
        tcfg.batch_size = cfg.batch_size;
        tcfg.rank_pos_cap = cfg.rank_pos_cap;
        tcfg.rank_neg_cap = cfg.rank_neg_cap;
        tcfg.val_neg_cap = cfg.val_neg_cap;
        tcfg.seed = tseed;

        TrainResult tr = tcfg.loss == LossKind::rank
                             ? cross_validate_margin(splits, ctx, gcfg, tcfg, jobs)
                             : train_model(splits, ctx, gcfg, tcfg, jobs);

        auto lists = rank_candidates(tr.params, gcfg, ctx, splits, SplitPart::test, jobs,
                                     cfg.test_neg_cap, derive_seed(tseed, "test/cap"));
        EvalReport rep = aggregate(lists);

        CellResult cr;
        cr.arch = arch;
        cr.mode = mode;
        cr.seed_index = si;
        cr.test_map = rep.map;
        cr.test_mrr = rep.mrr;
        cr.best_epoch = tr.best_epoch;
        cr.margin = tcfg.loss == LossKind::rank ? tr.margin : 0.0;
        cr.best_val_map = tr.best_val_map;
        cr.report = rep;

        grid_maps[grid_idx].second.push_back(rep.map);

        if (write_outputs) {
          std::string stem = file_safe(cell);
          write_report_csv(cfg.out_dir + "/report_" + stem + ".csv", rep);
          write_text_file(cfg.out_dir + "/trace_" + stem + ".csv", trace_csv(tr.trace));
        }
        result.cells.push_back(std::move(cr));
        ++grid_idx;
      }
    }
  }

  for (const auto& [key, maps] : grid_maps) {
    double sum = 0.0;
    for (double m : maps) sum += m;
    result.summary.emplace_back(key, maps.empty() ? 0.0 : sum / static_cast<double>(maps.size()));
  }

  if (write_outputs) {
    std::string cells = "arch,mode,seed_index,map,mrr,best_epoch,margin\n";
    for (const auto& cr : result.cells)
      cells += cr.arch + "," + cr.mode + "," + std::to_string(cr.seed_index) + "," +
               fixed6(cr.test_map) + "," + fixed6(cr.test_mrr) + "," +
               std::to_string(cr.best_epoch) + "," + fixed6(cr.margin) + "\n";
    write_text_file(cfg.out_dir + "/cells.csv", cells);

    std::string header = "dataset";
    std::string row = csv_cell(cfg.dataset);
    for (const auto& [key, mean] : result.summary) {
      header += ",map_" + file_safe(key);
      row += "," + fixed6(mean);
    }
    write_text_file(cfg.out_dir + "/summary.csv", header + "\n" + row + "\n");
    write_text_file(cfg.out_dir + "/config.txt", serialize_config(cfg));
  }
  return result;
}

std::vector<SweepRow> run_walk_sweep(const ExperimentConfig& cfg, std::uint64_t master_seed,
                                     int jobs, bool write_outputs) {
  Graph g = load_dataset(cfg.dataset);
  auto r_of = [&](double frac) {
    return std::max(2, static_cast<int>(std::llround(frac * static_cast<double>(g.num_nodes()))));
  };
  std::vector<int> rs{r_of(0.02), r_of(0.05)};
  if (rs[1] == rs[0]) rs.pop_back();

  std::vector<SweepRow> rows;
  for (int r : rs) {
    ExperimentConfig sub = cfg;
    sub.r = r;
    sub.archs = {cfg.archs.front()};
    sub.modes = {"drnl_plus_n2v"};
    sub.out_dir = cfg.out_dir + "/sweep_r" + std::to_string(r);
    ExperimentResult res = run_experiment(sub, master_seed, jobs, write_outputs);
    rows.push_back({r, res.summary.front().second});
  }

  if (write_outputs) {
    std::filesystem::create_directories(cfg.out_dir);
    std::string text = "r,map\n";
    for (const auto& row : rows) text += std::to_string(row.r) + "," + fixed6(row.map) + "\n";
    write_text_file(cfg.out_dir + "/sweep.csv", text);
  }
  return rows;
}

}  // namespace linkpred
