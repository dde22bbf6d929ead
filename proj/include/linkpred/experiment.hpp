#pragma once
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "linkpred/graph.hpp"
#include "linkpred/metrics.hpp"
#include "linkpred/tensor.hpp"

namespace linkpred {

// Flat key=value experiment description. Every field has a default and the
// defaulted config runs end-to-end on the bundled planted-partition fixture.
struct ExperimentConfig {
  std::string dataset = "planted:60,2,0.4,0.05,7";
  std::vector<std::string> archs{"gcn"};
  std::vector<std::string> modes{"drnl_only", "drnl_plus_n2v"};
  std::string loss = "bce";

  int k = 1;  // hop radius and layer count
  int hidden = 32;
  int scorer_hidden = 32;
  int conv_channels = 16;
  double gin_epsilon = 0.0;

  int dim = 128;  // transductive embedding width
  double p = 1.0, q = 1.0;
  int r = 0;  // walk length; 0 -> max(2, round(0.05 |V|))
  int walks_per_node = 10;
  int window = 5;
  int n2v_epochs = 10;
  int negatives = 5;
  double n2v_lr = 0.025;
  double mf_lambda = 0.1;
  int mf_epochs = 500;
  double mf_lr = 0.01;

  double lr = 1e-3;
  int patience = 6;
  int max_epochs = 200;
  int batch_size = 32;
  int neg_per_pos = 1;
  std::vector<double> margin_grid{0.1, 1.0, 10.0};
  int rank_pos_cap = 20;
  int rank_neg_cap = 20;
  int val_neg_cap = 0;
  int test_neg_cap = 0;

  std::vector<int> seeds{0};  // seed indices; cell seeds derive from the master seed
  std::string attr_path;      // required by drnl_plus_attr
  std::string out_dir = "out";

  bool operator==(const ExperimentConfig&) const = default;
};

// One "key=value" line per field, lists comma-joined, doubles at full
// precision, so parse(serialize(c)) == c.
std::string serialize_config(const ExperimentConfig& cfg);
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

// Balanced contiguous blocks; each intra-block pair is an edge with
// probability p_in, inter-block with p_out. Deterministic in the seed.
Graph planted_partition(int n, int blocks, double p_in, double p_out, std::uint64_t seed);

// "planted:n,blocks,p_in,p_out,seed" or an edge-list path.
Graph load_dataset(const std::string& spec);

// Writes triangle.edges, path5.edges, planted60.edges into dir.
void write_fixtures(const std::string& dir);

// node_id,v1,...,vd rows (comments and a header line allowed), one row per
// graph node. Missing or incomplete files are configuration errors.
Tensor load_attributes(const std::string& path, NodeId num_nodes);

struct CellResult {
  std::string arch, mode;
  int seed_index = 0;
  double test_map = 0.0, test_mrr = 0.0;
  int best_epoch = 0;
  double margin = 0.0;
  double best_val_map = 0.0;
  EvalReport report;
};

struct ExperimentResult {
  std::vector<CellResult> cells;
  // mean test MAP per grid cell, keyed "arch/mode", in grid order
  std::vector<std::pair<std::string, double>> summary;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::uint64_t master_seed, int jobs,
                                bool write_outputs = true);

struct SweepRow {
  int r = 0;
  double map = 0.0;
};

// Reruns embed+train at r = 0.02|V| and 0.05|V| (each floored at 2) for the
// first architecture in drnl_plus_n2v mode; one row per r, seed-averaged.
std::vector<SweepRow> run_walk_sweep(const ExperimentConfig& cfg, std::uint64_t master_seed,
                                     int jobs, bool write_outputs = true);

void write_report_csv(const std::string& path, const EvalReport& rep);
EvalReport read_report_csv(const std::string& path);
void write_gain_files(const std::string& csv_path, const std::string& plot_path,
                      const GainReport& gain);

}  // namespace linkpred
