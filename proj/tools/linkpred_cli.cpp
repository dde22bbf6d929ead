#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "linkpred/embed.hpp"
#include "linkpred/errors.hpp"
#include "linkpred/experiment.hpp"
#include "linkpred/graph.hpp"
#include "linkpred/metrics.hpp"
#include "linkpred/parallel.hpp"
#include "linkpred/rng.hpp"

namespace lp = linkpred;

namespace {

int cmd_stats(const lp::ExperimentConfig& cfg, const std::string& dataset_arg) {
  lp::Graph g = lp::load_dataset(dataset_arg.empty() ? cfg.dataset : dataset_arg);
  lp::GraphStats st = lp::graph_stats(g);
  std::string text = "nodes,edges,diameter,queries\n" + std::to_string(st.num_nodes) + "," +
                     std::to_string(st.num_edges) + "," + std::to_string(st.diameter) + "," +
                     std::to_string(st.num_query_nodes) + "\n";
  std::cout << text;
  return 0;
}

int cmd_embed(const lp::ExperimentConfig& cfg, const std::string& method, std::uint64_t seed) {
  lp::Graph g = lp::load_dataset(cfg.dataset);
  lp::EmbeddingTable table;
  std::string hyper;
  std::uint64_t embed_seed = lp::derive_seed(seed, "embed/" + method);
  if (method == "n2v") {
    lp::Node2VecConfig nc;
    nc.dim = cfg.dim;
    nc.p = cfg.p;
    nc.q = cfg.q;
    nc.walk_length = cfg.r;
    nc.walks_per_node = cfg.walks_per_node;
    nc.window = cfg.window;
    nc.epochs = cfg.n2v_epochs;
    nc.negatives = cfg.negatives;
    nc.lr = cfg.n2v_lr;
    table = lp::train_node2vec(g, nc, embed_seed);
    hyper = "dim=" + std::to_string(nc.dim) + " p=" + std::to_string(nc.p) +
            " q=" + std::to_string(nc.q) + " walk_length=" + std::to_string(nc.walk_length) +
            " walks_per_node=" + std::to_string(nc.walks_per_node) +
            " window=" + std::to_string(nc.window) + " epochs=" + std::to_string(nc.epochs) +
            " negatives=" + std::to_string(nc.negatives) + " lr=" + std::to_string(nc.lr);
  } else if (method == "mf") {
    lp::MfConfig mc;
    mc.dim = cfg.dim;
    mc.lambda = cfg.mf_lambda;
    mc.epochs = cfg.mf_epochs;
    mc.lr = cfg.mf_lr;
    table = lp::train_mf(g, mc, embed_seed);
    hyper = "dim=" + std::to_string(mc.dim) + " lambda=" + std::to_string(mc.lambda) +
            " epochs=" + std::to_string(mc.epochs) + " lr=" + std::to_string(mc.lr);
  } else {
    throw lp::ConfigError("embed method must be n2v or mf, got " + method);
  }
  std::filesystem::create_directories(cfg.out_dir);
  std::string path = cfg.out_dir + "/embedding_" + method + ".csv";
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(g.structure_hash()));
  lp::save_embedding_csv(path, table,
                         {"method=" + table.method, hyper, "seed=" + std::to_string(seed),
                          "graph_hash=" + std::string(hash)});
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_run(const lp::ExperimentConfig& cfg, std::uint64_t seed, int jobs) {
  lp::ExperimentResult res = lp::run_experiment(cfg, seed, jobs, true);
  for (const auto& [key, mean] : res.summary) std::cout << key << " MAP " << mean << "\n";
  std::cout << "wrote " << cfg.out_dir << "/summary.csv\n";
  return 0;
}

int cmd_sweep(const lp::ExperimentConfig& cfg, std::uint64_t seed, int jobs) {
  auto rows = lp::run_walk_sweep(cfg, seed, jobs, true);
  for (const auto& row : rows) std::cout << "r=" << row.r << " MAP " << row.map << "\n";
  std::cout << "wrote " << cfg.out_dir << "/sweep.csv\n";
  return 0;
}

int cmd_gain(const lp::ExperimentConfig& cfg, const std::string& ours_path,
             const std::string& baseline_path) {
  lp::EvalReport ours = lp::read_report_csv(ours_path);
  lp::EvalReport baseline = lp::read_report_csv(baseline_path);
  lp::GainReport gain = lp::gain_report(ours, baseline);
  std::filesystem::create_directories(cfg.out_dir);
  lp::write_gain_files(cfg.out_dir + "/gain.csv", cfg.out_dir + "/gain_plot.dat", gain);
  std::cout << "positive_fraction " << gain.positive_fraction << "\n";
  std::cout << "wrote " << cfg.out_dir << "/gain.csv\n";
  return 0;
}

int cmd_fixtures(const lp::ExperimentConfig& cfg) {
  lp::write_fixtures(cfg.out_dir);
  std::cout << "wrote " << cfg.out_dir << "/{triangle,path5,planted60}.edges\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"link prediction benchmark harness"};
  app.require_subcommand(1);

  std::string config_path, out_dir, dataset, method = "n2v", ours_path, baseline_path;
  std::uint64_t seed = 42;
  int jobs = lp::default_jobs();
  app.add_option("--config", config_path, "experiment config file (key=value lines)");
  app.add_option("--seed", seed, "master seed (default 42)");
  app.add_option("--out", out_dir, "output directory; overrides the config's out_dir");
  app.add_option("--jobs", jobs, "worker threads");

  CLI::App* stats = app.add_subcommand("stats", "emit nodes/edges/diameter/queries CSV");
  stats->add_option("dataset", dataset, "edge-list path or planted:n,b,p_in,p_out,seed");
  CLI::App* embed = app.add_subcommand("embed", "train and save a transductive embedding table");
  embed->add_option("--method", method, "n2v or mf (default n2v)");
  CLI::App* run = app.add_subcommand("run", "run the experiment grid and write reports");
  CLI::App* sweep = app.add_subcommand("sweep-walklength", "MAP at r = 0.02|V| and 0.05|V|");
  CLI::App* gain = app.add_subcommand("gain", "per-query AP gain between two report CSVs");
  gain->add_option("ours", ours_path, "report CSV of the combined model")->required();
  gain->add_option("baseline", baseline_path, "report CSV of the baseline")->required();
  CLI::App* fixtures = app.add_subcommand("fixtures", "write the bundled fixture graphs");
  for (CLI::App* sub : {stats, embed, run, sweep, gain, fixtures}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    lp::ExperimentConfig cfg =
        config_path.empty() ? lp::ExperimentConfig{} : lp::load_config_file(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (stats->parsed()) return cmd_stats(cfg, dataset);
    if (embed->parsed()) return cmd_embed(cfg, method, seed);
    if (run->parsed()) return cmd_run(cfg, seed, jobs);
    if (sweep->parsed()) return cmd_sweep(cfg, seed, jobs);
    if (gain->parsed()) return cmd_gain(cfg, ours_path, baseline_path);
    if (fixtures->parsed()) return cmd_fixtures(cfg);
    std::cerr << "no subcommand\n";
    return 1;
  } catch (const lp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const lp::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const lp::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const lp::ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
