#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "linkpred/errors.hpp"
#include "linkpred/experiment.hpp"
#include "linkpred/graph.hpp"
#include "linkpred/pipeline.hpp"
#include "linkpred/rng.hpp"
#include "linkpred/train.hpp"

using namespace linkpred;

namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Fixture {
  Graph g;
  std::vector<QuerySplit> splits;
  Graph observed;
  FeatureContext ctx;

  explicit Fixture(std::uint64_t seed) : g(planted_partition(36, 2, 0.55, 0.05, 9)) {
    for (NodeId q : query_nodes(g)) splits.push_back(split_per_query(g, q, seed));
    REQUIRE(splits.size() >= 4);
    observed = observed_graph(g, splits);
    ctx.observed = &observed;
    ctx.mode = FeatureMode::drnl_only;
    ctx.hops = 1;
  }
};

GnnConfig small_gnn() {
  GnnConfig cfg;
  cfg.k = 1;
  cfg.hidden = 8;
  cfg.scorer_hidden = 8;
  return cfg;
}

}  // namespace

TEST_CASE("bce loss values") {
  std::vector<double> s{0.0};
  std::vector<int> y{1};
  CHECK(bce_loss(s, y) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  std::vector<double> s2{1.0, -1.0};
  std::vector<int> y2{1, 0};
  CHECK(bce_loss(s2, y2) == doctest::Approx(2 * softplus(-1.0)).epsilon(1e-12));

  // confident correct predictions cost almost nothing
  std::vector<double> s3{10.0, -10.0};
  CHECK(bce_loss(s3, y2) < 1e-4);

  // label symmetry: flipping score and label gives the same cost
  for (double v : {-3.0, -0.2, 0.7, 4.0}) {
    std::vector<double> a{v}, b{-v};
    std::vector<int> one{1}, zero{0};
    CHECK(bce_loss(a, one) == bce_loss(b, zero));
  }

  // softplus form stays finite at extreme scores
  std::vector<double> s4{1000.0};
  std::vector<int> y4{0};
  CHECK(bce_loss(s4, y4) == doctest::Approx(1000.0));
  std::vector<double> s5{-1000.0};
  std::vector<int> y5{1};
  CHECK(bce_loss(s5, y5) == doctest::Approx(1000.0));

  std::vector<int> bad{2};
  CHECK_THROWS_AS(bce_loss(s, bad), ContractError);
  std::vector<int> short_labels{};
  CHECK_THROWS_AS(bce_loss(s, short_labels), ContractError);
}

TEST_CASE("ranking loss values") {
  std::vector<std::vector<double>> pos{{1.0, 2.0}};
  std::vector<std::vector<double>> neg{{1.5}};
  CHECK(ranking_loss(pos, neg, 0.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(ranking_loss(pos, neg, 1.0) == doctest::Approx(1.5 + 0.5).epsilon(1e-12));

  // separated by more than the margin: zero loss
  std::vector<std::vector<double>> p2{{5.0}};
  std::vector<std::vector<double>> n2{{0.0}};
  CHECK(ranking_loss(p2, n2, 1.0) == 0.0);

  // queries sum independently
  std::vector<std::vector<double>> p3{{1.0}, {0.0}};
  std::vector<std::vector<double>> n3{{2.0}, {0.5}};
  CHECK(ranking_loss(p3, n3, 0.0) == doctest::Approx(1.0 + 0.5).epsilon(1e-12));

  CHECK_THROWS_AS(ranking_loss(p3, neg, 0.0), ContractError);
}

TEST_CASE("taped losses match the plain forms") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> scores(8);
    std::vector<int> labels(8);
    for (int i = 0; i < 8; ++i) {
      scores[static_cast<std::size_t>(i)] = rng.uniform(-3.0, 3.0);
      labels[static_cast<std::size_t>(i)] = rng.next_double() < 0.5 ? 1 : 0;
    }
    Tape tape(false);
    Tensor s = Tensor::from({8}, scores);
    double taped = bce_loss_taped(tape, s, labels).value();
    CHECK(taped == doctest::Approx(bce_loss(scores, labels)).epsilon(1e-12));

    std::vector<double> ps(3), ns(4);
    for (auto& v : ps) v = rng.uniform(-2.0, 2.0);
    for (auto& v : ns) v = rng.uniform(-2.0, 2.0);
    Tape t2(false);
    double rt = ranking_loss_taped(t2, Tensor::from({3}, ps), Tensor::from({4}, ns), 0.7).value();
    CHECK(rt == doctest::Approx(ranking_loss({ps}, {ns}, 0.7)).epsilon(1e-12));
  }
}

TEST_CASE("loss gradients") {
  SUBCASE("bce gradient is sigmoid(s) - y") {
    std::vector<double> scores{0.4, -1.2, 2.0, 0.0};
    std::vector<int> labels{1, 0, 0, 1};
    Tape tape;
    Tensor s = Tensor::from({4}, scores).set_requires_grad(true);
    Tensor loss = bce_loss_taped(tape, s, labels);
    auto grad = tape.backward(loss).dense(s);
    for (int i = 0; i < 4; ++i)
      CHECK(grad[static_cast<std::size_t>(i)] ==
            doctest::Approx(sigmoid(scores[static_cast<std::size_t>(i)]) -
                            labels[static_cast<std::size_t>(i)])
                .epsilon(1e-12));
  }
  SUBCASE("hinge gradient counts violations") {
    // pos {1, 3}, neg {1.5}, δ=0: only the first pair violates
    Tape tape;
    Tensor p = Tensor::from({2}, {1.0, 3.0}).set_requires_grad(true);
    Tensor n = Tensor::from({1}, {1.5}).set_requires_grad(true);
    Tensor loss = ranking_loss_taped(tape, p, n, 0.0);
    Gradients g = tape.backward(loss);
    auto gp = g.dense(p);
    auto gn = g.dense(n);
    CHECK(gp[0] == -1.0);
    CHECK(gp[1] == 0.0);
    CHECK(gn[0] == 1.0);
  }
  SUBCASE("finite differences") {
    std::vector<int> labels{1, 0, 1, 0, 0};
    auto fb = [&](Tape& tape, const Tensor& x) { return bce_loss_taped(tape, x, labels); };
    Tensor x = Tensor::from({5}, {0.3, -0.8, 1.1, 0.2, -2.0});
    CHECK(finite_difference_check(fb, x, 1e-6) < 1e-6);

    Tensor ns = Tensor::from({3}, {0.1, 0.9, -0.4});
    auto fr = [&](Tape& tape, const Tensor& x2) {
      Tensor nc = Tensor::from({3}, {0.1, 0.9, -0.4});
      return ranking_loss_taped(tape, x2, nc, 0.5);
    };
    Tensor px = Tensor::from({2}, {0.6, -0.3});
    CHECK(finite_difference_check(fr, px, 1e-6) < 1e-6);
  }
}

TEST_CASE("adam steps") {
  GnnConfig cfg = small_gnn();
  SUBCASE("first step moves by about lr in the gradient direction") {
    ModelParams params;
    Tensor t = Tensor::from({3}, {1.0, 2.0, 3.0}).set_requires_grad(true);
    params.items.emplace_back("w", std::move(t));
    AdamState state;
    adam_step(params, {{0.5, -0.2, 0.0}}, state, 0.01);
    auto d = params.at("w").data();
    CHECK(d[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-6));  // m̂/√v̂ = sign(g)
    CHECK(d[1] == doctest::Approx(2.0 + 0.01).epsilon(1e-6));
    CHECK(d[2] == 3.0);  // zero gradient leaves the weight untouched
    CHECK(state.t == 1);
  }
  SUBCASE("state persists across steps") {
    ModelParams params;
    params.items.emplace_back("w", Tensor::from({1}, {0.0}).set_requires_grad(true));
    AdamState state;
    for (int i = 0; i < 5; ++i) adam_step(params, {{1.0}}, state, 0.1);
    CHECK(state.t == 5);
    CHECK(params.at("w").at(0) == doctest::Approx(-0.5).epsilon(1e-3));  // ≈ lr per step
  }
  SUBCASE("contract and numeric errors") {
    ModelParams params = init_params(cfg, 11, 1);
    AdamState state;
    std::vector<std::vector<double>> wrong_count(params.items.size() - 1);
    CHECK_THROWS_AS(adam_step(params, wrong_count, state, 1e-3), ContractError);

    std::vector<std::vector<double>> grads(params.items.size());
    for (std::size_t i = 0; i < params.items.size(); ++i)
      grads[i].assign(static_cast<std::size_t>(params.items[i].second.numel()), 0.0);
    grads[1][0] = std::nan("");
    try {
      adam_step(params, grads, state, 1e-3);
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find(params.items[1].first) != std::string::npos);
    }
  }
}

TEST_CASE("early stopping rule") {
  SUBCASE("flat trace stops after patience epochs") {
    EarlyStopper st{6};
    bool stopped = false;
    int at = 0;
    for (int e = 1; e <= 10 && !stopped; ++e) {
      stopped = st.observe(e, 0.5);
      at = e;
    }
    CHECK(stopped);
    CHECK(at == 7);  // epoch 1 improves, then six flat epochs
    CHECK(st.best_epoch == 1);
    CHECK(st.best == 0.5);
  }
  SUBCASE("late improvement resets the counter") {
    EarlyStopper st{6};
    std::vector<double> vals{0.4, 0.5, 0.45, 0.45, 0.45, 0.45, 0.45, 0.45};
    bool stopped = false;
    int at = 0;
    for (std::size_t i = 0; i < vals.size() && !stopped; ++i) {
      stopped = st.observe(static_cast<int>(i + 1), vals[i]);
      at = static_cast<int>(i + 1);
    }
    CHECK(stopped);
    CHECK(at == 8);
    CHECK(st.best_epoch == 2);
  }
  SUBCASE("equal value is not an improvement") {
    EarlyStopper st{1};
    CHECK(!st.observe(1, 0.5));
    CHECK(st.observe(2, 0.5));
  }
}

TEST_CASE("training a small model") {
  Fixture fx(3);
  GnnConfig cfg = small_gnn();
  TrainConfig tcfg;
  tcfg.max_epochs = 6;
  tcfg.patience = 6;
  tcfg.seed = 11;

  TrainResult r = train_model(fx.splits, fx.ctx, cfg, tcfg, 1);
  REQUIRE(!r.trace.empty());
  CHECK(r.trace.size() <= 6);
  for (const auto& t : r.trace) {
    CHECK(std::isfinite(t.train_loss));
    CHECK(t.val_map >= 0.0);
    CHECK(t.val_map <= 1.0);
  }
  CHECK(r.best_val_map >= 0.0);

  // best_epoch points at the first maximum of the validation trace
  double best = -1.0;
  int best_epoch = 0;
  for (const auto& t : r.trace)
    if (t.val_map > best) {
      best = t.val_map;
      best_epoch = t.epoch;
    }
  CHECK(r.best_epoch == best_epoch);
  CHECK(r.best_val_map == best);

  // the returned checkpoint reproduces the best validation MAP
  double replay = validation_map(r.params, cfg, fx.ctx, fx.splits, 1, tcfg.val_neg_cap,
                                 derive_seed(tcfg.seed, "val/cap"));
  CHECK(replay == r.best_val_map);

  SUBCASE("training is deterministic") {
    TrainResult r2 = train_model(fx.splits, fx.ctx, cfg, tcfg, 1);
    REQUIRE(r2.trace.size() == r.trace.size());
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
      CHECK(r2.trace[i].train_loss == r.trace[i].train_loss);
      CHECK(r2.trace[i].val_map == r.trace[i].val_map);
    }
    for (std::size_t p = 0; p < r.params.items.size(); ++p) {
      auto a = r.params.items[p].second.data();
      auto b = r2.params.items[p].second.data();
      CHECK(std::equal(a.begin(), a.end(), b.begin()));
    }
  }
  SUBCASE("loss actually falls on an easy task") {
    TrainConfig longer = tcfg;
    longer.max_epochs = 12;
    longer.patience = 12;
    TrainResult r3 = train_model(fx.splits, fx.ctx, cfg, longer, 1);
    REQUIRE(r3.trace.size() >= 6);
    double first = r3.trace.front().train_loss;
    double last = r3.trace.back().train_loss;
    CHECK(last < first);
  }
}

TEST_CASE("training input validation") {
  Fixture fx(4);
  GnnConfig cfg = small_gnn();
  TrainConfig tcfg;
  CHECK_THROWS_AS(train_model({}, fx.ctx, cfg, tcfg, 1), ContractError);
  TrainConfig bad_lr = tcfg;
  bad_lr.lr = 0.0;
  CHECK_THROWS_AS(train_model(fx.splits, fx.ctx, cfg, bad_lr, 1), ConfigError);
  TrainConfig bad_pat = tcfg;
  bad_pat.patience = 0;
  CHECK_THROWS_AS(train_model(fx.splits, fx.ctx, cfg, bad_pat, 1), ConfigError);
}

TEST_CASE("ranking training and margin search") {
  Fixture fx(5);
  GnnConfig cfg = small_gnn();
  TrainConfig tcfg;
  tcfg.loss = LossKind::rank;
  tcfg.max_epochs = 3;
  tcfg.patience = 3;
  tcfg.rank_pos_cap = 5;
  tcfg.rank_neg_cap = 5;
  tcfg.seed = 21;

  SUBCASE("single ranking run produces a finite trace") {
    tcfg.margin = 1.0;
    TrainResult r = train_model(fx.splits, fx.ctx, cfg, tcfg, 1);
    REQUIRE(!r.trace.empty());
    CHECK(r.margin == 1.0);
    for (const auto& t : r.trace) CHECK(std::isfinite(t.train_loss));
  }
  SUBCASE("margin grid is searched completely") {
    tcfg.margin_grid = {1.0, 0.1};
    TrainResult r = cross_validate_margin(fx.splits, fx.ctx, cfg, tcfg, 1);
    REQUIRE(r.margin_results.size() == 2);
    CHECK(r.margin_results[0].first == 0.1);  // ascending order
    CHECK(r.margin_results[1].first == 1.0);
    double best = std::max(r.margin_results[0].second, r.margin_results[1].second);
    CHECK(r.best_val_map == best);
    // winner is the smallest δ achieving the best value
    for (const auto& [delta, map] : r.margin_results)
      if (map == best) {
        CHECK(r.margin == delta);
        break;
      }
  }
  SUBCASE("margin search requires the ranking loss") {
    TrainConfig bce = tcfg;
    bce.loss = LossKind::bce;
    CHECK_THROWS_AS(cross_validate_margin(fx.splits, fx.ctx, cfg, bce, 1), ContractError);
    TrainConfig empty_grid = tcfg;
    empty_grid.margin_grid = {};
    CHECK_THROWS_AS(cross_validate_margin(fx.splits, fx.ctx, cfg, empty_grid, 1), ConfigError);
  }
}
