#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "sdnn/common.hpp"
#include "sdnn/iht.hpp"

using namespace sdnn;
using namespace sdnn::iht;

namespace {

nn::Layer fc_layer(std::size_t out, std::size_t in) {
  nn::Layer l;
  l.kind = nn::LayerKind::fully_connected;
  l.weights = Tensor({out, in});
  l.bias = Tensor({out});
  return l;
}

nn::Layer plain_layer(nn::LayerKind kind) {
  nn::Layer l;
  l.kind = kind;
  return l;
}

nn::NetworkModel mlp(std::size_t in, std::size_t hidden, std::size_t classes) {
  nn::NetworkModel m;
  m.input_shape = {in};
  m.class_count = classes;
  m.layers.push_back(fc_layer(hidden, in));
  m.layers.push_back(plain_layer(nn::LayerKind::relu));
  m.layers.push_back(fc_layer(classes, hidden));
  m.layers.push_back(plain_layer(nn::LayerKind::softmax));
  return m;
}

// input [1] -> fc(2) -> softmax, one sample x=1 with label 0: small enough to
// replay the optimizer arithmetic by hand.
struct ScalarToy {
  nn::NetworkModel model;
  data::Dataset data;
  TrainConfig cfg;

  ScalarToy() {
    model.input_shape = {1};
    model.class_count = 2;
    model.layers.push_back(fc_layer(2, 1));
    model.layers.push_back(plain_layer(nn::LayerKind::softmax));
    data.images = Tensor({1, 1}, {1.0});
    data.labels = {0};
    cfg.s1 = 1;
    cfg.s2 = 1;
    cfg.cycles = 1;
    cfg.learning_rate = 0.25;
    cfg.momentum = 0.0;
    cfg.weight_decay = 0.0;
    cfg.batch_size = 1;
    cfg.seed = 3;
    cfg.eval_test_each_epoch = false;
  }

  // One gradient step of the same arithmetic the engine performs.
  static void reference_step(double& w0, double& w1, double& b0, double& b1,
                             double lr, bool update_w1) {
    const double z0 = w0 * 1.0 + b0;
    const double z1 = w1 * 1.0 + b1;
    const double m = std::max(z0, z1);
    const double e0 = std::exp(z0 - m), e1 = std::exp(z1 - m);
    const double p0 = e0 / (e0 + e1), p1 = e1 / (e0 + e1);
    w0 -= lr * (p0 - 1.0);
    b0 -= lr * (p0 - 1.0);
    b1 -= lr * p1;
    if (update_w1) w1 -= lr * p1;
  }
};

std::size_t expected_budget(double ratio, std::size_t P) {
  const auto k = std::llround((1.0 - ratio) * static_cast<double>(P));
  return k < 1 ? 1 : static_cast<std::size_t>(k);
}

}  // namespace

// ============================================================================
// sparsity plan
// ============================================================================

TEST_CASE("ratio ramps linearly between its endpoints") {
  SparsityPlan plan;
  plan.target_ratio = 0.8;
  plan.start_ratio = 0.1;
  plan.schedule_epochs = 100.0;
  CHECK(plan.ratio_at(0, 0.0) == doctest::Approx(0.1));
  CHECK(plan.ratio_at(0, 50.0) == doctest::Approx(0.45));
  CHECK(plan.ratio_at(0, 100.0) == doctest::Approx(0.8));
  CHECK_THROWS_WITH_AS((void)plan.ratio_at(0, 101.0),
                       doctest::Contains("schedule time"), Error);
  CHECK_THROWS_AS((void)plan.ratio_at(0, -1.0), Error);
}

TEST_CASE("default start ratio is half the final one") {
  SparsityPlan plan;
  plan.target_ratio = 0.8;
  plan.schedule_epochs = 100.0;
  CHECK(plan.ratio_at(0, 0.0) == doctest::Approx(0.4));
  CHECK(plan.ratio_at(0, 100.0) == doctest::Approx(0.8));
}

TEST_CASE("a plan without a schedule always reports the final ratio") {
  SparsityPlan plan;
  plan.target_ratio = 0.6;
  plan.schedule_epochs = 0.0;
  CHECK(plan.ratio_at(0, 0.0) == doctest::Approx(0.6));
  CHECK(plan.ratio_at(0, 1234.5) == doctest::Approx(0.6));  // no range check
}

TEST_CASE("plan validation rejects out-of-range shapes") {
  SparsityPlan p;
  p.target_ratio = 1.0;
  CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("[0, 1)"), Error);

  SparsityPlan q;
  q.target_ratio = 0.5;
  q.start_ratio = 0.8;
  CHECK_THROWS_WITH_AS(q.validate(), doctest::Contains("start ratio"), Error);

  SparsityPlan r;
  r.uniform = false;
  CHECK_THROWS_WITH_AS(r.validate(), doctest::Contains("per-layer"), Error);

  SparsityPlan ok;
  ok.uniform = false;
  ok.per_layer_ratio = {0.3, 0.9};
  ok.start_ratio = 0.1;
  CHECK_NOTHROW(ok.validate());
  CHECK(ok.final_ratio(1) == doctest::Approx(0.9));
}

TEST_CASE("layer budgets count retained weights") {
  SparsityPlan plan;
  plan.schedule_epochs = 0.0;

  plan.target_ratio = 0.5;
  CHECK(layer_budget(plan, 1000, 0.0) == 500);
  plan.target_ratio = 0.9;
  CHECK(layer_budget(plan, 1000, 0.0) == 100);

  // rounding is half away from zero
  plan.target_ratio = 0.25;
  CHECK(layer_budget(plan, 18, 0.0) == 14);  // 13.5 rounds up

  // a budget that rounds to zero clamps to one entry, with a warning
  clear_warnings();
  plan.target_ratio = 0.9;
  CHECK(layer_budget(plan, 3, 0.0) == 1);
  REQUIRE_FALSE(warning_log().empty());
  CHECK(warning_log().back().find("rounded to zero") != std::string::npos);
  clear_warnings();

  CHECK_THROWS_AS((void)layer_budget(plan, 0, 0.0), Error);
}

// ============================================================================
// thresholding
// ============================================================================

TEST_CASE("threshold_model keeps the top-magnitude entries") {
  nn::NetworkModel m;
  m.input_shape = {4};
  m.class_count = 1;
  m.layers.push_back(fc_layer(1, 4));
  m.layers[0].weights.data = {0.9, -0.1, 0.5, 0.05};
  m.layers[0].bias.data = {0.33};

  auto [pruned, mask] = threshold_model(m, {2});
  CHECK(pruned.layers[0].weights.data ==
        std::vector<double>{0.9, 0.0, 0.5, 0.0});
  CHECK(mask.layer_masks[0] == std::vector<std::uint8_t>{1, 0, 1, 0});
  CHECK(mask.popcount(0) == 2);
  CHECK(pruned.layers[0].bias.data == std::vector<double>{0.33});  // untouched
}

TEST_CASE("a full budget leaves the model unchanged") {
  auto m = mlp(5, 4, 3);
  nn::init_glorot(m, 11);
  auto [pruned, mask] = threshold_model(m, {20, 0, 12, 0});
  for (std::size_t i : {std::size_t{0}, std::size_t{2}})
    CHECK(pruned.layers[i].weights.data == m.layers[i].weights.data);
  CHECK(mask.total_popcount() == 32);
}

TEST_CASE("thresholding separates magnitudes like a sort") {
  nn::NetworkModel m;
  m.input_shape = {1000};
  m.class_count = 1;
  m.layers.push_back(fc_layer(1, 1000));
  std::mt19937_64 rng(404);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (double& w : m.layers[0].weights.data) w = gauss(rng);
  const auto original = m.layers[0].weights.data;

  auto [pruned, mask] = threshold_model(std::move(m), {500});
  CHECK(mask.popcount(0) == 500);
  CHECK(pruned.layers[0].weights.nonzero_count() == 500);

  double min_kept = 1e30, max_dropped = 0.0;
  for (std::size_t j = 0; j < 1000; ++j) {
    if (mask.layer_masks[0][j]) {
      CHECK(pruned.layers[0].weights[j] == original[j]);
      min_kept = std::min(min_kept, std::abs(original[j]));
    } else {
      CHECK(pruned.layers[0].weights[j] == 0.0);
      max_dropped = std::max(max_dropped, std::abs(original[j]));
    }
  }
  CHECK(min_kept >= max_dropped);
}

TEST_CASE("the mask always holds exactly min(budget, P) entries") {
  // all-zero weights: selection falls back to index order but the count holds
  auto m = mlp(4, 3, 2);
  auto [pruned, mask] = threshold_model(m, {5, 0, 2, 0});
  CHECK(mask.popcount(0) == 5);
  CHECK(mask.popcount(2) == 2);
  CHECK(pruned.layers[0].weights.nonzero_count() == 0);

  auto [p2, m2] = threshold_model(m, {100, 0, 100, 0});  // budget > P
  CHECK(m2.popcount(0) == 12);
  CHECK(m2.popcount(2) == 6);
}

TEST_CASE("threshold budget validation") {
  auto m = mlp(4, 3, 2);
  CHECK_THROWS_WITH_AS((void)threshold_model(m, {5, 0}),
                       doctest::Contains("budgets cover"), Error);
  CHECK_THROWS_WITH_AS((void)threshold_model(m, {0, 0, 2, 0}),
                       doctest::Contains("has no budget"), Error);
  CHECK_THROWS_WITH_AS((void)threshold_model(m, {5, 1, 2, 0}),
                       doctest::Contains("parameter-free"), Error);

  m.layers[0].weights[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_WITH_AS((void)threshold_model(m, {5, 0, 2, 0}),
                       doctest::Contains("non-finite"), Error);
}

TEST_CASE("random thresholding draws a seeded subset of the right size") {
  auto m = mlp(6, 5, 3);
  nn::init_glorot(m, 17);
  auto [a, ma] = random_threshold_model(m, {10, 0, 7, 0}, 99);
  auto [b, mb] = random_threshold_model(m, {10, 0, 7, 0}, 99);
  auto [c, mc] = random_threshold_model(m, {10, 0, 7, 0}, 100);
  CHECK(ma.popcount(0) == 10);
  CHECK(ma.popcount(2) == 7);
  CHECK(ma.layer_masks == mb.layer_masks);
  CHECK(a.layers[0].weights.data == b.layers[0].weights.data);
  CHECK(ma.layer_masks != mc.layer_masks);  // astronomically unlikely to tie

  // full budget keeps everything regardless of the draw
  auto [full, mf] = random_threshold_model(m, {30, 0, 15, 0}, 7);
  CHECK(full.layers[0].weights.data == m.layers[0].weights.data);
  CHECK(mf.total_popcount() == 45);
}

// ============================================================================
// change ratio
// ============================================================================

TEST_CASE("change_ratio counts new support entries") {
  SupportMask prev, next;
  prev.layer_masks = {{1, 1, 0, 0}, {}, {1, 1, 1, 0, 0, 0}, {}};
  next.layer_masks = {{0, 1, 1, 0}, {}, {0, 0, 0, 1, 1, 1}, {}};
  const auto cr = change_ratio(prev, next);
  REQUIRE(cr.per_layer.size() == 4);
  CHECK(cr.per_layer[0] == doctest::Approx(0.5));  // {1,2} vs {0,1}
  CHECK(std::isnan(cr.per_layer[1]));
  CHECK(cr.per_layer[2] == doctest::Approx(1.0));  // disjoint
  CHECK(std::isnan(cr.per_layer[3]));
  // aggregate weights layers by retained count: (1 + 3) / (2 + 3)
  CHECK(cr.aggregate == doctest::Approx(0.8));

  CHECK(change_ratio(prev, prev).aggregate == doctest::Approx(0.0));
}

TEST_CASE("change_ratio rejects misaligned masks") {
  SupportMask a, b, c;
  a.layer_masks = {{1, 0}};
  b.layer_masks = {{1, 0}, {}};
  c.layer_masks = {{1, 0, 1}};
  CHECK_THROWS_WITH_AS((void)change_ratio(a, b),
                       doctest::Contains("layer counts"), Error);
  CHECK_THROWS_WITH_AS((void)change_ratio(a, c),
                       doctest::Contains("sizes differ"), Error);
}

// ============================================================================
// configuration
// ============================================================================

TEST_CASE("train config epoch accounting") {
  TrainConfig cfg;
  cfg.s1 = 5;
  cfg.s2 = 15;
  cfg.cycles = 3;
  CHECK(cfg.total_epochs() == 5 + 3 * 15 + 2 * 5);

  cfg.cycles = 1;
  CHECK(cfg.total_epochs() == 20);  // no restore phases
}

TEST_CASE("train config validation") {
  const TrainConfig base;
  auto broken = [&](auto mutate) {
    TrainConfig c = base;
    mutate(c);
    CHECK_THROWS_AS(c.validate(), Error);
  };
  broken([](TrainConfig& c) { c.s1 = 0; });
  broken([](TrainConfig& c) { c.s2 = 0; });
  broken([](TrainConfig& c) { c.cycles = 0; });
  broken([](TrainConfig& c) { c.learning_rate = 0.0; });
  broken([](TrainConfig& c) { c.momentum = 1.0; });
  broken([](TrainConfig& c) { c.momentum = -0.1; });
  broken([](TrainConfig& c) { c.weight_decay = -1e-6; });
  broken([](TrainConfig& c) { c.batch_size = 0; });
  broken([](TrainConfig& c) { c.flip_probability = 1.5; });
  CHECK_NOTHROW(base.validate());
}

// ============================================================================
// masked / dense phases against a hand recurrence
// ============================================================================

TEST_CASE("finetune_masked follows the projected recurrence exactly") {
  ScalarToy toy;
  toy.model.layers[0].weights.data = {0.2, 0.0};  // w1 already off-support
  SupportMask mask;
  mask.layer_masks = {{1, 0}, {}};

  double w0 = 0.2, w1 = 0.0, b0 = 0.0, b1 = 0.0;
  const int epochs = 9;
  for (int e = 0; e < epochs; ++e)
    ScalarToy::reference_step(w0, w1, b0, b1, toy.cfg.learning_rate, false);

  auto opt = nn::OptimizerState::for_model(toy.model, toy.cfg.learning_rate,
                                           toy.cfg.momentum);
  const auto out = finetune_masked(toy.model, opt, mask, epochs, toy.data,
                                   nullptr, toy.cfg);
  CHECK(out.layers[0].weights[0] == doctest::Approx(w0).epsilon(1e-12));
  CHECK(out.layers[0].weights[1] == 0.0);  // exact, not approximate
  CHECK(out.layers[0].bias[0] == doctest::Approx(b0).epsilon(1e-12));
  CHECK(out.layers[0].bias[1] == doctest::Approx(b1).epsilon(1e-12));
}

TEST_CASE("masked training zeroes off-support velocities when asked") {
  ScalarToy toy;
  toy.cfg.momentum = 0.9;
  toy.cfg.momentum_reset = true;
  toy.model.layers[0].weights.data = {0.5, 0.7};  // w1 starts ON the wrong side
  SupportMask mask;
  mask.layer_masks = {{1, 0}, {}};

  auto opt = nn::OptimizerState::for_model(toy.model, toy.cfg.learning_rate,
                                           toy.cfg.momentum);
  const auto out =
      finetune_masked(toy.model, opt, mask, 4, toy.data, nullptr, toy.cfg);
  CHECK(out.layers[0].weights[1] == 0.0);
  CHECK(opt.weight_velocity[0][1] == 0.0);
  CHECK(opt.weight_velocity[0][0] != 0.0);
}

TEST_CASE("restore_and_train lets truncated weights regrow") {
  ScalarToy toy;
  toy.model.layers[0].weights.data = {0.2, 0.0};

  double w0 = 0.2, w1 = 0.0, b0 = 0.0, b1 = 0.0;
  const int epochs = 6;
  for (int e = 0; e < epochs; ++e)
    ScalarToy::reference_step(w0, w1, b0, b1, toy.cfg.learning_rate, true);

  auto opt = nn::OptimizerState::for_model(toy.model, toy.cfg.learning_rate,
                                           toy.cfg.momentum);
  const auto out = restore_and_train(toy.model, opt, epochs, toy.data, nullptr,
                                     toy.cfg);
  CHECK(out.layers[0].weights[0] == doctest::Approx(w0).epsilon(1e-12));
  CHECK(out.layers[0].weights[1] == doctest::Approx(w1).epsilon(1e-12));
  CHECK(out.layers[0].weights[1] != 0.0);  // regrew
}

// ============================================================================
// full schedule
// ============================================================================

namespace {

TrainConfig blob_config() {
  TrainConfig cfg;
  cfg.s1 = 1;
  cfg.s2 = 2;
  cfg.cycles = 2;
  cfg.learning_rate = 0.05;
  cfg.momentum = 0.9;
  cfg.weight_decay = 0.0;
  cfg.batch_size = 10;
  cfg.seed = 7;
  return cfg;
}

}  // namespace

TEST_CASE("run_iht walks the documented phase sequence") {
  const auto train = data::synth_blobs(3, 20, 8, 4.0, 21);
  const auto test = data::synth_blobs(3, 10, 8, 4.0, 22);
  auto model = mlp(8, 6, 3);
  nn::init_glorot(model, 1);

  const TrainConfig cfg = blob_config();
  SparsityPlan plan;
  plan.target_ratio = 0.5;

  const auto res = run_iht(model, cfg, plan, train, &test);
  REQUIRE(res.outcome == RunOutcome::completed);
  CHECK(res.epochs_run == cfg.total_epochs());
  REQUIRE(res.epochs.size() == 6);
  const char* phases[6] = {"init",    "finetune", "finetune",
                           "restore", "finetune", "finetune"};
  const int cycles[6] = {0, 1, 1, 1, 2, 2};
  for (int i = 0; i < 6; ++i) {
    CHECK(res.epochs[i].phase == phases[i]);
    CHECK(res.epochs[i].cycle == cycles[i]);
    CHECK(res.epochs[i].epoch == i + 1);
    CHECK(std::isfinite(res.epochs[i].test_accuracy));
  }

  // schedule: T = (C-1)*(s2+s1) = 3, events at t = 0 (ratio 0.25) and t = 3
  // (ratio 0.5); fc layers hold 48 and 18 weights
  REQUIRE(res.cycles.size() == 2);
  CHECK(res.cycles[0].schedule_time == doctest::Approx(0.0));
  CHECK(res.cycles[1].schedule_time == doctest::Approx(3.0));
  CHECK(res.cycles[0].budgets ==
        Budgets{expected_budget(0.25, 48), 0, expected_budget(0.25, 18), 0});
  CHECK(res.cycles[0].budgets == Budgets{36, 0, 14, 0});
  CHECK(res.cycles[1].budgets == Budgets{24, 0, 9, 0});

  // first event has no predecessor support
  CHECK(res.cycles[0].change_ratio_per_layer.empty());
  CHECK(std::isnan(res.cycles[0].change_ratio_aggregate));
  REQUIRE(res.cycles[1].change_ratio_per_layer.size() == 4);
  CHECK(res.cycles[1].change_ratio_aggregate >= 0.0);
  CHECK(res.cycles[1].change_ratio_aggregate <= 1.0);
  CHECK(std::isnan(res.cycles[1].change_ratio_per_layer[1]));

  // the returned model satisfies the final budgets
  const auto nnz = res.model.weight_nonzeros();
  for (std::size_t i = 0; i < nnz.size(); ++i) {
    CHECK(nnz[i] <= res.cycles[1].budgets[i] + 0u);
    CHECK(res.cycles[1].nonzeros_after_finetune[i] == nnz[i]);
  }
  CHECK(res.final_mask.popcount(0) == 24);
  CHECK(res.final_mask.popcount(2) == 9);
}

TEST_CASE("a zero-ratio run is arithmetically a baseline") {
  const auto train = data::synth_blobs(3, 20, 8, 4.0, 31);
  auto model = mlp(8, 6, 3);
  nn::init_glorot(model, 2);

  const TrainConfig cfg = blob_config();
  SparsityPlan plan;  // target 0
  const auto res = run_iht(model, cfg, plan, train, nullptr);
  REQUIRE(res.outcome == RunOutcome::completed);

  const auto base =
      train_baseline(model, cfg.total_epochs(), train, nullptr, cfg);
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    CHECK(res.model.layers[i].weights.data == base.layers[i].weights.data);
    CHECK(res.model.layers[i].bias.data == base.layers[i].bias.data);
  }
}

TEST_CASE("run_iht reports divergence instead of throwing") {
  const auto train = data::synth_blobs(3, 20, 8, 4.0, 41);
  auto model = mlp(8, 6, 3);
  nn::init_glorot(model, 3);

  TrainConfig cfg = blob_config();
  cfg.learning_rate = 1e6;
  cfg.weight_decay = 1e-4;  // the decay term tracks the blow-up
  SparsityPlan plan;
  plan.target_ratio = 0.5;

  const auto res = run_iht(model, cfg, plan, train, nullptr);
  CHECK(res.outcome == RunOutcome::diverged);
  CHECK(res.abort_reason.find("diverged") != std::string::npos);
  CHECK(res.abort_reason.find("init") != std::string::npos);
  CHECK(res.epochs_run < cfg.total_epochs());
}

TEST_CASE("random-mode runs are recorded and reproducible") {
  const auto train = data::synth_blobs(3, 20, 8, 4.0, 51);
  auto model = mlp(8, 6, 3);
  nn::init_glorot(model, 4);

  TrainConfig cfg = blob_config();
  cfg.mode = ThresholdMode::random;
  SparsityPlan plan;
  plan.target_ratio = 0.5;

  const auto a = run_iht(model, cfg, plan, train, nullptr);
  const auto b = run_iht(model, cfg, plan, train, nullptr);
  CHECK((a.outcome == RunOutcome::completed ||
         a.outcome == RunOutcome::diverged));
  CHECK(a.outcome == b.outcome);
  if (a.outcome == RunOutcome::completed) {
    const auto nnz = a.model.weight_nonzeros();
    for (std::size_t i = 0; i < nnz.size(); ++i)
      CHECK(nnz[i] <= a.cycles.back().budgets[i]);
  } else {
    CHECK_FALSE(a.abort_reason.empty());
  }
  for (std::size_t i = 0; i < model.layers.size(); ++i)
    CHECK(a.model.layers[i].weights.data == b.model.layers[i].weights.data);
}

TEST_CASE("per-layer plans must match the weight layer count") {
  const auto train = data::synth_blobs(2, 10, 4, 4.0, 61);
  auto model = mlp(4, 3, 2);
  nn::init_glorot(model, 5);
  TrainConfig cfg = blob_config();
  SparsityPlan plan;
  plan.uniform = false;
  plan.per_layer_ratio = {0.5};  // model has two weight layers
  plan.start_ratio = 0.25;
  CHECK_THROWS_WITH_AS((void)run_iht(model, cfg, plan, train, nullptr),
                       doctest::Contains("weight-bearing"), Error);
}

TEST_CASE("the trainer rejects an empty dataset") {
  auto model = mlp(4, 3, 2);
  data::Dataset empty;
  empty.images = Tensor({0, 4});
  TrainConfig cfg;
  CHECK_THROWS_WITH_AS(
      (void)train_baseline(model, 1, empty, nullptr, cfg),
      doctest::Contains("empty"), Error);
}

// ============================================================================
// reporting
// ============================================================================

TEST_CASE("epoch csv leaves unknown test columns empty") {
  std::vector<EpochRecord> log(2);
  log[0].epoch = 1;
  log[0].cycle = 0;
  log[0].phase = "init";
  log[0].train_loss = 1.5;
  log[0].train_accuracy = 0.5;
  log[1].epoch = 2;
  log[1].cycle = 1;
  log[1].phase = "finetune";
  log[1].train_loss = 1.25;
  log[1].train_accuracy = 0.75;
  log[1].test_loss = 1.0;
  log[1].test_accuracy = 0.875;

  std::ostringstream os;
  write_epochs_csv(log, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line ==
        "epoch,cycle,phase,train_loss,train_accuracy,test_loss,test_accuracy");
  std::getline(is, line);
  CHECK(line == "1,0,init,1.5,0.5,,");
  std::getline(is, line);
  CHECK(line == "2,1,finetune,1.25,0.75,1,0.875");
}

TEST_CASE("run summaries carry the outcome and cycle metrics") {
  const auto train = data::synth_blobs(2, 10, 4, 4.0, 71);
  const auto test = data::synth_blobs(2, 5, 4, 4.0, 72);
  auto model = mlp(4, 3, 2);
  nn::init_glorot(model, 6);
  TrainConfig cfg = blob_config();
  cfg.batch_size = 5;
  SparsityPlan plan;
  plan.target_ratio = 0.5;

  const auto res = run_iht(model, cfg, plan, train, &test);
  const auto j = run_summary_json(res);
  CHECK(j.at("outcome") == "completed");
  CHECK_FALSE(j.contains("abort_reason"));
  CHECK(j.at("epochs_run") == res.epochs_run);
  CHECK(j.at("cycles").size() == 2);
  CHECK(j.at("cycles")[0].contains("budgets"));
  CHECK(j.at("final_nonzeros").get<std::vector<std::size_t>>() ==
        res.model.weight_nonzeros());
  CHECK(j.contains("final_test_accuracy"));
}
