#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sdnn/dataset.hpp"
#include "sdnn/iht.hpp"
#include "sdnn/nn.hpp"

namespace sdnn::harness {

// A fully resolved experiment: architecture document, loaded datasets, and
// the training/sparsity settings.  See configs/train_digits_mlp.json.
struct ExperimentConfig {
  nlohmann::json architecture;
  data::Dataset train;
  std::optional<data::Dataset> test;
  iht::TrainConfig train_cfg;
  iht::SparsityPlan plan;
};

// Parse a run-config JSON file.  "architecture" may be an inline document or
// a path (resolved relative to the config file); "data" gives idx paths (with
// optional train_limit / test_limit) or a "synthetic" blob spec.
ExperimentConfig load_experiment(const std::string& config_path);

// Pieces reused by the CLI: parse a train/plan section in isolation.
iht::TrainConfig train_config_from_json(const nlohmann::json& j);
iht::SparsityPlan plan_from_json(const nlohmann::json& j);

// Run one experiment.  ratio_override (when set) replaces the plan with a
// uniform plan at that removal ratio and the default ramp.  When out_dir is
// non-empty the run writes epochs.csv, summary.json, and model.sdnn there.
iht::RunResult run_single(const ExperimentConfig& cfg,
                          std::optional<double> ratio_override,
                          const std::string& out_dir);

struct SweepRow {
  double ratio = 0.0;
  bool ok = false;
  double final_train_acc = 0.0;
  double final_test_acc = 0.0;
  std::size_t nonzeros = 0;
  std::size_t bytes = 0;
  std::string error;  // populated when ok is false
};

struct SweepSpec {
  std::vector<double> ratios;  // strictly increasing, each in [0, 1)
  int jobs = 1;
  std::string out_dir;
};

// One run_iht per ratio (ratio 0 is the dense baseline), all with the same
// seed.  A failed run is recorded in its row and the sweep continues.  Rows
// come back in request order.
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg,
                                const SweepSpec& spec);

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);

}  // namespace sdnn::harness
