#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sdnn/dataset.hpp"
#include "sdnn/nn.hpp"

namespace sdnn::iht {

// ============================================================================
// sparsity plan
// ============================================================================

// Targets are removal fractions: ratio r means a fraction r of the weights in
// a layer is truncated, so the retained budget is k = max(1, round((1-r)P)).
// The ratio ramps linearly from start to final over the schedule:
//   r(t) = r(0) + t * (r(T) - r(0)) / T.
struct SparsityPlan {
  bool uniform = true;
  double target_ratio = 0.0;            // final ratio when uniform
  std::vector<double> per_layer_ratio;  // by weight-layer ordinal when not
  double start_ratio = -1.0;            // r(0); negative -> final/2 per layer
  double schedule_epochs = 0.0;         // T; <= 0 means no ramp (always final)

  double final_ratio(std::size_t weight_layer) const;
  double ratio_at(std::size_t weight_layer, double t) const;
  void validate() const;
};

// Retained-entry budget for a layer of param_count weights at schedule time t.
// Rounds half away from zero and clamps to at least 1 (with a warning).
std::size_t layer_budget(const SparsityPlan& plan, std::size_t param_count,
                         double t, std::size_t weight_layer = 0);

// ============================================================================
// support masks
// ============================================================================

// One byte per weight (1 = retained), aligned with model.layers; empty
// entries for parameter-free layers.
struct SupportMask {
  std::vector<std::vector<std::uint8_t>> layer_masks;

  std::size_t popcount(std::size_t layer) const;
  std::size_t total_popcount() const;
  bool empty() const { return layer_masks.empty(); }
};

// Per-layer budgets aligned with model.layers (0 for parameter-free layers).
using Budgets = std::vector<std::size_t>;

// Keep the `budgets[l]` largest-magnitude weights of each weight-bearing
// layer, zero the rest, and return the retained index set as a mask.  Biases
// are untouched.  The mask has exactly min(budget, P) bits set per layer.
std::pair<nn::NetworkModel, SupportMask> threshold_model(
    nn::NetworkModel model, const Budgets& budgets);

// Ablation variant: the retained set is a uniformly random subset of the
// required size instead of the top-magnitude set.
std::pair<nn::NetworkModel, SupportMask> random_threshold_model(
    nn::NetworkModel model, const Budgets& budgets, std::uint64_t seed);

struct ChangeRatio {
  std::vector<double> per_layer;  // NaN for parameter-free layers
  double aggregate = 0.0;         // parameter-weighted across layers
};

// Fraction of the new support not present in the previous one,
// |F_new \ F_prev| / popcount(F_new), per layer and aggregated.
ChangeRatio change_ratio(const SupportMask& previous, const SupportMask& next);

// ============================================================================
// training configuration and metrics
// ============================================================================

enum class ThresholdMode { hard, random };

struct TrainConfig {
  int s1 = 5;        // epochs of unconstrained training (init and restores)
  int s2 = 15;       // epochs of masked fine-tuning per cycle
  int cycles = 2;    // number of thresholding events
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0;
  nn::LossSpec::DecayForm decay_form =
      nn::LossSpec::DecayForm::squared_frobenius;
  int batch_size = 32;
  std::uint64_t seed = 1;
  ThresholdMode mode = ThresholdMode::hard;
  bool momentum_reset = true;      // zero velocities of truncated weights
  double flip_probability = 0.0;   // per-epoch horizontal flip augmentation
  bool eval_test_each_epoch = true;
  double divergence_loss_limit = 1e6;

  void validate() const;
  nn::LossSpec loss_spec() const;
  // Epochs a full run performs: s1 + cycles*s2 + (cycles-1)*s1.
  int total_epochs() const;
};

struct EpochRecord {
  int epoch = 0;        // global, 1-based
  int cycle = 0;        // 0 for the initial dense phase
  std::string phase;    // "init", "finetune", "restore"
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_loss = std::numeric_limits<double>::quiet_NaN();
  double test_accuracy = std::numeric_limits<double>::quiet_NaN();
};

struct CycleMetrics {
  int cycle = 0;
  double schedule_time = 0.0;
  Budgets budgets;
  std::vector<std::size_t> nonzeros_post_threshold;
  std::vector<std::size_t> nonzeros_after_finetune;
  // empty / NaN for the first thresholding event (no predecessor support)
  std::vector<double> change_ratio_per_layer;
  double change_ratio_aggregate = std::numeric_limits<double>::quiet_NaN();
};

enum class RunOutcome { completed, diverged };

struct RunResult {
  nn::NetworkModel model;
  std::vector<EpochRecord> epochs;
  std::vector<CycleMetrics> cycles;
  RunOutcome outcome = RunOutcome::completed;
  std::string abort_reason;  // set when diverged
  int epochs_run = 0;
  SupportMask final_mask;
};

// ============================================================================
// training entry points
// ============================================================================

// Thrown by the epoch loops when the training loss leaves the finite range;
// carries a diagnostic snapshot of where the run stood.
struct DivergenceError : Error {
  DivergenceError(const std::string& what, std::string phase_, int cycle_,
                  int epoch_, int batch_, double loss_)
      : Error(what), phase(std::move(phase_)), cycle(cycle_), epoch(epoch_),
        batch(batch_), loss_value(loss_) {}
  std::string phase;
  int cycle;
  int epoch;
  int batch;
  double loss_value;
};

// Shared epoch driver: owns the shuffle/augmentation randomness and the epoch
// log so that phase boundaries do not perturb the draw sequence.  A full run
// and a plain baseline built on the same Trainer sequence are arithmetically
// identical epoch for epoch.
class Trainer {
 public:
  Trainer(const TrainConfig& cfg, const data::Dataset& train,
          const data::Dataset* test);

  // Runs `epochs` epochs of minibatch SGD; when `mask` is given, weights and
  // (by config) velocities outside the mask are re-zeroed after every step.
  void train_epochs(nn::NetworkModel& model, nn::OptimizerState& opt,
                    int epochs, const SupportMask* mask, int cycle,
                    const std::string& phase);

  const std::vector<EpochRecord>& epoch_log() const { return log_; }
  int epochs_run() const { return epoch_counter_; }

 private:
  const TrainConfig& cfg_;
  const data::Dataset& train_;
  const data::Dataset* test_;
  std::mt19937_64 shuffle_rng_;
  std::mt19937_64 augment_rng_;
  std::vector<EpochRecord> log_;
  int epoch_counter_ = 0;
};

// Masked fine-tuning (the restricted phase) as a standalone call.
// Off-support weights stay exactly zero after every optimizer step; a
// divergent loss raises DivergenceError with the snapshot.
nn::NetworkModel finetune_masked(nn::NetworkModel model,
                                 nn::OptimizerState& opt,
                                 const SupportMask& mask, int epochs,
                                 const data::Dataset& train,
                                 const data::Dataset* test,
                                 const TrainConfig& cfg);

// Unconstrained training that lets previously truncated weights regrow.
nn::NetworkModel restore_and_train(nn::NetworkModel model,
                                   nn::OptimizerState& opt, int epochs,
                                   const data::Dataset& train,
                                   const data::Dataset* test,
                                   const TrainConfig& cfg);

// Full schedule: dense warm-up, then alternating threshold + masked
// fine-tuning and dense restore phases, ending on a masked phase so the
// returned model satisfies the final budgets exactly.  Divergence is
// reported through RunResult::outcome rather than thrown.
RunResult run_iht(nn::NetworkModel model, const TrainConfig& cfg,
                  const SparsityPlan& plan, const data::Dataset& train,
                  const data::Dataset* test);

// Plain minibatch SGD for the same epoch budget, sharing the Trainer driver
// (and therefore the exact randomness sequence) with run_iht.
nn::NetworkModel train_baseline(nn::NetworkModel model, int epochs,
                                const data::Dataset& train,
                                const data::Dataset* test,
                                const TrainConfig& cfg,
                                std::vector<EpochRecord>* log = nullptr);

// ============================================================================
// reporting
// ============================================================================

void write_epochs_csv(const std::vector<EpochRecord>& epochs,
                      std::ostream& out);
nlohmann::json run_summary_json(const RunResult& result);

}  // namespace sdnn::iht
