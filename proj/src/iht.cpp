#include "sdnn/iht.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace sdnn::iht {

namespace {

std::size_t count_weight_layers(const nn::NetworkModel& model) {
  std::size_t n = 0;
  for (const auto& l : model.layers)
    if (l.has_params()) ++n;
  return n;
}

// Zero the optimizer velocities of weights outside the mask.
void zero_off_support_velocity(nn::OptimizerState& opt,
                               const SupportMask& mask) {
  for (std::size_t i = 0; i < mask.layer_masks.size(); ++i) {
    const auto& m = mask.layer_masks[i];
    if (m.empty()) continue;
    Tensor& v = opt.weight_velocity[i];
    for (std::size_t j = 0; j < m.size(); ++j)
      if (!m[j]) v[j] = 0.0;
  }
}

// Re-impose the support constraint on weights (and optionally velocities)
// after an optimizer step.
void clamp_to_support(nn::NetworkModel& model, nn::OptimizerState& opt,
                      const SupportMask& mask, bool reset_velocity) {
  for (std::size_t i = 0; i < mask.layer_masks.size(); ++i) {
    const auto& m = mask.layer_masks[i];
    if (m.empty()) continue;
    Tensor& w = model.layers[i].weights;
    Tensor& v = opt.weight_velocity[i];
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (!m[j]) {
        w[j] = 0.0;
        if (reset_velocity) v[j] = 0.0;
      }
    }
  }
}

void check_mask_alignment(const nn::NetworkModel& model,
                          const SupportMask& mask) {
  if (mask.layer_masks.size() != model.layers.size())
    throw Error("support mask covers " +
                std::to_string(mask.layer_masks.size()) + " layers, model has " +
                std::to_string(model.layers.size()));
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const bool has = model.layers[i].has_params();
    const auto& m = mask.layer_masks[i];
    if (has && m.size() != model.layers[i].weights.numel())
      throw Error("support mask at layer " + std::to_string(i) + " has " +
                  std::to_string(m.size()) + " entries, layer has " +
                  std::to_string(model.layers[i].weights.numel()) + " weights");
    if (!has && !m.empty())
      throw Error("support mask set for parameter-free layer " +
                  std::to_string(i));
  }
}

}  // namespace

// ============================================================================
// SparsityPlan
// ============================================================================

double SparsityPlan::final_ratio(std::size_t weight_layer) const {
  if (uniform) return target_ratio;
  if (weight_layer >= per_layer_ratio.size())
    throw Error("sparsity plan has " +
                std::to_string(per_layer_ratio.size()) +
                " per-layer ratios, weight layer " +
                std::to_string(weight_layer) + " requested");
  return per_layer_ratio[weight_layer];
}

double SparsityPlan::ratio_at(std::size_t weight_layer, double t) const {
  const double r_final = final_ratio(weight_layer);
  if (schedule_epochs <= 0.0) return r_final;
  const double r0 = start_ratio < 0.0 ? r_final / 2.0 : start_ratio;
  if (t < 0.0 || t > schedule_epochs)
    throw Error("schedule time " + std::to_string(t) + " outside [0, " +
                std::to_string(schedule_epochs) + "]");
  return r0 + t * (r_final - r0) / schedule_epochs;
}

void SparsityPlan::validate() const {
  auto check_ratio = [](double r, const char* what) {
    if (!(r >= 0.0) || r >= 1.0)
      throw Error(std::string(what) + " must lie in [0, 1), got " +
                  std::to_string(r));
  };
  if (uniform) {
    check_ratio(target_ratio, "target ratio");
  } else {
    if (per_layer_ratio.empty())
      throw Error("non-uniform sparsity plan has no per-layer ratios");
    for (double r : per_layer_ratio) check_ratio(r, "per-layer ratio");
  }
  if (start_ratio >= 0.0) {
    check_ratio(start_ratio, "start ratio");
    const double min_final =
        uniform ? target_ratio
                : *std::min_element(per_layer_ratio.begin(),
                                    per_layer_ratio.end());
    if (start_ratio > min_final)
      throw Error("start ratio " + std::to_string(start_ratio) +
                  " exceeds the smallest final ratio " +
                  std::to_string(min_final));
  }
}

std::size_t layer_budget(const SparsityPlan& plan, std::size_t param_count,
                         double t, std::size_t weight_layer) {
  if (param_count == 0) throw Error("layer_budget: empty layer");
  const double r = plan.ratio_at(weight_layer, t);
  const long long k = std::llround((1.0 - r) * static_cast<double>(param_count));
  if (k < 1) {
    warn("retained budget rounded to zero for a layer of " +
         std::to_string(param_count) + " weights at ratio " +
         std::to_string(r) + "; clamped to 1");
    return 1;
  }
  return static_cast<std::size_t>(k);
}

// ============================================================================
// masks and thresholding
// ============================================================================

std::size_t SupportMask::popcount(std::size_t layer) const {
  const auto& m = layer_masks.at(layer);
  return static_cast<std::size_t>(std::count(m.begin(), m.end(),
                                             std::uint8_t{1}));
}

std::size_t SupportMask::total_popcount() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < layer_masks.size(); ++i)
    if (!layer_masks[i].empty()) n += popcount(i);
  return n;
}

std::pair<nn::NetworkModel, SupportMask> threshold_model(
    nn::NetworkModel model, const Budgets& budgets) {
  if (budgets.size() != model.layers.size())
    throw Error("budgets cover " + std::to_string(budgets.size()) +
                " layers, model has " + std::to_string(model.layers.size()));
  SupportMask mask;
  mask.layer_masks.resize(model.layers.size());
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    nn::Layer& l = model.layers[i];
    if (!l.has_params()) {
      if (budgets[i] != 0)
        throw Error("budget given for parameter-free layer " +
                    std::to_string(i));
      continue;
    }
    if (budgets[i] == 0)
      throw Error("weight-bearing layer " + std::to_string(i) +
                  " has no budget; every such layer needs one");
    if (!l.weights.all_finite())
      throw Error("layer " + std::to_string(i) + " has non-finite weights");
    const std::size_t P = l.weights.numel();
    const std::size_t k = std::min(budgets[i], P);
    const auto keep =
        top_k_magnitude_indices(l.weights.data.data(), P, k);
    std::vector<double> pruned(P, 0.0);
    auto& m = mask.layer_masks[i];
    m.assign(P, 0);
    for (std::size_t idx : keep) {
      pruned[idx] = l.weights[idx];
      m[idx] = 1;
    }
    l.weights.data = std::move(pruned);
  }
  return {std::move(model), std::move(mask)};
}

std::pair<nn::NetworkModel, SupportMask> random_threshold_model(
    nn::NetworkModel model, const Budgets& budgets, std::uint64_t seed) {
  if (budgets.size() != model.layers.size())
    throw Error("budgets cover " + std::to_string(budgets.size()) +
                " layers, model has " + std::to_string(model.layers.size()));
  auto rng = seeded_rng(seed, 0x7217'0002);
  SupportMask mask;
  mask.layer_masks.resize(model.layers.size());
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    nn::Layer& l = model.layers[i];
    if (!l.has_params()) {
      if (budgets[i] != 0)
        throw Error("budget given for parameter-free layer " +
                    std::to_string(i));
      continue;
    }
    if (budgets[i] == 0)
      throw Error("weight-bearing layer " + std::to_string(i) +
                  " has no budget; every such layer needs one");
    const std::size_t P = l.weights.numel();
    const std::size_t k = std::min(budgets[i], P);
    // partial Fisher-Yates: the first k slots become the retained subset
    std::vector<std::size_t> idx(P);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t j = 0; j < k; ++j) {
      std::uniform_int_distribution<std::size_t> pick(j, P - 1);
      std::swap(idx[j], idx[pick(rng)]);
    }
    auto& m = mask.layer_masks[i];
    m.assign(P, 0);
    for (std::size_t j = 0; j < k; ++j) m[idx[j]] = 1;
    for (std::size_t j = 0; j < P; ++j)
      if (!m[j]) l.weights[j] = 0.0;
  }
  return {std::move(model), std::move(mask)};
}

ChangeRatio change_ratio(const SupportMask& previous, const SupportMask& next) {
  if (previous.layer_masks.size() != next.layer_masks.size())
    throw Error("change_ratio: masks cover different layer counts");
  ChangeRatio cr;
  cr.per_layer.resize(next.layer_masks.size(),
                      std::numeric_limits<double>::quiet_NaN());
  std::size_t entered_total = 0, new_total = 0;
  for (std::size_t i = 0; i < next.layer_masks.size(); ++i) {
    const auto& p = previous.layer_masks[i];
    const auto& n = next.layer_masks[i];
    if (p.empty() != n.empty())
      throw Error("change_ratio: masks disagree on layer " +
                  std::to_string(i));
    if (n.empty()) continue;
    if (p.size() != n.size())
      throw Error("change_ratio: mask sizes differ at layer " +
                  std::to_string(i) + " (" + std::to_string(p.size()) +
                  " vs " + std::to_string(n.size()) + ")");
    std::size_t entered = 0, kept = 0;
    for (std::size_t j = 0; j < n.size(); ++j) {
      if (n[j]) {
        ++kept;
        if (!p[j]) ++entered;
      }
    }
    cr.per_layer[i] = kept == 0
                          ? std::numeric_limits<double>::quiet_NaN()
                          : static_cast<double>(entered) /
                                static_cast<double>(kept);
    entered_total += entered;
    new_total += kept;
  }
  cr.aggregate = new_total == 0
                     ? std::numeric_limits<double>::quiet_NaN()
                     : static_cast<double>(entered_total) /
                           static_cast<double>(new_total);
  return cr;
}

// ============================================================================
// TrainConfig
// ============================================================================

void TrainConfig::validate() const {
  if (s1 < 1 || s2 < 1) throw Error("s1 and s2 must be at least 1");
  if (cycles < 1) throw Error("cycle count must be at least 1");
  if (!(learning_rate > 0.0)) throw Error("learning rate must be positive");
  if (momentum < 0.0 || momentum >= 1.0)
    throw Error("momentum must lie in [0, 1)");
  if (weight_decay < 0.0) throw Error("weight decay must be non-negative");
  if (batch_size < 1) throw Error("batch size must be at least 1");
  if (flip_probability < 0.0 || flip_probability > 1.0)
    throw Error("flip probability must lie in [0, 1]");
}

nn::LossSpec TrainConfig::loss_spec() const {
  nn::LossSpec spec;
  spec.weight_decay = weight_decay;
  spec.form = decay_form;
  return spec;
}

int TrainConfig::total_epochs() const {
  return s1 + cycles * s2 + (cycles - 1) * s1;
}

// ============================================================================
// Trainer
// ============================================================================

Trainer::Trainer(const TrainConfig& cfg, const data::Dataset& train,
                 const data::Dataset* test)
    : cfg_(cfg), train_(train), test_(test),
      shuffle_rng_(seeded_rng(cfg.seed, 0x50ff'0002)),
      augment_rng_(seeded_rng(cfg.seed, 0xf11f'0003)) {
  if (train_.size() == 0) throw Error("training dataset is empty");
}

void Trainer::train_epochs(nn::NetworkModel& model, nn::OptimizerState& opt,
                           int epochs, const SupportMask* mask, int cycle,
                           const std::string& phase) {
  if (mask) check_mask_alignment(model, *mask);
  const nn::LossSpec spec = cfg_.loss_spec();
  const nn::LossSpec bare;  // cross-entropy only, for running metrics
  const std::size_t N = train_.size();
  const std::size_t B = static_cast<std::size_t>(cfg_.batch_size);
  auto grads = nn::Gradients::zeros_like(model);
  std::vector<std::size_t> order(N);

  for (int e = 0; e < epochs; ++e) {
    ++epoch_counter_;
    const data::Dataset* epoch_data = &train_;
    data::Dataset augmented;
    if (cfg_.flip_probability > 0.0) {
      augmented = data::augment_flip(train_, cfg_.flip_probability,
                                     augment_rng_());
      epoch_data = &augmented;
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), shuffle_rng_);

    double ce_sum = 0.0;
    std::size_t correct = 0;
    int batch_index = 0;
    for (std::size_t start = 0; start < N; start += B, ++batch_index) {
      const std::size_t bsz = std::min(B, N - start);
      grads.setZero();
      double batch_ce = 0.0;
      for (std::size_t j = start; j < start + bsz; ++j) {
        const std::size_t i = order[j];
        const auto label = static_cast<std::size_t>(epoch_data->labels[i]);
        const auto acts = nn::forward(model, epoch_data->sample(i));
        batch_ce += nn::loss_from_activations(model, acts, label, bare);
        const Tensor& p = acts.back();
        std::size_t pred = 0;
        for (std::size_t c = 1; c < p.numel(); ++c)
          if (p[c] > p[pred]) pred = c;
        if (pred == label) ++correct;
        nn::backward_into(model, acts, label, grads);
      }
      grads.scale(1.0 / static_cast<double>(bsz));
      nn::add_decay_gradients(model, spec, grads);
      nn::sgd_step(model, grads, opt);
      if (mask) clamp_to_support(model, opt, *mask, cfg_.momentum_reset);

      const double batch_loss = batch_ce / static_cast<double>(bsz) +
                                nn::decay_term(model, spec);
      ce_sum += batch_ce;
      if (!std::isfinite(batch_loss) ||
          batch_loss > cfg_.divergence_loss_limit) {
        std::ostringstream os;
        os << "training diverged: loss " << batch_loss << " in phase \""
           << phase << "\" (cycle " << cycle << ", epoch " << epoch_counter_
           << ", batch " << batch_index << ")";
        throw DivergenceError(os.str(), phase, cycle, epoch_counter_,
                              batch_index, batch_loss);
      }
    }

    EpochRecord rec;
    rec.epoch = epoch_counter_;
    rec.cycle = cycle;
    rec.phase = phase;
    rec.train_loss = ce_sum / static_cast<double>(N) +
                     nn::decay_term(model, spec);
    rec.train_accuracy =
        static_cast<double>(correct) / static_cast<double>(N);
    if (test_ && cfg_.eval_test_each_epoch) {
      const auto ev = nn::evaluate(model, *test_, spec);
      rec.test_loss = ev.mean_loss;
      rec.test_accuracy = ev.accuracy;
    }
    log_.push_back(std::move(rec));
  }
}

// ============================================================================
// entry points
// ============================================================================

nn::NetworkModel finetune_masked(nn::NetworkModel model,
                                 nn::OptimizerState& opt,
                                 const SupportMask& mask, int epochs,
                                 const data::Dataset& train,
                                 const data::Dataset* test,
                                 const TrainConfig& cfg) {
  cfg.validate();
  Trainer tr(cfg, train, test);
  tr.train_epochs(model, opt, epochs, &mask, 1, "finetune");
  return model;
}

nn::NetworkModel restore_and_train(nn::NetworkModel model,
                                   nn::OptimizerState& opt, int epochs,
                                   const data::Dataset& train,
                                   const data::Dataset* test,
                                   const TrainConfig& cfg) {
  cfg.validate();
  Trainer tr(cfg, train, test);
  tr.train_epochs(model, opt, epochs, nullptr, 1, "restore");
  return model;
}

RunResult run_iht(nn::NetworkModel model, const TrainConfig& cfg,
                  const SparsityPlan& plan, const data::Dataset& train,
                  const data::Dataset* test) {
  cfg.validate();
  plan.validate();
  model.validate();
  if (!plan.uniform &&
      plan.per_layer_ratio.size() != count_weight_layers(model))
    throw Error("sparsity plan lists " +
                std::to_string(plan.per_layer_ratio.size()) +
                " per-layer ratios, model has " +
                std::to_string(count_weight_layers(model)) +
                " weight-bearing layers");

  RunResult res;
  Trainer tr(cfg, train, test);
  auto opt = nn::OptimizerState::for_model(model, cfg.learning_rate,
                                           cfg.momentum);
  const int C = cfg.cycles;
  const double T = plan.schedule_epochs > 0.0
                       ? plan.schedule_epochs
                       : static_cast<double>((C - 1) * (cfg.s2 + cfg.s1));
  SparsityPlan sched = plan;
  sched.schedule_epochs = T;

  SupportMask prev;
  bool have_prev = false;
  try {
    tr.train_epochs(model, opt, cfg.s1, nullptr, 0, "init");
    for (int c = 1; c <= C; ++c) {
      // event c of C maps onto schedule time so the first event prunes at
      // r(0) and the last at the final ratio
      const double t =
          (C == 1 || T <= 0.0)
              ? T
              : static_cast<double>(c - 1) * T / static_cast<double>(C - 1);
      Budgets budgets(model.layers.size(), 0);
      std::size_t wl = 0;
      for (std::size_t i = 0; i < model.layers.size(); ++i)
        if (model.layers[i].has_params())
          budgets[i] = layer_budget(sched, model.layers[i].weights.numel(), t,
                                    wl++);

      SupportMask mask;
      if (cfg.mode == ThresholdMode::hard) {
        std::tie(model, mask) = threshold_model(std::move(model), budgets);
      } else {
        std::tie(model, mask) = random_threshold_model(
            std::move(model), budgets, mix_seed(cfg.seed, 0xab1a'0000u + c));
      }
      if (cfg.momentum_reset) zero_off_support_velocity(opt, mask);

      CycleMetrics cm;
      cm.cycle = c;
      cm.schedule_time = t;
      cm.budgets = budgets;
      cm.nonzeros_post_threshold = model.weight_nonzeros();
      if (have_prev) {
        const auto cr = change_ratio(prev, mask);
        cm.change_ratio_per_layer = cr.per_layer;
        cm.change_ratio_aggregate = cr.aggregate;
      }
      tr.train_epochs(model, opt, cfg.s2, &mask, c, "finetune");
      cm.nonzeros_after_finetune = model.weight_nonzeros();
      res.cycles.push_back(std::move(cm));
      prev = std::move(mask);
      have_prev = true;

      if (c < C)
        tr.train_epochs(model, opt, cfg.s1, nullptr, c, "restore");
    }
    res.outcome = RunOutcome::completed;
  } catch (const DivergenceError& e) {
    res.outcome = RunOutcome::diverged;
    res.abort_reason = e.what();
  }
  res.model = std::move(model);
  res.epochs = tr.epoch_log();
  res.epochs_run = tr.epochs_run();
  res.final_mask = std::move(prev);
  return res;
}

nn::NetworkModel train_baseline(nn::NetworkModel model, int epochs,
                                const data::Dataset& train,
                                const data::Dataset* test,
                                const TrainConfig& cfg,
                                std::vector<EpochRecord>* log) {
  cfg.validate();
  Trainer tr(cfg, train, test);
  auto opt = nn::OptimizerState::for_model(model, cfg.learning_rate,
                                           cfg.momentum);
  tr.train_epochs(model, opt, epochs, nullptr, 0, "baseline");
  if (log) *log = tr.epoch_log();
  return model;
}

// ============================================================================
// reporting
// ============================================================================

void write_epochs_csv(const std::vector<EpochRecord>& epochs,
                      std::ostream& out) {
  out << "epoch,cycle,phase,train_loss,train_accuracy,test_loss,test_accuracy\n";
  out.precision(17);
  for (const auto& r : epochs) {
    out << r.epoch << "," << r.cycle << "," << r.phase << "," << r.train_loss
        << "," << r.train_accuracy << ",";
    if (std::isfinite(r.test_loss)) out << r.test_loss;
    out << ",";
    if (std::isfinite(r.test_accuracy)) out << r.test_accuracy;
    out << "\n";
  }
}

nlohmann::json run_summary_json(const RunResult& result) {
  nlohmann::json j;
  j["outcome"] =
      result.outcome == RunOutcome::completed ? "completed" : "diverged";
  if (!result.abort_reason.empty()) j["abort_reason"] = result.abort_reason;
  j["epochs_run"] = result.epochs_run;
  j["final_nonzeros"] = result.model.weight_nonzeros();
  nlohmann::json cycles = nlohmann::json::array();
  for (const auto& c : result.cycles) {
    nlohmann::json jc;
    jc["cycle"] = c.cycle;
    jc["schedule_time"] = c.schedule_time;
    jc["budgets"] = c.budgets;
    jc["nonzeros_post_threshold"] = c.nonzeros_post_threshold;
    jc["nonzeros_after_finetune"] = c.nonzeros_after_finetune;
    jc["change_ratio_per_layer"] = c.change_ratio_per_layer;
    jc["change_ratio_aggregate"] = c.change_ratio_aggregate;
    cycles.push_back(std::move(jc));
  }
  j["cycles"] = std::move(cycles);
  if (!result.epochs.empty()) {
    const auto& last = result.epochs.back();
    j["final_train_accuracy"] = last.train_accuracy;
    j["final_train_loss"] = last.train_loss;
    if (std::isfinite(last.test_accuracy)) {
      j["final_test_accuracy"] = last.test_accuracy;
      j["final_test_loss"] = last.test_loss;
    }
  }
  return j;
}

}  // namespace sdnn::iht
