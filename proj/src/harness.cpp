#include "sdnn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <thread>

#include "sdnn/model_io.hpp"

namespace sdnn::harness {

namespace fs = std::filesystem;

namespace {

nlohmann::json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error("config file " + path + ": " + e.what());
  }
  return doc;
}

std::string resolve_path(const std::string& base_dir, const std::string& p) {
  fs::path path(p);
  if (path.is_absolute() || base_dir.empty()) return p;
  return (fs::path(base_dir) / path).string();
}

data::Dataset limited(data::Dataset ds, std::size_t limit) {
  if (limit == 0 || limit >= ds.size()) return ds;
  return ds.subset(0, limit);
}

}  // namespace

iht::TrainConfig train_config_from_json(const nlohmann::json& j) {
  iht::TrainConfig cfg;
  cfg.s1 = j.value("s1", cfg.s1);
  cfg.s2 = j.value("s2", cfg.s2);
  cfg.cycles = j.value("cycles", cfg.cycles);
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.momentum = j.value("momentum", cfg.momentum);
  cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.momentum_reset = j.value("momentum_reset", cfg.momentum_reset);
  cfg.flip_probability = j.value("flip_probability", cfg.flip_probability);
  cfg.eval_test_each_epoch =
      j.value("eval_test_each_epoch", cfg.eval_test_each_epoch);
  if (j.contains("decay_form")) {
    const std::string form = j.at("decay_form").get<std::string>();
    if (form == "squared_frobenius")
      cfg.decay_form = nn::LossSpec::DecayForm::squared_frobenius;
    else if (form == "frobenius_norm")
      cfg.decay_form = nn::LossSpec::DecayForm::frobenius_norm;
    else
      throw Error("unknown decay_form \"" + form +
                  "\" (expected squared_frobenius or frobenius_norm)");
  }
  if (j.contains("mode")) {
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "hard")
      cfg.mode = iht::ThresholdMode::hard;
    else if (mode == "random")
      cfg.mode = iht::ThresholdMode::random;
    else
      throw Error("unknown threshold mode \"" + mode +
                  "\" (expected hard or random)");
  }
  cfg.validate();
  return cfg;
}

iht::SparsityPlan plan_from_json(const nlohmann::json& j) {
  iht::SparsityPlan plan;
  if (j.contains("per_layer")) {
    plan.uniform = false;
    plan.per_layer_ratio = j.at("per_layer").get<std::vector<double>>();
  } else {
    plan.uniform = true;
    plan.target_ratio = j.value("r_final", 0.0);
  }
  plan.start_ratio = j.value("start_ratio", -1.0);
  plan.schedule_epochs = j.value("schedule_epochs", 0.0);
  plan.validate();
  return plan;
}

ExperimentConfig load_experiment(const std::string& config_path) {
  const nlohmann::json doc = parse_json_file(config_path);
  const std::string base_dir = fs::path(config_path).parent_path().string();

  ExperimentConfig cfg;
  try {
    const auto& arch = doc.at("architecture");
    if (arch.is_string())
      cfg.architecture =
          parse_json_file(resolve_path(base_dir, arch.get<std::string>()));
    else
      cfg.architecture = arch;
    // validate the architecture eagerly so config errors surface here
    (void)nn::model_from_json(cfg.architecture);

    const auto& d = doc.at("data");
    if (d.contains("synthetic")) {
      const auto& s = d.at("synthetic");
      const int classes = s.at("classes").get<int>();
      const int per_class = s.at("per_class").get<int>();
      const int dim = s.at("dim").get<int>();
      const double sep = s.value("separation", 3.0);
      const std::uint64_t seed = s.value("seed", std::uint64_t{1});
      const int test_per_class = s.value("test_per_class", 0);
      if (per_class < 1)
        throw Error("synthetic per_class must be positive");
      if (test_per_class < 0)
        throw Error("synthetic test_per_class must be non-negative");
      // one generation so both splits share the class centers; the tail
      // becomes the held-out split
      const data::Dataset all =
          data::synth_blobs(classes, per_class + test_per_class, dim, sep,
                            seed);
      const std::size_t n_train =
          static_cast<std::size_t>(classes) * static_cast<std::size_t>(per_class);
      cfg.train = all.subset(0, n_train);
      cfg.train.split = "train";
      if (test_per_class > 0) {
        cfg.test = all.subset(
            n_train,
            static_cast<std::size_t>(classes) *
                static_cast<std::size_t>(test_per_class));
        cfg.test->split = "test";
      }
    } else {
      cfg.train = limited(
          data::load_idx(
              resolve_path(base_dir, d.at("train_images").get<std::string>()),
              resolve_path(base_dir, d.at("train_labels").get<std::string>())),
          d.value("train_limit", std::size_t{0}));
      cfg.train.split = "train";
      if (d.contains("test_images")) {
        cfg.test = limited(
            data::load_idx(
                resolve_path(base_dir, d.at("test_images").get<std::string>()),
                resolve_path(base_dir, d.at("test_labels").get<std::string>())),
            d.value("test_limit", std::size_t{0}));
        cfg.test->split = "test";
      }
    }

    cfg.train_cfg = train_config_from_json(doc.value("train", nlohmann::json::object()));
    cfg.plan = plan_from_json(doc.value("plan", nlohmann::json::object()));
  } catch (const nlohmann::json::exception& e) {
    throw Error("config file " + config_path + ": " + e.what());
  }
  return cfg;
}

iht::RunResult run_single(const ExperimentConfig& cfg,
                          std::optional<double> ratio_override,
                          const std::string& out_dir) {
  nn::NetworkModel model = nn::model_from_json(cfg.architecture);
  nn::init_glorot(model, cfg.train_cfg.seed);
  cfg.train.validate(model.class_count);
  if (cfg.test) cfg.test->validate(model.class_count);

  iht::SparsityPlan plan = cfg.plan;
  if (ratio_override) {
    plan = iht::SparsityPlan{};
    plan.uniform = true;
    plan.target_ratio = *ratio_override;
  }

  iht::RunResult result =
      iht::run_iht(std::move(model), cfg.train_cfg, plan, cfg.train,
                   cfg.test ? &*cfg.test : nullptr);

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    {
      std::ofstream out(fs::path(out_dir) / "epochs.csv");
      iht::write_epochs_csv(result.epochs, out);
    }
    {
      std::ofstream out(fs::path(out_dir) / "summary.json");
      out << iht::run_summary_json(result).dump(2) << "\n";
    }
    io::save_checkpoint(result.model,
                        (fs::path(out_dir) / "model.sdnn").string());
  }
  return result;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg,
                                const SweepSpec& spec) {
  if (spec.ratios.empty()) throw Error("sweep needs at least one ratio");
  for (std::size_t i = 0; i < spec.ratios.size(); ++i) {
    if (spec.ratios[i] < 0.0 || spec.ratios[i] >= 1.0)
      throw Error("sweep ratio " + std::to_string(spec.ratios[i]) +
                  " outside [0, 1)");
    if (i > 0 && spec.ratios[i] <= spec.ratios[i - 1])
      throw Error("sweep ratios must be strictly increasing");
  }
  const int jobs =
      std::max(1, std::min<int>(spec.jobs,
                                static_cast<int>(spec.ratios.size())));

  std::vector<SweepRow> rows(spec.ratios.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= spec.ratios.size()) return;
      const double ratio = spec.ratios[idx];
      SweepRow row;
      row.ratio = ratio;
      try {
        std::string run_dir;
        if (!spec.out_dir.empty()) {
          char name[32];
          std::snprintf(name, sizeof name, "run_r%.2f", ratio);
          run_dir = (fs::path(spec.out_dir) / name).string();
        }
        const auto result = run_single(cfg, ratio, run_dir);
        if (result.outcome != iht::RunOutcome::completed)
          throw Error(result.abort_reason.empty() ? "run diverged"
                                                  : result.abort_reason);
        row.ok = true;
        const auto& last = result.epochs.back();
        row.final_train_acc = last.train_accuracy;
        row.final_test_acc = last.test_accuracy;
        for (std::size_t n : result.model.weight_nonzeros()) row.nonzeros += n;
        row.bytes = io::size_report(result.model).bitmask_bytes;
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
        row.final_train_acc = std::numeric_limits<double>::quiet_NaN();
        row.final_test_acc = std::numeric_limits<double>::quiet_NaN();
      }
      rows[idx] = std::move(row);
    }
  };

  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  if (!spec.out_dir.empty()) {
    fs::create_directories(spec.out_dir);
    std::ofstream out(fs::path(spec.out_dir) / "sweep.csv");
    write_sweep_csv(rows, out);
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << "ratio,final_train_acc,final_test_acc,nonzeros,bytes\n";
  out.precision(17);
  for (const auto& r : rows) {
    out << r.ratio << ",";
    if (r.ok) {
      out << r.final_train_acc << ",";
      if (std::isfinite(r.final_test_acc)) out << r.final_test_acc;
      out << "," << r.nonzeros << "," << r.bytes << "\n";
    } else {
      out << ",,,\n";
    }
  }
}

}  // namespace sdnn::harness
