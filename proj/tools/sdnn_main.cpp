// sdnn: sparsity-constrained training toolkit CLI.
//
// Subcommands: ght, train, sweep, compress, eval, inspect.  Every command is
// deterministic given --seed; outputs land under --out.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "sdnn/ght.hpp"
#include "sdnn/harness.hpp"
#include "sdnn/model_io.hpp"

namespace fs = std::filesystem;
using namespace sdnn;

namespace {

std::ofstream open_out(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot open output file: " + path.string());
  return out;
}

void print_size_report(const io::SizeReport& rep, std::ostream& os) {
  os << "dense bytes:       " << rep.dense_bytes << "\n"
     << "bitmask bytes:     " << rep.bitmask_bytes << " (mask " << rep.mask_bytes
     << ", values " << rep.value_bytes << ", biases " << rep.bias_bytes
     << ", overhead " << rep.overhead_bytes << ")\n"
     << "compression ratio: " << rep.compression_ratio << "\n"
     << "payload ratio:     " << rep.payload_ratio
     << " (mask + values only)\n";
}

// ---------------------------------------------------------------------------
// ght
// ---------------------------------------------------------------------------

struct GhtArgs {
  std::string matrix_file, rhs_file;
  int planted_rows = 0, planted_cols = 0, planted_nnz = 3;
  int sparsity = 0;
  double eta = 0.0;  // 0 -> 1 / sigma_max(A)^2
  int max_iters = 200;
  double tolerance = 1e-8;
};

int cmd_ght(const GhtArgs& args, std::uint64_t seed,
            const std::string& out_dir) {
  ght::MatrixXd A;
  ght::VectorXd b;
  std::optional<ght::VectorXd> x_true;

  if (args.planted_rows > 0) {
    const auto inst = ght::make_planted(args.planted_rows, args.planted_cols,
                                        args.planted_nnz, seed);
    A = inst.A;
    b = inst.b;
    x_true = inst.x_true;
  } else {
    if (args.matrix_file.empty() || args.rhs_file.empty())
      throw Error("ght needs either --planted-rows/--planted-cols or "
                  "--matrix and --rhs");
    A = ght::load_matrix(args.matrix_file);
    const auto rhs = ght::load_matrix(args.rhs_file);
    if (rhs.cols() != 1)
      throw Error("rhs file must be a single-column matrix, got " +
                  std::to_string(rhs.cols()) + " columns");
    b = rhs.col(0);
  }

  ght::GhtConfig cfg;
  cfg.cardinality = args.sparsity > 0
                        ? args.sparsity
                        : (x_true ? args.planted_nnz : 1);
  cfg.step_size =
      args.eta > 0.0 ? args.eta : 1.0 / ght::squared_spectral_norm(A);
  cfg.max_iterations = args.max_iters;
  cfg.tolerance = args.tolerance;

  const auto obj = ght::least_squares(A, b);

  // overdetermined systems get a dense warm start (unconstrained solve,
  // then let the thresholding loop carve the support); underdetermined
  // ones start from zero
  ght::VectorXd x0 = ght::VectorXd::Zero(A.cols());
  if (A.rows() >= A.cols()) {
    ght::IndexSet all(static_cast<std::size_t>(A.cols()));
    std::iota(all.begin(), all.end(), Eigen::Index{0});
    x0 = ght::restricted_minimize(obj, all, x0, cfg.restricted_steps,
                                  cfg.step_size);
  }
  const auto res = ght::ght_solve(obj, cfg, x0);

  auto trace = open_out(fs::path(out_dir) / "trace.csv");
  ght::write_trace_csv(res.trace, trace);

  std::cout << "iterations:  " << res.state.iteration << "\n"
            << "converged:   " << (res.converged ? "yes" : "no") << "\n"
            << "objective:   " << res.state.objective_value << "\n"
            << "support:     ";
  for (auto i : res.state.support) std::cout << i << " ";
  std::cout << "\n";
  if (x_true) {
    const double err = (res.state.x - *x_true).lpNorm<Eigen::Infinity>();
    const bool support_match =
        ght::support(res.state.x) == ght::support(*x_true);
    std::cout << "planted support recovered: " << (support_match ? "yes" : "no")
              << "\nmax coefficient error:     " << err << "\n";
  }
  std::cout << "trace: " << (fs::path(out_dir) / "trace.csv").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train / sweep
// ---------------------------------------------------------------------------

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed,
              const std::string& out_dir) {
  auto cfg = harness::load_experiment(config_path);
  if (seed) cfg.train_cfg.seed = *seed;
  const auto result = harness::run_single(cfg, std::nullopt, out_dir);
  const auto summary = iht::run_summary_json(result);
  std::cout << summary.dump(2) << "\n";
  if (result.outcome != iht::RunOutcome::completed) {
    std::cerr << "error: " << result.abort_reason << "\n";
    return 2;
  }
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& ratio_list,
              std::optional<std::uint64_t> seed, int jobs,
              const std::string& out_dir) {
  auto cfg = harness::load_experiment(config_path);
  if (seed) cfg.train_cfg.seed = *seed;

  harness::SweepSpec spec;
  spec.jobs = jobs;
  spec.out_dir = out_dir;
  std::stringstream ss(ratio_list);
  for (std::string tok; std::getline(ss, tok, ',');)
    if (!tok.empty()) spec.ratios.push_back(std::stod(tok));

  const auto rows = harness::run_sweep(cfg, spec);
  harness::write_sweep_csv(rows, std::cout);
  bool all_ok = true;
  for (const auto& r : rows) {
    if (!r.ok) {
      std::cerr << "error: ratio " << r.ratio << " failed: " << r.error << "\n";
      all_ok = false;
    }
  }
  std::cout << "sweep csv: " << (fs::path(out_dir) / "sweep.csv").string()
            << "\n";
  return all_ok ? 0 : 2;
}

// ---------------------------------------------------------------------------
// compress / eval / inspect
// ---------------------------------------------------------------------------

nn::NetworkModel model_with_checkpoint(const std::string& arch_path,
                                       const std::string& model_path) {
  auto model = nn::model_from_json_file(arch_path);
  io::load_weights(model, io::load_checkpoint(model_path));
  return model;
}

int cmd_compress(const std::string& arch_path, const std::string& model_path,
                 const std::string& out_path, bool dense) {
  const auto model = model_with_checkpoint(arch_path, model_path);
  if (!out_path.empty()) {
    fs::create_directories(fs::path(out_path).parent_path());
    io::save_checkpoint(model, out_path, dense);
    std::cout << "wrote " << out_path << "\n";
  }
  print_size_report(io::size_report(model), std::cout);
  return 0;
}

int cmd_eval(const std::string& arch_path, const std::string& model_path,
             const std::string& images, const std::string& labels,
             std::size_t limit) {
  const auto model = model_with_checkpoint(arch_path, model_path);
  auto ds = data::load_idx(images, labels);
  if (limit > 0 && limit < ds.size()) ds = ds.subset(0, limit);
  ds.validate(model.class_count);
  const auto ev = nn::evaluate(model, ds);
  std::cout << "samples:   " << ds.size() << "\n"
            << "accuracy:  " << ev.accuracy << "\n"
            << "mean loss: " << ev.mean_loss << "\n";
  return 0;
}

int cmd_inspect(const std::string& model_path) {
  const auto records = io::load_checkpoint(model_path);
  std::cout << "layers: " << records.size() << "\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    std::size_t nnz = 0;
    for (double w : r.weights)
      if (w != 0.0) ++nnz;
    std::cout << "  " << i << ": " << nn::kind_name(r.kind);
    if (!r.dims.empty()) {
      std::cout << " weights " << shape_string(r.dims) << " nnz " << nnz << "/"
                << r.weights.size() << " biases " << r.biases.size();
    }
    std::cout << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparsity-constrained training toolkit"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  bool seed_given = false;
  int jobs = 1;
  std::string out_dir = "out";
  app.add_option("--seed", seed, "seed for every random choice")
      ->each([&](const std::string&) { seed_given = true; });
  app.add_option("--jobs", jobs, "worker threads for sweeps")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "output directory");

  // ght
  GhtArgs ght_args;
  auto* ght_cmd = app.add_subcommand("ght", "sparse least-squares solver");
  ght_cmd->add_option("--matrix", ght_args.matrix_file,
                      "plain-text matrix file (\"rows cols\" then entries)");
  ght_cmd->add_option("--rhs", ght_args.rhs_file,
                      "right-hand side (single-column matrix file)");
  ght_cmd->add_option("--planted-rows", ght_args.planted_rows,
                      "generate a planted instance with this many rows");
  ght_cmd->add_option("--planted-cols", ght_args.planted_cols,
                      "columns of the planted instance");
  ght_cmd->add_option("--planted-nnz", ght_args.planted_nnz,
                      "nonzeros of the planted solution");
  ght_cmd->add_option("--sparsity", ght_args.sparsity,
                      "cardinality budget k");
  ght_cmd->add_option("--eta", ght_args.eta,
                      "step size (default: 1 / sigma_max(A)^2)");
  ght_cmd->add_option("--max-iters", ght_args.max_iters, "iteration budget");
  ght_cmd->add_option("--tolerance", ght_args.tolerance,
                      "stop when the iterate moves less than this");

  // train
  std::string train_config;
  auto* train_cmd = app.add_subcommand("train", "run the full schedule");
  train_cmd->add_option("--config", train_config, "run-config JSON")
      ->required();

  // sweep
  std::string sweep_config, sweep_ratios = "0,0.25,0.5,0.75,0.9";
  auto* sweep_cmd =
      app.add_subcommand("sweep", "run the schedule across removal ratios");
  sweep_cmd->add_option("--config", sweep_config, "run-config JSON")
      ->required();
  sweep_cmd->add_option("--ratios", sweep_ratios,
                        "comma-separated removal ratios, increasing");

  // compress
  std::string cp_arch, cp_model, cp_out;
  bool cp_dense = false;
  auto* compress_cmd =
      app.add_subcommand("compress", "re-encode a checkpoint and report sizes");
  compress_cmd->add_option("--arch", cp_arch, "architecture JSON")->required();
  compress_cmd->add_option("--model", cp_model, "input .sdnn checkpoint")
      ->required();
  compress_cmd->add_option("--output", cp_out, "re-encoded checkpoint path");
  compress_cmd->add_flag("--dense", cp_dense,
                         "write a dense (all-ones mask) checkpoint");

  // eval
  std::string ev_arch, ev_model, ev_images, ev_labels;
  std::size_t ev_limit = 0;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--arch", ev_arch, "architecture JSON")->required();
  eval_cmd->add_option("--model", ev_model, ".sdnn checkpoint")->required();
  eval_cmd->add_option("--images", ev_images, "idx image file")->required();
  eval_cmd->add_option("--labels", ev_labels, "idx label file")->required();
  eval_cmd->add_option("--limit", ev_limit, "evaluate only the first N samples");

  // inspect
  std::string in_model;
  auto* inspect_cmd =
      app.add_subcommand("inspect", "list checkpoint layers and sizes");
  inspect_cmd->add_option("--model", in_model, ".sdnn checkpoint")->required();

  CLI11_PARSE(app, argc, argv);

  set_warn_stderr(true);
  try {
    if (ght_cmd->parsed()) return cmd_ght(ght_args, seed, out_dir);
    if (train_cmd->parsed())
      return cmd_train(train_config,
                       seed_given ? std::optional<std::uint64_t>(seed)
                                  : std::nullopt,
                       out_dir);
    if (sweep_cmd->parsed())
      return cmd_sweep(sweep_config, sweep_ratios,
                       seed_given ? std::optional<std::uint64_t>(seed)
                                  : std::nullopt,
                       jobs, out_dir);
    if (compress_cmd->parsed())
      return cmd_compress(cp_arch, cp_model, cp_out, cp_dense);
    if (eval_cmd->parsed())
      return cmd_eval(ev_arch, ev_model, ev_images, ev_labels, ev_limit);
    if (inspect_cmd->parsed()) return cmd_inspect(in_model);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
