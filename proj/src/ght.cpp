#include "sdnn/ght.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "sdnn/tensor.hpp"

namespace sdnn::ght {

namespace {

bool all_finite(const VectorXd& v) { return v.allFinite(); }

// Count of elements in `next` not present in `prev`; both sorted ascending.
Eigen::Index set_difference_size(const IndexSet& next, const IndexSet& prev) {
  Eigen::Index n = 0;
  auto it = prev.begin();
  for (Eigen::Index i : next) {
    while (it != prev.end() && *it < i) ++it;
    if (it == prev.end() || *it != i) ++n;
  }
  return n;
}

VectorXd project_onto(const VectorXd& v, const IndexSet& F) {
  VectorXd out = VectorXd::Zero(v.size());
  for (Eigen::Index i : F) out[i] = v[i];
  return out;
}

}  // namespace

void GhtConfig::validate(Eigen::Index dim) const {
  if (cardinality < 1 || cardinality > dim)
    throw Error("cardinality must lie in [1, " + std::to_string(dim) +
                "], got " + std::to_string(cardinality));
  if (!(step_size > 0.0) || !std::isfinite(step_size))
    throw Error("step size must be positive and finite");
  if (max_iterations < 1) throw Error("max_iterations must be at least 1");
  if (!(tolerance >= 0.0)) throw Error("tolerance must be non-negative");
}

VectorXd hard_threshold(const VectorXd& v, Eigen::Index k) {
  if (k < 0) throw Error("hard_threshold: negative cardinality");
  if (!all_finite(v)) throw Error("hard_threshold: non-finite input vector");
  VectorXd out = VectorXd::Zero(v.size());
  const auto keep = top_k_magnitude_indices(
      v.data(), static_cast<std::size_t>(v.size()),
      static_cast<std::size_t>(k));
  for (std::size_t i : keep) out[static_cast<Eigen::Index>(i)] = v[static_cast<Eigen::Index>(i)];
  return out;
}

IndexSet support(const VectorXd& v) {
  IndexSet s;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) s.push_back(i);
  return s;
}

IndexSet top_k_support(const VectorXd& v, Eigen::Index k) {
  if (k < 0) throw Error("top_k_support: negative cardinality");
  if (!all_finite(v)) throw Error("top_k_support: non-finite input vector");
  const auto keep = top_k_magnitude_indices(
      v.data(), static_cast<std::size_t>(v.size()),
      static_cast<std::size_t>(k));
  IndexSet s;
  s.reserve(keep.size());
  for (std::size_t i : keep) s.push_back(static_cast<Eigen::Index>(i));
  return s;
}

VectorXd gradient_step(const GhtState& state, const SmoothObjective& obj) {
  VectorXd g = obj.grad(state.x);
  if (!all_finite(g))
    throw Error("non-finite gradient at iteration " +
                std::to_string(state.iteration));
  return state.x - state.step_size * g;
}

VectorXd restricted_minimize(const SmoothObjective& obj, const IndexSet& F,
                             const VectorXd& x_init, int steps,
                             double step_hint) {
  for (Eigen::Index i = 0; i < x_init.size(); ++i) {
    if (x_init[i] != 0.0 &&
        !std::binary_search(F.begin(), F.end(), i))
      throw Error("restricted_minimize: x_init has support outside F at index " +
                  std::to_string(i));
  }
  if (F.empty()) return VectorXd::Zero(x_init.size());

  if (obj.restricted_solver) {
    if (auto sol = obj.restricted_solver(F)) {
      // Exact minimizer over F; by optimality it cannot exceed f(x_init).
      return *sol;
    }
    warn("restricted system is singular; falling back to projected gradient descent");
  }

  // Projected gradient descent on the support with halving backtracking; the
  // accept test keeps the objective non-increasing.
  VectorXd z = x_init;
  double fz = obj.value(z);
  for (int s = 0; s < steps; ++s) {
    VectorXd g = project_onto(obj.grad(z), F);
    if (!all_finite(g)) throw Error("restricted_minimize: non-finite gradient");
    double eta = step_hint;
    bool accepted = false;
    for (int half = 0; half < 60; ++half) {
      VectorXd cand = z - eta * g;
      double fc = obj.value(cand);
      if (std::isfinite(fc) && fc <= fz) {
        z = std::move(cand);
        fz = fc;
        accepted = true;
        break;
      }
      eta *= 0.5;
    }
    if (!accepted) break;  // no descent step on F; treat as stationary
  }
  return z;
}

GhtResult ght_solve(const SmoothObjective& obj, const GhtConfig& cfg) {
  return ght_solve(obj, cfg, VectorXd::Zero(obj.dim));
}

GhtResult ght_solve(const SmoothObjective& obj, const GhtConfig& cfg,
                    const VectorXd& x0) {
  cfg.validate(obj.dim);
  if (x0.size() != obj.dim)
    throw Error("initial point has dimension " + std::to_string(x0.size()) +
                ", objective expects " + std::to_string(obj.dim));

  GhtResult res;
  GhtState st;
  st.x = x0;
  st.step_size = cfg.step_size;
  st.iteration = 0;
  st.objective_value = obj.value(st.x);
  st.support = support(st.x);

  const double f_init = st.objective_value;
  const double diverge_limit =
      1e12 * std::max(std::abs(f_init), 1.0);

  res.trace.push_back({0, st.objective_value,
                       static_cast<Eigen::Index>(st.support.size()), 0});

  IndexSet F_prev = st.support;
  for (int t = 1; t <= cfg.max_iterations; ++t) {
    st.iteration = t;
    VectorXd stepped = gradient_step(st, obj);              // S1
    VectorXd thresholded = hard_threshold(stepped, cfg.cardinality);  // S2
    IndexSet F = top_k_support(stepped, cfg.cardinality);
    VectorXd x_next = restricted_minimize(obj, F, thresholded,
                                          cfg.restricted_steps,
                                          cfg.step_size);   // S3
    double f = obj.value(x_next);
    if (!std::isfinite(f) || f > diverge_limit)
      throw Error("objective diverged at iteration " + std::to_string(t) +
                  " (value " + std::to_string(f) +
                  "); the step size is likely too large");

    res.trace.push_back({t, f, static_cast<Eigen::Index>(support(x_next).size()),
                         set_difference_size(F, F_prev)});

    const double move = (x_next - st.x).lpNorm<Eigen::Infinity>();
    st.x = std::move(x_next);
    st.support = F;
    st.objective_value = f;
    F_prev = std::move(F);
    if (move < cfg.tolerance) {
      res.converged = true;
      break;
    }
  }
  res.state = std::move(st);
  return res;
}

SmoothObjective least_squares(const MatrixXd& A, const VectorXd& b) {
  if (A.rows() != b.size())
    throw Error("least_squares: A has " + std::to_string(A.rows()) +
                " rows but b has " + std::to_string(b.size()) + " entries");
  SmoothObjective obj;
  obj.dim = A.cols();
  obj.value = [A, b](const VectorXd& x) {
    return 0.5 * (A * x - b).squaredNorm();
  };
  obj.grad = [A, b](const VectorXd& x) {
    return (A.transpose() * (A * x - b)).eval();
  };
  obj.restricted_solver =
      [A, b](const IndexSet& F) -> std::optional<VectorXd> {
    MatrixXd AF(A.rows(), static_cast<Eigen::Index>(F.size()));
    for (std::size_t j = 0; j < F.size(); ++j) AF.col(static_cast<Eigen::Index>(j)) = A.col(F[j]);
    Eigen::ColPivHouseholderQR<MatrixXd> qr(AF);
    if (qr.rank() < AF.cols()) return std::nullopt;  // singular restricted system
    // exact normal-equations solve on the support
    MatrixXd G = AF.transpose() * AF;
    VectorXd rhs = AF.transpose() * b;
    VectorXd z = G.ldlt().solve(rhs);
    VectorXd out = VectorXd::Zero(A.cols());
    for (std::size_t j = 0; j < F.size(); ++j) out[F[j]] = z[static_cast<Eigen::Index>(j)];
    return out;
  };
  return obj;
}

double squared_spectral_norm(const MatrixXd& A, int power_iterations) {
  if (A.size() == 0) return 0.0;
  VectorXd v = VectorXd::Ones(A.cols()) / std::sqrt(double(A.cols()));
  double lambda = 0.0;
  for (int i = 0; i < power_iterations; ++i) {
    VectorXd w = A.transpose() * (A * v);
    double n = w.norm();
    if (n == 0.0) return 0.0;
    lambda = n;
    v = w / n;
  }
  return lambda;
}

PlantedInstance make_planted(Eigen::Index rows, Eigen::Index cols,
                             Eigen::Index sparsity, std::uint64_t seed) {
  if (sparsity < 1 || sparsity > cols)
    throw Error("planted sparsity must lie in [1, cols]");
  auto rng = seeded_rng(seed, 0x6768'7400);  // instance stream
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  PlantedInstance inst;
  inst.A.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) inst.A(r, c) = gauss(rng);

  std::vector<Eigen::Index> idx(static_cast<std::size_t>(cols));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::shuffle(idx.begin(), idx.end(), rng);

  inst.x_true = VectorXd::Zero(cols);
  for (Eigen::Index j = 0; j < sparsity; ++j) {
    double magnitude = 1.0 + unif(rng);           // in [1, 2)
    double sign = (rng() & 1u) ? 1.0 : -1.0;
    inst.x_true[idx[static_cast<std::size_t>(j)]] = sign * magnitude;
  }
  inst.b = inst.A * inst.x_true;
  return inst;
}

MatrixXd load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open matrix file: " + path);
  Eigen::Index rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows < 1 || cols < 1)
    throw Error("matrix file " + path +
                ": expected a header line \"rows cols\" with positive counts");
  MatrixXd A(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      if (!(in >> A(r, c)))
        throw Error("matrix file " + path + ": expected " +
                    std::to_string(rows * cols) + " entries, ran short at (" +
                    std::to_string(r) + ", " + std::to_string(c) + ")");
  return A;
}

void write_trace_csv(const std::vector<TraceRow>& trace, std::ostream& out) {
  out << "iteration,objective,support_size,support_change\n";
  out.precision(17);
  for (const auto& row : trace)
    out << row.iteration << "," << row.objective << "," << row.support_size
        << "," << row.support_change << "\n";
}

}  // namespace sdnn::ght
