#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sdnn/common.hpp"

namespace sdnn::ght {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using IndexSet = std::vector<Eigen::Index>;  // always kept sorted ascending

// ============================================================================
// types
// ============================================================================

// A smooth objective f : R^dim -> R with gradient, plus an optional exact
// solver for min f restricted to a support set.  restricted_solver may be
// empty (no closed form available); when present it returns the minimizer as
// a full-dimension vector that is zero off the support, or nullopt when the
// restricted system is singular.
struct SmoothObjective {
  Eigen::Index dim = 0;
  std::function<double(const VectorXd&)> value;
  std::function<VectorXd(const VectorXd&)> grad;
  std::function<std::optional<VectorXd>(const IndexSet&)> restricted_solver;
};

struct GhtConfig {
  Eigen::Index cardinality = 1;     // k, the sparsity budget
  double step_size = 1.0;           // eta for the gradient step
  int max_iterations = 200;
  int restricted_steps = 25;        // inner descent budget when no exact solver
  double tolerance = 1e-8;          // stop when ||x_next - x||_inf < tolerance
  void validate(Eigen::Index dim) const;
};

struct GhtState {
  VectorXd x;
  IndexSet support;        // active set F from the latest thresholding
  double step_size = 0.0;
  int iteration = 0;
  double objective_value = 0.0;
};

struct TraceRow {
  int iteration;
  double objective;
  Eigen::Index support_size;    // ||x||_0 after the restricted step
  Eigen::Index support_change;  // |F_t \ F_{t-1}|
};

struct GhtResult {
  GhtState state;
  std::vector<TraceRow> trace;
  bool converged = false;
};

// ============================================================================
// operations
// ============================================================================

// Keep the k largest-magnitude entries of v, zero the rest.  Ties at the
// cutoff keep the lower index.  Throws on non-finite input.
VectorXd hard_threshold(const VectorXd& v, Eigen::Index k);

// Indices of the nonzero entries of v, ascending.
IndexSet support(const VectorXd& v);

// Index set of the k largest-magnitude entries (the set retained by
// hard_threshold), ascending.  Size is min(k, v.size()).
IndexSet top_k_support(const VectorXd& v, Eigen::Index k);

// One gradient step x - eta * grad f(x).  Throws if the gradient is not
// finite at x.
VectorXd gradient_step(const GhtState& state, const SmoothObjective& obj);

// Minimize f over vectors supported on F, starting from x_init (which must
// itself be supported on F).  Uses the objective's exact restricted solver
// when available; falls back to projected gradient descent with backtracking
// when none is provided, or — with a recorded warning — when the solver
// reports a singular system.  Never increases the objective relative to
// x_init.
VectorXd restricted_minimize(const SmoothObjective& obj, const IndexSet& F,
                             const VectorXd& x_init, int steps,
                             double step_hint = 1.0);

// Full solver loop: gradient step, hard threshold, restricted minimization,
// repeated until the iterate stops moving or the iteration budget runs out.
GhtResult ght_solve(const SmoothObjective& obj, const GhtConfig& cfg);
GhtResult ght_solve(const SmoothObjective& obj, const GhtConfig& cfg,
                    const VectorXd& x0);

// ============================================================================
// problem instances and helpers
// ============================================================================

// f(x) = 0.5 * ||A x - b||^2 with exact restricted normal-equations solver.
SmoothObjective least_squares(const MatrixXd& A, const VectorXd& b);

// sigma_max(A)^2 estimated by power iteration on A^T A.
double squared_spectral_norm(const MatrixXd& A, int power_iterations = 20);

struct PlantedInstance {
  MatrixXd A;
  VectorXd x_true;
  VectorXd b;
};

// A with standard normal entries, x_true with `sparsity` nonzeros whose
// magnitudes lie in [1, 2), b = A x_true.  Deterministic per seed.
PlantedInstance make_planted(Eigen::Index rows, Eigen::Index cols,
                             Eigen::Index sparsity, std::uint64_t seed);

// Plain-text matrix file: first line "rows cols", then rows*cols entries in
// row-major order separated by whitespace.  A vector is a matrix with one
// column.
MatrixXd load_matrix(const std::string& path);

void write_trace_csv(const std::vector<TraceRow>& trace, std::ostream& out);

}  // namespace sdnn::ght
