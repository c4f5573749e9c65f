#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rsub/common.hpp"
#include "rsub/covmodel.hpp"
#include "rsub/dataset.hpp"
#include "rsub/rng.hpp"

namespace rsub {

/// Constraint-set parameters of the convex program
///   min (1/m)||A||_F^2 - (1/m)<AA^T, X>
///   s.t. tr(X) = r, 0 <= X <= I, ||X||_{q*} <= r kappa^2,
///        ||X||_{q->q*} <= kappa^2.
struct FeasibleSetParams {
  int r = 1;
  double kappa = 1.0;
  NormIndex q = NormIndex::infinity();
  int n = 0;

  void validate() const;
};

struct SolverConfig {
  double tol_obj = 1e-7;   // relative objective stall
  double tol_feas = 1e-7;  // feasibility residuals at exit
  double tol_eig = 1e-9;
  long max_iters = 5000;
  int cut_check_period = 10;
  int cut_pool_size = 200;
  int dykstra_max_cycles = 400;
  double dykstra_tol = 1e-11;
  int oracle_rounds = 32;
  double cut_slack = 1e-6;  // cut when measured norm > kappa^2 (1 + slack)
  std::string step_rule = "lipschitz-halving";
  std::uint64_t oracle_seed = 0xacc01adeULL;

  static SolverConfig from_json_file(const std::string& path);
  static SolverConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
};

/// Lazy halfspace <y z^T, X> <= rhs from the separation oracle.
struct Cut {
  VectorXd y;
  VectorXd z;
  double rhs = 0.0;
  long last_violated = 0;
};

struct FeasResiduals {
  double trace = 0.0;
  double eig = 0.0;
  double ball = 0.0;
  double cuts = 0.0;
  double max() const;
};

enum class SolverStatus { Converged, MaxIters, Infeasible };

struct SolverState {
  MatrixXd x;
  std::vector<Cut> cuts;
  std::vector<double> objective_trace;
  std::vector<FeasResiduals> feas_trace;
  std::vector<int> cut_count_trace;
  long iters = 0;
  SolverStatus status = SolverStatus::MaxIters;
  double objective = 0.0;
  // Measured ||X||_{q->q*} at exit and its ratio to kappa^2; the paper's
  // Lemma-2 constant c(q) is reported, never assumed.
  double measured_qqstar = 0.0;
  bool measured_exact = false;
  double kappa_sq_ratio = 0.0;
  int cuts_added = 0;
};

/// Euclidean projection onto {tr(X) = r, 0 <= X <= I}: shift-and-clamp on the
/// spectrum with the shift found by monotone bisection (water-filling).
MatrixXd project_fantope(const MatrixXd& m, int r);

/// Euclidean projection onto the entrywise l1 ball of the given radius
/// (sort-based soft threshold; symmetric input stays symmetric).
MatrixXd project_entrywise_l1(const MatrixXd& m, double radius);

/// Euclidean projection onto {||X||_{qstar} <= radius} for qstar in (1, 2):
/// bisection on the Lagrange multiplier, scalar root per entry.
MatrixXd project_entrywise_lq(const MatrixXd& m, double radius, double qstar);

/// If the (exact when possible, else heuristic) estimate of ||X||_{q->q*}
/// exceeds kappa^2 (1 + slack), returns the witnessed violated halfspace.
std::optional<Cut> separation_oracle_qnorm(const MatrixXd& x,
                                           const FeasibleSetParams& params,
                                           Rng& rng, int rounds = 32,
                                           double slack = 1e-6);

SolverState solve(const Dataset& data, const FeasibleSetParams& params,
                  const SolverConfig& config = {});

/// Same, from a precomputed second moment S = (1/m) A A^T and the constant
/// objective term c0 = (1/m)||A||_F^2 = tr(S).
SolverState solve_gram(const MatrixXd& s, const FeasibleSetParams& params,
                       const SolverConfig& config = {});

/// |<E, X>| with E = (1/m) A A^T - Sigma*; the quantity the Delta bound of
/// the analysis controls, evaluated at this X (diagnostic, model known).
double compute_delta_diagnostic(const MatrixXd& x, const Dataset& data,
                                const CovarianceModel& model);
double compute_delta_diagnostic_gram(const MatrixXd& x, const MatrixXd& s,
                                     const CovarianceModel& model);

/// Trace CSV: iter, objective, max_residual, n_cuts.
void write_trace_csv(const SolverState& state, const std::string& path);

}  // namespace rsub
