#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rsub/common.hpp"
#include "rsub/metrics.hpp"
#include "rsub/solver.hpp"

namespace rsub {

enum class AdversaryKind { None, ConstantShift, Minmax, InstanceOptimal };
enum class EstimatorKind { SDP, StatisticalR1, VanillaPCA };

std::string to_string(AdversaryKind k);
std::string to_string(EstimatorKind k);
AdversaryKind adversary_from_string(const std::string& s);
EstimatorKind estimator_from_string(const std::string& s);

/// One sweep: the cartesian grid (n, r, theta, kappa, m, delta) x seeds.
/// Cells whose parameter windows are violated come back status=skipped, never
/// abort the sweep.
struct SweepSpec {
  std::vector<int> n_grid{16};
  std::vector<int> r_grid{1};
  std::vector<double> theta_grid{1.0};
  std::vector<double> kappa_grid{2.0};
  std::vector<long> m_grid{1000};
  std::vector<double> delta_grid{0.0};
  AdversaryKind adversary = AdversaryKind::None;
  EstimatorKind estimator = EstimatorKind::SDP;
  int seeds_per_cell = 1;
  std::uint64_t master_seed = 1;
  double kappa_slack = 1.15;     // solver kappa = slack * measured kappa
  double attack_constant = 0.1;  // c / c4 in the epsilon formulas
  double attack_eta = 0.05;
  SolverConfig solver;
  std::string output_path;
  bool force_serial = false;  // run cells one by one (parallel = serial check)

  void validate() const;
  long cell_count() const;
  long task_count() const { return cell_count() * seeds_per_cell; }

  static SweepSpec from_json_file(const std::string& path);
  static SweepSpec from_json_text(const std::string& text);
  std::string to_json_text() const;
};

struct ExperimentRecord {
  long cell_index = 0;
  int seed_index = 0;
  std::uint64_t cell_seed = 0;
  int n = 0;
  int r = 0;
  double theta = 0.0;
  double kappa_target = 0.0;
  double kappa_measured = 0.0;
  double kappa_solver = 0.0;
  double delta = 0.0;
  long m = 0;
  std::string adversary;
  std::string estimator;
  std::string status;  // ok | skipped | error
  ErrorReport report;
  double epsilon_attack = 0.0;
  double max_violation = 0.0;
  long solver_iters = 0;
  std::string solver_status;
  double kappa_sq_ratio = 0.0;
  double wall_time_ms = 0.0;
  std::string message;
};

/// Fixed CSV schema (column order is the wire format):
///   schema,cell_index,seed_index,cell_seed,n,r,theta,kappa_target,
///   kappa_measured,kappa_solver,delta,m,adversary,estimator,status,
///   sin_theta_sq,frob_proj_sq,frob_cov_sq,inner_product,
///   predicted_bound_proj,predicted_bound_lower,predicted_bound_cov,
///   delta_diag,epsilon_attack,max_violation,solver_iters,solver_status,
///   kappa_sq_ratio,wall_time_ms,message
extern const char* const kRecordCsvHeader;
extern const int kRecordSchemaVersion;

std::string record_to_csv(const ExperimentRecord& rec);
ExperimentRecord record_from_csv(const std::string& line);

/// Run the sweep. Deterministic per master seed: cell seeds come from
/// mix_seed(master, cell, seed_index), tasks run on a bounded pool
/// (ROBUST_SUBSPACE_THREADS caps it), and rows land in task order regardless
/// of completion order. Existing (cell, seed) rows in output_path are reused
/// (crash-safe resume).
std::vector<ExperimentRecord> run_sweep(const SweepSpec& spec);

/// Single task, exposed for the CLI cross-check.
ExperimentRecord run_task(const SweepSpec& spec, long cell_index,
                          int seed_index);

/// FNV-1a over the CSV body with the wall_time column blanked.
std::uint64_t determinism_hash(const std::string& csv_path);

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double ci_lo = 0.0;  // bootstrap 2.5% / 97.5% over seeds
  double ci_hi = 0.0;
  int points = 0;
};

enum class SweepAxis { Delta, M, Kappa, R };

/// Least-squares slope of log(median y) against log(x) over the grid points;
/// y is sin_theta_sq. Needs >= 4 grid values with positive medians.
ScalingFit fit_scaling(const std::vector<ExperimentRecord>& records,
                       SweepAxis axis, int bootstrap = 200,
                       std::uint64_t seed = 17);

std::vector<ExperimentRecord> read_records_csv(const std::string& path);
void write_records_csv(const std::string& path,
                       const std::vector<ExperimentRecord>& records);

}  // namespace rsub
