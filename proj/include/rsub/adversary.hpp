#pragma once

#include <cstdint>
#include <vector>

#include "rsub/common.hpp"
#include "rsub/covmodel.hpp"
#include "rsub/dataset.hpp"

namespace rsub {

/// Probabilistic bounds on the projected-Gaussian perturbation directions
/// (instance-optimal attack), each checked at confidence eta.
struct UBoundChecks {
  bool norm_sq_ok = true;  // | ||u||_2^2 - 1 | within 3 sqrt(log(r/eta)/k') + ...
  bool linf_ok = true;     // ||u||_inf <= 3 sqrt(log(r k'/eta)/k')
  bool l1_ok = true;       // ||u||_1 <= 2 sqrt(k')
  double eta = 0.0;
};

/// A coupled pair: the clean dataset and a perturbed one whose columns are
/// exactly iid from the alternate covariance sigma_prime, with per-column
/// perturbation reported.
///
/// sigma_prime is stored as an explicit matrix; for a general tail the
/// alternate top basis v' is only an asymptotically exact eigenbasis of
/// sigma_prime, but it is the projector every claim quantifies.
struct CoupledInstance {
  Dataset clean;
  Dataset perturbed;
  MatrixXd v_prime;          // n x r orthonormal
  MatrixXd pi_prime;         // v' v'^T
  MatrixXd sigma_prime;      // exact covariance of the perturbed columns
  MatrixXd sigma_prime_top;  // sum_l lambda'_l v'_l v'_l^T
  VectorXd top_eigvals;      // lambda'_l = lambda_l / (1-eps)^2
  MatrixXd u;                // n x r perturbation directions, as constructed
  double epsilon = 0.0;
  long k_prime = 0;
  double kappa_used = 0.0;   // kappa entering the construction formulas
  double max_violation = 0.0;
  int resamples = 0;         // budget-violating draws discarded before this one
  UBoundChecks u_checks;
};

struct MinmaxOptions {
  double c4 = 0.1;        // the paper's unspecified small constant
  int max_resamples = 16;
};

/// Min-max construction: Fourier-character bumps u_l on disjoint k'-blocks,
/// v'_l = (1-eps) v_l + sqrt(2 eps - eps^2) u_l, coupled through the clean
/// dataset's retained coefficients. The model must be spiked with a
/// Fourier-sparse basis. kappa_used is the theorem parameter sqrt(3k/2)
/// derived from the planted support k (whose window [kappa^2/3, 2 kappa^2/3]
/// contains k), and the perturbed columns are exactly iid N(0, I + theta Pi').
CoupledInstance attack_minmax(const CovarianceModel& model,
                              const Dataset& dataset, double delta,
                              std::uint64_t seed,
                              const MinmaxOptions& opts = {});

struct InstanceOptimalOptions {
  double c = 0.1;  // the paper's unspecified small constant
  int max_resamples = 16;
};

/// Instance-optimal construction: u_l are projected Gaussians on disjoint
/// k'-blocks allocated after the model support, v'_l tilts v_l by
/// sqrt(2 eps - eps^2)/||u_l||, and the coupling reuses the retained
/// coefficients verbatim. delta = 0 returns the zero-perturbation identity.
CoupledInstance attack_instance_optimal(const CovarianceModel& model,
                                        const Dataset& dataset, double delta,
                                        double eta, std::uint64_t seed,
                                        const InstanceOptimalOptions& opts = {});

/// Every column shifted by delta * direction (direction entries +-1).
Dataset attack_constant_shift(const Dataset& dataset, double delta,
                              const VectorXd& direction);

struct MeanSparseAttack {
  Dataset perturbed;
  long s = 0;                 // shifted coordinate count
  double displacement = 0.0;  // delta * sqrt(s)
};

/// Shift the s = (||mu||_1/||mu||_2)^2 largest-|mu_i| coordinates by
/// delta * sign(mu_i); needs the dataset's mu and analytic sparsity
/// <= sqrt(n)/4.
MeanSparseAttack attack_mean_sparse(const Dataset& dataset, double delta);

struct BudgetReport {
  double max_violation = 0.0;
  std::vector<int> violating_columns;  // lq distance > delta (1 + 1e-9)
};

BudgetReport validate_budget(const Dataset& clean, const Dataset& perturbed,
                             double q, double delta);

/// Closed-form ||Pi' - Pi*||_F^2 of the tilt construction. The three term
/// families of Pi' - Pi* are mutually trace-orthogonal and their squared
/// Frobenius norms are (2e-e^2)^2, (2e-e^2)^2 and 2(2e-e^2)(1-e)^2 per l
/// (the u-norm factors cancel against ||u u^T||_F = ||u||^2), so the total
/// is exactly r (4e - 2e^2).
double projector_shift_frob_sq(double epsilon, int r);

/// Admissible delta windows (intersected with support feasibility).
struct DeltaWindow {
  double lo = 0.0;
  double hi = 0.0;
  bool empty() const { return !(lo < hi); }
};
DeltaWindow minmax_delta_window(const CovarianceModel& model, long m);
DeltaWindow instance_optimal_delta_window(const CovarianceModel& model);

}  // namespace rsub
