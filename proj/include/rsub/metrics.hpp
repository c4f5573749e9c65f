#pragma once

#include "rsub/common.hpp"
#include "rsub/covmodel.hpp"

namespace rsub {

/// One sweep cell's measured errors plus the constant-1 reference curves.
/// This is the CSV row payload of the harness; field order is the column
/// order, documented in harness.hpp.
struct ErrorReport {
  double sin_theta_sq = 0.0;
  double frob_proj_sq = 0.0;
  double frob_cov_sq = 0.0;
  double inner_product = 0.0;
  double predicted_bound_proj = 0.0;
  double predicted_bound_lower = 0.0;
  double predicted_bound_cov = 0.0;
  double delta_diag = 0.0;
};

/// sin^2 Theta distance r - <P1, P2> between equal-rank projectors, clamped
/// at zero against float noise.
double sin_theta_sq(const MatrixXd& p1, const MatrixXd& p2, int rank1,
                    int rank2);

struct PredictionParams {
  double kappa = 0.0;
  double q = kInf;
};

/// Theorem-4-shaped reference curve with all O-constants set to 1:
/// sqrt(lambda1 r) kappa delta / gap + r kappa^2 lambda1 sqrt(log n) n^{2/q}
/// / (gap sqrt(m)). Reference only; acceptance asserts slopes, not levels.
double predicted_error_comp(const CovarianceModel& model,
                            const PredictionParams& params, double delta,
                            long m);

/// Theorem-3-shaped lower reference curve, constant 1:
/// sqrt(r) kappa delta / (sqrt(lambda1) log(rm) log n).
double predicted_error_lower(const CovarianceModel& model,
                             const PredictionParams& params, double delta,
                             long m);

}  // namespace rsub
