#pragma once

#include <cstdint>
#include <vector>

#include "rsub/common.hpp"
#include "rsub/dataset.hpp"
#include "rsub/solver.hpp"

namespace rsub {

/// Rank-r orthogonal projector with its basis, measured robustness, and the
/// eigengap-tie flag from rounding.
struct ProjectionMatrix {
  MatrixXd p;        // n x n, p = basis basis^T
  MatrixXd basis;    // n x r, orthonormal, sign convention: first nonzero
                     // coordinate of each column positive
  int rank = 0;
  double measured_kappa = 0.0;
  bool kappa_exact = false;
  bool eigengap_tie = false;  // lambda_r(X) - lambda_{r+1}(X) < 1e-9
};

/// Build a ProjectionMatrix from orthonormal columns (measures kappa).
ProjectionMatrix make_projection(const MatrixXd& basis, NormIndex q);

struct RobustProjectionResult {
  ProjectionMatrix projector;
  SolverState solver;
};

/// Algorithm "RobustProjection": solve the convex program, round to the
/// top-r eigenvectors of X-hat.
RobustProjectionResult robust_projection(const Dataset& data,
                                         const FeasibleSetParams& params,
                                         const SolverConfig& config = {});
RobustProjectionResult robust_projection_gram(const MatrixXd& s,
                                              const FeasibleSetParams& params,
                                              const SolverConfig& config = {});

struct CovEstimate {
  MatrixXd sigma_top_hat;     // Pi_hat S'' Pi_hat
  ProjectionMatrix projector;
  long m_proj = 0;  // columns used for the projector
  long m_cov = 0;   // fresh columns used for the covariance
  SolverState solver;
};

/// Algorithm "AdvRobustPCA": symmetrize 4m samples into two independent
/// halves, estimate the projector on one, the covariance on the other.
CovEstimate adv_robust_pca(const Dataset& samples,
                           const FeasibleSetParams& params,
                           const SolverConfig& config = {});

/// The symmetrization step alone: columns (A_j - A_{m+j}) / sqrt(2).
MatrixXd symmetrize_pairs(const MatrixXd& a);

struct StatEstimatorConfig {
  long max_support = 1000000;  // enumeration budget, C(n, k) must fit
};

struct StatEstimatorResult {
  ProjectionMatrix projector;
  std::vector<int> support;
  long supports_scanned = 0;
  // The search ranges over exactly-k-sparse supports, a strict subset of the
  // analytic-sparsity class the statistical bound optimizes over.
  bool combinatorial_restriction = true;
};

/// Desk-scale r = 1 statistical estimator: enumerate supports of size
/// floor(kappa^2), take the best top eigenvector with l1/l2 ratio <= kappa.
StatEstimatorResult statistical_estimator_r1(const Dataset& data, double kappa,
                                             const StatEstimatorConfig& cfg = {});

struct MeanEstimate {
  VectorXd mu_hat;
  VectorXd mu_empirical;
  double shrinkage = 0.0;  // delta + eta
  double eta = 0.0;
};

/// Mean estimation under perturbation: minimum-l_{q*} point in the lq ball of
/// radius delta + eta around the empirical mean. Closed forms at q = inf
/// (soft threshold) and q = 2 (radial shrink); projected subgradient descent
/// for other q. q >= 2 here (mean estimation admits q = 2).
MeanEstimate robust_mean(const Dataset& data, double q, double delta,
                         double sigma_bound);

/// Vanilla top-r PCA of the empirical second moment (baseline estimator).
ProjectionMatrix vanilla_pca(const Dataset& data, int r, NormIndex q);
ProjectionMatrix vanilla_pca_gram(const MatrixXd& s, int r, NormIndex q);

}  // namespace rsub
