#pragma once

#include <optional>

#include "rsub/common.hpp"
#include "rsub/rng.hpp"

namespace rsub {

/// Which norm a NormKind names. Parametrized kinds carry their q.
enum class NormTag {
  EntrywiseQ,   // (sum |M_ij|^q)^{1/q}, q >= 1 or inf
  Frobenius,
  Operator2to2,
  OpInftyTo1,
  OpInftyTo2,
  OpQtoQstar,   // q > 2
  OpQto2,       // q > 2
};

struct NormKind {
  NormTag tag;
  double q = 0.0;  // only meaningful for the parametrized tags

  static NormKind entrywise(double q);
  static NormKind frobenius() { return {NormTag::Frobenius}; }
  static NormKind operator_2_to_2() { return {NormTag::Operator2to2}; }
  static NormKind op_infty_to_1() { return {NormTag::OpInftyTo1}; }
  static NormKind op_infty_to_2() { return {NormTag::OpInftyTo2}; }
  static NormKind op_q_to_qstar(double q);
  static NormKind op_q_to_2(double q);
};

/// Witnessed norm value. `value` is always reproducible from the witnesses:
/// |y^T M x| when y is present, ||M x||_2 / ||x||_q otherwise.
struct NormCertificate {
  double value = 0.0;
  VectorXd witness_x;
  std::optional<VectorXd> witness_y;
  bool exact = false;
};

struct OpNormResult {
  double value = 0.0;
  bool exact = false;
  VectorXd witness;  // unit in the domain norm
};

struct TraceBounds {
  double lo = 0.0;
  double hi = 0.0;
  double inner = 0.0;
};

/// Entrywise lq norm; q >= 1 or inf (max abs entry).
double entrywise_norm(const MatrixXd& m, double q);

double vector_lq_norm(const VectorXd& v, double q);

/// Exact ||M||_{inf->1} for symmetric PSD M by exhaustive sign-vector scan.
/// Zero diagonal entries force zero rows/columns for PSD matrices, so the scan
/// runs on the nonzero principal block; its dimension must be <= 22, else
/// DimensionTooLarge. Ties resolve to the lowest scan code.
NormCertificate op_inf_to_1_exact(const MatrixXd& m);

/// Randomized lower bound on ||M||_{inf->1}: Gaussian PSD rounding
/// x = sign(M^{1/2} g) followed by greedy one-coordinate sign flips, best of
/// num_rounds. Monotone in num_rounds for a fixed seed prefix.
NormCertificate op_inf_to_1_heuristic(const MatrixXd& m, int num_rounds,
                                      Rng& rng);

/// Heuristic lower bound on ||W||_{q->q*} for symmetric PSD W and finite
/// q > 2, via the nonlinear power iteration with Gaussian restarts.
NormCertificate op_q_to_qstar_heuristic(const MatrixXd& w, double q,
                                        int num_rounds, Rng& rng);

struct OpNormOptions {
  int heuristic_rounds = 64;
  std::uint64_t seed = 0x5eed;
};

/// ||M||_{q->2} = sqrt(||M^T M||_{q->q*}). Exact for q = inf when the support
/// block fits the scan budget; otherwise heuristic, flagged in `exact`.
OpNormResult op_q_to_2(const MatrixXd& m, NormIndex q,
                       const OpNormOptions& opts = {});

/// Test hook for Lemma-style monotonicity: ||A+B||_{inf->1} >= ||A||_{inf->1}
/// via the exact oracle on both sides.
bool check_psd_monotonicity(const MatrixXd& a, const MatrixXd& b);

/// lo = lambda_min(A) tr(B), hi = lambda_max(A) tr(B), inner = <A,B>.
/// Throws NotPsd when either matrix has an eigenvalue below -1e-8 * scale.
TraceBounds trace_inner_product_bounds(const MatrixXd& a, const MatrixXd& b);

/// Eigenvalues sorted descending with matching eigenvector columns.
void sym_eig_descending(const MatrixXd& m, VectorXd& evals, MatrixXd& evecs);

/// Symmetric PSD square root (negative eigenvalues clamped to zero).
MatrixXd psd_sqrt(const MatrixXd& m);

}  // namespace rsub
