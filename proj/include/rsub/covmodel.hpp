#pragma once

#include <cstdint>
#include <vector>

#include "rsub/common.hpp"
#include "rsub/dataset.hpp"

namespace rsub {

/// Ground-truth covariance: Sigma = sum_i eigvals(i) basis.col(i) basis.col(i)^T.
/// kappa is always the measured ||Pi*||_{q->2} of the top-r projector, never
/// the construction target.
struct CovarianceModel {
  int n = 0;
  int r = 0;
  VectorXd eigvals;  // descending, size n
  MatrixXd basis;    // n x n, orthonormal columns
  double kappa = 0.0;
  NormIndex q = NormIndex::infinity();
  bool kappa_exact = true;  // false when the norm oracle fell back to heuristic
  int support_k = 0;        // planted support size; 0 when dense
  std::uint64_t basis_seed = 0;

  MatrixXd sigma() const;
  MatrixXd sigma_top() const;
  MatrixXd sigma_bot() const;
  MatrixXd projector() const;          // Pi* = V_r V_r^T
  MatrixXd top_basis() const { return basis.leftCols(r); }
  double eigengap() const { return r < n ? eigvals(r - 1) - eigvals(r) : eigvals(r - 1); }
  double lambda1() const { return eigvals(0); }
};

/// r orthonormal Fourier characters on [offset, offset+k): every nonzero entry
/// is +-1/sqrt(k). k must be a power of two, r <= k, offset + k <= n.
/// Character indices start at 1 (the constant character enters only at r = k).
std::vector<VectorXd> fourier_sparse_basis(int n, int k, int r, int offset);

/// Spiked model Sigma = I + theta * Pi*, Pi* spanned by Fourier characters on
/// the largest power-of-two support k <= kappa_target^2 (so measured kappa =
/// sqrt(k) <= kappa_target).
CovarianceModel spiked_model(int n, int r, double theta, double kappa_target,
                             NormIndex q = NormIndex::infinity());

struct BasisSpec {
  enum class Kind {
    FourierCommon,    // r characters sharing one k-support
    FourierDisjoint,  // r characters on r disjoint k-blocks
    RandomRotation,   // dense random orthonormal block on a k-support
    Custom,           // caller-supplied orthonormal columns
  };
  Kind kind = Kind::FourierCommon;
  int k = 0;       // support size per vector (power of two for Fourier kinds)
  int offset = 0;
  std::uint64_t seed = 0;       // RandomRotation only
  MatrixXd custom_basis;        // Custom only, n x r

  static BasisSpec fourier_common(int k, int offset = 0);
  static BasisSpec fourier_disjoint(int k, int offset = 0);
  static BasisSpec random_rotation(int k, std::uint64_t seed, int offset = 0);
  static BasisSpec custom(MatrixXd basis);
};

/// General model from a descending eigenvalue list and a top-r basis spec;
/// the basis is completed to a full orthonormal frame deterministically.
CovarianceModel general_model(const VectorXd& eigvals, int r,
                              const BasisSpec& spec,
                              NormIndex q = NormIndex::infinity());

/// m iid samples A_j = mu + sum_i sqrt(lambda_i) zeta_i^(j) v_i with retained
/// coefficients. Column j draws from the stream mix_seed(seed, j); output is
/// bitwise reproducible for a fixed seed, independent of thread count.
Dataset sample(const CovarianceModel& model, int m, const VectorXd& mu,
               std::uint64_t seed);
Dataset sample(const CovarianceModel& model, int m, std::uint64_t seed);

}  // namespace rsub
