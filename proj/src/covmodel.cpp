#include "rsub/covmodel.hpp"

#include <bit>

#include "rsub/errors.hpp"
#include "rsub/kernels.hpp"
#include "rsub/norms.hpp"
#include "rsub/rng.hpp"

namespace rsub {

MatrixXd CovarianceModel::sigma() const {
  return basis * eigvals.asDiagonal() * basis.transpose();
}

MatrixXd CovarianceModel::sigma_top() const {
  return basis.leftCols(r) * eigvals.head(r).asDiagonal() *
         basis.leftCols(r).transpose();
}

MatrixXd CovarianceModel::sigma_bot() const {
  return basis.rightCols(n - r) * eigvals.tail(n - r).asDiagonal() *
         basis.rightCols(n - r).transpose();
}

MatrixXd CovarianceModel::projector() const {
  return basis.leftCols(r) * basis.leftCols(r).transpose();
}

namespace {

bool is_pow2(int k) { return k > 0 && (k & (k - 1)) == 0; }

// Character index sequence 1, 2, ..., k-1, 0: the constant character is used
// only when all k are requested.
int character_index(int j, int k) { return (j + 1 < k) ? j + 1 : (j + 1) % k; }

VectorXd fourier_character(int n, int k, int ell, int offset) {
  VectorXd v = VectorXd::Zero(n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(k));
  for (int i = 0; i < k; ++i) {
    const int parity = std::popcount(static_cast<unsigned>(ell & i)) & 1;
    v(offset + i) = parity ? -scale : scale;
  }
  return v;
}

void sign_normalize_columns(MatrixXd& b) {
  for (int j = 0; j < b.cols(); ++j) {
    for (int i = 0; i < b.rows(); ++i) {
      if (b(i, j) != 0.0) {
        if (b(i, j) < 0.0) b.col(j) = -b.col(j);
        break;
      }
    }
  }
}

// Orthonormal completion of an orthonormal n x r block to a full frame.
MatrixXd complete_frame(const MatrixXd& top) {
  const int n = static_cast<int>(top.rows());
  const int r = static_cast<int>(top.cols());
  if (r == n) return top;
  Eigen::HouseholderQR<MatrixXd> qr(top);
  MatrixXd q = qr.householderQ();
  MatrixXd full(n, n);
  full.leftCols(r) = top;
  full.rightCols(n - r) = q.rightCols(n - r);
  return full;
}

void measure_kappa(CovarianceModel& model) {
  const OpNormResult res = op_q_to_2(model.projector(), model.q);
  model.kappa = res.value;
  model.kappa_exact = res.exact;
}

}  // namespace

std::vector<VectorXd> fourier_sparse_basis(int n, int k, int r, int offset) {
  if (!is_pow2(k)) throw InvalidSupport("support size must be a power of two");
  if (offset < 0 || offset + k > n)
    throw InvalidSupport("support [offset, offset+k) exceeds dimension");
  if (r < 1 || r > k) throw InvalidSupport("need 1 <= r <= k characters");
  std::vector<VectorXd> out;
  out.reserve(r);
  for (int j = 0; j < r; ++j)
    out.push_back(fourier_character(n, k, character_index(j, k), offset));
  return out;
}

CovarianceModel spiked_model(int n, int r, double theta, double kappa_target,
                             NormIndex q) {
  require(n >= 1 && r >= 1 && r <= n, "spiked_model: need 1 <= r <= n");
  require(theta > 0.0, "spiked_model: theta > 0");
  require(kappa_target * kappa_target >= static_cast<double>(r),
          "spiked_model: kappa_target must be at least sqrt(r)");
  int k = 1;
  while (2 * k <= n &&
         2.0 * k <= kappa_target * kappa_target * (1.0 + 1e-12))
    k *= 2;
  if (k < r || k > n)
    throw InvalidSupport("spiked_model: no power-of-two support fits");

  CovarianceModel model;
  model.n = n;
  model.r = r;
  model.q = q;
  model.support_k = k;
  model.eigvals = VectorXd::Ones(n);
  model.eigvals.head(r).array() = 1.0 + theta;

  MatrixXd top(n, r);
  const std::vector<VectorXd> chars = fourier_sparse_basis(n, k, r, 0);
  for (int j = 0; j < r; ++j) top.col(j) = chars[j];

  // Complete with the unused characters on the support, then the standard
  // basis off the support; exact orthonormality by construction.
  MatrixXd full(n, n);
  full.leftCols(r) = top;
  int col = r;
  std::vector<bool> used(k, false);
  for (int j = 0; j < r; ++j) used[character_index(j, k)] = true;
  for (int ell = 0; ell < k; ++ell)
    if (!used[ell]) full.col(col++) = fourier_character(n, k, ell, 0);
  for (int i = k; i < n; ++i) {
    full.col(col).setZero();
    full(i, col) = 1.0;
    ++col;
  }
  model.basis = full;
  measure_kappa(model);
  return model;
}

BasisSpec BasisSpec::fourier_common(int k, int offset) {
  BasisSpec s;
  s.kind = Kind::FourierCommon;
  s.k = k;
  s.offset = offset;
  return s;
}

BasisSpec BasisSpec::fourier_disjoint(int k, int offset) {
  BasisSpec s;
  s.kind = Kind::FourierDisjoint;
  s.k = k;
  s.offset = offset;
  return s;
}

BasisSpec BasisSpec::random_rotation(int k, std::uint64_t seed, int offset) {
  BasisSpec s;
  s.kind = Kind::RandomRotation;
  s.k = k;
  s.offset = offset;
  s.seed = seed;
  return s;
}

BasisSpec BasisSpec::custom(MatrixXd basis) {
  BasisSpec s;
  s.kind = Kind::Custom;
  s.custom_basis = std::move(basis);
  return s;
}

CovarianceModel general_model(const VectorXd& eigvals, int r,
                              const BasisSpec& spec, NormIndex q) {
  const int n = static_cast<int>(eigvals.size());
  require(r >= 1 && r <= n, "general_model: need 1 <= r <= n");
  for (int i = 0; i + 1 < n; ++i)
    if (eigvals(i) < eigvals(i + 1))
      throw NotDescending("general_model: eigenvalues must be descending");
  if (eigvals(n - 1) < 0.0)
    throw NotDescending("general_model: eigenvalues must be nonnegative");

  MatrixXd top(n, r);
  int support_k = 0;
  switch (spec.kind) {
    case BasisSpec::Kind::FourierCommon: {
      const auto chars = fourier_sparse_basis(n, spec.k, r, spec.offset);
      for (int j = 0; j < r; ++j) top.col(j) = chars[j];
      support_k = spec.k;
      break;
    }
    case BasisSpec::Kind::FourierDisjoint: {
      if (spec.offset + r * spec.k > n)
        throw InvalidSupport("disjoint blocks exceed dimension");
      for (int j = 0; j < r; ++j) {
        const auto chars =
            fourier_sparse_basis(n, spec.k, 1, spec.offset + j * spec.k);
        top.col(j) = chars[0];
      }
      support_k = spec.k;
      break;
    }
    case BasisSpec::Kind::RandomRotation: {
      if (spec.offset + spec.k > n || r > spec.k)
        throw InvalidSupport("rotation support does not fit");
      const MatrixXd g = gaussian_matrix(spec.k, r, spec.seed);
      Eigen::HouseholderQR<MatrixXd> qr(g);
      MatrixXd qk = MatrixXd(qr.householderQ()).leftCols(r);
      top.setZero();
      top.middleRows(spec.offset, spec.k) = qk;
      sign_normalize_columns(top);
      support_k = spec.k;
      break;
    }
    case BasisSpec::Kind::Custom: {
      if (spec.custom_basis.rows() != n || spec.custom_basis.cols() != r)
        throw ShapeMismatch("custom basis must be n x r");
      top = spec.custom_basis;
      const MatrixXd gram = top.transpose() * top;
      if ((gram - MatrixXd::Identity(r, r)).cwiseAbs().maxCoeff() > 1e-10)
        throw NotOrthonormal("custom basis columns are not orthonormal");
      break;
    }
  }

  CovarianceModel model;
  model.n = n;
  model.r = r;
  model.q = q;
  model.support_k = support_k;
  model.eigvals = eigvals;
  model.basis = complete_frame(top);
  model.basis_seed = spec.seed;
  measure_kappa(model);
  return model;
}

Dataset sample(const CovarianceModel& model, int m, const VectorXd& mu,
               std::uint64_t seed) {
  require(m >= 1, "sample: m >= 1");
  require(mu.size() == model.n, "sample: mu has wrong dimension");
  const int n = model.n;

  Dataset ds;
  ds.provenance = Provenance::Clean;
  ds.seed = seed;
  ds.zeta = gaussian_matrix(n, m, seed);
  ds.samples.resize(n, m);
  if (!mu.isZero(0.0)) ds.mu = mu;

  const VectorXd root = model.eigvals.cwiseSqrt();
#pragma omp parallel for schedule(static) num_threads(num_threads())
  for (int j = 0; j < m; ++j)
    ds.samples.col(j) = mu + model.basis * root.cwiseProduct(ds.zeta.col(j));
  return ds;
}

Dataset sample(const CovarianceModel& model, int m, std::uint64_t seed) {
  return sample(model, m, VectorXd::Zero(model.n), seed);
}

}  // namespace rsub
