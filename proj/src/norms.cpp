#include "rsub/norms.hpp"

#include <algorithm>
#include <vector>

#include "rsub/errors.hpp"
#include "rsub/kernels.hpp"

namespace rsub {

NormKind NormKind::entrywise(double q) {
  require(q >= 1.0, "entrywise norm needs q >= 1");
  return {NormTag::EntrywiseQ, q};
}

NormKind NormKind::op_q_to_qstar(double q) {
  require(q > 2.0, "q->q* norm needs q > 2");
  return {NormTag::OpQtoQstar, q};
}

NormKind NormKind::op_q_to_2(double q) {
  require(q > 2.0, "q->2 norm needs q > 2");
  return {NormTag::OpQto2, q};
}

double vector_lq_norm(const VectorXd& v, double q) {
  require(q >= 1.0 || std::isinf(q), "lq norm needs q >= 1");
  if (std::isinf(q)) return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
  if (q == 1.0) return v.cwiseAbs().sum();
  if (q == 2.0) return v.norm();
  double acc = 0.0;
  for (int i = 0; i < v.size(); ++i) acc += std::pow(std::abs(v(i)), q);
  return std::pow(acc, 1.0 / q);
}

double entrywise_norm(const MatrixXd& m, double q) {
  require(q >= 1.0 || std::isinf(q), "entrywise norm needs q >= 1");
  if (std::isinf(q)) return m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
  if (q == 1.0) return m.cwiseAbs().sum();
  if (q == 2.0) return m.norm();
  double acc = 0.0;
  for (int j = 0; j < m.cols(); ++j)
    for (int i = 0; i < m.rows(); ++i) acc += std::pow(std::abs(m(i, j)), q);
  return std::pow(acc, 1.0 / q);
}

void sym_eig_descending(const MatrixXd& m, VectorXd& evals, MatrixXd& evecs) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  if (es.info() != Eigen::Success)
    throw Error("symmetric eigendecomposition failed");
  const int n = static_cast<int>(m.rows());
  evals.resize(n);
  evecs.resize(n, n);
  for (int i = 0; i < n; ++i) {  // Eigen sorts ascending
    evals(i) = es.eigenvalues()(n - 1 - i);
    evecs.col(i) = es.eigenvectors().col(n - 1 - i);
  }
}

MatrixXd psd_sqrt(const MatrixXd& m) {
  VectorXd evals;
  MatrixXd evecs;
  sym_eig_descending(m, evals, evecs);
  const VectorXd root = evals.cwiseMax(0.0).cwiseSqrt();
  return evecs * root.asDiagonal() * evecs.transpose();
}

namespace {

// PSD matrices have zero rows/columns exactly where the diagonal vanishes;
// the sign scan only needs the nonzero principal block.
std::vector<int> nonzero_diag_support(const MatrixXd& m) {
  std::vector<int> idx;
  for (int i = 0; i < m.rows(); ++i)
    if (m(i, i) != 0.0) idx.push_back(i);
  return idx;
}

}  // namespace

NormCertificate op_inf_to_1_exact(const MatrixXd& m) {
  require(m.rows() == m.cols(), "op_inf_to_1_exact: square matrix expected");
  const int n = static_cast<int>(m.rows());
  const std::vector<int> support = nonzero_diag_support(m);
  const int ns = static_cast<int>(support.size());
  if (ns == 0) {
    NormCertificate cert;
    cert.value = 0.0;
    cert.witness_x = VectorXd::Ones(n);
    cert.witness_y = cert.witness_x;
    cert.exact = true;
    return cert;
  }
  if (ns > 22) throw DimensionTooLarge(ns);

  SignScanResult best;
  if (ns == n) {
    best = sign_scan(m);
  } else {
    MatrixXd sub(ns, ns);
    for (int a = 0; a < ns; ++a)
      for (int b = 0; b < ns; ++b) sub(a, b) = m(support[a], support[b]);
    best = sign_scan(sub);
  }

  VectorXd x = VectorXd::Ones(n);
  const VectorXd xs = sign_vector_from_code(ns, best.code);
  for (int a = 0; a < ns; ++a) x(support[a]) = xs(a);

  NormCertificate cert;
  cert.witness_x = x;
  cert.witness_y = x;
  cert.value = x.dot(m * x);
  cert.exact = true;
  return cert;
}

namespace {

// Greedy 1-bit local search on the quadratic form; flips the best-improving
// coordinate until none improves. Returns x^T M x maintained incrementally.
double local_search_signs(const MatrixXd& m, VectorXd& x) {
  const int n = static_cast<int>(m.rows());
  VectorXd y = m * x;
  double value = x.dot(y);
  while (true) {
    int arg = -1;
    double best_gain = 0.0;
    for (int j = 0; j < n; ++j) {
      const double gain = -4.0 * x(j) * y(j) + 4.0 * m(j, j);
      if (gain > best_gain) {
        best_gain = gain;
        arg = j;
      }
    }
    if (arg < 0) break;
    value += best_gain;
    y -= 2.0 * x(arg) * m.col(arg);
    x(arg) = -x(arg);
  }
  return value;
}

}  // namespace

NormCertificate op_inf_to_1_heuristic(const MatrixXd& m, int num_rounds,
                                      Rng& rng) {
  require(m.rows() == m.cols(), "op_inf_to_1_heuristic: square expected");
  require(num_rounds >= 1, "op_inf_to_1_heuristic: num_rounds >= 1");
  const int n = static_cast<int>(m.rows());
  const MatrixXd half = psd_sqrt(m);

  NormCertificate best;
  best.value = -kInf;
  for (int round = 0; round < num_rounds; ++round) {
    VectorXd g(n);
    for (int i = 0; i < n; ++i) g(i) = rng.next_gaussian();
    VectorXd x = (half * g).unaryExpr([](double v) {
      return v >= 0.0 ? 1.0 : -1.0;
    });
    local_search_signs(m, x);
    const double value = x.dot(m * x);  // certificate value, direct
    if (value > best.value) {
      best.value = value;
      best.witness_x = x;
    }
  }
  best.witness_y = best.witness_x;
  best.exact = false;
  return best;
}

NormCertificate op_q_to_qstar_heuristic(const MatrixXd& w, double q,
                                        int num_rounds, Rng& rng) {
  require(q > 2.0 && std::isfinite(q), "op_q_to_qstar_heuristic: q in (2,inf)");
  require(w.rows() == w.cols(), "op_q_to_qstar_heuristic: square expected");
  const int n = static_cast<int>(w.rows());
  const double qstar = q / (q - 1.0);
  const MatrixXd half = psd_sqrt(w);

  // argmax_{||x||_q <= 1} <y, x>:  x_i = sign(y_i) (|y_i| / ||y||_{q*})^{q*-1}
  const auto dual_map = [&](const VectorXd& y) {
    const double yn = vector_lq_norm(y, qstar);
    VectorXd x(n);
    if (yn == 0.0) {
      x.setZero();
      x(0) = 1.0;
      return x;
    }
    for (int i = 0; i < n; ++i) {
      const double t = std::pow(std::abs(y(i)) / yn, qstar - 1.0);
      x(i) = y(i) >= 0.0 ? t : -t;
    }
    return x;
  };

  NormCertificate best;
  best.value = -kInf;
  for (int round = 0; round < num_rounds; ++round) {
    VectorXd g(n);
    for (int i = 0; i < n; ++i) g(i) = rng.next_gaussian();
    VectorXd x = half * g;
    const double xn = vector_lq_norm(x, q);
    if (xn == 0.0)
      x = dual_map(VectorXd::Ones(n));
    else
      x /= xn;
    double value = x.dot(w * x);
    for (int it = 0; it < 200; ++it) {  // monotone ascent for PSD w
      const VectorXd xn1 = dual_map(w * x);
      const double v1 = xn1.dot(w * xn1);
      if (v1 <= value * (1.0 + 1e-12)) {
        if (v1 > value) {
          x = xn1;
          value = v1;
        }
        break;
      }
      x = xn1;
      value = v1;
    }
    if (value > best.value) {
      best.value = value;
      best.witness_x = x;
    }
  }
  best.witness_y = best.witness_x;
  best.exact = false;
  return best;
}

OpNormResult op_q_to_2(const MatrixXd& m, NormIndex q,
                       const OpNormOptions& opts) {
  const MatrixXd w = m.transpose() * m;  // ||M||_{q->2}^2 = ||M^T M||_{q->q*}
  OpNormResult result;
  if (q.is_inf()) {
    try {
      const NormCertificate cert = op_inf_to_1_exact(w);
      result.value = std::sqrt(std::max(0.0, cert.value));
      result.exact = true;
      result.witness = cert.witness_x;
      return result;
    } catch (const DimensionTooLarge&) {
      // fall through to the heuristic, flagged inexact
    }
    Rng rng(opts.seed);
    const NormCertificate cert =
        op_inf_to_1_heuristic(w, opts.heuristic_rounds, rng);
    result.value = std::sqrt(std::max(0.0, cert.value));
    result.exact = false;
    result.witness = cert.witness_x;
    return result;
  }
  Rng rng(opts.seed);
  const NormCertificate cert =
      op_q_to_qstar_heuristic(w, q.value(), opts.heuristic_rounds, rng);
  result.value = std::sqrt(std::max(0.0, cert.value));
  result.exact = false;
  result.witness = cert.witness_x;
  return result;
}

bool check_psd_monotonicity(const MatrixXd& a, const MatrixXd& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          "check_psd_monotonicity: same dimension expected");
  const double sum = op_inf_to_1_exact(a + b).value;
  const double lone = op_inf_to_1_exact(a).value;
  return sum >= lone - 1e-12 * std::max(1.0, std::abs(sum));
}

TraceBounds trace_inner_product_bounds(const MatrixXd& a, const MatrixXd& b) {
  require(a.rows() == a.cols() && b.rows() == b.cols() && a.rows() == b.rows(),
          "trace_inner_product_bounds: matching square matrices expected");
  VectorXd ea, eb;
  MatrixXd va, vb;
  sym_eig_descending(a, ea, va);
  sym_eig_descending(b, eb, vb);
  const double scale_a = std::max(1.0, std::abs(ea(0)));
  const double scale_b = std::max(1.0, std::abs(eb(0)));
  if (ea(ea.size() - 1) < -1e-8 * scale_a)
    throw NotPsd("trace_inner_product_bounds: A is not PSD");
  if (eb(eb.size() - 1) < -1e-8 * scale_b)
    throw NotPsd("trace_inner_product_bounds: B is not PSD");
  TraceBounds out;
  out.lo = ea(ea.size() - 1) * b.trace();
  out.hi = ea(0) * b.trace();
  out.inner = (a.array() * b.array()).sum();
  return out;
}

}  // namespace rsub
