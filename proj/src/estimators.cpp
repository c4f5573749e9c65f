#include "rsub/estimators.hpp"

#include <algorithm>
#include <numeric>

#include "rsub/errors.hpp"
#include "rsub/kernels.hpp"
#include "rsub/norms.hpp"

namespace rsub {

namespace {

void fix_column_signs(MatrixXd& basis) {
  for (int j = 0; j < basis.cols(); ++j) {
    const double scale = basis.col(j).cwiseAbs().maxCoeff();
    for (int i = 0; i < basis.rows(); ++i) {
      if (std::abs(basis(i, j)) > 1e-12 * std::max(1.0, scale)) {
        if (basis(i, j) < 0.0) basis.col(j) = -basis.col(j);
        break;
      }
    }
  }
}

}  // namespace

ProjectionMatrix make_projection(const MatrixXd& basis, NormIndex q) {
  ProjectionMatrix proj;
  proj.basis = basis;
  fix_column_signs(proj.basis);
  proj.rank = static_cast<int>(basis.cols());
  proj.p = proj.basis * proj.basis.transpose();
  const OpNormResult res = op_q_to_2(proj.p, q);
  proj.measured_kappa = res.value;
  proj.kappa_exact = res.exact;
  return proj;
}

RobustProjectionResult robust_projection_gram(const MatrixXd& s,
                                              const FeasibleSetParams& params,
                                              const SolverConfig& config) {
  RobustProjectionResult out;
  out.solver = solve_gram(s, params, config);
  if (out.solver.status == SolverStatus::Infeasible)
    throw Error("robust_projection: solver reported infeasible parameters");

  VectorXd evals;
  MatrixXd evecs;
  sym_eig_descending(out.solver.x, evals, evecs);
  out.projector = make_projection(evecs.leftCols(params.r), params.q);
  if (params.r < params.n)
    out.projector.eigengap_tie =
        evals(params.r - 1) - evals(params.r) < 1e-9;
  return out;
}

RobustProjectionResult robust_projection(const Dataset& data,
                                         const FeasibleSetParams& params,
                                         const SolverConfig& config) {
  require(data.n() == params.n, "robust_projection: dimension mismatch");
  return robust_projection_gram(second_moment(data.samples), params, config);
}

MatrixXd symmetrize_pairs(const MatrixXd& a) {
  if (a.cols() % 2 != 0)
    throw SampleCountNotDivisible("symmetrize_pairs: odd column count");
  const int m = static_cast<int>(a.cols()) / 2;
  MatrixXd out(a.rows(), m);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < m; ++j)
    out.col(j) = inv_sqrt2 * (a.col(j) - a.col(m + j));
  return out;
}

CovEstimate adv_robust_pca(const Dataset& samples,
                           const FeasibleSetParams& params,
                           const SolverConfig& config) {
  if (samples.m() % 4 != 0)
    throw SampleCountNotDivisible("adv_robust_pca: need 4m columns");
  const int m = samples.m() / 4;

  const MatrixXd a_proj = symmetrize_pairs(samples.samples.leftCols(2 * m));
  const MatrixXd a_cov = symmetrize_pairs(samples.samples.rightCols(2 * m));

  Dataset proj_data;
  proj_data.samples = a_proj;
  proj_data.provenance = samples.provenance;
  proj_data.seed = samples.seed;

  CovEstimate est;
  RobustProjectionResult rp = robust_projection(proj_data, params, config);
  est.projector = std::move(rp.projector);
  est.solver = std::move(rp.solver);
  est.m_proj = m;
  est.m_cov = m;
  const MatrixXd s_cov = second_moment(a_cov);
  est.sigma_top_hat = est.projector.p * s_cov * est.projector.p;
  return est;
}

namespace {

long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  long long acc = 1;
  for (int i = 1; i <= k; ++i) {
    acc = acc * (n - k + i) / i;
    if (acc < 0 || acc > (1LL << 62)) return 1LL << 62;
  }
  return acc;
}

}  // namespace

StatEstimatorResult statistical_estimator_r1(const Dataset& data, double kappa,
                                             const StatEstimatorConfig& cfg) {
  const int n = data.n();
  require(kappa >= 1.0, "statistical_estimator_r1: kappa >= 1");
  const int k = std::min(n, static_cast<int>(kappa * kappa * (1.0 + 1e-9)));
  require(k >= 1, "statistical_estimator_r1: kappa^2 < 1");
  const long long count = binomial(n, k);
  if (count > cfg.max_support)
    throw BudgetExceeded("statistical_estimator_r1: C(n,k) exceeds budget");

  const MatrixXd s = second_moment(data.samples);

  // All k-subsets in lexicographic order.
  std::vector<std::vector<int>> supports;
  supports.reserve(static_cast<std::size_t>(count));
  std::vector<int> cur(k);
  std::iota(cur.begin(), cur.end(), 0);
  while (true) {
    supports.push_back(cur);
    int i = k - 1;
    while (i >= 0 && cur[i] == n - k + i) --i;
    if (i < 0) break;
    ++cur[i];
    for (int j = i + 1; j < k; ++j) cur[j] = cur[j - 1] + 1;
  }

  struct Candidate {
    double objective = -kInf;
    VectorXd v;
    long index = -1;
  };
  const long total = static_cast<long>(supports.size());
  std::vector<Candidate> best_per(total);

#pragma omp parallel for schedule(dynamic, 16) num_threads(num_threads())
  for (long idx = 0; idx < total; ++idx) {
    const std::vector<int>& t = supports[idx];
    MatrixXd st(k, k);
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) st(a, b) = s(t[a], t[b]);
    VectorXd evals;
    MatrixXd evecs;
    sym_eig_descending(st, evals, evecs);
    VectorXd w = evecs.col(0);
    if (w.cwiseAbs().sum() > kappa * (1.0 + 1e-9)) continue;  // analytic filter
    Candidate c;
    c.objective = evals(0);
    c.v = VectorXd::Zero(n);
    for (int a = 0; a < k; ++a) c.v(t[a]) = w(a);
    c.index = idx;
    best_per[idx] = std::move(c);
  }

  // Deterministic reduction: max objective, ties to the lexicographically
  // first support (= smallest index).
  long arg = -1;
  for (long idx = 0; idx < total; ++idx) {
    if (best_per[idx].index < 0) continue;
    if (arg < 0 || best_per[idx].objective > best_per[arg].objective)
      arg = idx;
  }
  if (arg < 0)
    throw Error("statistical_estimator_r1: no support passed the kappa filter");

  StatEstimatorResult out;
  out.projector = make_projection(best_per[arg].v, NormIndex::infinity());
  out.support = supports[static_cast<std::size_t>(arg)];
  out.supports_scanned = total;
  return out;
}

namespace {

// Projection of z onto {x : ||x||_q <= radius} for finite q > 2, by bisection
// on the multiplier with a scalar root per entry.
VectorXd project_lq_ball(const VectorXd& z, double q, double radius) {
  if (vector_lq_norm(z, q) <= radius) return z;
  const auto shrink = [&](double a, double nu) {
    double lo = 0.0, hi = a;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid + nu * q * std::pow(mid, q - 1.0) < a)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  };
  const auto apply = [&](double nu) {
    VectorXd x(z.size());
    for (int i = 0; i < z.size(); ++i) {
      const double v = shrink(std::abs(z(i)), nu);
      x(i) = z(i) >= 0.0 ? v : -v;
    }
    return x;
  };
  double lo = 0.0, hi = 1.0;
  while (vector_lq_norm(apply(hi), q) > radius) hi *= 2.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (vector_lq_norm(apply(mid), q) > radius)
      lo = mid;
    else
      hi = mid;
  }
  return apply(hi);
}

}  // namespace

MeanEstimate robust_mean(const Dataset& data, double q, double delta,
                         double sigma_bound) {
  require(q >= 2.0, "robust_mean: q >= 2");
  require(delta >= 0.0, "robust_mean: delta >= 0");
  require(sigma_bound >= 0.0, "robust_mean: sigma bound >= 0");
  const int n = data.n();
  const long m = data.m();
  MeanEstimate est;
  est.mu_empirical = data.samples.rowwise().mean();
  const double nq = std::isinf(q) ? 1.0 : std::pow(n, 1.0 / q);
  est.eta = 2.0 * sigma_bound * nq *
            std::sqrt(std::log(static_cast<double>(n)) / m);
  const double t = delta + est.eta;
  est.shrinkage = t;

  if (std::isinf(q)) {
    est.mu_hat = est.mu_empirical.unaryExpr([t](double v) {
      const double mag = std::abs(v) - t;
      return mag > 0.0 ? (v > 0.0 ? mag : -mag) : 0.0;
    });
    return est;
  }
  if (q == 2.0) {
    const double norm = est.mu_empirical.norm();
    const double scale = norm > t ? (norm - t) / norm : 0.0;
    est.mu_hat = scale * est.mu_empirical;
    return est;
  }

  // General q in (2, inf): projected subgradient on ||u||_{q*}^{q*} over the
  // lq ball of radius t around the empirical mean.
  const double qv = q;
  const double qstar = q / (q - 1.0);
  VectorXd u = est.mu_empirical;
  VectorXd best = u;
  double best_val = vector_lq_norm(u, qstar);
  const double step0 = std::max(t, 1e-12);
  for (int it = 1; it <= 10000; ++it) {
    VectorXd g(n);
    for (int i = 0; i < n; ++i) {
      const double a = std::abs(u(i));
      const double d = qstar * std::pow(a, qstar - 1.0);
      g(i) = u(i) > 0.0 ? d : (u(i) < 0.0 ? -d : 0.0);
    }
    const double gn = g.norm();
    if (gn == 0.0) break;
    u -= (step0 / (gn * std::sqrt(static_cast<double>(it)))) * g;
    u = est.mu_empirical +
        project_lq_ball(u - est.mu_empirical, qv, t);
    const double val = vector_lq_norm(u, qstar);
    if (val < best_val) {
      best_val = val;
      best = u;
    }
  }
  est.mu_hat = best;
  return est;
}

ProjectionMatrix vanilla_pca_gram(const MatrixXd& s, int r, NormIndex q) {
  VectorXd evals;
  MatrixXd evecs;
  sym_eig_descending(s, evals, evecs);
  return make_projection(evecs.leftCols(r), q);
}

ProjectionMatrix vanilla_pca(const Dataset& data, int r, NormIndex q) {
  return vanilla_pca_gram(second_moment(data.samples), r, q);
}

}  // namespace rsub
