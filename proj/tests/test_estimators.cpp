#include <cmath>

#include "doctest.h"
#include "rsub/adversary.hpp"
#include "rsub/errors.hpp"
#include "rsub/estimators.hpp"
#include "rsub/kernels.hpp"
#include "rsub/metrics.hpp"
#include "rsub/norms.hpp"
#include "test_util.hpp"

using namespace rsub;

TEST_CASE("rounding: an exact rank-r projector rounds to itself") {
  rsub::Rng rng(40);
  const MatrixXd basis = test::random_orthonormal(8, 2, rng);
  const MatrixXd x = basis * basis.transpose();
  const ProjectionMatrix proj = vanilla_pca_gram(x, 2, NormIndex::infinity());
  CHECK((proj.p - x).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("rounding: eigengap dominance picks the heavy component") {
  rsub::Rng rng(41);
  const MatrixXd frame = test::random_orthonormal(8, 2, rng);
  const MatrixXd x = 0.9 * frame.col(0) * frame.col(0).transpose() +
                     0.1 * frame.col(1) * frame.col(1).transpose();
  const ProjectionMatrix proj = vanilla_pca_gram(x, 1, NormIndex::infinity());
  CHECK((proj.p - frame.col(0) * frame.col(0).transpose())
            .cwiseAbs()
            .maxCoeff() < 1e-10);
}

TEST_CASE("projection sign convention: first nonzero coordinate positive") {
  VectorXd v(4);
  v << 0.0, -0.8, 0.6, 0.0;
  const ProjectionMatrix proj = make_projection(v, NormIndex::infinity());
  CHECK(proj.basis(1, 0) > 0.0);
  CHECK((proj.p - v * v.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("robust_projection end to end: Theorem-4-shaped chain at delta=0") {
  const CovarianceModel model = spiked_model(16, 1, 1.0, 2.0);
  const Dataset data = sample(model, 5000, 808);
  FeasibleSetParams params;
  params.n = 16;
  params.r = 1;
  params.kappa = model.kappa;
  const RobustProjectionResult res = robust_projection(data, params);
  const MatrixXd pi_star = model.projector();

  // sin-theta identities for the produced pair
  const double sin_sq = sin_theta_sq(res.projector.p, pi_star, 1, 1);
  CHECK(sin_sq == doctest::Approx(0.5 * (res.projector.p - pi_star).squaredNorm())
                      .epsilon(1e-8));

  // correlation chain <Pi-hat, Pi*> >= r - 4 Delta / theta with the measured
  // diagnostics at X-hat and Pi* (solver optimality supplies the middle step)
  const MatrixXd s = second_moment(data.samples);
  const double diag_x = compute_delta_diagnostic_gram(res.solver.x, s, model);
  const double diag_pi = compute_delta_diagnostic_gram(pi_star, s, model);
  const double delta_bound = std::max(diag_x, diag_pi);
  const double inner = (res.projector.p.array() * pi_star.array()).sum();
  CHECK(inner >= 1.0 - 4.0 * delta_bound / model.eigengap() - 1e-4);

  // rounding robustness: kappa(Pi-hat) <= ||X||_{inf->2} / lambda_r(X)
  VectorXd evals;
  MatrixXd evecs;
  sym_eig_descending(res.solver.x, evals, evecs);
  const double x_q2 = op_q_to_2(res.solver.x, NormIndex::infinity()).value;
  CHECK(evals(0) >= 1.0 - 2.0 * delta_bound / model.eigengap() - 1e-6);
  CHECK(res.projector.measured_kappa <= x_q2 / evals(0) + 1e-8);
}

TEST_CASE("symmetrization: kills the mean, sqrt(2)-inflates the budget") {
  const CovarianceModel model = spiked_model(16, 1, 1.0, 2.0);
  const VectorXd mu = VectorXd::Constant(16, 3.0);
  const Dataset with_mean = sample(model, 4000, mu, 99);
  const MatrixXd sym = symmetrize_pairs(with_mean.samples);
  CHECK(sym.cols() == 2000);
  const double bound =
      5.0 * std::sqrt(2.0 * model.lambda1() * std::log(16.0) / 2000.0);
  CHECK(sym.rowwise().mean().cwiseAbs().maxCoeff() <= bound);

  // perturbation of the symmetrized columns at most sqrt(2) delta
  const Dataset shifted = attack_constant_shift(with_mean, 0.25, VectorXd::Ones(16));
  const MatrixXd sym_shift = symmetrize_pairs(shifted.samples);
  CHECK(max_column_lq_dist(sym, sym_shift, kInf) <= std::sqrt(2.0) * 0.25 + 1e-12);

  CHECK_THROWS_AS(symmetrize_pairs(MatrixXd::Zero(4, 7)),
                  SampleCountNotDivisible);
}

TEST_CASE("adv_robust_pca: clean covariance recovery at desk scale") {
  const CovarianceModel model = spiked_model(16, 1, 1.0, 2.0);
  const Dataset data = sample(model, 8000, 31337);  // 4m = 8000
  FeasibleSetParams params;
  params.n = 16;
  params.r = 1;
  params.kappa = model.kappa;
  const CovEstimate est = adv_robust_pca(data, params);
  CHECK(est.m_proj == 2000);
  CHECK(est.m_cov == 2000);
  const double err = (est.sigma_top_hat - model.sigma_top()).squaredNorm();
  const double sin_sq =
      sin_theta_sq(est.projector.p, model.projector(), 1, 1);
  const double lam1 = model.lambda1();
  CHECK(err <= 20.0 * (lam1 * lam1 * 2.0 * sin_sq + lam1 * lam1 / 2000.0) + 0.05);

  Dataset odd = data;
  odd.samples = data.samples.leftCols(8001 - 1 - 2);
  CHECK_THROWS_AS(adv_robust_pca(odd, params), SampleCountNotDivisible);
}

TEST_CASE("statistical estimator r=1: recovers the planted support") {
  const CovarianceModel model = spiked_model(12, 1, 1.0, 2.0);
  const Dataset data = sample(model, 5000, 777);
  const StatEstimatorResult res = statistical_estimator_r1(data, model.kappa);
  REQUIRE(res.support.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(res.support[i] == i);
  CHECK(sin_theta_sq(res.projector.p, model.projector(), 1, 1) < 0.05);
  CHECK(res.supports_scanned == 495);  // C(12,4)
  CHECK(res.combinatorial_restriction);
}

TEST_CASE("statistical estimator: kappa = sqrt(n) reduces to vanilla PCA") {
  const CovarianceModel model = spiked_model(8, 1, 1.0, 2.0);
  const Dataset data = sample(model, 2000, 3);
  const StatEstimatorResult res =
      statistical_estimator_r1(data, std::sqrt(8.0));
  const ProjectionMatrix pca = vanilla_pca(data, 1, NormIndex::infinity());
  CHECK(res.supports_scanned == 1);
  CHECK((res.projector.p - pca.p).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("statistical estimator: budget guard") {
  Dataset data;
  data.samples = MatrixXd::Zero(30, 10);
  StatEstimatorConfig cfg;
  cfg.max_support = 1000;
  CHECK_THROWS_AS(statistical_estimator_r1(data, std::sqrt(15.0), cfg),
                  BudgetExceeded);
}

TEST_CASE("robust mean: pinned closed forms and exact KKT certificate") {
  Dataset data;
  data.samples.resize(3, 1);
  data.samples.col(0) << 3.0, -1.0, 0.5;  // empirical mean = mu'
  const MeanEstimate est = robust_mean(data, kInf, 1.0, 0.0);
  CHECK(est.shrinkage == 1.0);
  VectorXd want(3);
  want << 2.0, 0.0, 0.0;
  CHECK((est.mu_hat - want).cwiseAbs().maxCoeff() == 0.0);

  // KKT: active coordinates exactly on the boundary, inactive within it
  for (int i = 0; i < 3; ++i) {
    if (est.mu_hat(i) != 0.0)
      CHECK(std::abs(est.mu_hat(i) - est.mu_empirical(i)) == est.shrinkage);
    else
      CHECK(std::abs(est.mu_empirical(i)) <= est.shrinkage);
  }

  // inside-the-ball input maps to zero
  Dataset tiny;
  tiny.samples = MatrixXd::Constant(4, 1, 0.1);
  CHECK(robust_mean(tiny, kInf, 1.0, 0.0).mu_hat.cwiseAbs().maxCoeff() == 0.0);
  CHECK(robust_mean(tiny, 2.0, 1.0, 0.0).mu_hat.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("robust mean: q = 2 radial shrink") {
  Dataset data;
  data.samples.resize(2, 1);
  data.samples.col(0) << 3.0, 4.0;  // norm 5
  const MeanEstimate est = robust_mean(data, 2.0, 1.0, 0.0);
  CHECK(est.mu_hat.norm() == doctest::Approx(4.0));
  CHECK((est.mu_hat / est.mu_hat.norm() - data.samples.col(0) / 5.0)
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("robust mean: general q fallback is feasible and competitive") {
  Dataset data;
  data.samples.resize(5, 1);
  data.samples.col(0) << 2.0, -1.5, 0.4, 0.0, 1.0;
  const double q = 4.0, t = 0.8;
  const MeanEstimate est = robust_mean(data, q, t, 0.0);
  CHECK(vector_lq_norm(est.mu_hat - est.mu_empirical, q) <= t + 1e-6);
  const double qstar = q / (q - 1.0);
  // no worse than the center or the soft-threshold proxy
  CHECK(vector_lq_norm(est.mu_hat, qstar) <=
        vector_lq_norm(est.mu_empirical, qstar) + 1e-9);
  VectorXd proxy = est.mu_empirical.unaryExpr([t](double v) {
    const double mag = std::abs(v) - t;
    return mag > 0.0 ? (v > 0.0 ? mag : -mag) : 0.0;
  });
  if (vector_lq_norm(proxy - est.mu_empirical, q) <= t)
    CHECK(vector_lq_norm(est.mu_hat, qstar) <=
          vector_lq_norm(proxy, qstar) + 1e-6);
}

TEST_CASE("mean estimation error bound on gaussian data (few seeds)") {
  const int n = 32;
  VectorXd mu = VectorXd::Zero(n);
  mu.head(4).array() = 1.0;  // analytic sparsity 2
  const CovarianceModel noise = general_model(
      VectorXd::Constant(n, 0.01), 1,
      BasisSpec::custom(MatrixXd::Identity(n, 1)));
  for (int seed = 0; seed < 5; ++seed) {
    const Dataset clean = sample(noise, 2000, mu, 100 + seed);
    const Dataset shifted =
        attack_constant_shift(clean, 0.05, VectorXd::Ones(n));
    const MeanEstimate est = robust_mean(shifted, kInf, 0.05, 0.1);
    const double err = (est.mu_hat - mu).squaredNorm();
    const double t = est.shrinkage;
    const double bound =
        4.0 * std::min(mu.cwiseAbs().sum() * t, n * t * t);
    CHECK(err <= bound);
  }
}

TEST_CASE("fact: projected covariance triangle bound") {
  rsub::Rng rng(50);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 8, r = 2;
    const MatrixXd v = test::random_orthonormal(n, r, rng);
    VectorXd lam(r);
    lam << 2.0 + rng.next_uniform(), 1.0 + rng.next_uniform();
    const MatrixXd sigma = v * lam.asDiagonal() * v.transpose();
    const MatrixXd pi_star = v * v.transpose();

    // a nearby rank-r projector
    const MatrixXd noisy = v + 0.1 * test::random_gaussian(n, r, rng);
    Eigen::HouseholderQR<MatrixXd> qr(noisy);
    const MatrixXd vb = MatrixXd(qr.householderQ()).leftCols(r);
    const MatrixXd pi = vb * vb.transpose();
    const double eps = (pi - pi_star).squaredNorm();

    const MatrixXd sigma_tilde = test::random_symmetric(n, rng);
    const double lhs = (sigma - pi * sigma_tilde * pi).squaredNorm();
    const double rhs = 8.0 * sqr(lam(0)) * eps +
                       2.0 * (pi * sigma * pi - pi * sigma_tilde * pi).squaredNorm();
    CHECK(lhs <= rhs + 1e-8);
  }
}
