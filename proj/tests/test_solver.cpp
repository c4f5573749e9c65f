#include <cmath>

#include "doctest.h"
#include "rsub/covmodel.hpp"
#include "rsub/errors.hpp"
#include "rsub/kernels.hpp"
#include "rsub/norms.hpp"
#include "rsub/solver.hpp"
#include "test_util.hpp"

using namespace rsub;

namespace {

// Frank-Wolfe on min ||X - M||_F^2 over the entrywise l1 ball: an independent
// oracle for the projection (linear minimization over the ball is a vertex).
MatrixXd l1_projection_frank_wolfe(const MatrixXd& m, double radius,
                                   int iters) {
  MatrixXd x = MatrixXd::Zero(m.rows(), m.cols());
  for (int t = 0; t < iters; ++t) {
    const MatrixXd grad = x - m;
    int bi = 0, bj = 0;
    double best = -1.0;
    for (int j = 0; j < m.cols(); ++j)
      for (int i = 0; i < m.rows(); ++i)
        if (std::abs(grad(i, j)) > best) {
          best = std::abs(grad(i, j));
          bi = i;
          bj = j;
        }
    MatrixXd vertex = MatrixXd::Zero(m.rows(), m.cols());
    vertex(bi, bj) = grad(bi, bj) > 0.0 ? -radius : radius;
    x += (2.0 / (t + 2.0)) * (vertex - x);
  }
  return x;
}

}  // namespace

TEST_CASE("fantope projection: pinned water-filling examples") {
  MatrixXd d = MatrixXd::Zero(3, 3);
  d.diagonal() << 2.0, 0.5, -1.0;
  const MatrixXd p1 = project_fantope(d, 1);
  MatrixXd want = MatrixXd::Zero(3, 3);
  want(0, 0) = 1.0;
  CHECK((p1 - want).cwiseAbs().maxCoeff() < 1e-9);

  MatrixXd flat = MatrixXd::Zero(3, 3);
  flat.diagonal() << 0.6, 0.6, 0.6;
  const MatrixXd p2 = project_fantope(flat, 1);
  CHECK((p2 - MatrixXd::Identity(3, 3) / 3.0).cwiseAbs().maxCoeff() < 1e-9);

  CHECK_THROWS_AS(project_fantope(d, 4), RankInfeasible);
}

TEST_CASE("fantope projection: idempotent on members, optimal vs samples") {
  rsub::Rng rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + static_cast<int>(rng.next_below(6));
    const int r = 1 + static_cast<int>(rng.next_below(3));
    if (r > n) continue;

    const MatrixXd member = test::random_fantope_point(n, r, rng);
    CHECK((project_fantope(member, r) - member).cwiseAbs().maxCoeff() < 1e-8);

    const MatrixXd m = 2.0 * test::random_symmetric(n, rng);
    const MatrixXd p = project_fantope(m, r);
    CHECK(std::abs(p.trace() - r) < 1e-9);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(p);
    CHECK(es.eigenvalues().minCoeff() > -1e-9);
    CHECK(es.eigenvalues().maxCoeff() < 1.0 + 1e-9);

    const double dist = (p - m).squaredNorm();
    for (int probe = 0; probe < 200; ++probe) {
      const MatrixXd z = test::random_fantope_point(n, r, rng);
      CHECK(dist <= (z - m).squaredNorm() + 1e-9);
    }
  }
}

TEST_CASE("entrywise l1 projection") {
  MatrixXd inside(2, 2);
  inside << 0.2, 0.1, 0.1, -0.3;
  CHECK(project_entrywise_l1(inside, 1.0) == inside);

  MatrixXd m(2, 2);
  m << 2, 0, 0, 0;
  MatrixXd want(2, 2);
  want << 1, 0, 0, 0;
  CHECK((project_entrywise_l1(m, 1.0) - want).cwiseAbs().maxCoeff() < 1e-12);

  rsub::Rng rng(8);
  const MatrixXd big = 2.0 * test::random_symmetric(5, rng);
  const MatrixXd proj = project_entrywise_l1(big, 3.0);
  CHECK(entrywise_norm(proj, 1.0) == doctest::Approx(3.0).epsilon(1e-9));
  CHECK((proj - proj.transpose()).cwiseAbs().maxCoeff() == 0.0);

  // nearest point: variational inequality against random feasible points and
  // agreement with the Frank-Wolfe oracle
  for (int probe = 0; probe < 1000; ++probe) {
    MatrixXd z = test::random_symmetric(5, rng);
    const double nrm = entrywise_norm(z, 1.0);
    if (nrm > 3.0) z *= 3.0 / nrm * rng.next_uniform();
    CHECK((big - proj).cwiseProduct(z - proj).sum() <= 1e-9);
  }
  const MatrixXd fw = l1_projection_frank_wolfe(big, 3.0, 20000);
  CHECK((fw - proj).norm() < 5e-3);
}

TEST_CASE("entrywise lq projection for qstar in (1,2)") {
  rsub::Rng rng(12);
  const double qstar = 1.5;
  const MatrixXd m = 2.0 * test::random_symmetric(4, rng);

  const double radius = 2.0;
  const MatrixXd proj = project_entrywise_lq(m, radius, qstar);
  CHECK(entrywise_norm(proj, qstar) == doctest::Approx(radius).epsilon(1e-7));
  // variational optimality against feasible probes
  for (int probe = 0; probe < 300; ++probe) {
    MatrixXd z = test::random_symmetric(4, rng);
    const double nrm = entrywise_norm(z, qstar);
    if (nrm > radius) z *= radius / nrm * rng.next_uniform();
    CHECK((m - proj).cwiseProduct(z - proj).sum() <= 1e-6);
  }
  // inside stays put
  const MatrixXd small = 0.01 * m;
  CHECK(project_entrywise_lq(small, radius, qstar) == small);
}

TEST_CASE("separation oracle") {
  FeasibleSetParams params;
  params.n = 4;
  params.r = 1;
  params.kappa = 1.0;
  params.q = NormIndex::infinity();

  // feasible point: no cut
  const CovarianceModel model = spiked_model(4, 1, 1.0, 1.0);
  rsub::Rng rng1(4);
  CHECK_FALSE(separation_oracle_qnorm(model.projector(), params, rng1)
                  .has_value());

  // all-ones matrix wildly violates kappa = 1
  rsub::Rng rng2(4);
  const MatrixXd ones = MatrixXd::Ones(4, 4);
  const auto cut = separation_oracle_qnorm(ones, params, rng2);
  REQUIRE(cut.has_value());
  CHECK(cut->y.dot(ones * cut->z) == doctest::Approx(16.0));
  CHECK(cut->rhs == doctest::Approx(1.0));

  // determinism for a fixed (X, seed)
  rsub::Rng rng3(4);
  const auto cut2 = separation_oracle_qnorm(ones, params, rng3);
  REQUIRE(cut2.has_value());
  CHECK(cut2->y == cut->y);
}

TEST_CASE("solve: full-rank degenerate case gives zero objective") {
  const CovarianceModel model = spiked_model(6, 1, 1.0, 2.0);
  const Dataset data = sample(model, 50, 17);
  FeasibleSetParams params;
  params.n = 6;
  params.r = 6;
  params.kappa = std::sqrt(6.0);
  const SolverState state = solve(data, params);
  CHECK(state.status == SolverStatus::Converged);
  CHECK(std::abs(state.objective) < 1e-7);
  CHECK((state.x - MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("solve: infeasible parameters are rejected") {
  FeasibleSetParams params;
  params.n = 8;
  params.r = 4;
  params.kappa = 1.0;  // kappa^2 < r: empty feasible set
  CHECK_THROWS(params.validate());
}

TEST_CASE("solve: clean spiked recovery and solver contracts") {
  const CovarianceModel model = spiked_model(16, 1, 1.0, 2.0);
  const Dataset data = sample(model, 5000, 2024);
  FeasibleSetParams params;
  params.n = 16;
  params.r = 1;
  params.kappa = model.kappa;
  SolverConfig config;
  const SolverState state = solve(data, params, config);

  REQUIRE(state.status != SolverStatus::Infeasible);

  // rounding recovers the planted subspace
  VectorXd evals;
  MatrixXd evecs;
  sym_eig_descending(state.x, evals, evecs);
  const MatrixXd pi_hat = evecs.col(0) * evecs.col(0).transpose();
  CHECK((pi_hat - model.projector()).squaredNorm() <= 0.1);

  // relaxation dominance: the solution is at least as good as Pi*
  const MatrixXd s = second_moment(data.samples);
  const double obj_pi =
      s.trace() - (s.array() * model.projector().array()).sum();
  CHECK(state.objective <= obj_pi + 1e-6);

  // feasibility at exit
  const FeasResiduals& res = state.feas_trace.back();
  CHECK(res.trace <= 1e-6);
  CHECK(res.eig <= 1e-6);
  CHECK(res.ball <= 1e-6);
  CHECK(res.cuts <= 1e-6);

  // measured q->q* ratio is reported (Lemma-2 c), and sane
  CHECK(state.measured_qqstar > 0.0);
  CHECK(state.kappa_sq_ratio <= 1.0 + 1e-6);

  // objective trace monotone up to jitter between cut events
  for (std::size_t i = 1; i < state.objective_trace.size(); ++i) {
    if (state.cut_count_trace[i] != state.cut_count_trace[i - 1]) continue;
    CHECK(state.objective_trace[i] <=
          state.objective_trace[i - 1] +
              1e-6 * std::max(1.0, std::abs(state.objective_trace[i - 1])));
  }
}

TEST_CASE("claim: X^{1/2} B bounded by the measured kappa budget") {
  rsub::Rng rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 6, m = 40;
    const MatrixXd x = test::random_fantope_point(n, 2, rng);
    const double c_measured = op_inf_to_1_exact(x).value;  // ||X||_{inf->1}
    const double delta = 0.05 + rng.next_uniform();
    MatrixXd b(n, m);
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < n; ++i)
        b(i, j) = delta * (2.0 * rng.next_uniform() - 1.0);
    const MatrixXd half = psd_sqrt(x);
    const double lhs = (half * b).norm();
    CHECK(lhs <= std::sqrt(c_measured * m) * delta + 1e-9);
    // and <BB^T, X> <= c m delta^2
    CHECK((b.transpose() * x * b).trace() <= c_measured * m * delta * delta + 1e-9);
  }
}

TEST_CASE("claim: correlation of feasible X with the top subspace") {
  rsub::Rng rng(15);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 3 + static_cast<int>(rng.next_below(6));
    const int r = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
    const MatrixXd x = test::random_fantope_point(n, r, rng);

    VectorXd ev(n);
    double prev = 2.0 + rng.next_uniform();
    for (int i = 0; i < n; ++i) {
      ev(i) = prev;
      prev -= 0.05 + rng.next_uniform() * 0.3;
      if (prev < 0.0) prev = 0.0;
    }
    if (r < n && ev(r - 1) - ev(r) < 1e-6) continue;  // needs a gap
    const MatrixXd q = test::random_orthonormal(n, n, rng);
    const MatrixXd sigma = q * ev.asDiagonal() * q.transpose();
    const MatrixXd pi_star = q.leftCols(r) * q.leftCols(r).transpose();

    const double gap = r < n ? ev(r - 1) - ev(r) : ev(r - 1);
    const double lhs = (x.array() * pi_star.array()).sum();
    const double rhs =
        r - ((pi_star - x).array() * sigma.array()).sum() / gap;
    CHECK(lhs >= rhs - 1e-8);
  }
}

TEST_CASE("delta diagnostic: zero cases and 1/sqrt(m) decay") {
  const CovarianceModel model = spiked_model(8, 1, 1.0, 2.0);
  const Dataset data = sample(model, 100, 5);
  CHECK(compute_delta_diagnostic(MatrixXd::Zero(8, 8), data, model) == 0.0);

  // E = 0 exactly: dataset whose second moment is sigma
  Dataset exact;
  exact.samples.resize(8, 8);
  VectorXd evals;
  MatrixXd evecs;
  sym_eig_descending(model.sigma(), evals, evecs);
  exact.samples = evecs * evals.cwiseSqrt().asDiagonal() * evecs.transpose() *
                  std::sqrt(8.0);
  CHECK(compute_delta_diagnostic(model.projector(), exact, model) < 1e-10);

  // decay: median diagnostic at m and 16m drops by roughly 4x
  const MatrixXd probe = model.projector();
  auto med = [&](int m) {
    std::vector<double> v;
    for (int seed = 0; seed < 9; ++seed)
      v.push_back(compute_delta_diagnostic(
          probe, sample(model, m, 600 + seed), model));
    std::sort(v.begin(), v.end());
    return v[4];
  };
  const double lo = med(500), hi = med(8000);
  CHECK(hi < lo);
  CHECK(hi > lo / 40.0);
}

TEST_CASE("solver config JSON round trip") {
  SolverConfig config;
  config.tol_obj = 1e-8;
  config.max_iters = 123;
  config.cut_pool_size = 7;
  const SolverConfig back = SolverConfig::from_json_text(config.to_json_text());
  CHECK(back.tol_obj == config.tol_obj);
  CHECK(back.max_iters == config.max_iters);
  CHECK(back.cut_pool_size == config.cut_pool_size);
  CHECK(back.step_rule == config.step_rule);
}
