#include <cmath>

#include "doctest.h"
#include "rsub/covmodel.hpp"
#include "rsub/errors.hpp"
#include "rsub/kernels.hpp"
#include "rsub/norms.hpp"
#include "test_util.hpp"

using namespace rsub;

TEST_CASE("fourier_sparse_basis: character table rows") {
  // n=4, k=4, r=2: rows 2 and 3 of the normalized character table
  const auto chars = fourier_sparse_basis(4, 4, 2, 0);
  REQUIRE(chars.size() == 2);
  VectorXd row2(4), row3(4);
  row2 << 0.5, -0.5, 0.5, -0.5;
  row3 << 0.5, 0.5, -0.5, -0.5;
  CHECK((chars[0] - row2).cwiseAbs().maxCoeff() == 0.0);
  CHECK((chars[1] - row3).cwiseAbs().maxCoeff() == 0.0);
  CHECK(chars[0].dot(chars[1]) == 0.0);

  // n=8, k=2, r=1: single character on two coordinates
  const auto single = fourier_sparse_basis(8, 2, 1, 0);
  CHECK(single[0](0) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(std::abs(single[0](1)) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(single[0].tail(6).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fourier_sparse_basis: every entry has magnitude 1/sqrt(k)") {
  for (int k : {2, 4, 8, 16}) {
    const auto chars = fourier_sparse_basis(20, k, std::min(k, 5), 2);
    for (const VectorXd& v : chars) {
      int nonzero = 0;
      for (int i = 0; i < v.size(); ++i) {
        if (v(i) == 0.0) continue;
        ++nonzero;
        CHECK(std::abs(v(i)) == doctest::Approx(1.0 / std::sqrt(k)));
      }
      CHECK(nonzero == k);
    }
  }
}

TEST_CASE("fourier_sparse_basis: invalid supports") {
  CHECK_THROWS_AS(fourier_sparse_basis(8, 3, 1, 0), InvalidSupport);
  CHECK_THROWS_AS(fourier_sparse_basis(8, 8, 1, 1), InvalidSupport);
  CHECK_THROWS_AS(fourier_sparse_basis(8, 4, 5, 0), InvalidSupport);
}

TEST_CASE("spiked model construction") {
  const CovarianceModel model = spiked_model(16, 1, 1.0, 2.0);
  CHECK(model.support_k == 4);
  CHECK(model.eigvals(0) == doctest::Approx(2.0));
  CHECK(model.eigvals(1) == doctest::Approx(1.0));
  CHECK(model.eigengap() == doctest::Approx(1.0));
  CHECK(model.kappa == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(model.kappa <= 2.0 + 1e-12);

  const MatrixXd pi = model.projector();
  CHECK((pi * pi - pi).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((model.sigma() - model.sigma_top() - model.sigma_bot())
            .cwiseAbs()
            .maxCoeff() < 1e-10);
  // restricted consistency: Sigma Pi = Pi Sigma Pi
  CHECK((model.sigma() * pi - pi * model.sigma() * pi).cwiseAbs().maxCoeff() <
        1e-10);
  // basis orthonormal
  CHECK((model.basis.transpose() * model.basis - MatrixXd::Identity(16, 16))
            .cwiseAbs()
            .maxCoeff() < 1e-10);

  // kappa recomputation agrees with the stored value
  CHECK(op_q_to_2(pi, model.q).value ==
        doctest::Approx(model.kappa).epsilon(1e-8));
}

TEST_CASE("general model: pinned diag example and validation") {
  VectorXd ev(2);
  ev << 2.0, 1.0;
  const CovarianceModel m =
      general_model(ev, 1, BasisSpec::custom(MatrixXd::Identity(2, 1)));
  MatrixXd expect(2, 2);
  expect << 2, 0, 0, 1;
  CHECK((m.sigma() - expect).cwiseAbs().maxCoeff() < 1e-12);

  VectorXd bad(2);
  bad << 1.0, 2.0;
  CHECK_THROWS_AS(
      general_model(bad, 1, BasisSpec::custom(MatrixXd::Identity(2, 1))),
      NotDescending);

  MatrixXd skew(2, 1);
  skew << 1.0, 1.0;
  CHECK_THROWS_AS(general_model(ev, 1, BasisSpec::custom(skew)),
                  NotOrthonormal);
}

TEST_CASE("general model: disjoint sparse blocks, kappa = sqrt(total support)") {
  // the disjoint-block pattern with r blocks of size b is supported on r*b
  // coordinates; a flat witness hits every block at once, so kappa = sqrt(rb)
  VectorXd ev = VectorXd::Ones(12);
  ev(0) = 3.0;
  ev(1) = 2.0;
  const CovarianceModel m =
      general_model(ev, 2, BasisSpec::fourier_disjoint(4, 0));
  CHECK(m.kappa == doctest::Approx(std::sqrt(8.0)).epsilon(1e-8));
}

TEST_CASE("general model: random rotation approaches dense kappa") {
  // a random direction has ||v||_1 close to sqrt(2n/pi); well below sqrt(n)
  // but far above 1 -- check the measured value sits in the dense band
  const int n = 12;
  double lo = kInf, hi = 0.0;
  for (int seed = 0; seed < 50; ++seed) {
    VectorXd ev = VectorXd::Ones(n);
    ev(0) = 2.0;
    const CovarianceModel m =
        general_model(ev, 1, BasisSpec::random_rotation(n, 900 + seed));
    lo = std::min(lo, m.kappa);
    hi = std::max(hi, m.kappa);
  }
  CHECK(hi <= std::sqrt(static_cast<double>(n)) + 1e-9);
  CHECK(lo >= 0.6 * std::sqrt(static_cast<double>(n)));
}

TEST_CASE("sampling: determinism and coefficient retention") {
  const CovarianceModel model = spiked_model(8, 1, 1.0, 2.0);
  const Dataset a = sample(model, 200, 12345);
  const Dataset b = sample(model, 200, 12345);
  CHECK(a.samples == b.samples);
  CHECK(a.zeta == b.zeta);
  CHECK(sample(model, 200, 12346).samples != a.samples);

  // reconstructing from retained coefficients reproduces samples exactly
  const VectorXd root = model.eigvals.cwiseSqrt();
  for (int j = 0; j < a.m(); ++j) {
    const VectorXd rebuilt = model.basis * root.cwiseProduct(a.zeta.col(j));
    CHECK((rebuilt - a.samples.col(j)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("sampling: empirical covariance concentrates") {
  VectorXd ev = VectorXd::Ones(2);
  const CovarianceModel model =
      general_model(ev, 1, BasisSpec::custom(MatrixXd::Identity(2, 1)));
  const Dataset ds = sample(model, 10000, 99);
  const MatrixXd s = second_moment(ds.samples);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(s - MatrixXd::Identity(2, 2));
  CHECK(es.eigenvalues().cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("sampling: empirical mean concentration over seeds") {
  const int n = 16;
  const CovarianceModel model = spiked_model(n, 1, 1.0, 2.0);
  const double bound =
      5.0 * std::sqrt(model.lambda1() * std::log(static_cast<double>(n)) / 2000.0);
  int ok = 0;
  for (int seed = 0; seed < 50; ++seed) {
    const Dataset ds = sample(model, 2000, 4000 + seed);
    if (ds.samples.rowwise().mean().cwiseAbs().maxCoeff() <= bound) ++ok;
  }
  CHECK(ok >= 49);  // "99% of seeds" at tolerance
}
