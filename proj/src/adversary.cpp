#include "rsub/adversary.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <numeric>

#include "rsub/errors.hpp"
#include "rsub/kernels.hpp"
#include "rsub/norms.hpp"
#include "rsub/rng.hpp"

namespace rsub {

namespace {

bool is_spiked(const CovarianceModel& model, double tol = 1e-12) {
  if (model.r >= model.n) return false;
  const double top = model.eigvals(0);
  for (int i = 0; i < model.r; ++i)
    if (std::abs(model.eigvals(i) - top) > tol) return false;
  for (int i = model.r; i < model.n; ++i)
    if (std::abs(model.eigvals(i) - 1.0) > tol) return false;
  return top > 1.0;
}

std::vector<int> top_basis_support(const CovarianceModel& model) {
  std::vector<int> support;
  for (int i = 0; i < model.n; ++i) {
    bool hit = false;
    for (int j = 0; j < model.r && !hit; ++j)
      hit = model.basis(i, j) != 0.0;
    if (hit) support.push_back(i);
  }
  return support;
}

// Coordinates outside the model support, lowest first, grouped into r blocks
// of size k_prime.
std::vector<std::vector<int>> allocate_blocks(const CovarianceModel& model,
                                              long k_prime) {
  const std::vector<int> support = top_basis_support(model);
  std::vector<bool> taken(model.n, false);
  for (int i : support) taken[i] = true;
  std::vector<int> free_coords;
  for (int i = 0; i < model.n; ++i)
    if (!taken[i]) free_coords.push_back(i);
  if (static_cast<long>(free_coords.size()) < k_prime * model.r)
    throw SupportOverflow(
        "adversary: r blocks of size k' do not fit outside the model support");
  std::vector<std::vector<int>> blocks(model.r);
  for (int l = 0; l < model.r; ++l)
    blocks[l] = std::vector<int>(free_coords.begin() + l * k_prime,
                                 free_coords.begin() + (l + 1) * k_prime);
  return blocks;
}

double max_column_linf(const MatrixXd& w) {
  double worst = 0.0;
  for (int j = 0; j < w.cols(); ++j)
    worst = std::max(worst, w.col(j).cwiseAbs().maxCoeff());
  return worst;
}

Dataset make_perturbed(const Dataset& clean, MatrixXd samples, double q,
                       double delta) {
  Dataset out;
  out.samples = std::move(samples);
  out.provenance = Provenance::Perturbed;
  out.q = q;
  out.delta = delta;
  out.parent_seed = clean.seed;
  out.seed = clean.seed;
  out.mu = clean.mu;
  return out;
}

}  // namespace

double projector_shift_frob_sq(double epsilon, int r) {
  const double a = 2.0 * epsilon - epsilon * epsilon;
  const double b = (1.0 - epsilon) * (1.0 - epsilon);
  // a^2 + a^2 + 2ab = 2a(a + b) = 2a, since a + b = 1.
  return r * (a * a + a * a + 2.0 * a * b);
}

DeltaWindow minmax_delta_window(const CovarianceModel& model, long m) {
  require(is_spiked(model), "minmax window: spiked model expected");
  const int k = model.support_k;
  require(k > 0, "minmax window: planted support required");
  const double theta = model.eigvals(0) - 1.0;
  const double lam1 = model.eigvals(0);
  const double r = model.r;
  const double kappa_thm = std::sqrt(1.5 * k);
  DeltaWindow w;
  w.lo = std::sqrt(r * lam1) * kappa_thm / model.n;
  w.hi = std::sqrt(r * theta) / kappa_thm;
  // Support feasibility: k + r k' <= n with k' >= 1 is implied for any delta
  // in the window once k' is rounded down to a power of two; the binding
  // constraint is checked again at attack time.
  const double kp_max = (model.n - k) / r;
  const double lo_support = 0.5 * std::sqrt(theta) * kappa_thm / (kp_max * std::sqrt(r));
  w.lo = std::max(w.lo, lo_support);
  (void)m;
  return w;
}

DeltaWindow instance_optimal_delta_window(const CovarianceModel& model) {
  const double lam1 = model.lambda1();
  const double r = model.r;
  const double kappa = model.kappa;
  DeltaWindow w;
  w.lo = std::sqrt(r * lam1) * kappa / model.n;
  w.hi = std::sqrt(r * lam1) / kappa;
  // k' = sqrt(lam1/r) kappa / delta must fit r disjoint blocks after the
  // support, and the construction wants k' >= 2r.
  const long support = static_cast<long>(top_basis_support(model).size());
  const double kp_max =
      static_cast<double>(model.n - support) / r;
  if (kp_max >= 2.0 * r)
    w.lo = std::max(w.lo, std::sqrt(lam1 / r) * kappa / kp_max);
  else
    w.hi = w.lo;  // empty
  return w;
}

CoupledInstance attack_minmax(const CovarianceModel& model,
                              const Dataset& dataset, double delta,
                              std::uint64_t seed, const MinmaxOptions& opts) {
  require(is_spiked(model), "attack_minmax: spiked model (I + theta Pi*) expected");
  require(model.support_k > 0, "attack_minmax: Fourier-sparse basis expected");
  require(dataset.n() == model.n, "attack_minmax: dimension mismatch");
  require(dataset.zeta.size() > 0,
          "attack_minmax: dataset lacks retained coefficients");

  const int n = model.n;
  const int r = model.r;
  const long m = dataset.m();
  const int k = model.support_k;
  const double theta = model.eigvals(0) - 1.0;
  const double kappa_thm = std::sqrt(1.5 * k);

  const DeltaWindow window = minmax_delta_window(model, m);
  if (!(delta > window.lo && delta <= window.hi * (1.0 + 1e-12)))
    throw ParameterWindow(delta, window.lo, window.hi);

  // k' = largest power of two <= (1/2) sqrt(theta) kappa / (delta sqrt(r));
  // the dyadic gap keeps it above the 1/4 end of the window.
  const double kp_hi = 0.5 * std::sqrt(theta) * kappa_thm /
                       (delta * std::sqrt(static_cast<double>(r)));
  long k_prime = 1;
  while (2 * k_prime <= static_cast<long>(kp_hi)) k_prime *= 2;
  if (static_cast<double>(k_prime) > kp_hi)
    throw ParameterWindow(delta, window.lo, window.hi);
  if (k + r * k_prime > n)
    throw SupportOverflow("attack_minmax: r blocks of size k' overflow n");

  const double eps = opts.c4 * delta * kappa_thm /
                     (std::sqrt(r * theta) *
                      std::log(static_cast<double>(n) * m));
  require(eps > 0.0 && eps < 0.5, "attack_minmax: epsilon out of range");

  // Fourier bumps on consecutive blocks after the support; deterministic.
  MatrixXd u = MatrixXd::Zero(n, r);
  for (int l = 0; l < r; ++l) {
    const int offset = k + l * static_cast<int>(k_prime);
    const auto chars =
        fourier_sparse_basis(n, static_cast<int>(k_prime), 1, offset);
    u.col(l) = chars[0];
  }

  const double tilt = std::sqrt(2.0 * eps - eps * eps);
  MatrixXd v_prime(n, r);
  for (int l = 0; l < r; ++l)
    v_prime.col(l) = (1.0 - eps) * model.basis.col(l) + tilt * u.col(l);

  // Split the retained unit coefficient along each spike into its N(0,theta)
  // share: zeta_theta = s theta/(1+theta) + sqrt(theta/(1+theta)) xi with
  // s = sqrt(1+theta) zeta and fresh xi; the joint law matches the paper's
  // (zeta, g) decomposition exactly, so A' is iid N(0, I + theta Pi').
  const double lam1 = 1.0 + theta;
  const double cond_mean = theta / lam1;
  const double cond_sd = std::sqrt(theta / lam1);

  CoupledInstance best;
  best.max_violation = kInf;
  for (int attempt = 0; attempt <= opts.max_resamples; ++attempt) {
    MatrixXd zeta_theta(r, m);
    for (long j = 0; j < m; ++j) {
      Rng rng(mix_seed(seed, static_cast<std::uint64_t>(attempt),
                       static_cast<std::uint64_t>(j)));
      for (int l = 0; l < r; ++l) {
        const double s = std::sqrt(lam1) * dataset.zeta(l, j);
        zeta_theta(l, j) = s * cond_mean + cond_sd * rng.next_gaussian();
      }
    }
    MatrixXd shift_dirs(n, r);
    for (int l = 0; l < r; ++l)
      shift_dirs.col(l) = v_prime.col(l) - model.basis.col(l);
    const MatrixXd w = shift_dirs * zeta_theta;
    const double violation = max_column_linf(w);
    if (violation < best.max_violation) {
      best.perturbed.samples = dataset.samples + w;
      best.max_violation = violation;
      best.resamples = attempt;
    }
    if (best.max_violation <= delta) break;
  }

  CoupledInstance inst = std::move(best);
  inst.clean = dataset;
  inst.perturbed =
      make_perturbed(dataset, std::move(inst.perturbed.samples), kInf, delta);
  inst.v_prime = v_prime;
  inst.pi_prime = v_prime * v_prime.transpose();
  inst.sigma_prime =
      MatrixXd::Identity(n, n) + theta * inst.pi_prime;
  inst.top_eigvals = VectorXd::Constant(r, 1.0 + theta);
  inst.sigma_prime_top = (1.0 + theta) * inst.pi_prime;
  inst.u = u;
  inst.epsilon = eps;
  inst.k_prime = k_prime;
  inst.kappa_used = kappa_thm;
  return inst;
}

CoupledInstance attack_instance_optimal(const CovarianceModel& model,
                                        const Dataset& dataset, double delta,
                                        double eta, std::uint64_t seed,
                                        const InstanceOptimalOptions& opts) {
  require(dataset.n() == model.n, "attack_instance_optimal: dimension mismatch");
  require(eta > 0.0 && eta < 1.0, "attack_instance_optimal: eta in (0,1)");
  const int n = model.n;
  const int r = model.r;
  const long m = dataset.m();
  const double kappa = model.kappa;
  const double lam1 = model.lambda1();

  if (delta == 0.0) {  // zero-perturbation identity
    CoupledInstance inst;
    inst.clean = dataset;
    inst.perturbed = make_perturbed(dataset, dataset.samples, kInf, 0.0);
    inst.v_prime = model.top_basis();
    inst.pi_prime = model.projector();
    inst.sigma_prime = model.sigma();
    inst.sigma_prime_top = model.sigma_top();
    inst.top_eigvals = model.eigvals.head(r);
    inst.u = MatrixXd::Zero(n, r);
    inst.kappa_used = kappa;
    inst.u_checks.eta = eta;
    return inst;
  }

  if (kappa < 2.0 * r)
    throw ParameterWindow(delta, 0.0, 0.0);
  const DeltaWindow window = instance_optimal_delta_window(model);
  if (!(delta >= window.lo * (1.0 - 1e-12) && delta <= window.hi * (1.0 + 1e-12)))
    throw ParameterWindow(delta, window.lo, window.hi);
  require(dataset.zeta.size() > 0,
          "attack_instance_optimal: dataset lacks retained coefficients");

  const long k_prime =
      std::llround(std::sqrt(lam1 / r) * kappa / delta);
  if (k_prime < 2 * r)
    throw ParameterWindow(delta, window.lo, window.hi);
  const std::vector<std::vector<int>> blocks = allocate_blocks(model, k_prime);

  const double eps =
      opts.c * delta * kappa /
      (std::sqrt(r * lam1) * std::log(static_cast<double>(r) * m) *
       std::log(static_cast<double>(n)));
  require(eps > 0.0 && eps < 0.5, "attack_instance_optimal: epsilon out of range");
  const double tilt = std::sqrt(2.0 * eps - eps * eps);

  const MatrixXd top = model.top_basis();

  CoupledInstance best;
  best.max_violation = kInf;
  for (int attempt = 0; attempt <= opts.max_resamples; ++attempt) {
    MatrixXd u = MatrixXd::Zero(n, r);
    VectorXd u_norms(r);
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(attempt)));
    for (int l = 0; l < r; ++l) {
      const std::vector<int>& blk = blocks[l];
      const int kp = static_cast<int>(blk.size());
      // T_l: within-block subspace orthogonal to the top basis; d_l is its
      // numerical rank, not the assumed k' - r.
      MatrixXd b_s(kp, r);
      for (int a = 0; a < kp; ++a) b_s.row(a) = top.row(blk[a]);
      VectorXd g(kp);
      for (int a = 0; a < kp; ++a) g(a) = rng.next_gaussian();
      VectorXd ub;
      int d_l = kp;
      if (b_s.cwiseAbs().maxCoeff() == 0.0) {
        ub = g;  // blocks avoid the support, so T_l is the whole block
      } else {
        Eigen::JacobiSVD<MatrixXd> svd(b_s, Eigen::ComputeFullU);
        const double tol = 1e-10 * std::max(1.0, svd.singularValues()(0));
        int rank = 0;
        for (int i = 0; i < svd.singularValues().size(); ++i)
          if (svd.singularValues()(i) > tol) ++rank;
        d_l = kp - rank;
        if (d_l <= 0)
          throw SupportOverflow("attack_instance_optimal: block fully inside span");
        const MatrixXd null_basis = svd.matrixU().rightCols(d_l);
        ub = null_basis * (null_basis.transpose() * g);
      }
      ub /= std::sqrt(static_cast<double>(d_l));
      for (int a = 0; a < kp; ++a) u(blk[a], l) = ub(a);
      u_norms(l) = ub.norm();
    }

    MatrixXd shift_dirs(n, r);
    for (int l = 0; l < r; ++l) {
      const double c_l = tilt / ((1.0 - eps) * u_norms(l));
      shift_dirs.col(l) =
          std::sqrt(model.eigvals(l)) * c_l * u.col(l);
    }
    const MatrixXd w = shift_dirs * dataset.zeta.topRows(r);
    const double violation = max_column_linf(w);
    if (violation < best.max_violation) {
      best.perturbed.samples = dataset.samples + w;
      best.max_violation = violation;
      best.resamples = attempt;
      best.u = u;
      best.top_eigvals = u_norms;  // temporarily stash ||u_l||
    }
    if (best.max_violation <= delta) break;
  }

  CoupledInstance inst = std::move(best);
  const VectorXd u_norms = inst.top_eigvals;
  inst.clean = dataset;
  inst.perturbed =
      make_perturbed(dataset, std::move(inst.perturbed.samples), kInf, delta);
  inst.v_prime.resize(n, r);
  for (int l = 0; l < r; ++l)
    inst.v_prime.col(l) = (1.0 - eps) * model.basis.col(l) +
                          (tilt / u_norms(l)) * inst.u.col(l);
  inst.pi_prime = inst.v_prime * inst.v_prime.transpose();

  inst.sigma_prime = model.sigma();
  for (int l = 0; l < r; ++l) {
    const double c_l = tilt / ((1.0 - eps) * u_norms(l));
    const VectorXd v_l = model.basis.col(l);
    const VectorXd u_l = inst.u.col(l);
    inst.sigma_prime += model.eigvals(l) *
                        (c_l * (v_l * u_l.transpose() + u_l * v_l.transpose()) +
                         c_l * c_l * u_l * u_l.transpose());
  }
  inst.top_eigvals =
      model.eigvals.head(r) / ((1.0 - eps) * (1.0 - eps));
  inst.sigma_prime_top = inst.v_prime * inst.top_eigvals.asDiagonal() *
                         inst.v_prime.transpose();
  inst.epsilon = eps;
  inst.k_prime = k_prime;
  inst.kappa_used = kappa;

  inst.u_checks.eta = eta;
  const double kp = static_cast<double>(k_prime);
  const double b_norm = 3.0 * std::sqrt(std::log(r / eta) / kp) +
                        4.0 * std::log(r / eta) / kp;
  const double b_linf = 3.0 * std::sqrt(std::log(r * kp / eta) / kp);
  const double b_l1 = 2.0 * std::sqrt(kp);
  for (int l = 0; l < r; ++l) {
    const VectorXd u_l = inst.u.col(l);
    if (std::abs(u_l.squaredNorm() - 1.0) > b_norm)
      inst.u_checks.norm_sq_ok = false;
    if (u_l.cwiseAbs().maxCoeff() > b_linf) inst.u_checks.linf_ok = false;
    if (u_l.cwiseAbs().sum() > b_l1) inst.u_checks.l1_ok = false;
  }
  return inst;
}

Dataset attack_constant_shift(const Dataset& dataset, double delta,
                              const VectorXd& direction) {
  require(direction.size() == dataset.n(),
          "attack_constant_shift: direction has wrong dimension");
  for (int i = 0; i < direction.size(); ++i)
    require(direction(i) == 1.0 || direction(i) == -1.0,
            "attack_constant_shift: direction entries must be +-1");
  Dataset out = dataset;
  out.provenance = Provenance::Perturbed;
  out.q = kInf;
  out.delta = delta;
  out.parent_seed = dataset.seed;
  out.samples.colwise() += (delta * direction).eval();
  if (out.mu) *out.mu += delta * direction;
  return out;
}

MeanSparseAttack attack_mean_sparse(const Dataset& dataset, double delta) {
  require(dataset.mu.has_value(), "attack_mean_sparse: dataset must carry mu");
  const VectorXd& mu = *dataset.mu;
  const int n = dataset.n();
  const double l1 = mu.cwiseAbs().sum();
  const double l2 = mu.norm();
  require(l2 > 0.0, "attack_mean_sparse: mu must be nonzero");
  const double sparsity = l1 / l2;
  if (sparsity > std::sqrt(static_cast<double>(n)) / 4.0)
    throw SparsityTooLarge("attack_mean_sparse: ||mu||_1/||mu||_2 > sqrt(n)/4");

  MeanSparseAttack out;
  out.s = std::max<long>(1, std::llround(sparsity * sparsity));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(mu(a)) > std::abs(mu(b));
  });

  VectorXd shift = VectorXd::Zero(n);
  for (long i = 0; i < out.s; ++i) {
    const int idx = order[static_cast<std::size_t>(i)];
    shift(idx) = delta * (mu(idx) >= 0.0 ? 1.0 : -1.0);
  }
  out.perturbed = dataset;
  out.perturbed.provenance = Provenance::Perturbed;
  out.perturbed.q = kInf;
  out.perturbed.delta = delta;
  out.perturbed.parent_seed = dataset.seed;
  out.perturbed.samples.colwise() += shift;
  if (out.perturbed.mu) *out.perturbed.mu += shift;
  out.displacement = delta * std::sqrt(static_cast<double>(out.s));
  return out;
}

BudgetReport validate_budget(const Dataset& clean, const Dataset& perturbed,
                             double q, double delta) {
  if (clean.n() != perturbed.n() || clean.m() != perturbed.m())
    throw ShapeMismatch("validate_budget: shape mismatch");
  BudgetReport report;
  for (int j = 0; j < clean.m(); ++j) {
    const double dist =
        vector_lq_norm(perturbed.samples.col(j) - clean.samples.col(j), q);
    report.max_violation = std::max(report.max_violation, dist);
    if (dist > delta * (1.0 + 1e-9)) report.violating_columns.push_back(j);
  }
  return report;
}

}  // namespace rsub
