#include "rsub/solver.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "rsub/errors.hpp"
#include "rsub/kernels.hpp"
#include "rsub/norms.hpp"

namespace rsub {

void FeasibleSetParams::validate() const {
  require(n >= 1 && r >= 1 && r <= n, "params: need 1 <= r <= n");
  require(kappa >= 1.0, "params: kappa >= 1");
  // Every rank-r projector has ||Pi||_{inf->1} >= r, so kappa^2 < r makes the
  // feasible set empty.
  if (kappa * kappa < static_cast<double>(r) * (1.0 - 1e-9))
    throw Error("params: kappa^2 < r gives an empty feasible set");
}

double FeasResiduals::max() const {
  return std::max({trace, eig, ball, cuts});
}

SolverConfig SolverConfig::from_json_text(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  SolverConfig c;
  c.tol_obj = j.value("tol_obj", c.tol_obj);
  c.tol_feas = j.value("tol_feas", c.tol_feas);
  c.tol_eig = j.value("tol_eig", c.tol_eig);
  c.max_iters = j.value("max_iters", c.max_iters);
  c.cut_check_period = j.value("cut_check_period", c.cut_check_period);
  c.cut_pool_size = j.value("cut_pool_size", c.cut_pool_size);
  c.dykstra_max_cycles = j.value("dykstra_max_cycles", c.dykstra_max_cycles);
  c.dykstra_tol = j.value("dykstra_tol", c.dykstra_tol);
  c.oracle_rounds = j.value("oracle_rounds", c.oracle_rounds);
  c.cut_slack = j.value("cut_slack", c.cut_slack);
  c.step_rule = j.value("step_rule", c.step_rule);
  c.oracle_seed = j.value("oracle_seed", c.oracle_seed);
  return c;
}

SolverConfig SolverConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open solver config: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_json_text(text);
}

std::string SolverConfig::to_json_text() const {
  nlohmann::json j;
  j["tol_obj"] = tol_obj;
  j["tol_feas"] = tol_feas;
  j["tol_eig"] = tol_eig;
  j["max_iters"] = max_iters;
  j["cut_check_period"] = cut_check_period;
  j["cut_pool_size"] = cut_pool_size;
  j["dykstra_max_cycles"] = dykstra_max_cycles;
  j["dykstra_tol"] = dykstra_tol;
  j["oracle_rounds"] = oracle_rounds;
  j["cut_slack"] = cut_slack;
  j["step_rule"] = step_rule;
  j["oracle_seed"] = oracle_seed;
  return j.dump(2);
}

MatrixXd project_fantope(const MatrixXd& m, int r) {
  const int n = static_cast<int>(m.rows());
  if (r > n) throw RankInfeasible("project_fantope: r > n");
  require(r >= 1, "project_fantope: r >= 1");
  VectorXd evals;
  MatrixXd evecs;
  sym_eig_descending(m, evals, evecs);

  const auto filled = [&](double gamma) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      s += std::clamp(evals(i) - gamma, 0.0, 1.0);
    return s;
  };

  // filled() is continuous nonincreasing with filled(lo) = n >= r and
  // filled(hi) = 0; bisect to the water level.
  double lo = evals(n - 1) - 1.0;
  double hi = evals(0);
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (filled(mid) >= static_cast<double>(r))
      lo = mid;
    else
      hi = mid;
  }
  const double gamma = lo;
  VectorXd clamped(n);
  for (int i = 0; i < n; ++i)
    clamped(i) = std::clamp(evals(i) - gamma, 0.0, 1.0);
  // Polish the trace: rescale the interior eigenvalues' shift residue.
  const double tr = clamped.sum();
  const double drift = tr - static_cast<double>(r);
  if (drift != 0.0) {
    int interior = 0;
    for (int i = 0; i < n; ++i)
      if (clamped(i) > 0.0 && clamped(i) < 1.0) ++interior;
    if (interior > 0) {
      const double fix = drift / interior;
      for (int i = 0; i < n; ++i)
        if (clamped(i) > 0.0 && clamped(i) < 1.0)
          clamped(i) = std::clamp(clamped(i) - fix, 0.0, 1.0);
    }
  }
  MatrixXd x = evecs * clamped.asDiagonal() * evecs.transpose();
  return 0.5 * (x + x.transpose());
}

MatrixXd project_entrywise_l1(const MatrixXd& m, double radius) {
  require(radius > 0.0, "project_entrywise_l1: radius > 0");
  const double total = m.cwiseAbs().sum();
  if (total <= radius) return m;

  std::vector<double> mags(m.size());
  for (Eigen::Index i = 0; i < m.size(); ++i) mags[i] = std::abs(m.data()[i]);
  std::sort(mags.begin(), mags.end(), std::greater<double>());
  double prefix = 0.0;
  double tau = 0.0;
  for (std::size_t j = 0; j < mags.size(); ++j) {
    prefix += mags[j];
    const double cand = (prefix - radius) / static_cast<double>(j + 1);
    if (j + 1 == mags.size() || cand >= mags[j + 1]) {
      tau = cand;
      break;
    }
  }
  return m.unaryExpr([tau](double v) {
    const double mag = std::abs(v) - tau;
    return mag > 0.0 ? (v > 0.0 ? mag : -mag) : 0.0;
  });
}

namespace {

// Root of x + nu * qstar * x^(qstar-1) = a on [0, a].
double shrink_entry(double a, double nu, double qstar) {
  if (a == 0.0 || nu == 0.0) return a;
  double lo = 0.0, hi = a;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double lhs = mid + nu * qstar * std::pow(mid, qstar - 1.0);
    if (lhs < a)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double lq_norm_all_entries(const MatrixXd& m, double qstar) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < m.size(); ++i)
    acc += std::pow(std::abs(m.data()[i]), qstar);
  return std::pow(acc, 1.0 / qstar);
}

}  // namespace

MatrixXd project_entrywise_lq(const MatrixXd& m, double radius, double qstar) {
  require(radius > 0.0, "project_entrywise_lq: radius > 0");
  require(qstar > 1.0 && qstar < 2.0, "project_entrywise_lq: qstar in (1,2)");
  if (lq_norm_all_entries(m, qstar) <= radius) return m;

  const auto shrunk = [&](double nu) {
    MatrixXd x = m;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double a = std::abs(m.data()[i]);
      const double v = shrink_entry(a, nu, qstar);
      x.data()[i] = m.data()[i] >= 0.0 ? v : -v;
    }
    return x;
  };

  double nu_lo = 0.0, nu_hi = 1.0;
  while (lq_norm_all_entries(shrunk(nu_hi), qstar) > radius) nu_hi *= 2.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (nu_lo + nu_hi);
    if (lq_norm_all_entries(shrunk(mid), qstar) > radius)
      nu_lo = mid;
    else
      nu_hi = mid;
  }
  return shrunk(nu_hi);
}

std::optional<Cut> separation_oracle_qnorm(const MatrixXd& x,
                                           const FeasibleSetParams& params,
                                           Rng& rng, int rounds,
                                           double slack) {
  const double budget = params.kappa * params.kappa;
  NormCertificate cert;
  if (params.q.is_inf()) {
    try {
      cert = op_inf_to_1_exact(x);
    } catch (const DimensionTooLarge&) {
      cert = op_inf_to_1_heuristic(x, rounds, rng);
    }
  } else {
    cert = op_q_to_qstar_heuristic(x, params.q.value(), rounds, rng);
  }
  if (cert.value <= budget * (1.0 + slack)) return std::nullopt;
  Cut cut;
  cut.y = cert.witness_x;
  cut.z = cert.witness_y ? *cert.witness_y : cert.witness_x;
  cut.rhs = budget;
  return cut;
}

namespace {

double cut_value(const Cut& c, const MatrixXd& x) {
  return c.y.dot(x * c.z);
}

// Projection onto {<(y z^T + z y^T)/2, X> <= rhs} in the symmetric space.
MatrixXd project_halfspace(const Cut& c, const MatrixXd& x) {
  const double v = cut_value(c, x);
  if (v <= c.rhs) return x;
  MatrixXd normal = 0.5 * (c.y * c.z.transpose() + c.z * c.y.transpose());
  const double nsq = normal.squaredNorm();
  if (nsq == 0.0) return x;
  return x - ((v - c.rhs) / nsq) * normal;
}

// Dykstra's cyclically corrected projections onto the intersection
// {Fantope} ∩ {entrywise ball} ∩ {cuts}. The correction increments are
// warm-started across outer iterations (the cycle's fixed points still
// project exactly; feasibility is re-verified each iteration), which turns
// the per-iteration cost near a constraint corner from hundreds of cycles
// into a handful.
struct DykstraState {
  std::vector<MatrixXd> inc;  // [fantope, ball, cut 0, cut 1, ...]

  void reset(int n, std::size_t nsets) {
    inc.assign(nsets, MatrixXd::Zero(n, n));
  }
  void sync_cut_count(int n, std::size_t ncuts) {
    while (inc.size() < 2 + ncuts) inc.push_back(MatrixXd::Zero(n, n));
  }

  MatrixXd project(MatrixXd y, const FeasibleSetParams& params,
                   const std::vector<Cut>& cuts, int max_cycles, double tol,
                   bool& converged) {
    const double qstar = params.q.dual();
    const double radius = params.r * params.kappa * params.kappa;
    const std::size_t nsets = 2 + cuts.size();
    sync_cut_count(static_cast<int>(y.rows()), cuts.size());

    converged = false;
    const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
    for (int cycle = 0; cycle < max_cycles; ++cycle) {
      double change = 0.0;
      for (std::size_t k = 0; k < nsets; ++k) {
        const MatrixXd z = y + inc[k];
        MatrixXd proj;
        if (k == 0) {
          proj = project_fantope(z, params.r);
        } else if (k == 1) {
          proj = qstar == 1.0 ? project_entrywise_l1(z, radius)
                              : project_entrywise_lq(z, radius, qstar);
        } else {
          proj = project_halfspace(cuts[k - 2], z);
        }
        inc[k] = z - proj;
        change = std::max(change, (proj - y).cwiseAbs().maxCoeff());
        y = proj;
      }
      if (change <= tol * scale) {
        converged = true;
        break;
      }
    }
    return y;
  }
};

FeasResiduals feasibility(const MatrixXd& x, const FeasibleSetParams& params,
                          const std::vector<Cut>& cuts) {
  FeasResiduals res;
  res.trace = std::abs(x.trace() - static_cast<double>(params.r));
  VectorXd evals;
  MatrixXd evecs;
  sym_eig_descending(x, evals, evecs);
  res.eig = std::max(0.0, std::max(-evals(evals.size() - 1), evals(0) - 1.0));
  const double radius = params.r * params.kappa * params.kappa;
  const double ball = entrywise_norm(x, params.q.dual());
  res.ball = std::max(0.0, (ball - radius) / radius);
  for (const Cut& c : cuts)
    res.cuts = std::max(0.0, std::max(res.cuts, (cut_value(c, x) - c.rhs) / c.rhs));
  return res;
}

}  // namespace

SolverState solve_gram(const MatrixXd& s, const FeasibleSetParams& params,
                       const SolverConfig& config) {
  params.validate();
  require(s.rows() == params.n && s.cols() == params.n,
          "solve: gram matrix does not match params.n");
  const int n = params.n;
  const double c0 = s.trace();

  SolverState state;
  state.x = (static_cast<double>(params.r) / n) * MatrixXd::Identity(n, n);

  VectorXd sev;
  MatrixXd svec;
  sym_eig_descending(s, sev, svec);
  const double s_op = std::max(std::abs(sev(0)), std::abs(sev(n - 1)));
  double step = s_op > 0.0 ? 1.0 / (2.0 * s_op) : 1.0;

  const auto objective = [&](const MatrixXd& x) {
    return c0 - (s.array() * x.array()).sum();
  };

  double obj_prev = objective(state.x);
  long last_oracle_iter = -1;
  bool oracle_clean = false;  // oracle ran on the current iterate, no cut
  int stalled_infeasible = 0;
  DykstraState dykstra;
  dykstra.reset(n, 2);
  double res_best = kInf;
  long res_best_iter = 0;

  for (long iter = 0; iter < config.max_iters; ++iter) {
    state.iters = iter + 1;
    const MatrixXd ascent = state.x + step * s;
    bool dykstra_ok = false;
    state.x = dykstra.project(ascent, params, state.cuts,
                              config.dykstra_max_cycles, config.dykstra_tol,
                              dykstra_ok);

    const double obj = objective(state.x);
    FeasResiduals res = feasibility(state.x, params, state.cuts);
    state.objective_trace.push_back(obj);
    state.feas_trace.push_back(res);
    state.cut_count_trace.push_back(static_cast<int>(state.cuts.size()));

    if (res.max() < res_best * 0.9) {
      res_best = res.max();
      res_best_iter = iter;
    }

    if (!dykstra_ok && res.max() > 1e3 * config.tol_feas) {
      if (++stalled_infeasible >= 50) {
        state.status = SolverStatus::Infeasible;
        state.objective = obj;
        return state;
      }
    } else {
      stalled_infeasible = 0;
    }

    if (obj > obj_prev + config.tol_obj * std::max(1.0, std::abs(obj_prev)))
      step *= 0.5;  // halving rule; projected ascent is otherwise monotone

    const bool check_now = (iter % config.cut_check_period) == 0;
    const bool stalled =
        std::abs(obj - obj_prev) <=
        config.tol_obj * std::max(1.0, std::abs(obj_prev));
    obj_prev = obj;

    if (check_now || stalled) {
      Rng rng(mix_seed(config.oracle_seed, static_cast<std::uint64_t>(iter)));
      std::optional<Cut> cut = separation_oracle_qnorm(
          state.x, params, rng, config.oracle_rounds, config.cut_slack);
      last_oracle_iter = iter;
      if (cut) {
        oracle_clean = false;
        cut->last_violated = iter;
        // Refresh an existing near-duplicate instead of growing the pool.
        bool duplicate = false;
        for (Cut& c : state.cuts) {
          if ((c.y - cut->y).cwiseAbs().maxCoeff() < 1e-12 &&
              (c.z - cut->z).cwiseAbs().maxCoeff() < 1e-12) {
            c.last_violated = iter;
            duplicate = true;
            break;
          }
        }
        if (!duplicate) {
          if (static_cast<int>(state.cuts.size()) >= config.cut_pool_size) {
            auto lru = std::min_element(
                state.cuts.begin(), state.cuts.end(),
                [](const Cut& a, const Cut& b) {
                  return a.last_violated < b.last_violated;
                });
            const std::size_t slot =
                2 + static_cast<std::size_t>(lru - state.cuts.begin());
            if (slot < dykstra.inc.size()) dykstra.inc[slot].setZero();
            *lru = *cut;
          } else {
            state.cuts.push_back(*cut);
          }
          ++state.cuts_added;
        }
      } else {
        oracle_clean = true;
      }
    }
    for (Cut& c : state.cuts)
      if (cut_value(c, state.x) > c.rhs * (1.0 + config.cut_slack))
        c.last_violated = iter;

    if (stalled && res.max() <= config.tol_feas && oracle_clean &&
        last_oracle_iter == iter) {
      state.status = SolverStatus::Converged;
      break;
    }

    // Objective and feasibility both stalled with no progress for a long
    // stretch: a fresh full-budget projection either polishes the iterate to
    // tolerance or certifies the plateau, instead of spinning to max_iters.
    if (stalled && oracle_clean && last_oracle_iter == iter &&
        iter - res_best_iter >= 30) {
      DykstraState polish;
      polish.reset(n, 2 + state.cuts.size());
      bool polished = false;
      state.x = polish.project(state.x, params, state.cuts,
                               10 * config.dykstra_max_cycles,
                               config.dykstra_tol, polished);
      res = feasibility(state.x, params, state.cuts);
      state.feas_trace.back() = res;
      state.objective_trace.back() = objective(state.x);
      obj_prev = state.objective_trace.back();
      if (res.max() <= config.tol_feas && oracle_clean) {
        state.status = SolverStatus::Converged;
      } else {
        state.status = SolverStatus::MaxIters;
      }
      break;
    }
  }

  state.objective = state.objective_trace.empty()
                        ? objective(state.x)
                        : state.objective_trace.back();

  // Report the measured q->q* norm of the final iterate (Lemma-2 style c).
  if (params.q.is_inf()) {
    try {
      const NormCertificate cert = op_inf_to_1_exact(state.x);
      state.measured_qqstar = cert.value;
      state.measured_exact = true;
    } catch (const DimensionTooLarge&) {
      Rng rng(config.oracle_seed);
      state.measured_qqstar =
          op_inf_to_1_heuristic(state.x, config.oracle_rounds, rng).value;
      state.measured_exact = false;
    }
  } else {
    Rng rng(config.oracle_seed);
    state.measured_qqstar =
        op_q_to_qstar_heuristic(state.x, params.q.value(),
                                config.oracle_rounds, rng)
            .value;
    state.measured_exact = false;
  }
  state.kappa_sq_ratio =
      state.measured_qqstar / (params.kappa * params.kappa);
  return state;
}

SolverState solve(const Dataset& data, const FeasibleSetParams& params,
                  const SolverConfig& config) {
  require(data.n() == params.n, "solve: dataset dimension != params.n");
  require(data.m() >= 1, "solve: empty dataset");
  return solve_gram(second_moment(data.samples), params, config);
}

double compute_delta_diagnostic_gram(const MatrixXd& x, const MatrixXd& s,
                                     const CovarianceModel& model) {
  const MatrixXd e = s - model.sigma();
  return std::abs((e.array() * x.array()).sum());
}

double compute_delta_diagnostic(const MatrixXd& x, const Dataset& data,
                                const CovarianceModel& model) {
  return compute_delta_diagnostic_gram(x, second_moment(data.samples), model);
}

void write_trace_csv(const SolverState& state, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open trace file: " + path);
  out << "iter,objective,max_residual,n_cuts\n";
  for (std::size_t i = 0; i < state.objective_trace.size(); ++i) {
    out << i << ',' << state.objective_trace[i] << ','
        << state.feas_trace[i].max() << ',' << state.cut_count_trace[i]
        << '\n';
  }
}

}  // namespace rsub
