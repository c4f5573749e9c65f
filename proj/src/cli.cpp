#include "rsub/cli.hpp"

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rsub/adversary.hpp"
#include "rsub/covmodel.hpp"
#include "rsub/errors.hpp"
#include "rsub/estimators.hpp"
#include "rsub/harness.hpp"
#include "rsub/metrics.hpp"
#include "rsub/sidecar.hpp"
#include "rsub/solver.hpp"
#include "rsub/svgplot.hpp"

namespace rsub {

namespace {

double parse_q(const std::string& s) {
  if (s == "inf" || s == "infinity") return kInf;
  return std::stod(s);
}

std::uint64_t config_hash(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void emit(const nlohmann::json& summary, bool as_json) {
  if (as_json) {
    std::cout << summary.dump() << '\n';
    return;
  }
  for (const auto& [key, value] : summary.items())
    std::cout << key << ": " << value.dump() << '\n';
}

struct GenerateArgs {
  std::string model = "spiked";
  int n = 16, r = 1;
  double theta = 1.0, kappa = 2.0, sigma = 1.0;
  long m = 1000;
  int mu_support = 0;
  double mu_value = 1.0;
  std::uint64_t seed = 0;
  std::string out;
  bool json = false;
};

int cmd_generate(const GenerateArgs& a) {
  CovarianceModel model;
  VectorXd mu = VectorXd::Zero(a.n);
  if (a.model == "spiked") {
    model = spiked_model(a.n, a.r, a.theta, a.kappa);
  } else if (a.model == "isotropic") {
    model = general_model(VectorXd::Constant(a.n, a.sigma * a.sigma), 1,
                          BasisSpec::custom(MatrixXd::Identity(a.n, 1)));
  } else {
    throw Error("unknown model kind: " + a.model);
  }
  if (a.mu_support > 0) {
    require(a.mu_support <= a.n, "mu support exceeds n");
    mu.head(a.mu_support).array() = a.mu_value;
  }
  const Dataset ds = sample(model, static_cast<int>(a.m), mu, a.seed);
  store_dataset(a.out, ds, dataset_sidecar(ds, &model));
  nlohmann::json summary;
  summary["out"] = a.out;
  summary["n"] = a.n;
  summary["m"] = a.m;
  summary["kappa_measured"] = model.kappa;
  summary["support_k"] = model.support_k;
  emit(summary, a.json);
  return 0;
}

struct AttackArgs {
  std::string kind = "instance-optimal";
  std::string in, out;
  double delta = 0.0, eta = 0.05, c = 0.1;
  std::uint64_t seed = 0;
  bool json = false;
};

int cmd_attack(const AttackArgs& a) {
  LoadedDataset loaded = load_dataset(a.in);
  nlohmann::json summary;
  summary["attack"] = a.kind;
  summary["delta"] = a.delta;

  if (a.kind == "constant-shift") {
    const Dataset out = attack_constant_shift(
        loaded.data, a.delta, VectorXd::Ones(loaded.data.n()));
    nlohmann::json side = dataset_sidecar(
        out, loaded.model ? &*loaded.model : nullptr);
    const BudgetReport budget = validate_budget(loaded.data, out, kInf, a.delta);
    side["budget"] = {{"max_violation", budget.max_violation},
                      {"violating_columns", budget.violating_columns}};
    store_dataset(a.out, out, side);
    summary["max_violation"] = budget.max_violation;
  } else if (a.kind == "mean-sparse") {
    const MeanSparseAttack out = attack_mean_sparse(loaded.data, a.delta);
    nlohmann::json side = dataset_sidecar(
        out.perturbed, loaded.model ? &*loaded.model : nullptr);
    side["s"] = out.s;
    side["displacement"] = out.displacement;
    store_dataset(a.out, out.perturbed, side);
    summary["s"] = out.s;
    summary["displacement"] = out.displacement;
  } else {
    if (!loaded.model)
      throw Error("coupled attacks need the model sidecar from generate");
    CoupledInstance inst;
    if (a.kind == "minmax") {
      MinmaxOptions opts;
      opts.c4 = a.c;
      inst = attack_minmax(*loaded.model, loaded.data, a.delta, a.seed, opts);
    } else if (a.kind == "instance-optimal") {
      InstanceOptimalOptions opts;
      opts.c = a.c;
      inst = attack_instance_optimal(*loaded.model, loaded.data, a.delta,
                                     a.eta, a.seed, opts);
    } else {
      throw Error("unknown attack: " + a.kind);
    }
    const BudgetReport budget =
        validate_budget(inst.clean, inst.perturbed, kInf, a.delta);
    store_dataset(a.out, inst.perturbed,
                  coupled_sidecar(inst, *loaded.model, budget));
    summary["epsilon"] = inst.epsilon;
    summary["k_prime"] = inst.k_prime;
    summary["kappa_used"] = inst.kappa_used;
    summary["max_violation"] = inst.max_violation;
    summary["resamples"] = inst.resamples;
  }
  summary["out"] = a.out;
  emit(summary, a.json);
  return 0;
}

struct SolveArgs {
  std::string in, config, trace, out;
  int r = 1;
  double kappa = 0.0;
  std::string q = "inf";
  double kappa_slack = 1.15;
  bool json = false;
};

FeasibleSetParams make_params(const LoadedDataset& loaded, int r, double kappa,
                              double slack, const std::string& qs) {
  FeasibleSetParams params;
  params.n = loaded.data.n();
  params.r = r;
  params.q = NormIndex::from_value(parse_q(qs));
  if (kappa > 0.0) {
    params.kappa = kappa;
  } else if (loaded.model) {
    params.kappa = slack * loaded.model->kappa;
  } else {
    throw Error("no --kappa given and no model sidecar to derive it from");
  }
  return params;
}

int cmd_solve(const SolveArgs& a) {
  LoadedDataset loaded = load_dataset(a.in);
  const SolverConfig config =
      a.config.empty() ? SolverConfig{} : SolverConfig::from_json_file(a.config);
  const FeasibleSetParams params =
      make_params(loaded, a.r, a.kappa, a.kappa_slack, a.q);
  const SolverState state = solve(loaded.data, params, config);
  if (!a.trace.empty()) write_trace_csv(state, a.trace);
  if (!a.out.empty()) {
    Dataset xhat;
    xhat.samples = state.x;
    nlohmann::json side;
    side["kind"] = "solver-state";
    side["objective"] = state.objective;
    side["iters"] = state.iters;
    side["kappa"] = params.kappa;
    store_dataset(a.out, xhat, side);
  }
  nlohmann::json summary;
  summary["status"] = state.status == SolverStatus::Converged ? "converged"
                      : state.status == SolverStatus::MaxIters ? "max-iters"
                                                                : "infeasible";
  summary["objective"] = state.objective;
  summary["iters"] = state.iters;
  summary["cuts"] = state.cuts.size();
  summary["kappa_sq_ratio"] = state.kappa_sq_ratio;
  summary["max_residual"] =
      state.feas_trace.empty() ? 0.0 : state.feas_trace.back().max();
  emit(summary, a.json);
  return state.status == SolverStatus::Infeasible ? 1 : 0;
}

struct EstimateArgs {
  std::string algo = "robust-projection";
  std::string in, out, config;
  int r = 1;
  double kappa = 0.0;
  double kappa_slack = 1.15;
  std::string q = "inf";
  bool json = false;
};

int cmd_estimate(const EstimateArgs& a) {
  LoadedDataset loaded = load_dataset(a.in);
  const SolverConfig config =
      a.config.empty() ? SolverConfig{} : SolverConfig::from_json_file(a.config);
  nlohmann::json summary;
  summary["algo"] = a.algo;

  ProjectionMatrix proj;
  double delta_diag = 0.0;
  if (a.algo == "robust-projection" || a.algo == "adv-robust-pca") {
    const FeasibleSetParams params =
        make_params(loaded, a.r, a.kappa, a.kappa_slack, a.q);
    if (a.algo == "robust-projection") {
      RobustProjectionResult res = robust_projection(loaded.data, params, config);
      proj = std::move(res.projector);
      summary["solver_status"] =
          res.solver.status == SolverStatus::Converged ? "converged" : "max-iters";
      summary["kappa_sq_ratio"] = res.solver.kappa_sq_ratio;
      if (loaded.model)
        delta_diag = compute_delta_diagnostic(res.solver.x, loaded.data,
                                              *loaded.model);
    } else {
      CovEstimate est = adv_robust_pca(loaded.data, params, config);
      proj = est.projector;
      summary["m_proj"] = est.m_proj;
      summary["m_cov"] = est.m_cov;
      if (loaded.model) {
        summary["frob_cov_sq"] =
            (est.sigma_top_hat - loaded.model->sigma_top()).squaredNorm();
        delta_diag = compute_delta_diagnostic(est.solver.x, loaded.data,
                                              *loaded.model);
      }
    }
  } else if (a.algo == "statistical-r1") {
    double kappa = a.kappa;
    if (kappa <= 0.0) {
      if (!loaded.model) throw Error("statistical-r1 needs --kappa or a model");
      kappa = a.kappa_slack * loaded.model->kappa;
    }
    StatEstimatorResult res = statistical_estimator_r1(loaded.data, kappa);
    proj = std::move(res.projector);
    summary["supports_scanned"] = res.supports_scanned;
  } else if (a.algo == "vanilla-pca") {
    proj = vanilla_pca(loaded.data, a.r, NormIndex::from_value(parse_q(a.q)));
  } else {
    throw Error("unknown estimator: " + a.algo);
  }

  summary["rank"] = proj.rank;
  summary["measured_kappa"] = proj.measured_kappa;
  if (loaded.model) {
    const MatrixXd pi_star = loaded.model->projector();
    summary["sin_theta_sq"] =
        sin_theta_sq(proj.p, pi_star, proj.rank, loaded.model->r);
    summary["frob_proj_sq"] = (proj.p - pi_star).squaredNorm();
    summary["delta_diag"] = delta_diag;
  }
  if (!a.out.empty()) {
    Dataset basis;
    basis.samples = proj.basis;
    nlohmann::json side;
    side["kind"] = "projector";
    side["rank"] = proj.rank;
    side["measured_kappa"] = proj.measured_kappa;
    side["kappa_exact"] = proj.kappa_exact;
    side["eigengap_tie"] = proj.eigengap_tie;
    side["delta_diag"] = delta_diag;
    side["config_hash"] = config_hash(config.to_json_text());
    if (loaded.model && summary.contains("sin_theta_sq"))
      side["sin_theta_sq"] = summary["sin_theta_sq"];
    store_dataset(a.out, basis, side);
    summary["out"] = a.out;
  }
  emit(summary, a.json);
  return 0;
}

struct MeanArgs {
  std::string in, out;
  std::string q = "inf";
  double delta = 0.0, sigma = 1.0;
  bool json = false;
};

int cmd_mean(const MeanArgs& a) {
  LoadedDataset loaded = load_dataset(a.in);
  const MeanEstimate est =
      robust_mean(loaded.data, parse_q(a.q), a.delta, a.sigma);
  nlohmann::json summary;
  summary["eta"] = est.eta;
  summary["shrinkage"] = est.shrinkage;
  nlohmann::json mu = nlohmann::json::array();
  for (int i = 0; i < est.mu_hat.size(); ++i) mu.push_back(est.mu_hat(i));
  summary["mu_hat"] = mu;
  if (loaded.data.mu)
    summary["error_sq"] = (est.mu_hat - *loaded.data.mu).squaredNorm();
  if (!a.out.empty()) {
    write_json(a.out, summary);
    summary["out"] = a.out;
  }
  emit(summary, a.json);
  return 0;
}

struct SweepArgs {
  std::string spec, out;
  bool json = false;
};

int cmd_sweep(const SweepArgs& a) {
  SweepSpec spec = SweepSpec::from_json_file(a.spec);
  if (!a.out.empty()) spec.output_path = a.out;
  const std::vector<ExperimentRecord> records = run_sweep(spec);
  long ok = 0, skipped = 0, errors = 0;
  for (const ExperimentRecord& r : records) {
    if (r.status == "ok") ++ok;
    else if (r.status == "skipped") ++skipped;
    else ++errors;
  }
  nlohmann::json summary;
  summary["records"] = records.size();
  summary["ok"] = ok;
  summary["skipped"] = skipped;
  summary["errors"] = errors;
  if (!spec.output_path.empty()) {
    summary["output"] = spec.output_path;
    summary["determinism_hash"] = determinism_hash(spec.output_path);
  }
  emit(summary, a.json);
  return errors == 0 ? 0 : 1;
}

struct PlotArgs {
  PlotSpec spec;
  bool json = false;
};

int cmd_plot(const PlotArgs& a) {
  render_plot(a.spec);
  nlohmann::json summary;
  summary["out"] = a.spec.output_svg;
  emit(summary, a.json);
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"robust principal-subspace estimation under bounded per-sample "
               "perturbations"};
  app.require_subcommand(1);

  GenerateArgs gen;
  CLI::App* generate = app.add_subcommand("generate", "sample a dataset");
  generate->add_option("--model", gen.model, "spiked|isotropic");
  generate->add_option("--n", gen.n)->required();
  generate->add_option("--r", gen.r);
  generate->add_option("--theta", gen.theta);
  generate->add_option("--kappa", gen.kappa);
  generate->add_option("--sigma", gen.sigma, "isotropic noise level");
  generate->add_option("--m", gen.m)->required();
  generate->add_option("--mu-support", gen.mu_support,
                       "first s coordinates of mu set to --mu-value");
  generate->add_option("--mu-value", gen.mu_value);
  generate->add_option("--seed", gen.seed)->required();
  generate->add_option("--out", gen.out)->required();
  generate->add_flag("--json", gen.json);

  AttackArgs atk;
  CLI::App* attack = app.add_subcommand("attack", "perturb a dataset");
  attack->add_option("--attack", atk.kind,
                     "minmax|instance-optimal|constant-shift|mean-sparse");
  attack->add_option("--in", atk.in)->required();
  attack->add_option("--out", atk.out)->required();
  attack->add_option("--delta", atk.delta)->required();
  attack->add_option("--eta", atk.eta);
  attack->add_option("--c", atk.c, "attack constant (c or c4)");
  attack->add_option("--seed", atk.seed)->required();
  attack->add_flag("--json", atk.json);

  SolveArgs sol;
  CLI::App* solve_cmd = app.add_subcommand("solve", "run the convex program");
  solve_cmd->add_option("--in", sol.in)->required();
  solve_cmd->add_option("--r", sol.r)->required();
  solve_cmd->add_option("--kappa", sol.kappa, "0 = derive from model sidecar");
  solve_cmd->add_option("--kappa-slack", sol.kappa_slack);
  solve_cmd->add_option("--q", sol.q);
  solve_cmd->add_option("--config", sol.config, "solver config JSON");
  solve_cmd->add_option("--trace", sol.trace, "iteration trace CSV");
  solve_cmd->add_option("--out", sol.out, "write X-hat container");
  solve_cmd->add_flag("--json", sol.json);

  EstimateArgs est;
  CLI::App* estimate = app.add_subcommand("estimate", "run a pipeline");
  estimate->add_option("--algo", est.algo,
                       "robust-projection|adv-robust-pca|statistical-r1|"
                       "vanilla-pca");
  estimate->add_option("--in", est.in)->required();
  estimate->add_option("--out", est.out, "write projector container");
  estimate->add_option("--r", est.r);
  estimate->add_option("--kappa", est.kappa, "0 = derive from model sidecar");
  estimate->add_option("--kappa-slack", est.kappa_slack);
  estimate->add_option("--q", est.q);
  estimate->add_option("--config", est.config);
  estimate->add_flag("--json", est.json);

  MeanArgs mean;
  CLI::App* mean_cmd = app.add_subcommand("mean", "robust mean estimation");
  mean_cmd->add_option("--in", mean.in)->required();
  mean_cmd->add_option("--q", mean.q);
  mean_cmd->add_option("--delta", mean.delta)->required();
  mean_cmd->add_option("--sigma", mean.sigma)->required();
  mean_cmd->add_option("--out", mean.out);
  mean_cmd->add_flag("--json", mean.json);

  SweepArgs swp;
  CLI::App* sweep = app.add_subcommand("sweep", "run a parameter sweep");
  sweep->add_option("--spec", swp.spec)->required();
  sweep->add_option("--out", swp.out, "override spec output path");
  sweep->add_flag("--json", swp.json);

  PlotArgs plt;
  CLI::App* plot = app.add_subcommand("plot", "render a sweep CSV as SVG");
  plot->add_option("--in", plt.spec.input_csv)->required();
  plot->add_option("--x", plt.spec.x_col);
  plot->add_option("--y", plt.spec.y_col);
  plot->add_option("--group-by", plt.spec.group_by);
  plot->add_flag("--logx", plt.spec.logx);
  plot->add_flag("--logy", plt.spec.logy);
  plot->add_flag("--ref-comp", plt.spec.ref_comp);
  plot->add_flag("--ref-lower", plt.spec.ref_lower);
  plot->add_option("--out", plt.spec.output_svg)->required();
  plot->add_flag("--json", plt.json);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (generate->parsed()) return cmd_generate(gen);
    if (attack->parsed()) return cmd_attack(atk);
    if (solve_cmd->parsed()) return cmd_solve(sol);
    if (estimate->parsed()) return cmd_estimate(est);
    if (mean_cmd->parsed()) return cmd_mean(mean);
    if (sweep->parsed()) return cmd_sweep(swp);
    if (plot->parsed()) return cmd_plot(plt);
  } catch (const std::exception& e) {
    nlohmann::json err;
    err["error"] = e.what();
    std::cerr << err.dump() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace rsub
