#include "rsub/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "rsub/adversary.hpp"
#include "rsub/errors.hpp"
#include "rsub/estimators.hpp"
#include "rsub/kernels.hpp"
#include "rsub/rng.hpp"

namespace rsub {

std::string to_string(AdversaryKind k) {
  switch (k) {
    case AdversaryKind::None: return "none";
    case AdversaryKind::ConstantShift: return "constant-shift";
    case AdversaryKind::Minmax: return "minmax";
    case AdversaryKind::InstanceOptimal: return "instance-optimal";
  }
  return "none";
}

std::string to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::SDP: return "sdp";
    case EstimatorKind::StatisticalR1: return "statistical-r1";
    case EstimatorKind::VanillaPCA: return "vanilla-pca";
  }
  return "sdp";
}

AdversaryKind adversary_from_string(const std::string& s) {
  if (s == "none") return AdversaryKind::None;
  if (s == "constant-shift") return AdversaryKind::ConstantShift;
  if (s == "minmax") return AdversaryKind::Minmax;
  if (s == "instance-optimal") return AdversaryKind::InstanceOptimal;
  throw Error("unknown adversary: " + s);
}

EstimatorKind estimator_from_string(const std::string& s) {
  if (s == "sdp") return EstimatorKind::SDP;
  if (s == "statistical-r1") return EstimatorKind::StatisticalR1;
  if (s == "vanilla-pca") return EstimatorKind::VanillaPCA;
  throw Error("unknown estimator: " + s);
}

void SweepSpec::validate() const {
  const auto positive = [](auto v) { return v > 0; };
  require(!n_grid.empty() && std::all_of(n_grid.begin(), n_grid.end(), positive),
          "sweep: n grid must be positive");
  require(!r_grid.empty() && std::all_of(r_grid.begin(), r_grid.end(), positive),
          "sweep: r grid must be positive");
  require(!theta_grid.empty() &&
              std::all_of(theta_grid.begin(), theta_grid.end(), positive),
          "sweep: theta grid must be positive");
  require(!kappa_grid.empty() &&
              std::all_of(kappa_grid.begin(), kappa_grid.end(), positive),
          "sweep: kappa grid must be positive");
  require(!m_grid.empty() && std::all_of(m_grid.begin(), m_grid.end(), positive),
          "sweep: m grid must be positive");
  require(!delta_grid.empty() &&
              std::all_of(delta_grid.begin(), delta_grid.end(),
                          [](double d) { return d >= 0.0; }),
          "sweep: delta grid must be nonnegative");
  require(seeds_per_cell >= 1, "sweep: seeds_per_cell >= 1");
}

long SweepSpec::cell_count() const {
  return static_cast<long>(n_grid.size()) * r_grid.size() *
         theta_grid.size() * kappa_grid.size() * m_grid.size() *
         delta_grid.size();
}

namespace {

struct CellCoords {
  int n;
  int r;
  double theta;
  double kappa;
  long m;
  double delta;
};

CellCoords cell_coords(const SweepSpec& spec, long cell) {
  const long nd = static_cast<long>(spec.delta_grid.size());
  const long nm = static_cast<long>(spec.m_grid.size());
  const long nk = static_cast<long>(spec.kappa_grid.size());
  const long nt = static_cast<long>(spec.theta_grid.size());
  const long nr = static_cast<long>(spec.r_grid.size());
  CellCoords c;
  c.delta = spec.delta_grid[cell % nd];
  cell /= nd;
  c.m = spec.m_grid[cell % nm];
  cell /= nm;
  c.kappa = spec.kappa_grid[cell % nk];
  cell /= nk;
  c.theta = spec.theta_grid[cell % nt];
  cell /= nt;
  c.r = spec.r_grid[cell % nr];
  cell /= nr;
  c.n = spec.n_grid[cell];
  return c;
}

nlohmann::json grid_to_json(const std::vector<double>& v) { return v; }

}  // namespace

SweepSpec SweepSpec::from_json_text(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  SweepSpec s;
  if (j.contains("n")) s.n_grid = j["n"].get<std::vector<int>>();
  if (j.contains("r")) s.r_grid = j["r"].get<std::vector<int>>();
  if (j.contains("theta")) s.theta_grid = j["theta"].get<std::vector<double>>();
  if (j.contains("kappa")) s.kappa_grid = j["kappa"].get<std::vector<double>>();
  if (j.contains("m")) s.m_grid = j["m"].get<std::vector<long>>();
  if (j.contains("delta")) s.delta_grid = j["delta"].get<std::vector<double>>();
  if (j.contains("adversary"))
    s.adversary = adversary_from_string(j["adversary"].get<std::string>());
  if (j.contains("estimator"))
    s.estimator = estimator_from_string(j["estimator"].get<std::string>());
  s.seeds_per_cell = j.value("seeds_per_cell", s.seeds_per_cell);
  s.master_seed = j.value("master_seed", s.master_seed);
  s.kappa_slack = j.value("kappa_slack", s.kappa_slack);
  s.attack_constant = j.value("attack_constant", s.attack_constant);
  s.attack_eta = j.value("attack_eta", s.attack_eta);
  if (j.contains("solver"))
    s.solver = SolverConfig::from_json_text(j["solver"].dump());
  s.output_path = j.value("output", s.output_path);
  s.force_serial = j.value("force_serial", s.force_serial);
  s.validate();
  return s;
}

SweepSpec SweepSpec::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open sweep spec: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_json_text(text);
}

std::string SweepSpec::to_json_text() const {
  nlohmann::json j;
  j["n"] = n_grid;
  j["r"] = r_grid;
  j["theta"] = grid_to_json(theta_grid);
  j["kappa"] = grid_to_json(kappa_grid);
  j["m"] = m_grid;
  j["delta"] = grid_to_json(delta_grid);
  j["adversary"] = to_string(adversary);
  j["estimator"] = to_string(estimator);
  j["seeds_per_cell"] = seeds_per_cell;
  j["master_seed"] = master_seed;
  j["kappa_slack"] = kappa_slack;
  j["attack_constant"] = attack_constant;
  j["attack_eta"] = attack_eta;
  j["solver"] = nlohmann::json::parse(solver.to_json_text());
  j["output"] = output_path;
  return j.dump(2);
}

const char* const kRecordCsvHeader =
    "schema,cell_index,seed_index,cell_seed,n,r,theta,kappa_target,"
    "kappa_measured,kappa_solver,delta,m,adversary,estimator,status,"
    "sin_theta_sq,frob_proj_sq,frob_cov_sq,inner_product,"
    "predicted_bound_proj,predicted_bound_lower,predicted_bound_cov,"
    "delta_diag,epsilon_attack,max_violation,solver_iters,solver_status,"
    "kappa_sq_ratio,wall_time_ms,message";
const int kRecordSchemaVersion = 1;

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string sanitize(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return out;
}

constexpr int kWallTimeColumn = 28;  // 0-based; excluded from the hash

}  // namespace

std::string record_to_csv(const ExperimentRecord& rec) {
  std::ostringstream out;
  out << kRecordSchemaVersion << ',' << rec.cell_index << ',' << rec.seed_index
      << ',' << rec.cell_seed << ',' << rec.n << ',' << rec.r << ','
      << fmt_double(rec.theta) << ',' << fmt_double(rec.kappa_target) << ','
      << fmt_double(rec.kappa_measured) << ',' << fmt_double(rec.kappa_solver)
      << ',' << fmt_double(rec.delta) << ',' << rec.m << ',' << rec.adversary
      << ',' << rec.estimator << ',' << rec.status << ','
      << fmt_double(rec.report.sin_theta_sq) << ','
      << fmt_double(rec.report.frob_proj_sq) << ','
      << fmt_double(rec.report.frob_cov_sq) << ','
      << fmt_double(rec.report.inner_product) << ','
      << fmt_double(rec.report.predicted_bound_proj) << ','
      << fmt_double(rec.report.predicted_bound_lower) << ','
      << fmt_double(rec.report.predicted_bound_cov) << ','
      << fmt_double(rec.report.delta_diag) << ','
      << fmt_double(rec.epsilon_attack) << ','
      << fmt_double(rec.max_violation) << ',' << rec.solver_iters << ','
      << rec.solver_status << ',' << fmt_double(rec.kappa_sq_ratio) << ','
      << fmt_double(rec.wall_time_ms) << ',' << sanitize(rec.message);
  return out.str();
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

ExperimentRecord record_from_csv(const std::string& line) {
  const std::vector<std::string> f = split_csv(line);
  if (f.size() != 30) throw IoError("record_from_csv: wrong field count");
  if (std::stoi(f[0]) != kRecordSchemaVersion)
    throw IoError("record_from_csv: schema version mismatch");
  ExperimentRecord r;
  r.cell_index = std::stol(f[1]);
  r.seed_index = std::stoi(f[2]);
  r.cell_seed = std::stoull(f[3]);
  r.n = std::stoi(f[4]);
  r.r = std::stoi(f[5]);
  r.theta = std::stod(f[6]);
  r.kappa_target = std::stod(f[7]);
  r.kappa_measured = std::stod(f[8]);
  r.kappa_solver = std::stod(f[9]);
  r.delta = std::stod(f[10]);
  r.m = std::stol(f[11]);
  r.adversary = f[12];
  r.estimator = f[13];
  r.status = f[14];
  r.report.sin_theta_sq = std::stod(f[15]);
  r.report.frob_proj_sq = std::stod(f[16]);
  r.report.frob_cov_sq = std::stod(f[17]);
  r.report.inner_product = std::stod(f[18]);
  r.report.predicted_bound_proj = std::stod(f[19]);
  r.report.predicted_bound_lower = std::stod(f[20]);
  r.report.predicted_bound_cov = std::stod(f[21]);
  r.report.delta_diag = std::stod(f[22]);
  r.epsilon_attack = std::stod(f[23]);
  r.max_violation = std::stod(f[24]);
  r.solver_iters = std::stol(f[25]);
  r.solver_status = f[26];
  r.kappa_sq_ratio = std::stod(f[27]);
  r.wall_time_ms = std::stod(f[28]);
  r.message = f[29];
  return r;
}

ExperimentRecord run_task(const SweepSpec& spec, long cell_index,
                          int seed_index) {
  const auto t0 = std::chrono::steady_clock::now();
  const CellCoords cc = cell_coords(spec, cell_index);
  ExperimentRecord rec;
  rec.cell_index = cell_index;
  rec.seed_index = seed_index;
  rec.cell_seed = mix_seed(spec.master_seed,
                           static_cast<std::uint64_t>(cell_index),
                           static_cast<std::uint64_t>(seed_index));
  rec.n = cc.n;
  rec.r = cc.r;
  rec.theta = cc.theta;
  rec.kappa_target = cc.kappa;
  rec.delta = cc.delta;
  rec.m = cc.m;
  rec.adversary = to_string(spec.adversary);
  rec.estimator = to_string(spec.estimator);

  try {
    const CovarianceModel model =
        spiked_model(cc.n, cc.r, cc.theta, cc.kappa);
    rec.kappa_measured = model.kappa;
    rec.kappa_solver = spec.kappa_slack * model.kappa;
    const Dataset clean = sample(model, static_cast<int>(cc.m), rec.cell_seed);

    Dataset working = clean;
    switch (spec.adversary) {
      case AdversaryKind::None:
        break;
      case AdversaryKind::ConstantShift: {
        working =
            attack_constant_shift(clean, cc.delta, VectorXd::Ones(cc.n));
        rec.max_violation = cc.delta;
        break;
      }
      case AdversaryKind::Minmax: {
        try {
          MinmaxOptions opts;
          opts.c4 = spec.attack_constant;
          CoupledInstance inst =
              attack_minmax(model, clean, cc.delta, rec.cell_seed, opts);
          rec.epsilon_attack = inst.epsilon;
          rec.max_violation = inst.max_violation;
          working = std::move(inst.perturbed);
        } catch (const ParameterWindow& e) {
          rec.status = "skipped";
          rec.message = e.what();
          return rec;
        } catch (const SupportOverflow& e) {
          rec.status = "skipped";
          rec.message = e.what();
          return rec;
        }
        break;
      }
      case AdversaryKind::InstanceOptimal: {
        try {
          InstanceOptimalOptions opts;
          opts.c = spec.attack_constant;
          CoupledInstance inst = attack_instance_optimal(
              model, clean, cc.delta, spec.attack_eta, rec.cell_seed, opts);
          rec.epsilon_attack = inst.epsilon;
          rec.max_violation = inst.max_violation;
          working = std::move(inst.perturbed);
        } catch (const ParameterWindow& e) {
          rec.status = "skipped";
          rec.message = e.what();
          return rec;
        } catch (const SupportOverflow& e) {
          rec.status = "skipped";
          rec.message = e.what();
          return rec;
        }
        break;
      }
    }

    const MatrixXd s_working = second_moment(working.samples);
    ProjectionMatrix proj;
    switch (spec.estimator) {
      case EstimatorKind::SDP: {
        FeasibleSetParams params;
        params.n = cc.n;
        params.r = cc.r;
        params.kappa = rec.kappa_solver;
        params.q = NormIndex::infinity();
        RobustProjectionResult res =
            robust_projection_gram(s_working, params, spec.solver);
        proj = std::move(res.projector);
        rec.solver_iters = res.solver.iters;
        rec.solver_status = res.solver.status == SolverStatus::Converged
                                ? "converged"
                                : "max-iters";
        rec.kappa_sq_ratio = res.solver.kappa_sq_ratio;
        rec.report.delta_diag =
            compute_delta_diagnostic_gram(res.solver.x, s_working, model);
        break;
      }
      case EstimatorKind::StatisticalR1: {
        require(cc.r == 1, "statistical-r1 estimator needs r = 1");
        Dataset tmp;
        tmp.samples = working.samples;
        StatEstimatorResult res =
            statistical_estimator_r1(tmp, rec.kappa_solver);
        proj = std::move(res.projector);
        rec.solver_status = "enumerated";
        rec.report.delta_diag =
            compute_delta_diagnostic_gram(proj.p, s_working, model);
        break;
      }
      case EstimatorKind::VanillaPCA: {
        proj = vanilla_pca_gram(s_working, cc.r, NormIndex::infinity());
        rec.solver_status = "pca";
        rec.report.delta_diag =
            compute_delta_diagnostic_gram(proj.p, s_working, model);
        break;
      }
    }

    const MatrixXd pi_star = model.projector();
    rec.report.sin_theta_sq = sin_theta_sq(proj.p, pi_star, proj.rank, cc.r);
    rec.report.frob_proj_sq = (proj.p - pi_star).squaredNorm();
    rec.report.inner_product = (proj.p.array() * pi_star.array()).sum();
    const MatrixXd sigma_top_hat = proj.p * s_working * proj.p;
    rec.report.frob_cov_sq = (sigma_top_hat - model.sigma_top()).squaredNorm();

    PredictionParams pp;
    pp.kappa = model.kappa;
    pp.q = kInf;
    rec.report.predicted_bound_proj =
        predicted_error_comp(model, pp, cc.delta, cc.m);
    rec.report.predicted_bound_lower =
        predicted_error_lower(model, pp, cc.delta, cc.m);
    rec.report.predicted_bound_cov =
        sqr(model.lambda1()) * rec.report.frob_proj_sq +
        model.lambda1() * sqr(model.kappa) * sqr(cc.delta);
    rec.status = "ok";
  } catch (const std::exception& e) {
    rec.status = "error";
    rec.message = e.what();
  }

  const auto t1 = std::chrono::steady_clock::now();
  rec.wall_time_ms =
      std::chrono::duration<double, std::milli>(t1 - t0).count();
  return rec;
}

namespace {

std::map<long, std::string> load_existing_rows(const std::string& path) {
  std::map<long, std::string> rows;
  std::ifstream in(path);
  if (!in) return rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      first = false;
      continue;  // header
    }
    try {
      const ExperimentRecord rec = record_from_csv(line);
      rows[rec.cell_index * 1000000L + rec.seed_index] = line;
    } catch (const std::exception&) {
      // torn trailing line from a crash; recompute that task
    }
  }
  return rows;
}

}  // namespace

std::vector<ExperimentRecord> run_sweep(const SweepSpec& spec) {
  spec.validate();
  const long cells = spec.cell_count();
  const long tasks = spec.task_count();

  std::map<long, std::string> existing;
  if (!spec.output_path.empty()) existing = load_existing_rows(spec.output_path);

  std::vector<std::string> rows(tasks);
  std::vector<char> done(tasks, 0);
  for (long t = 0; t < tasks; ++t) {
    const long cell = t / spec.seeds_per_cell;
    const int seed = static_cast<int>(t % spec.seeds_per_cell);
    const auto it = existing.find(cell * 1000000L + seed);
    if (it != existing.end()) {
      rows[t] = it->second;
      done[t] = 1;
    }
  }

  const bool fresh = existing.empty();
  std::ofstream out;
  if (!spec.output_path.empty() && fresh) {
    out.open(spec.output_path, std::ios::trunc);
    if (!out) throw IoError("cannot open sweep output: " + spec.output_path);
    out << kRecordCsvHeader << '\n';
    out.flush();
  }

  std::vector<ExperimentRecord> records(tasks);
  const int pool = spec.force_serial ? 1 : num_threads();
  const long chunk = std::max<long>(1, 4L * pool);
  for (long base = 0; base < tasks; base += chunk) {
    const long end = std::min(tasks, base + chunk);
#pragma omp parallel for schedule(dynamic) num_threads(pool)
    for (long t = base; t < end; ++t) {
      if (done[t]) {
        records[t] = record_from_csv(rows[t]);
        continue;
      }
      const long cell = t / spec.seeds_per_cell;
      const int seed = static_cast<int>(t % spec.seeds_per_cell);
      records[t] = run_task(spec, cell, seed);
      rows[t] = record_to_csv(records[t]);
    }
    if (out.is_open()) {  // chunks land in task order: crash-safe prefix
      for (long t = base; t < end; ++t) out << rows[t] << '\n';
      out.flush();
    }
  }

  if (!spec.output_path.empty() && !fresh) {
    // Resume path: rewrite the canonical file (same bytes as a fresh run).
    std::ofstream rewrite(spec.output_path, std::ios::trunc);
    if (!rewrite)
      throw IoError("cannot rewrite sweep output: " + spec.output_path);
    rewrite << kRecordCsvHeader << '\n';
    for (long t = 0; t < tasks; ++t) rewrite << rows[t] << '\n';
  }
  (void)cells;
  return records;
}

std::uint64_t determinism_hash(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot open: " + csv_path);
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  const auto feed = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= '\n';
    h *= 1099511628211ULL;
  };
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      first = false;
      feed(line);
      continue;
    }
    std::vector<std::string> f = split_csv(line);
    if (static_cast<int>(f.size()) > kWallTimeColumn) f[kWallTimeColumn] = "";
    std::string joined;
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (i) joined += ',';
      joined += f[i];
    }
    feed(joined);
  }
  return h;
}

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

double axis_value(const ExperimentRecord& r, SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Delta: return r.delta;
    case SweepAxis::M: return static_cast<double>(r.m);
    case SweepAxis::Kappa: return r.kappa_measured;
    case SweepAxis::R: return static_cast<double>(r.r);
  }
  return 0.0;
}

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
};

SlopeFit least_squares_loglog(const std::vector<double>& xs,
                              const std::vector<double>& ys) {
  const int k = static_cast<int>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < k; ++i) {
    const double lx = std::log(xs[i]);
    const double ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  SlopeFit fit;
  const double denom = k * sxx - sx * sx;
  fit.slope = (k * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / k;
  return fit;
}

}  // namespace

ScalingFit fit_scaling(const std::vector<ExperimentRecord>& records,
                       SweepAxis axis, int bootstrap, std::uint64_t seed) {
  std::map<double, std::vector<double>> groups;  // x -> y per seed
  for (const ExperimentRecord& r : records)
    if (r.status == "ok") groups[axis_value(r, axis)].push_back(r.report.sin_theta_sq);

  std::vector<double> xs, medians;
  std::vector<std::vector<double>> ys;
  for (auto& [x, v] : groups) {
    const double med = median_of(v);
    if (x > 0.0 && med > 0.0) {
      xs.push_back(x);
      medians.push_back(med);
      ys.push_back(v);
    }
  }
  if (xs.size() < 4)
    throw InsufficientData("fit_scaling: need >= 4 grid points with positive medians");

  ScalingFit out;
  const SlopeFit fit = least_squares_loglog(xs, medians);
  out.slope = fit.slope;
  out.intercept = fit.intercept;
  out.points = static_cast<int>(xs.size());

  std::vector<double> slopes;
  Rng rng(seed);
  for (int b = 0; b < bootstrap; ++b) {
    std::vector<double> boot_medians(xs.size());
    bool ok = true;
    for (std::size_t g = 0; g < xs.size(); ++g) {
      std::vector<double> resampled(ys[g].size());
      for (std::size_t i = 0; i < ys[g].size(); ++i)
        resampled[i] = ys[g][rng.next_below(ys[g].size())];
      boot_medians[g] = median_of(resampled);
      if (!(boot_medians[g] > 0.0)) ok = false;
    }
    if (ok) slopes.push_back(least_squares_loglog(xs, boot_medians).slope);
  }
  if (!slopes.empty()) {
    std::sort(slopes.begin(), slopes.end());
    out.ci_lo = slopes[static_cast<std::size_t>(0.025 * (slopes.size() - 1))];
    out.ci_hi = slopes[static_cast<std::size_t>(0.975 * (slopes.size() - 1))];
  }
  return out;
}

std::vector<ExperimentRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::vector<ExperimentRecord> out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      first = false;
      continue;
    }
    if (line.empty()) continue;
    out.push_back(record_from_csv(line));
  }
  return out;
}

void write_records_csv(const std::string& path,
                       const std::vector<ExperimentRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for write: " + path);
  out << kRecordCsvHeader << '\n';
  for (const ExperimentRecord& r : records) out << record_to_csv(r) << '\n';
}

}  // namespace rsub
