#include "rsub/sidecar.hpp"

#include <filesystem>
#include <fstream>

#include "rsub/errors.hpp"

namespace rsub {

nlohmann::json q_to_json(double q) {
  if (std::isinf(q)) return "inf";
  return q;
}

double q_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return kInf;
    throw IoError("sidecar: bad q value");
  }
  return j.get<double>();
}

namespace {

nlohmann::json matrix_to_json(const MatrixXd& m) {
  nlohmann::json cols = nlohmann::json::array();
  for (int j = 0; j < m.cols(); ++j) {
    nlohmann::json col = nlohmann::json::array();
    for (int i = 0; i < m.rows(); ++i) col.push_back(m(i, j));
    cols.push_back(std::move(col));
  }
  return cols;
}

MatrixXd matrix_from_json(const nlohmann::json& j) {
  const int cols = static_cast<int>(j.size());
  if (cols == 0) return MatrixXd();
  const int rows = static_cast<int>(j[0].size());
  MatrixXd m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = j[c][r].get<double>();
  return m;
}

VectorXd vector_from_json(const nlohmann::json& j) {
  VectorXd v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

}  // namespace

nlohmann::json model_to_json(const CovarianceModel& model) {
  nlohmann::json j;
  j["n"] = model.n;
  j["r"] = model.r;
  nlohmann::json ev = nlohmann::json::array();
  for (int i = 0; i < model.n; ++i) ev.push_back(model.eigvals(i));
  j["eigvals"] = std::move(ev);
  j["basis"] = matrix_to_json(model.basis);
  j["kappa"] = model.kappa;
  j["kappa_exact"] = model.kappa_exact;
  j["q"] = q_to_json(model.q.value());
  j["support_k"] = model.support_k;
  j["basis_seed"] = model.basis_seed;
  return j;
}

CovarianceModel model_from_json(const nlohmann::json& j) {
  CovarianceModel model;
  model.n = j.at("n").get<int>();
  model.r = j.at("r").get<int>();
  model.eigvals = vector_from_json(j.at("eigvals"));
  model.basis = matrix_from_json(j.at("basis"));
  model.kappa = j.at("kappa").get<double>();
  model.kappa_exact = j.value("kappa_exact", true);
  model.q = NormIndex::from_value(q_from_json(j.at("q")));
  model.support_k = j.value("support_k", 0);
  model.basis_seed = j.value("basis_seed", std::uint64_t{0});
  if (model.basis.rows() != model.n || model.basis.cols() != model.n ||
      model.eigvals.size() != model.n)
    throw IoError("sidecar: inconsistent model shape");
  return model;
}

nlohmann::json dataset_sidecar(const Dataset& ds,
                               const CovarianceModel* model) {
  nlohmann::json j;
  j["kind"] = "dataset";
  j["n"] = ds.n();
  j["m"] = ds.m();
  j["seed"] = ds.seed;
  j["parent_seed"] = ds.parent_seed;
  j["provenance"] =
      ds.provenance == Provenance::Clean ? "clean" : "perturbed";
  j["q"] = q_to_json(ds.q);
  j["delta"] = ds.delta;
  if (ds.mu) {
    nlohmann::json mu = nlohmann::json::array();
    for (int i = 0; i < ds.mu->size(); ++i) mu.push_back((*ds.mu)(i));
    j["mu"] = std::move(mu);
  }
  if (model) j["model"] = model_to_json(*model);
  return j;
}

nlohmann::json coupled_sidecar(const CoupledInstance& inst,
                               const CovarianceModel& model,
                               const BudgetReport& budget) {
  nlohmann::json j = dataset_sidecar(inst.perturbed, &model);
  j["kind"] = "coupled";
  j["epsilon"] = inst.epsilon;
  j["k_prime"] = inst.k_prime;
  j["kappa_used"] = inst.kappa_used;
  j["resamples"] = inst.resamples;
  j["max_violation"] = inst.max_violation;
  j["pi_prime_basis"] = matrix_to_json(inst.v_prime);
  nlohmann::json bj;
  bj["max_violation"] = budget.max_violation;
  bj["violating_columns"] = budget.violating_columns;
  j["budget"] = std::move(bj);
  nlohmann::json uc;
  uc["norm_sq_ok"] = inst.u_checks.norm_sq_ok;
  uc["linf_ok"] = inst.u_checks.linf_ok;
  uc["l1_ok"] = inst.u_checks.l1_ok;
  uc["eta"] = inst.u_checks.eta;
  j["u_checks"] = std::move(uc);
  return j;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for write: " + path);
  out << j.dump(1) << '\n';
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

LoadedDataset load_dataset(const std::string& path) {
  LoadedDataset out;
  out.data = read_dataset(path);
  const std::string side = path + ".json";
  if (std::filesystem::exists(side)) {
    out.sidecar = read_json(side);
    if (out.sidecar.contains("model"))
      out.model = model_from_json(out.sidecar["model"]);
    if (out.sidecar.contains("mu") && !out.data.mu)
      out.data.mu = vector_from_json(out.sidecar["mu"]);
  }
  return out;
}

void store_dataset(const std::string& path, const Dataset& ds,
                   const nlohmann::json& sidecar) {
  write_dataset(path, ds);
  write_json(path + ".json", sidecar);
}

}  // namespace rsub
