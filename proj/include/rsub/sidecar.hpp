#pragma once

#include <optional>
#include <string>

#include "json.hpp"
#include "rsub/adversary.hpp"
#include "rsub/covmodel.hpp"
#include "rsub/dataset.hpp"

namespace rsub {

/// JSON sidecars accompanying the binary containers. nlohmann/json prints
/// shortest round-trip doubles, so numeric payloads survive exactly; q = inf
/// is the string "inf".
nlohmann::json q_to_json(double q);
double q_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const CovarianceModel& model);
CovarianceModel model_from_json(const nlohmann::json& j);

nlohmann::json dataset_sidecar(const Dataset& ds,
                               const CovarianceModel* model);
/// Sidecar for a coupled attack output: epsilon, k', Pi' eigvectors, budget
/// report, and the model for downstream estimation.
nlohmann::json coupled_sidecar(const CoupledInstance& inst,
                               const CovarianceModel& model,
                               const BudgetReport& budget);

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

struct LoadedDataset {
  Dataset data;
  std::optional<CovarianceModel> model;
  nlohmann::json sidecar;
};

/// Load container + sidecar (path + ".json" when present).
LoadedDataset load_dataset(const std::string& path);

/// Store container + sidecar at path and path + ".json".
void store_dataset(const std::string& path, const Dataset& ds,
                   const nlohmann::json& sidecar);

}  // namespace rsub
