#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "rsub/common.hpp"

namespace rsub {

enum class Provenance : std::uint32_t { Clean = 0, Perturbed = 1 };

/// n x m sample matrix, columns are points. Generated datasets retain the
/// standard-normal coefficient matrix zeta (A = mu + V sqrt(L) zeta) so the
/// coupled adversaries can reuse the exact draws. Perturbed datasets remember
/// their clean parent's seed.
struct Dataset {
  MatrixXd samples;
  Provenance provenance = Provenance::Clean;
  double q = kInf;      // perturbation norm index (perturbed only)
  double delta = 0.0;   // perturbation budget (perturbed only)
  std::uint64_t seed = 0;
  std::uint64_t parent_seed = 0;
  std::optional<VectorXd> mu;
  MatrixXd zeta;  // n x m, empty when unknown (e.g. loaded foreign data)

  int n() const { return static_cast<int>(samples.rows()); }
  int m() const { return static_cast<int>(samples.cols()); }
};

/// Flat binary container: little-endian header + f64 column-major payloads
/// (samples, then optional mu, then optional zeta). Round-trips bit-exactly.
void write_dataset(const std::string& path, const Dataset& ds);
Dataset read_dataset(const std::string& path);

}  // namespace rsub
