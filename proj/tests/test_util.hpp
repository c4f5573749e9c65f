#pragma once

#include <filesystem>
#include <string>

#include "rsub/common.hpp"
#include "rsub/rng.hpp"

namespace rsub::test {

inline MatrixXd random_gaussian(int rows, int cols, Rng& rng) {
  MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = rng.next_gaussian();
  return m;
}

inline MatrixXd random_symmetric(int n, Rng& rng) {
  const MatrixXd g = random_gaussian(n, n, rng);
  return 0.5 * (g + g.transpose());
}

inline MatrixXd random_psd(int n, Rng& rng) {
  const MatrixXd g = random_gaussian(n, n, rng);
  return g * g.transpose() / n;
}

inline MatrixXd random_orthonormal(int n, int r, Rng& rng) {
  const MatrixXd g = random_gaussian(n, r, rng);
  Eigen::HouseholderQR<MatrixXd> qr(g);
  return MatrixXd(qr.householderQ()).leftCols(r);
}

/// Random spectrum in {lambda in [0,1]^n : sum = r}, independent of the
/// water-filling code under test: uniform draw, rescale, clamp-redistribute.
inline VectorXd random_capped_simplex(int n, int r, Rng& rng) {
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.next_uniform();
  double target = static_cast<double>(r);
  for (int pass = 0; pass < 64; ++pass) {
    double free_sum = 0.0;
    double fixed = 0.0;
    for (int i = 0; i < n; ++i)
      (v(i) >= 1.0 ? fixed : free_sum) += v(i);
    const double need = target - fixed;
    if (free_sum <= 0.0) break;
    bool clipped = false;
    for (int i = 0; i < n; ++i) {
      if (v(i) >= 1.0) continue;
      v(i) *= need / free_sum;
      if (v(i) > 1.0) {
        v(i) = 1.0;
        clipped = true;
      }
    }
    if (!clipped) break;
  }
  return v.cwiseMin(1.0).cwiseMax(0.0);
}

/// Random point of the Fantope {tr = r, 0 <= X <= I}.
inline MatrixXd random_fantope_point(int n, int r, Rng& rng) {
  const MatrixXd q = random_orthonormal(n, n, rng);
  const VectorXd spectrum = random_capped_simplex(n, r, rng);
  return q * spectrum.asDiagonal() * q.transpose();
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("rsub_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

}  // namespace rsub::test
