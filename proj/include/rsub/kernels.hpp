#pragma once

#include <cstdint>
#include <utility>

#include "rsub/common.hpp"

// Data-parallel inner loops, each in two variants: *_serial is the plain
// reference implementation kept for testing, the unsuffixed entry point is
// OpenMP-parallel over a fixed logical blocking. Block boundaries never depend
// on the thread count, so the parallel results are identical for any
// OMP_NUM_THREADS / ROBUST_SUBSPACE_THREADS setting.

namespace rsub {

/// Worker count: hardware threads capped by ROBUST_SUBSPACE_THREADS.
int num_threads();

/// (1/m) A A^T, blocked over columns.
MatrixXd second_moment(const MatrixXd& a);
MatrixXd second_moment_serial(const MatrixXd& a);

/// n x m matrix of standard normals; column j is drawn from the stream
/// mix_seed(seed, j), so the layout is reproducible and order-independent.
MatrixXd gaussian_matrix(int n, int m, std::uint64_t seed);
MatrixXd gaussian_matrix_serial(int n, int m, std::uint64_t seed);

struct SignScanResult {
  double value;        // max over x in {+-1}^n (x_0 = +1) of x^T M x
  std::uint64_t code;  // walk index of the argmax; bit i-1 set => x_i = -1
};

/// Exhaustive Gray-code scan of the 2^{n-1} sign vectors (sign symmetry pins
/// x_0 = +1). Caller guarantees n <= 22. Ties resolve to the smaller code.
SignScanResult sign_scan(const MatrixXd& m);
SignScanResult sign_scan_serial(const MatrixXd& m);

/// Decode a scan code into the sign vector it indexes.
VectorXd sign_vector_from_code(int n, std::uint64_t code);

/// Largest column-wise lq distance between equal-shaped matrices.
double max_column_lq_dist(const MatrixXd& a, const MatrixXd& b, double q);
double max_column_lq_dist_serial(const MatrixXd& a, const MatrixXd& b,
                                 double q);

}  // namespace rsub
