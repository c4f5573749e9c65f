#include "rsub/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <vector>

#include "rsub/errors.hpp"
#include "rsub/rng.hpp"

namespace rsub {

int num_threads() {
  static const int cap = [] {
    int n = omp_get_max_threads();
    if (const char* env = std::getenv("ROBUST_SUBSPACE_THREADS")) {
      const long v = std::strtol(env, nullptr, 10);
      if (v >= 1 && v < n) n = static_cast<int>(v);
    }
    return n < 1 ? 1 : n;
  }();
  return cap;
}

namespace {
constexpr int kColBlock = 4096;
}

MatrixXd second_moment_serial(const MatrixXd& a) {
  const double m = static_cast<double>(a.cols());
  MatrixXd s = (a * a.transpose()) / m;
  return 0.5 * (s + s.transpose());
}

MatrixXd second_moment(const MatrixXd& a) {
  const int m = static_cast<int>(a.cols());
  const int nblocks = (m + kColBlock - 1) / kColBlock;
  if (nblocks <= 1) return second_moment_serial(a);

  std::vector<MatrixXd> partial(nblocks);
#pragma omp parallel for schedule(dynamic) num_threads(num_threads())
  for (int b = 0; b < nblocks; ++b) {
    const int lo = b * kColBlock;
    const int len = std::min(kColBlock, m - lo);
    partial[b].noalias() = a.middleCols(lo, len) * a.middleCols(lo, len).transpose();
  }
  MatrixXd s = MatrixXd::Zero(a.rows(), a.rows());
  for (int b = 0; b < nblocks; ++b) s += partial[b];  // fixed order
  s /= static_cast<double>(m);
  return 0.5 * (s + s.transpose());
}

MatrixXd gaussian_matrix_serial(int n, int m, std::uint64_t seed) {
  MatrixXd out(n, m);
  for (int j = 0; j < m; ++j) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(j)));
    for (int i = 0; i < n; ++i) out(i, j) = rng.next_gaussian();
  }
  return out;
}

MatrixXd gaussian_matrix(int n, int m, std::uint64_t seed) {
  MatrixXd out(n, m);
#pragma omp parallel for schedule(static) num_threads(num_threads())
  for (int j = 0; j < m; ++j) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(j)));
    for (int i = 0; i < n; ++i) out(i, j) = rng.next_gaussian();
  }
  return out;
}

VectorXd sign_vector_from_code(int n, std::uint64_t code) {
  VectorXd x(n);
  x(0) = 1.0;
  const std::uint64_t gray = code ^ (code >> 1);
  for (int i = 1; i < n; ++i)
    x(i) = (gray >> (i - 1)) & 1ULL ? -1.0 : 1.0;
  return x;
}

namespace {

// Walk codes [begin, end), maintaining y = Mx and the quadratic form
// incrementally; one coordinate flips per step (cost O(n)).
SignScanResult scan_range(const MatrixXd& m, std::uint64_t begin,
                          std::uint64_t end) {
  const int n = static_cast<int>(m.rows());
  VectorXd x = sign_vector_from_code(n, begin);
  VectorXd y = m * x;
  double value = x.dot(y);
  SignScanResult best{value, begin};
  for (std::uint64_t c = begin + 1; c < end; ++c) {
    const int j = 1 + __builtin_ctzll(c);  // bit flipped between gray codes
    value += -4.0 * x(j) * y(j) + 4.0 * m(j, j);
    y -= 2.0 * x(j) * m.col(j);
    x(j) = -x(j);
    if (value > best.value) best = {value, c};
  }
  return best;
}

}  // namespace

SignScanResult sign_scan_serial(const MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  if (n == 1) return {m(0, 0), 0};
  const std::uint64_t total = 1ULL << (n - 1);
  SignScanResult best = scan_range(m, 0, total);
  // Re-evaluate the winner directly; the incremental value drifts by ulps.
  const VectorXd x = sign_vector_from_code(n, best.code);
  best.value = x.dot(m * x);
  return best;
}

SignScanResult sign_scan(const MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  if (n == 1) return {m(0, 0), 0};
  const int nbits = n - 1;
  const int block_bits = std::min(6, nbits);
  const std::uint64_t nblocks = 1ULL << block_bits;
  const std::uint64_t block_len = 1ULL << (nbits - block_bits);

  std::vector<SignScanResult> per_block(nblocks);
#pragma omp parallel for schedule(dynamic) num_threads(num_threads())
  for (std::int64_t b = 0; b < static_cast<std::int64_t>(nblocks); ++b) {
    const std::uint64_t lo = static_cast<std::uint64_t>(b) * block_len;
    per_block[b] = scan_range(m, lo, lo + block_len);
  }
  SignScanResult best = per_block[0];
  for (std::uint64_t b = 1; b < nblocks; ++b) {
    const SignScanResult& r = per_block[b];
    if (r.value > best.value ||
        (r.value == best.value && r.code < best.code))
      best = r;
  }
  const VectorXd x = sign_vector_from_code(n, best.code);
  best.value = x.dot(m * x);
  return best;
}

namespace {

double column_lq_dist(const MatrixXd& a, const MatrixXd& b, int j, double q) {
  if (std::isinf(q)) return (a.col(j) - b.col(j)).cwiseAbs().maxCoeff();
  double acc = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    acc += std::pow(std::abs(a(i, j) - b(i, j)), q);
  return std::pow(acc, 1.0 / q);
}

}  // namespace

double max_column_lq_dist_serial(const MatrixXd& a, const MatrixXd& b,
                                 double q) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeMismatch("max_column_lq_dist: shape mismatch");
  double worst = 0.0;
  for (int j = 0; j < a.cols(); ++j)
    worst = std::max(worst, column_lq_dist(a, b, j, q));
  return worst;
}

double max_column_lq_dist(const MatrixXd& a, const MatrixXd& b, double q) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeMismatch("max_column_lq_dist: shape mismatch");
  const int m = static_cast<int>(a.cols());
  double worst = 0.0;
#pragma omp parallel for schedule(static) reduction(max : worst) \
    num_threads(num_threads())
  for (int j = 0; j < m; ++j)
    worst = std::max(worst, column_lq_dist(a, b, j, q));
  return worst;
}

}  // namespace rsub
