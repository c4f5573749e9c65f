// Timing comparison of the serial reference kernels against the
// OpenMP-blocked ones. Not a correctness gate (tests cover that); run it to
// see what the blocking buys on this machine:
//   ./bench_kernels [reps]

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "rsub/kernels.hpp"
#include "rsub/norms.hpp"
#include "rsub/rng.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  const auto t0 = Clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = Clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void row(const std::string& name, double serial_ms, double parallel_ms) {
  std::printf("%-34s %10.2f ms %10.2f ms %8.2fx\n", name.c_str(), serial_ms,
              parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::atoi(argv[1]) : 5;
  std::printf("threads: %d, reps: %d\n", rsub::num_threads(), reps);
  std::printf("%-34s %13s %13s %9s\n", "kernel", "serial", "parallel",
              "speedup");

  {
    const int n = 64, m = 200000;
    rsub::MatrixXd a;
    row("gaussian_matrix 64x200000",
        time_ms([&] { a = rsub::gaussian_matrix_serial(n, m, 7); }, reps),
        time_ms([&] { a = rsub::gaussian_matrix(n, m, 7); }, reps));
    rsub::MatrixXd s;
    row("second_moment 64x200000",
        time_ms([&] { s = rsub::second_moment_serial(a); }, reps),
        time_ms([&] { s = rsub::second_moment(a); }, reps));
  }
  {
    const rsub::MatrixXd g = rsub::gaussian_matrix(22, 22, 3);
    const rsub::MatrixXd psd = g * g.transpose();
    rsub::SignScanResult r{};
    row("sign_scan n=22 (2^21 states)",
        time_ms([&] { r = rsub::sign_scan_serial(psd); }, reps),
        time_ms([&] { r = rsub::sign_scan(psd); }, reps));
  }
  {
    const int n = 48, m = 100000;
    const rsub::MatrixXd a = rsub::gaussian_matrix(n, m, 11);
    const rsub::MatrixXd b =
        a + 0.01 * rsub::gaussian_matrix(n, m, 12);
    double v = 0;
    row("max_column_lq_dist q=inf 48x1e5",
        time_ms([&] { v = rsub::max_column_lq_dist_serial(a, b, rsub::kInf); },
                reps),
        time_ms([&] { v = rsub::max_column_lq_dist(a, b, rsub::kInf); }, reps));
    (void)v;
  }
  return 0;
}
