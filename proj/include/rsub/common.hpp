#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace rsub {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Norm index q in (2, inf]; q = inf is kept as the IEEE symbol and every
/// dual/derived quantity special-cases it instead of plugging in a big float.
class NormIndex {
 public:
  static NormIndex infinity() { return NormIndex(kInf); }
  static NormIndex finite(double q) {
    if (!(q > 2.0) || !std::isfinite(q))
      throw std::invalid_argument("NormIndex: q must be finite and > 2");
    return NormIndex(q);
  }
  static NormIndex from_value(double q) {
    return std::isinf(q) ? infinity() : finite(q);
  }

  bool is_inf() const { return std::isinf(q_); }
  double value() const { return q_; }
  /// Dual exponent q* = q/(q-1); equals 1 for q = inf.
  double dual() const { return is_inf() ? 1.0 : q_ / (q_ - 1.0); }

  bool operator==(const NormIndex& o) const {
    return (is_inf() && o.is_inf()) || q_ == o.q_;
  }

 private:
  explicit NormIndex(double q) : q_(q) {}
  double q_;
};

inline double sqr(double x) { return x * x; }

inline void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace rsub
