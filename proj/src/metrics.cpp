#include "rsub/metrics.hpp"

#include "rsub/errors.hpp"

namespace rsub {

double sin_theta_sq(const MatrixXd& p1, const MatrixXd& p2, int rank1,
                    int rank2) {
  if (rank1 != rank2)
    throw RankMismatch("sin_theta_sq: projector ranks differ");
  const double inner = (p1.array() * p2.array()).sum();
  return std::max(0.0, static_cast<double>(rank1) - inner);
}

double predicted_error_comp(const CovarianceModel& model,
                            const PredictionParams& params, double delta,
                            long m) {
  const double gap = model.eigengap();
  if (!(gap > 0.0)) throw DegenerateGap("predicted_error_comp: eigengap <= 0");
  const double lam1 = model.lambda1();
  const double r = static_cast<double>(model.r);
  const double n = static_cast<double>(model.n);
  const double kappa = params.kappa;
  const double nq = std::isinf(params.q) ? 1.0 : std::pow(n, 2.0 / params.q);
  const double leading = std::sqrt(lam1 * r) * kappa * delta / gap;
  const double sampling = r * kappa * kappa * lam1 * std::sqrt(std::log(n)) *
                          nq / (gap * std::sqrt(static_cast<double>(m)));
  return leading + sampling;
}

double predicted_error_lower(const CovarianceModel& model,
                             const PredictionParams& params, double delta,
                             long m) {
  const double lam1 = model.lambda1();
  if (!(lam1 > 0.0)) throw DegenerateGap("predicted_error_lower: lambda1 <= 0");
  const double r = static_cast<double>(model.r);
  const double n = static_cast<double>(model.n);
  const double logs =
      std::log(r * static_cast<double>(m)) * std::log(n);
  return std::sqrt(r) * params.kappa * delta / (std::sqrt(lam1) * logs);
}

}  // namespace rsub
