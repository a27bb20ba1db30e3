#include "specaug/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace specaug {

double rmse(const Eigen::Ref<const RowMatrix>& estimate, const Eigen::Ref<const RowMatrix>& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "rmse needs matrices of equal shape");
  }
  if (estimate.size() == 0) throw Error(ErrorCode::ShapeMismatch, "rmse of empty matrices");
  return std::sqrt((estimate - truth).squaredNorm() / static_cast<double>(estimate.size()));
}

Summary monte_carlo_summary(std::span<const double> values) {
  if (values.size() < 2) {
    throw Error(ErrorCode::InsufficientRuns, "summary needs at least two runs");
  }
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

SignTest paired_sign_test(std::span<const double> candidate, std::span<const double> baseline) {
  if (candidate.size() != baseline.size()) {
    throw Error(ErrorCode::ShapeMismatch, "sign test needs paired samples");
  }
  SignTest t;
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    if (candidate[i] < baseline[i]) ++t.wins;
    else if (candidate[i] > baseline[i]) ++t.losses;
  }
  // P(X >= wins) for X ~ Binomial(wins + losses, 1/2).
  const std::size_t n = t.wins + t.losses;
  double p = 0.0;
  for (std::size_t k = t.wins; k <= n; ++k) {
    p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) -
                  static_cast<double>(n) * std::log(2.0));
  }
  t.p_value = std::min(1.0, p);
  return t;
}

}  // namespace specaug
