#pragma once

#include <cstddef>
#include <span>

#include "specaug/spectral.hpp"

namespace specaug {

/// sqrt(||X - X*||_F^2 / N_X) with N_X the number of elements.
double rmse(const Eigen::Ref<const RowMatrix>& estimate, const Eigen::Ref<const RowMatrix>& truth);

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, divisor n - 1
};

/// Throws InsufficientRuns for fewer than two values.
Summary monte_carlo_summary(std::span<const double> values);

struct SignTest {
  std::size_t wins = 0;    // pairs with candidate < baseline
  std::size_t losses = 0;  // pairs with candidate > baseline
  double p_value = 1.0;    // one-sided, ties dropped
};

/// Paired one-sided sign test of H1: candidate tends to be smaller than baseline.
SignTest paired_sign_test(std::span<const double> candidate, std::span<const double> baseline);

}  // namespace specaug
