#pragma once

#include <span>

#include <Eigen/Dense>

#include "specaug/spectral.hpp"

namespace specaug {

struct FclsSolution {
  Eigen::VectorXd abundances;
  double residual_sq = 0.0;  // ||y - M a||^2, recomputed on the final abundances
  int iterations = 0;        // active-set outer iterations
};

/// Fully constrained least squares against one fixed endmember matrix:
///   min ||y - M a||^2  s.t.  a >= 0, 1'a = 1.
///
/// Sum-to-one is imposed by appending a weighted row of ones (weight
/// 1e3 times the largest column norm) and solving the resulting
/// nonnegative least squares problem with the Lawson-Hanson active-set
/// method. The result is renormalized to sum exactly to one. Everything
/// that depends only on M is computed once, so one solver can be reused
/// across many pixels.
class FclsSolver {
 public:
  static constexpr double kSumWeight = 1e3;

  explicit FclsSolver(Eigen::MatrixXd endmembers);

  /// Throws DimensionMismatch when the pixel length differs from L, and
  /// DegenerateColumns when the active set does not settle within 3P
  /// outer iterations.
  FclsSolution solve(std::span<const double> pixel) const;

  std::size_t bands() const noexcept { return static_cast<std::size_t>(em_.rows()); }
  std::size_t endmembers() const noexcept { return static_cast<std::size_t>(em_.cols()); }
  const Eigen::MatrixXd& matrix() const noexcept { return em_; }

 private:
  Eigen::MatrixXd em_;
  Eigen::MatrixXd aug_;   // M stacked over a row of w
  Eigen::MatrixXd gram_;  // aug' aug
  double weight_ = 0.0;
  double tolerance_ = 0.0;
};

FclsSolution fcls_solve(std::span<const double> pixel, const EndmemberMatrix& em);

/// Unmixes every pixel against the same endmember matrix.
AbundanceMap fcls_unmix(const HyperImage& img, const EndmemberMatrix& em, std::size_t threads = 1);

}  // namespace specaug
