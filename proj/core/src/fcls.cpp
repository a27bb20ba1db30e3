#include "specaug/fcls.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "specaug/parallel.hpp"

namespace specaug {

namespace {

std::vector<Eigen::Index> passive_index(const std::vector<bool>& passive) {
  std::vector<Eigen::Index> idx;
  for (std::size_t j = 0; j < passive.size(); ++j) {
    if (passive[j]) idx.push_back(static_cast<Eigen::Index>(j));
  }
  return idx;
}

// Normal equations restricted to the passive set. Entries outside the
// passive set are zero.
Eigen::VectorXd solve_passive(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs,
                              const std::vector<bool>& passive) {
  const auto idx = passive_index(passive);
  const Eigen::MatrixXd g = gram(idx, idx);
  const Eigen::VectorXd c = rhs(idx);
  Eigen::VectorXd sub;
  const Eigen::LLT<Eigen::MatrixXd> llt(g);
  sub = llt.info() == Eigen::Success ? Eigen::VectorXd(llt.solve(c)) : Eigen::VectorXd(g.ldlt().solve(c));
  if (!sub.allFinite()) {
    throw Error(ErrorCode::DegenerateColumns, "passive-set subproblem is singular");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(rhs.size());
  out(idx) = sub;
  return out;
}

// The Gram solve squares the conditioning, which with a 1e3 sum weight
// costs about seven digits. Two refinement steps with residuals taken on
// the augmented matrix itself win them back for the final passive set.
void polish(const Eigen::MatrixXd& aug, const Eigen::MatrixXd& gram, const Eigen::VectorXd& target,
            Eigen::VectorXd& x) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (x(j) > 0.0) idx.push_back(j);
  }
  if (idx.empty()) return;
  const Eigen::LLT<Eigen::MatrixXd> llt(gram(idx, idx));
  if (llt.info() != Eigen::Success) return;
  const Eigen::MatrixXd a = aug(Eigen::placeholders::all, idx);
  Eigen::VectorXd sub = x(idx);
  for (int step = 0; step < 2; ++step) sub += llt.solve(a.transpose() * (target - a * sub));
  if (sub.allFinite() && (sub.array() > 0.0).all()) x(idx) = sub;
}

}  // namespace

FclsSolver::FclsSolver(Eigen::MatrixXd endmembers) : em_(std::move(endmembers)) {
  if (em_.cols() < 1 || em_.rows() < 1) {
    throw Error(ErrorCode::DimensionMismatch, "endmember matrix must be non-empty");
  }
  if (!em_.allFinite()) {
    throw Error(ErrorCode::NonFiniteValue, "endmember matrix contains non-finite values");
  }
  double scale = em_.colwise().norm().maxCoeff();
  if (!(scale > 0.0)) scale = 1.0;
  const double weight = kSumWeight * scale;
  weight_ = weight;
  aug_.resize(em_.rows() + 1, em_.cols());
  aug_.topRows(em_.rows()) = em_;
  aug_.row(em_.rows()).setConstant(weight);
  gram_ = aug_.transpose() * aug_;
  tolerance_ = 64.0 * std::numeric_limits<double>::epsilon() * weight * weight;
}

FclsSolution FclsSolver::solve(std::span<const double> pixel) const {
  if (pixel.size() != bands()) {
    std::ostringstream msg;
    msg << "pixel has " << pixel.size() << " bands, endmember matrix has " << bands();
    throw Error(ErrorCode::DimensionMismatch, msg.str());
  }
  const Eigen::Index p = em_.cols();
  const Eigen::Map<const Eigen::VectorXd> y(pixel.data(), static_cast<Eigen::Index>(pixel.size()));

  Eigen::VectorXd target(aug_.rows());
  target.head(em_.rows()) = y;
  target(em_.rows()) = weight_;
  const Eigen::VectorXd rhs = aug_.transpose() * target;
  const double tol = std::max(tolerance_, 64.0 * std::numeric_limits<double>::epsilon() *
                                              rhs.cwiseAbs().maxCoeff());

  Eigen::VectorXd x = Eigen::VectorXd::Zero(p);
  std::vector<bool> passive(static_cast<std::size_t>(p), false);
  std::vector<bool> skipped(static_cast<std::size_t>(p), false);
  Eigen::VectorXd w = rhs;
  const int cap = 3 * static_cast<int>(p);
  int iterations = 0;

  while (true) {
    Eigen::Index enter = -1;
    double best = tol;
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      if (!passive[uj] && !skipped[uj] && w(j) > best) {
        best = w(j);
        enter = j;
      }
    }
    if (enter < 0) break;
    if (++iterations > cap) {
      throw Error(ErrorCode::DegenerateColumns,
                  "active set did not settle within " + std::to_string(cap) + " iterations");
    }
    passive[static_cast<std::size_t>(enter)] = true;

    Eigen::VectorXd s = solve_passive(gram_, rhs, passive);
    if (s(enter) <= 0.0) {
      // The entering column cannot carry positive weight; its gradient
      // entry is roundoff. Exclude it until some other column enters.
      passive[static_cast<std::size_t>(enter)] = false;
      skipped[static_cast<std::size_t>(enter)] = true;
      continue;
    }
    std::fill(skipped.begin(), skipped.end(), false);

    for (Eigen::Index inner = 0; inner <= p; ++inner) {
      double alpha = std::numeric_limits<double>::infinity();
      Eigen::Index blocking = -1;
      for (Eigen::Index j = 0; j < p; ++j) {
        if (passive[static_cast<std::size_t>(j)] && s(j) <= 0.0) {
          const double a = x(j) / (x(j) - s(j));
          if (a < alpha) {
            alpha = a;
            blocking = j;
          }
        }
      }
      if (blocking < 0) break;
      x += alpha * (s - x);
      for (Eigen::Index j = 0; j < p; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        if (passive[uj] && (j == blocking || x(j) <= 0.0)) {
          passive[uj] = false;
          x(j) = 0.0;
        }
      }
      s = solve_passive(gram_, rhs, passive);
    }
    x = s;
    w = rhs - gram_ * x;
  }

  polish(aug_, gram_, target, x);
  const double total = x.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw Error(ErrorCode::DegenerateColumns, "abundances collapsed to zero");
  }
  FclsSolution out;
  out.abundances = x / total;
  out.residual_sq = (y - em_ * out.abundances).squaredNorm();
  out.iterations = iterations;
  return out;
}

FclsSolution fcls_solve(std::span<const double> pixel, const EndmemberMatrix& em) {
  return FclsSolver(em.columns).solve(pixel);
}

AbundanceMap fcls_unmix(const HyperImage& img, const EndmemberMatrix& em, std::size_t threads) {
  validate_image(img, em.bands());
  const FclsSolver solver(em.columns);
  AbundanceMap out;
  out.values.resize(static_cast<Eigen::Index>(img.num_pixels()),
                    static_cast<Eigen::Index>(em.endmembers()));
  parallel_for(img.num_pixels(), threads, [&](std::size_t n) {
    out.values.row(static_cast<Eigen::Index>(n)) = solver.solve(img.pixel(n)).abundances.transpose();
  });
  require_simplex_rows(out.values);
  return out;
}

}  // namespace specaug
