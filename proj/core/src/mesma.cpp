#include "specaug/mesma.hpp"

#include <limits>

#include "specaug/parallel.hpp"

namespace specaug {

std::uint64_t count_models(const SpectralLibrary& lib, std::uint64_t cap) {
  std::uint64_t total = 1;
  for (std::size_t k = 0; k < lib.num_classes(); ++k) {
    const std::uint64_t c = lib[k].members.size();
    if (c == 0) {
      throw Error(ErrorCode::EmptyClass, "class " + std::to_string(k) + " has no signatures",
                  ValueLocation{k, 0, 0});
    }
    if (total > cap / c) {
      throw Error(ErrorCode::CombinationOverflow,
                  "library has more than " + std::to_string(cap) + " endmember combinations");
    }
    total *= c;
  }
  return total;
}

ModelEnumerator::ModelEnumerator(const SpectralLibrary& lib, std::uint64_t cap)
    : lib_(&lib), sizes_(lib.class_sizes()), current_(lib.num_classes(), 0) {
  total_ = count_models(lib, cap);
}

std::optional<EndmemberMatrix> ModelEnumerator::next() {
  if (emitted_ == total_) return std::nullopt;
  auto em = EndmemberMatrix::from_library(*lib_, current_);
  ++emitted_;
  // Odometer increment, last class fastest.
  for (std::size_t k = current_.size(); k-- > 0;) {
    if (++current_[k] < sizes_[k]) break;
    current_[k] = 0;
  }
  return em;
}

void ModelEnumerator::reset() {
  std::fill(current_.begin(), current_.end(), 0);
  emitted_ = 0;
}

ModelEnumerator enumerate_models(const SpectralLibrary& lib, std::uint64_t cap) {
  return ModelEnumerator(lib, cap);
}

MesmaResult mesma_unmix(const HyperImage& img, const SpectralLibrary& lib,
                        const MesmaOptions& options) {
  validate_library(lib);
  validate_image(img, lib.bands());
  const std::uint64_t total = count_models(lib, options.combination_cap);

  const std::size_t n_pixels = img.num_pixels();
  const std::size_t p = lib.num_classes();
  MesmaResult result;
  result.abundances.values.resize(static_cast<Eigen::Index>(n_pixels), static_cast<Eigen::Index>(p));
  result.selections.assign(n_pixels * p, 0);
  result.residuals.setConstant(static_cast<Eigen::Index>(n_pixels),
                               std::numeric_limits<double>::infinity());
  result.models_evaluated = total;

  // Each worker owns a contiguous block of pixels and walks every model in
  // lexicographic order, so a strict improvement test keeps the smallest
  // selection tuple among equal residuals.
  parallel_for_blocks(n_pixels, options.threads, [&](std::size_t begin, std::size_t end) {
    ModelEnumerator models(lib, options.combination_cap);
    while (auto em = models.next()) {
      const FclsSolver solver(std::move(em->columns));
      for (std::size_t n = begin; n < end; ++n) {
        const auto row = static_cast<Eigen::Index>(n);
        FclsSolution sol = solver.solve(img.pixel(n));
        if (sol.residual_sq < result.residuals(row)) {
          result.residuals(row) = sol.residual_sq;
          result.abundances.values.row(row) = sol.abundances.transpose();
          std::copy(em->selection.begin(), em->selection.end(),
                    result.selections.begin() + static_cast<std::ptrdiff_t>(n * p));
        }
      }
    }
  });
  require_simplex_rows(result.abundances.values);
  return result;
}

RowMatrix mesma_reconstruct(const MesmaResult& result, const SpectralLibrary& lib) {
  const auto n_pixels = result.abundances.values.rows();
  const std::size_t p = result.num_classes();
  RowMatrix out(n_pixels, static_cast<Eigen::Index>(lib.bands()));
  std::vector<std::size_t> sel(p);
  for (Eigen::Index n = 0; n < n_pixels; ++n) {
    for (std::size_t k = 0; k < p; ++k) sel[k] = result.selection(static_cast<std::size_t>(n), k);
    const auto em = EndmemberMatrix::from_library(lib, sel);
    out.row(n) = (em.columns * result.abundances.values.row(n).transpose()).transpose();
  }
  return out;
}

}  // namespace specaug
