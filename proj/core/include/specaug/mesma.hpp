#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "specaug/fcls.hpp"
#include "specaug/spectral.hpp"

namespace specaug {

inline constexpr std::uint64_t kDefaultCombinationCap = 1'000'000;

/// Number of endmember matrices in the Cartesian product of the library
/// classes. Throws CombinationOverflow above `cap`.
std::uint64_t count_models(const SpectralLibrary& lib, std::uint64_t cap = kDefaultCombinationCap);

/// Lazily walks every endmember matrix of a library in lexicographic order
/// of the selection tuple (j_1, ..., j_P). Only the current model is held.
class ModelEnumerator {
 public:
  explicit ModelEnumerator(const SpectralLibrary& lib, std::uint64_t cap = kDefaultCombinationCap);

  std::uint64_t size() const noexcept { return total_; }
  std::optional<EndmemberMatrix> next();
  void reset();

 private:
  const SpectralLibrary* lib_;
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> current_;
  std::uint64_t total_ = 0;
  std::uint64_t emitted_ = 0;
};

ModelEnumerator enumerate_models(const SpectralLibrary& lib,
                                 std::uint64_t cap = kDefaultCombinationCap);

struct MesmaOptions {
  std::uint64_t combination_cap = kDefaultCombinationCap;
  std::size_t threads = 1;
};

struct MesmaResult {
  AbundanceMap abundances;
  /// N x P library member indices, row-major.
  std::vector<std::size_t> selections;
  Eigen::VectorXd residuals;
  std::uint64_t models_evaluated = 0;

  std::size_t num_classes() const noexcept {
    return static_cast<std::size_t>(abundances.values.cols());
  }
  std::size_t selection(std::size_t pixel, std::size_t cls) const {
    return selections[pixel * num_classes() + cls];
  }
};

/// Exhaustive per-pixel search over every library model. Ties go to the
/// lexicographically smallest selection tuple; the output does not depend
/// on the worker count.
MesmaResult mesma_unmix(const HyperImage& img, const SpectralLibrary& lib,
                        const MesmaOptions& options = {});

/// Reconstructed pixels M_n a_n for a MESMA result.
RowMatrix mesma_reconstruct(const MesmaResult& result, const SpectralLibrary& lib);

}  // namespace specaug
