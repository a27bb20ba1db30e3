#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "specaug/error.hpp"

namespace specaug {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Simplex tolerance on abundance row sums.
inline constexpr double kSimplexTolerance = 1e-6;

/// Where a signature came from. Generated signatures carry their draw index.
struct Provenance {
  bool synthetic = false;
  std::size_t draw_index = 0;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// One reflectance vector over L bands.
struct Spectrum {
  std::vector<double> values;
  std::string label;  // material id, empty when unknown
  Provenance provenance;

  std::size_t bands() const noexcept { return values.size(); }

  friend bool operator==(const Spectrum&, const Spectrum&) = default;
};

struct MaterialClass {
  std::string material;
  std::vector<Spectrum> members;

  friend bool operator==(const MaterialClass&, const MaterialClass&) = default;
};

/// Per-material bundles of candidate signatures. Member order is insertion
/// order and is part of the deterministic MESMA contract.
class SpectralLibrary {
 public:
  SpectralLibrary() = default;
  explicit SpectralLibrary(std::vector<MaterialClass> classes) : classes_(std::move(classes)) {}

  const std::vector<MaterialClass>& classes() const noexcept { return classes_; }
  const MaterialClass& operator[](std::size_t k) const { return classes_.at(k); }
  std::size_t num_classes() const noexcept { return classes_.size(); }
  /// Band count of the first signature, 0 for an empty library.
  std::size_t bands() const noexcept;
  std::vector<std::size_t> class_sizes() const;
  const Spectrum& member(std::size_t k, std::size_t j) const { return classes_.at(k).members.at(j); }

  friend bool operator==(const SpectralLibrary&, const SpectralLibrary&) = default;

 private:
  std::vector<MaterialClass> classes_;
};

/// N x L observed reflectances with optional spatial shape.
class HyperImage {
 public:
  HyperImage() = default;
  explicit HyperImage(RowMatrix pixels);
  HyperImage(RowMatrix pixels, std::size_t rows, std::size_t cols);

  const RowMatrix& pixels() const noexcept { return pixels_; }
  std::size_t num_pixels() const noexcept { return static_cast<std::size_t>(pixels_.rows()); }
  std::size_t bands() const noexcept { return static_cast<std::size_t>(pixels_.cols()); }
  std::span<const double> pixel(std::size_t n) const;
  std::optional<std::size_t> rows() const noexcept { return rows_; }
  std::optional<std::size_t> cols() const noexcept { return cols_; }

 private:
  RowMatrix pixels_;
  std::optional<std::size_t> rows_;
  std::optional<std::size_t> cols_;
};

/// L x P endmember matrix drawn from a library, one member per class.
struct EndmemberMatrix {
  Eigen::MatrixXd columns;
  std::vector<std::size_t> selection;

  std::size_t bands() const noexcept { return static_cast<std::size_t>(columns.rows()); }
  std::size_t endmembers() const noexcept { return static_cast<std::size_t>(columns.cols()); }

  static EndmemberMatrix from_library(const SpectralLibrary& lib,
                                      std::span<const std::size_t> selection);
};

/// N x P abundances, each row on the unit simplex.
struct AbundanceMap {
  RowMatrix values;
};

/// Throws on the first violated library invariant.
void validate_library(const SpectralLibrary& lib);

void validate_image(const HyperImage& img, std::size_t expected_bands);

struct ClipResult {
  Spectrum spectrum;
  std::size_t clipped = 0;
};

/// Projects every value onto [0, 1].
ClipResult clip_to_unit(const Spectrum& spec);

struct SimplexViolation {
  std::size_t row = 0;
  double row_sum = 0.0;
  double min_value = 0.0;
};

std::optional<SimplexViolation> find_simplex_violation(const Eigen::Ref<const RowMatrix>& rows,
                                                       double tolerance = kSimplexTolerance);

/// Shared assertion used by every solver output path.
void require_simplex_rows(const Eigen::Ref<const RowMatrix>& rows,
                          double tolerance = kSimplexTolerance);

/// Stacks spectra as the columns of an L x B matrix.
Eigen::MatrixXd spectra_as_columns(std::span<const Spectrum> spectra);

/// Per-class mean signatures as an L x P matrix.
EndmemberMatrix class_mean_endmembers(const SpectralLibrary& lib);

}  // namespace specaug
