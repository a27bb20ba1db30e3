#include "specaug/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace specaug {

std::size_t SpectralLibrary::bands() const noexcept {
  for (const auto& cls : classes_) {
    if (!cls.members.empty()) return cls.members.front().bands();
  }
  return 0;
}

std::vector<std::size_t> SpectralLibrary::class_sizes() const {
  std::vector<std::size_t> sizes;
  sizes.reserve(classes_.size());
  for (const auto& cls : classes_) sizes.push_back(cls.members.size());
  return sizes;
}

HyperImage::HyperImage(RowMatrix pixels) : pixels_(std::move(pixels)) {}

HyperImage::HyperImage(RowMatrix pixels, std::size_t rows, std::size_t cols)
    : pixels_(std::move(pixels)), rows_(rows), cols_(cols) {
  if (rows * cols != num_pixels()) {
    std::ostringstream msg;
    msg << "spatial shape " << rows << "x" << cols << " does not match " << num_pixels()
        << " pixels";
    throw Error(ErrorCode::DimensionMismatch, msg.str());
  }
}

std::span<const double> HyperImage::pixel(std::size_t n) const {
  return {pixels_.data() + n * bands(), bands()};
}

EndmemberMatrix EndmemberMatrix::from_library(const SpectralLibrary& lib,
                                              std::span<const std::size_t> selection) {
  if (selection.size() != lib.num_classes()) {
    throw Error(ErrorCode::DimensionMismatch, "selection length differs from class count");
  }
  const auto bands = static_cast<Eigen::Index>(lib.bands());
  EndmemberMatrix em;
  em.columns.resize(bands, static_cast<Eigen::Index>(selection.size()));
  em.selection.assign(selection.begin(), selection.end());
  for (std::size_t k = 0; k < selection.size(); ++k) {
    const auto& values = lib.member(k, selection[k]).values;
    em.columns.col(static_cast<Eigen::Index>(k)) =
        Eigen::Map<const Eigen::VectorXd>(values.data(), bands);
  }
  return em;
}

void validate_library(const SpectralLibrary& lib) {
  if (lib.num_classes() < 2) {
    throw Error(ErrorCode::TooFewClasses, "a library needs at least two material classes");
  }
  std::set<std::string> seen;
  const std::size_t bands = lib.bands();
  for (std::size_t k = 0; k < lib.num_classes(); ++k) {
    const auto& cls = lib[k];
    if (!seen.insert(cls.material).second) {
      throw Error(ErrorCode::DuplicateMaterial, "material '" + cls.material + "' appears twice");
    }
    if (cls.members.empty()) {
      throw Error(ErrorCode::EmptyClass, "class " + std::to_string(k) + " ('" + cls.material +
                                             "') has no signatures",
                  ValueLocation{k, 0, 0});
    }
    for (std::size_t j = 0; j < cls.members.size(); ++j) {
      const auto& values = cls.members[j].values;
      if (values.empty() || values.size() != bands) {
        std::ostringstream msg;
        msg << "class " << k << " member " << j << " has " << values.size() << " bands, expected "
            << bands;
        throw Error(ErrorCode::MismatchedBandCount, msg.str(), ValueLocation{k, j, 0});
      }
      for (std::size_t b = 0; b < values.size(); ++b) {
        if (!std::isfinite(values[b])) {
          std::ostringstream msg;
          msg << "class " << k << " member " << j << " band " << b << " is not finite";
          throw Error(ErrorCode::NonFiniteValue, msg.str(), ValueLocation{k, j, b});
        }
      }
    }
  }
}

void validate_image(const HyperImage& img, std::size_t expected_bands) {
  if (img.bands() != expected_bands) {
    std::ostringstream msg;
    msg << "image has " << img.bands() << " bands, library has " << expected_bands;
    throw Error(ErrorCode::DimensionMismatch, msg.str());
  }
  const auto& px = img.pixels();
  for (Eigen::Index n = 0; n < px.rows(); ++n) {
    for (Eigen::Index b = 0; b < px.cols(); ++b) {
      if (!std::isfinite(px(n, b))) {
        std::ostringstream msg;
        msg << "pixel " << n << " band " << b << " is not finite";
        throw Error(ErrorCode::NonFiniteValue, msg.str(),
                    ValueLocation{0, static_cast<std::size_t>(n), static_cast<std::size_t>(b)});
      }
    }
  }
}

ClipResult clip_to_unit(const Spectrum& spec) {
  ClipResult out{spec, 0};
  for (std::size_t b = 0; b < out.spectrum.values.size(); ++b) {
    double& v = out.spectrum.values[b];
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::NonFiniteValue, "band " + std::to_string(b) + " is not finite",
                  ValueLocation{0, 0, b});
    }
    const double clipped = std::clamp(v, 0.0, 1.0);
    if (clipped != v) {
      ++out.clipped;
      v = clipped;
    }
  }
  return out;
}

std::optional<SimplexViolation> find_simplex_violation(const Eigen::Ref<const RowMatrix>& rows,
                                                       double tolerance) {
  for (Eigen::Index n = 0; n < rows.rows(); ++n) {
    const double sum = rows.row(n).sum();
    const double lo = rows.cols() > 0 ? rows.row(n).minCoeff() : 0.0;
    if (!std::isfinite(sum) || std::abs(sum - 1.0) > tolerance || lo < -tolerance) {
      return SimplexViolation{static_cast<std::size_t>(n), sum, lo};
    }
  }
  return std::nullopt;
}

void require_simplex_rows(const Eigen::Ref<const RowMatrix>& rows, double tolerance) {
  if (auto v = find_simplex_violation(rows, tolerance)) {
    std::ostringstream msg;
    msg << "row " << v->row << " sums to " << v->row_sum << " with minimum " << v->min_value;
    throw Error(ErrorCode::SimplexViolation, msg.str());
  }
}

Eigen::MatrixXd spectra_as_columns(std::span<const Spectrum> spectra) {
  if (spectra.empty()) return {};
  const auto bands = static_cast<Eigen::Index>(spectra.front().bands());
  Eigen::MatrixXd out(bands, static_cast<Eigen::Index>(spectra.size()));
  for (std::size_t i = 0; i < spectra.size(); ++i) {
    if (static_cast<Eigen::Index>(spectra[i].bands()) != bands) {
      throw Error(ErrorCode::MismatchedBandCount,
                  "spectrum " + std::to_string(i) + " has a different band count");
    }
    out.col(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::VectorXd>(spectra[i].values.data(), bands);
  }
  return out;
}

EndmemberMatrix class_mean_endmembers(const SpectralLibrary& lib) {
  EndmemberMatrix em;
  em.columns.setZero(static_cast<Eigen::Index>(lib.bands()),
                     static_cast<Eigen::Index>(lib.num_classes()));
  for (std::size_t k = 0; k < lib.num_classes(); ++k) {
    em.columns.col(static_cast<Eigen::Index>(k)) =
        spectra_as_columns(lib[k].members).rowwise().mean();
  }
  return em;
}

}  // namespace specaug
