#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "specaug/mesma.hpp"
#include "specaug/spectral.hpp"
#include "specaug/synthgen.hpp"

namespace specaug::io {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

struct KeyValue {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

/// Flat `key=value` text. Blank lines and lines starting with '#' are
/// skipped; malformed lines raise ParseError naming `source:line`.
std::vector<KeyValue> parse_key_values(std::istream& in, const std::string& source);

// Library CSV: header `material[,synthetic],band_0,...,band_{L-1}`, one row
// per signature. Rows are grouped by material in first-appearance order.
SpectralLibrary read_library_csv(std::istream& in, const std::string& source = "<library>");
SpectralLibrary read_library_csv(const std::filesystem::path& path);
void write_library_csv(std::ostream& out, const SpectralLibrary& lib, bool synthetic_column = false);
void write_library_csv(const std::filesystem::path& path, const SpectralLibrary& lib,
                       bool synthetic_column = false);

// Image CSV: one row per pixel, optional `band_*` header. An optional
// sidecar `<image>.meta` holds rows, cols and L as key=value lines.
HyperImage read_image_csv(const std::filesystem::path& path);
HyperImage read_image_csv(std::istream& in, const std::string& source = "<image>");
void write_image_csv(const std::filesystem::path& path, const HyperImage& img);

std::filesystem::path sidecar_path(const std::filesystem::path& image_path);

/// Numeric matrix with a header row.
void write_matrix_csv(std::ostream& out, const Eigen::Ref<const RowMatrix>& values,
                      std::span<const std::string> header);
RowMatrix read_matrix_csv(std::istream& in, const std::string& source = "<matrix>");

void write_abundances_csv(const std::filesystem::path& path, const AbundanceMap& abundances,
                          const SpectralLibrary& lib);
void write_selections_csv(const std::filesystem::path& path, const MesmaResult& result,
                          const SpectralLibrary& lib);
void write_residuals_csv(const std::filesystem::path& path, const Eigen::VectorXd& residuals);

// Dataset directory: image.csv, clean.csv, true_abundances.csv,
// true_selections.csv, library.csv, scene_pools.csv and manifest.json
// with the generating configuration.
void write_dataset(const std::filesystem::path& dir, const SynthDataset& ds, const SynthConfig& cfg);

struct LoadedDataset {
  SynthDataset dataset;
  SynthConfig config;
};
LoadedDataset read_dataset(const std::filesystem::path& dir);

}  // namespace specaug::io
