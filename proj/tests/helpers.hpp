#pragma once

#include <random>
#include <string>
#include <vector>

#include <specaug/spectral.hpp>

namespace specaug::testing {

inline Spectrum make_spectrum(std::vector<double> values, std::string label = {}) {
  Spectrum s;
  s.values = std::move(values);
  s.label = std::move(label);
  return s;
}

// Uniform random library with the given class sizes.
inline SpectralLibrary random_library(std::mt19937_64& rng, const std::vector<std::size_t>& sizes,
                                      std::size_t bands) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::vector<MaterialClass> classes;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    MaterialClass c{"m" + std::to_string(k), {}};
    for (std::size_t j = 0; j < sizes[k]; ++j) {
      std::vector<double> v(bands);
      for (double& x : v) x = u(rng);
      c.members.push_back(make_spectrum(std::move(v), c.material));
    }
    classes.push_back(std::move(c));
  }
  return SpectralLibrary(std::move(classes));
}

inline RowMatrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                               double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  RowMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

}  // namespace specaug::testing
