#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <random>
#include <string>

#include "poksvd/model.hpp"
#include "poksvd/numerics.hpp"

namespace poksvd::testing {

inline ComplexMatrix random_complex(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  ComplexMatrix a(rows, cols);
  for (Index i = 0; i < a.size(); ++i) a(i) = Complex(n(rng), n(rng));
  return a;
}

inline ComplexVector random_vector(Index n, std::mt19937_64& rng) {
  return random_complex(n, 1, rng).col(0);
}

inline Complex random_phase(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-M_PI, M_PI);
  return std::polar(1.0, u(rng));
}

inline Dictionary random_dictionary(Index channels, Index bins, Index atoms, std::mt19937_64& rng,
                                    Gauge gauge = Gauge::PerBin) {
  ComplexMatrix d(channels * bins, atoms);
  for (Index k = 0; k < atoms; ++k)
    d.col(k) = normalize_atom(random_vector(channels * bins, rng), channels, gauge).atom;
  return Dictionary(channels, bins, d, gauge);
}

// Cost of fitting e by phi * x * d over a uniform grid of phases.
inline double grid_min_phase_cost(const ComplexVector& e, const ComplexVector& d, double x,
                                  int points) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < points; ++i) {
    const Complex phi = std::polar(1.0, 2.0 * M_PI * i / points);
    best = std::min(best, (e - phi * x * d).squaredNorm());
  }
  return best;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const char* env = std::getenv("POKSVD_TMP");
  std::filesystem::path root = env ? env : std::filesystem::temp_directory_path() / "poksvd_tests";
  auto dir = root / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace poksvd::testing
