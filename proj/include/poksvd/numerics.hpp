#pragma once

#include <complex>

#include <Eigen/Dense>

#include "poksvd/errors.hpp"

namespace poksvd {

using Complex = std::complex<double>;
using Index = Eigen::Index;
/// Dense complex matrix, column-major.
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

struct LeastSquaresSolution {
  ComplexVector x;
  /// Set when the system was numerically rank deficient and the ridge
  /// regularized normal equations were solved instead.
  bool ridge_fallback = false;
};

/// Minimizes ||y - A x||_2. Full column rank systems go through a
/// column-pivoted QR; rank-deficient ones fall back to
/// (A^H A + lambda I) x = A^H y with lambda = 1e-10 * trace(A^H A) / cols.
LeastSquaresSolution least_squares_solve(const ComplexMatrix& a, const ComplexVector& y);

struct SingularTriple {
  double sigma = 0.0;
  ComplexVector left;
  ComplexVector right;
  int iterations = 0;
};

/// Thrown when power iteration exhausts its budget. Carries the last iterate,
/// which is still a valid (if loose) rank-1 approximation.
class ConvergenceError : public ComputationError {
 public:
  ConvergenceError(const std::string& what, SingularTriple last)
      : ComputationError(what), last_(std::move(last)) {}
  const SingularTriple& last_iterate() const { return last_; }

 private:
  SingularTriple last_;
};

/// Largest singular value and its singular vectors by power iteration on
/// A^H A, started from the normalized all-ones vector.
///
/// On return A * right == sigma * left exactly (up to rounding) and
/// ||A^H left - sigma * right|| <= tol * sigma. The phase of the pair is
/// whatever the iteration produced; gauge fixing is the caller's job.
SingularTriple dominant_singular_triple(const ComplexMatrix& a, double tol, int max_iter);

}  // namespace poksvd
