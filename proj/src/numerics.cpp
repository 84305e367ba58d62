#include "poksvd/numerics.hpp"

#include <cmath>

namespace poksvd {

namespace {

constexpr double kRankThreshold = 1e-12;
constexpr double kRidgeScale = 1e-10;

}  // namespace

LeastSquaresSolution least_squares_solve(const ComplexMatrix& a, const ComplexVector& y) {
  if (a.rows() != y.size()) {
    throw ContractViolation("least_squares_solve: A has " + std::to_string(a.rows()) +
                            " rows but y has length " + std::to_string(y.size()));
  }
  LeastSquaresSolution out;
  const Index cols = a.cols();
  if (cols == 0) {
    out.x.resize(0);
    return out;
  }

  Eigen::ColPivHouseholderQR<ComplexMatrix> qr(a.rows(), cols);
  qr.setThreshold(kRankThreshold);
  qr.compute(a);
  if (qr.rank() == cols) {
    out.x = qr.solve(y);
    return out;
  }

  out.ridge_fallback = true;
  const ComplexMatrix gram = a.adjoint() * a;
  const double trace = gram.trace().real();
  if (trace <= 0.0) {
    out.x = ComplexVector::Zero(cols);
    return out;
  }
  const double lambda = kRidgeScale * trace / static_cast<double>(cols);
  ComplexMatrix regularized = gram;
  regularized.diagonal().array() += lambda;
  out.x = regularized.ldlt().solve(a.adjoint() * y);
  return out;
}

SingularTriple dominant_singular_triple(const ComplexMatrix& a, double tol, int max_iter) {
  if (!(tol > 0.0)) throw ContractViolation("dominant_singular_triple: tol must be positive");
  if (max_iter < 1) throw ContractViolation("dominant_singular_triple: max_iter must be >= 1");
  if (a.size() == 0 || a.cwiseAbs2().sum() == 0.0) throw ComputationError("zero matrix");

  const Index cols = a.cols();
  ComplexVector v = ComplexVector::Ones(cols) / std::sqrt(static_cast<double>(cols));
  ComplexVector u = a * v;
  if (u.norm() == 0.0) {
    // All-ones start lies in the null space; restart from the heaviest column.
    Index heaviest = 0;
    a.colwise().squaredNorm().maxCoeff(&heaviest);
    v = a.adjoint() * a.col(heaviest);
    v.normalize();
    u = a * v;
  }

  SingularTriple triple;
  for (int it = 1; it <= max_iter; ++it) {
    const double sigma = u.norm();
    u /= sigma;
    ComplexVector w = a.adjoint() * u;
    const double mismatch = (w - sigma * v).norm();

    triple.sigma = sigma;
    triple.left = u;
    triple.right = v;
    triple.iterations = it;
    if (mismatch <= tol * sigma) return triple;

    v = w / w.norm();
    u = a * v;
  }
  throw ConvergenceError("dominant_singular_triple: no convergence after " +
                             std::to_string(max_iter) + " iterations",
                         std::move(triple));
}

}  // namespace poksvd
