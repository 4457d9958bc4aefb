#pragma once

#include "shsnet/types.hpp"

namespace shsnet {

/// Dense matrix exponential e^{A}.
[[nodiscard]] Matrix expm(const Matrix& A);

/// Flow pair for the linear system x' = A x + u over one sampling period:
/// returns (Phi, Gamma) with Phi = e^{A tau} and Gamma = \int_0^tau e^{A s} ds,
/// computed exactly through one block matrix exponential (valid for singular A).
[[nodiscard]] std::pair<Matrix, Matrix> flow_pair(const Matrix& A, double tau);

/// Largest eigenvalue of a symmetric matrix (symmetrized before solving).
[[nodiscard]] double max_eigenvalue_symmetric(const Matrix& A);

/// Frobenius-norm least squares: minimizes ||A X - B||_F over X.
/// Returns the minimizer, its residual norm, and whether A has full column rank.
struct LeastSquaresResult {
  Matrix solution;
  double residual = 0.0;
  bool full_rank = true;
};
[[nodiscard]] LeastSquaresResult least_squares(const Matrix& A, const Matrix& B);

}  // namespace shsnet
