#include "shsnet/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace shsnet {

Matrix expm(const Matrix& A) { return A.exp(); }

std::pair<Matrix, Matrix> flow_pair(const Matrix& A, double tau) {
  const Index n = A.rows();
  Matrix block = Matrix::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = A;
  block.topRightCorner(n, n) = Matrix::Identity(n, n);
  const Matrix e = expm(block * tau);
  return {e.topLeftCorner(n, n), e.topRightCorner(n, n)};
}

double max_eigenvalue_symmetric(const Matrix& A) {
  const Matrix sym = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff();
}

LeastSquaresResult least_squares(const Matrix& A, const Matrix& B) {
  Eigen::ColPivHouseholderQR<Matrix> qr(A);
  LeastSquaresResult out;
  out.full_rank = qr.rank() == A.cols();
  out.solution = qr.solve(B);
  out.residual = (A * out.solution - B).norm();
  return out;
}

}  // namespace shsnet
