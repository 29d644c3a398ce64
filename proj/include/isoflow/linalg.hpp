#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <vector>

namespace isoflow {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Commutator [A,B] = AB - BA.
inline Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

/// Exact symmetrization (A + A^T)/2.
inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

/// Diagonal part as a matrix.
inline Matrix diag_part(const Matrix& a) { return a.diagonal().asDiagonal(); }

inline double frobenius(const Matrix& a) { return a.norm(); }

/// Frobenius norm of the off-diagonal entries.
inline double offdiag_mass(const Matrix& a) {
  double s = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

/// Ascending eigenvalues of a symmetric matrix.
inline std::vector<double> sorted_eigenvalues(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a), Eigen::EigenvaluesOnly);
  std::vector<double> out(es.eigenvalues().data(), es.eigenvalues().data() + a.rows());
  return out;
}

/// exp(S) for skew-symmetric S. Closed forms for n<=3 (rotation angle /
/// Rodrigues), scaling-and-squaring Pade otherwise. The result is orthogonal
/// up to roundoff, which is what keeps conjugation updates isospectral.
inline Matrix expm_skew(const Matrix& s) {
  const int n = static_cast<int>(s.rows());
  if (n == 1) return Matrix::Identity(1, 1);
  if (n == 2) {
    const double a = s(1, 0);
    Matrix r(2, 2);
    const double c = std::cos(a), d = std::sin(a);
    r << c, -d, d, c;
    return r;
  }
  if (n == 3) {
    // axis vector w with s = [w]_x
    const double wx = s(2, 1), wy = s(0, 2), wz = s(1, 0);
    const double th2 = wx * wx + wy * wy + wz * wz;
    const double th = std::sqrt(th2);
    double c1, c2;  // sin(th)/th, (1-cos(th))/th^2
    if (th < 1e-4) {
      c1 = 1.0 - th2 / 6.0 + th2 * th2 / 120.0;
      c2 = 0.5 - th2 / 24.0 + th2 * th2 / 720.0;
    } else {
      c1 = std::sin(th) / th;
      c2 = (1.0 - std::cos(th)) / th2;
    }
    Matrix r = Matrix::Identity(3, 3) + c1 * s + c2 * (s * s);
    return r;
  }
  return s.exp();
}

/// Pair generator e_i e_j^T - e_j e_i^T.
inline Matrix pair_generator(int n, int i, int j) {
  Matrix g = Matrix::Zero(n, n);
  g(i, j) = 1.0;
  g(j, i) = -1.0;
  return g;
}

}  // namespace isoflow
