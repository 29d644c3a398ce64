#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "isoflow/linalg.hpp"
#include "isoflow/rng.hpp"
#include "isoflow/spectrum.hpp"

namespace isoflow {

/// A skew-symmetric generator. The stored matrix satisfies W^T = -W exactly
/// (skew part is taken at construction).
class SkewGenerator {
 public:
  explicit SkewGenerator(const Matrix& w) : matrix_(0.5 * (w - w.transpose())) {}
  const Matrix& matrix() const { return matrix_; }
  int dim() const { return static_cast<int>(matrix_.rows()); }

 private:
  Matrix matrix_;
};

/// A point of the isospectral manifold: a real symmetric matrix whose sorted
/// eigenvalues match a fixed spectrum. States are built through orthogonal
/// conjugation of diag(Lambda) (or through the checked factory), never by
/// editing entries, so the manifold constraint is structural.
class SymState {
 public:
  static SymState checked(const Matrix& m, const Spectrum& spectrum, double tol = 1e-8) {
    SymState s(symmetrize(m), spectrum);
    const double err = s.isospectral_error();
    if (err > tol) throw std::invalid_argument("SymState: eigenvalues deviate from spectrum by " + std::to_string(err));
    return s;
  }

  /// Construction paths that are isospectral by construction (conjugations,
  /// block embeddings of verified blocks) use this to skip the eigensolve.
  static SymState trusted(const Matrix& m, const Spectrum& spectrum) { return SymState(symmetrize(m), spectrum); }

  /// Diagonal state diag(lambda_{perm[0]}, ..., lambda_{perm[n-1]}).
  static SymState from_permutation(const Spectrum& spectrum, const std::vector<int>& perm) {
    const int n = spectrum.size();
    if (static_cast<int>(perm.size()) != n) throw std::invalid_argument("SymState: permutation size mismatch");
    Matrix m = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = spectrum[perm[static_cast<std::size_t>(i)]];
    return SymState(std::move(m), spectrum);
  }

  static SymState sorted_diagonal(const Spectrum& spectrum) {
    std::vector<int> id(static_cast<std::size_t>(spectrum.size()));
    for (int i = 0; i < spectrum.size(); ++i) id[static_cast<std::size_t>(i)] = i;
    return from_permutation(spectrum, id);
  }

  const Matrix& matrix() const { return matrix_; }
  const Spectrum& spectrum() const { return spectrum_; }
  int dim() const { return spectrum_.size(); }

  /// Q^T H Q for orthogonal Q; stays on the manifold up to roundoff.
  SymState conjugated(const Matrix& q) const { return SymState(symmetrize(q.transpose() * matrix_ * q), spectrum_); }

  double isospectral_error() const {
    const auto eig = sorted_eigenvalues(matrix_);
    double err = 0.0;
    for (int i = 0; i < spectrum_.size(); ++i) err = std::max(err, std::abs(eig[static_cast<std::size_t>(i)] - spectrum_[i]));
    return err;
  }

  bool verify(double tol = 1e-8) const { return isospectral_error() <= tol; }

 private:
  SymState(Matrix m, Spectrum spectrum) : matrix_(std::move(m)), spectrum_(std::move(spectrum)) {}

  Matrix matrix_;
  Spectrum spectrum_;
};

/// Diagonal of H as a vector; pi(H) is this vector placed on a diagonal.
inline Vector project_diagonal(const SymState& h) { return h.matrix().diagonal(); }

/// The diagonal potential Psi(H) = 1/2 sum d_i^2.
inline double potential(const SymState& h) { return 0.5 * h.matrix().diagonal().squaredNorm(); }
inline double potential(const Matrix& m) { return 0.5 * m.diagonal().squaredNorm(); }

/// Gradient ascent direction [H,[H,pi(H)]] in the normal metric; symmetric
/// and traceless.
inline Matrix gradient_field(const Matrix& m) { return symmetrize(commutator(m, commutator(m, diag_part(m)))); }
inline Matrix gradient_field(const SymState& h) { return gradient_field(h.matrix()); }

/// Normal metric on generators: g = -tr(W1 W2), positive definite on skews.
inline double normal_metric(const SkewGenerator& w1, const SkewGenerator& w2) {
  if (w1.dim() != w2.dim()) throw std::invalid_argument("normal_metric: dimension mismatch");
  return -(w1.matrix() * w2.matrix()).trace();
}

/// dPsi/dt along the flow: -tr([H,pi(H)]^2) = ||[H,pi(H)]||_F^2 >= 0.
inline double potential_rate(const Matrix& m) { return commutator(m, diag_part(m)).squaredNorm(); }
inline double potential_rate(const SymState& h) { return potential_rate(h.matrix()); }

/// Haar-random orthogonal matrix: QR of a Gaussian matrix with the sign of
/// the R diagonal fixed.
inline Matrix haar_orthogonal(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = gauss(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

/// Reproducible random state H = Q^T diag(Lambda) Q with Haar-random Q.
inline SymState random_state(const Spectrum& spectrum, std::uint64_t seed, std::uint64_t stream = 0) {
  auto rng = stream_rng(seed, stream);
  const int n = spectrum.size();
  Matrix d = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) d(i, i) = spectrum[i];
  const Matrix q = haar_orthogonal(n, rng);
  return SymState::trusted(q.transpose() * d * q, spectrum);
}

/// Member of X(Lambda'): given eigenvalues, all diagonal entries equal to
/// their mean. Classical Givens equalization: repeatedly rotate a pair of
/// diagonal entries straddling the mean so that one lands exactly on it.
inline Matrix constant_diagonal_block(const std::vector<double>& values) {
  const int n = static_cast<int>(values.size());
  if (n < 1) throw std::invalid_argument("constant_diagonal_block: empty value list");
  double mu = 0.0;
  for (double v : values) mu += v;
  mu /= static_cast<double>(n);
  double scale = 1.0;
  for (double v : values) scale = std::max(scale, std::abs(v));

  Matrix h = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) h(i, i) = values[static_cast<std::size_t>(i)];

  for (int iter = 0; iter < 4 * n; ++iter) {
    int lo = -1, hi = -1;
    for (int i = 0; i < n; ++i) {
      const double d = h(i, i) - mu;
      if (d < -1e-14 * scale && lo < 0) lo = i;
      if (d > 1e-14 * scale && hi < 0) hi = i;
    }
    if (lo < 0 || hi < 0) break;
    const int i = lo, j = hi;
    const double di = h(i, i), dj = h(j, j), hij = h(i, j);
    // rotate in the (i,j) plane so the new (i,i) entry equals mu:
    // di cos^2 t + dj sin^2 t + hij sin 2t = mu
    const double mid = 0.5 * (di + dj), half = 0.5 * (di - dj);
    const double r = std::sqrt(half * half + hij * hij);
    const double phi = std::atan2(hij, half);
    const double t = 0.5 * (phi + std::acos(std::clamp((mu - mid) / r, -1.0, 1.0)));
    const double c = std::cos(t), s = std::sin(t);
    // H <- G^T H G with G the identity except G(ii)=G(jj)=c, G(ij)=-s, G(ji)=s
    Vector col_i = c * h.col(i) + s * h.col(j);
    Vector col_j = -s * h.col(i) + c * h.col(j);
    h.col(i) = col_i;
    h.col(j) = col_j;
    Vector row_i = c * h.row(i).transpose() + s * h.row(j).transpose();
    Vector row_j = -s * h.row(i).transpose() + c * h.row(j).transpose();
    h.row(i) = row_i.transpose();
    h.row(j) = row_j.transpose();
    h = symmetrize(h);
    h(i, i) = mu;  // exact by the rotation choice; pin against roundoff
  }
  for (int i = 0; i < n; ++i)
    if (std::abs(h(i, i) - mu) > 1e-10 * scale) throw std::runtime_error("constant_diagonal_block: equalization stalled");
  return h;
}

inline SymState constant_diagonal_state(const std::vector<double>& sub_spectrum) {
  if (sub_spectrum.size() < 2) throw std::invalid_argument("constant_diagonal_state: need at least two eigenvalues");
  return SymState::trusted(constant_diagonal_block(sub_spectrum), Spectrum(sub_spectrum));
}

}  // namespace isoflow
