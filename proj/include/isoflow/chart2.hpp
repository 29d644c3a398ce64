#pragma once

#include <cmath>
#include <stdexcept>

#include "isoflow/linalg.hpp"
#include "isoflow/state.hpp"

namespace isoflow {

/// Angle chart for the two-eigenvalue isospectral manifold, which is a
/// circle. With a = (l1+l2)/2 and b = (l1-l2)/2,
///   H(theta) = [[a + b cos t, b sin t], [b sin t, a - b cos t]]
/// so theta = 0 and theta = pi are the two diagonal states and the odd
/// multiples of pi/2 are the constant-diagonal saddles. The induced flow is
/// theta' = -(1/2)(l1-l2)^2 sin(2 theta) and Psi(theta) = a^2 + b^2 cos^2 t.
/// The chart is unit-speed up to the constant metric factor; the Riemannian
/// arc measure is uniform in theta.
struct PairChart {
  double l1, l2;

  PairChart(double lambda1, double lambda2) : l1(lambda1), l2(lambda2) {
    if (l1 == l2) throw std::invalid_argument("PairChart: eigenvalues must be distinct");
  }

  double a() const { return 0.5 * (l1 + l2); }
  double b() const { return 0.5 * (l1 - l2); }
  double gap() const { return l1 - l2; }

  Matrix state_matrix(double theta) const {
    Matrix m(2, 2);
    m << a() + b() * std::cos(theta), b() * std::sin(theta), b() * std::sin(theta), a() - b() * std::cos(theta);
    return m;
  }

  double theta_of(const Matrix& m) const {
    return std::atan2(m(0, 1) / b(), (m(0, 0) - a()) / b());
  }

  double psi(double theta) const {
    const double c = std::cos(theta);
    return a() * a() + b() * b() * c * c;
  }

  /// theta' = -(1/2)(l1-l2)^2 sin(2 theta)
  double drift(double theta) const { return -0.5 * gap() * gap() * std::sin(2.0 * theta); }
};

}  // namespace isoflow
