#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "isoflow/linalg.hpp"
#include "isoflow/rng.hpp"
#include "isoflow/spectrum.hpp"
#include "isoflow/state.hpp"

using namespace isoflow;

namespace {

Matrix perm_matrix(const std::vector<int>& p) {
  const int n = static_cast<int>(p.size());
  Matrix m = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j) m(p[static_cast<std::size_t>(j)], j) = 1.0;
  return m;
}

Spectrum random_disjoint_spectrum(int n, std::mt19937_64& rng, double lo = 0.0, double hi = 3.0) {
  std::uniform_real_distribution<double> draw(lo, hi);
  while (true) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& x : v) x = draw(rng);
    std::sort(v.begin(), v.end());
    bool ok = true;
    for (std::size_t i = 1; i < v.size(); ++i) ok &= v[i] - v[i - 1] > 1e-3;
    if (!ok) continue;
    Spectrum s(v);
    if (s.strongly_disjoint()) return s;
  }
}

}  // namespace

TEST_CASE("project_diagonal and potential") {
  const Spectrum s124({1.0, 2.0, 4.0});
  const SymState d = SymState::sorted_diagonal(s124);
  const Vector pd = project_diagonal(d);
  CHECK(pd(0) == 1.0);
  CHECK(pd(1) == 2.0);
  CHECK(pd(2) == 4.0);
  CHECK(potential(d) == Catch::Approx(10.5).epsilon(1e-15));

  // constant-diagonal saddle of the pair (1,2)
  const SymState k = constant_diagonal_state({1.0, 2.0});
  CHECK(project_diagonal(k)(0) == Catch::Approx(1.5).margin(1e-12));
  CHECK(project_diagonal(k)(1) == Catch::Approx(1.5).margin(1e-12));
  CHECK(potential(k) == Catch::Approx(2.25).margin(1e-12));

  // trace invariance of the diagonal sum
  const SymState h = random_state(s124, 7);
  CHECK(project_diagonal(h).sum() == Catch::Approx(7.0).margin(1e-10));

  // permutation invariance of Psi
  std::vector<int> p = {2, 0, 1};
  const Matrix pm = perm_matrix(p);
  CHECK(potential(Matrix(pm.transpose() * h.matrix() * pm)) == Catch::Approx(potential(h)).margin(1e-12));
}

TEST_CASE("gradient field") {
  const Spectrum s12({1.0, 2.0});
  const SymState d = SymState::sorted_diagonal(Spectrum({1.0, 2.0, 4.0}));
  CHECK(gradient_field(d).norm() == 0.0);

  // constant-diagonal state: pi(H) is a multiple of I, so the field vanishes
  Matrix k(2, 2);
  k << 1.5, 0.5, 0.5, 1.5;
  CHECK(gradient_field(k).norm() < 1e-15);

  // generic 2x2: f_11 = -2 h^2 (d2 - d1), symmetric, traceless
  const double d1 = 0.3, d2 = 1.9, hv = 0.55;
  Matrix m(2, 2);
  m << d1, hv, hv, d2;
  const Matrix f = gradient_field(m);
  CHECK(f(0, 0) == Catch::Approx(-2.0 * hv * hv * (d2 - d1)).epsilon(1e-12));
  CHECK(f(0, 1) == Catch::Approx(f(1, 0)).margin(1e-15));
  CHECK(std::abs(f.trace()) < 1e-13);

  // tangency identity f = [H, [H, pi(H)]] with the inner commutator skew
  const SymState h = random_state(Spectrum({1.0, 2.0, 4.0}), 3);
  const Matrix a = commutator(h.matrix(), diag_part(h.matrix()));
  CHECK((gradient_field(h) - commutator(h.matrix(), a)).norm() < 1e-12);

  // directional-derivative oracle: d/dt Psi(e^{tW} H e^{-tW}) at 0 equals
  // tr(pi(H) [W, H]) and the ascent rate along f is the squared norm of A
  auto rng = stream_rng(11);
  std::normal_distribution<double> gauss;
  Matrix w = Matrix::Zero(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      w(i, j) = gauss(rng);
      w(j, i) = -w(i, j);
    }
  const double t = 1e-6;
  const Matrix qp = expm_skew(t * w), qm = expm_skew(-t * w);
  const double fd = (potential(Matrix(qp * h.matrix() * qp.transpose())) -
                     potential(Matrix(qm * h.matrix() * qm.transpose()))) /
                    (2.0 * t);
  const double analytic = (diag_part(h.matrix()) * commutator(w, h.matrix())).trace();
  CHECK(fd == Catch::Approx(analytic).margin(1e-6));
}

TEST_CASE("gradient field equivariance under permutation conjugation") {
  const Spectrum s({0.5, 1.7, 2.2, 3.9});
  const SymState h = random_state(s, 21);
  std::vector<int> p = {2, 3, 1, 0};
  const Matrix pm = perm_matrix(p);
  const Matrix lhs = gradient_field(Matrix(pm.transpose() * h.matrix() * pm));
  const Matrix rhs = pm.transpose() * gradient_field(h) * pm;
  CHECK((lhs - rhs).norm() < 1e-12);
}

TEST_CASE("normal metric") {
  const SkewGenerator w1(pair_generator(3, 0, 1));
  const SkewGenerator w2(pair_generator(3, 0, 2));
  CHECK(normal_metric(w1, w1) == Catch::Approx(2.0).epsilon(1e-15));
  CHECK(normal_metric(w1, w2) == Catch::Approx(normal_metric(w2, w1)).margin(1e-15));

  auto rng = stream_rng(5);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 20; ++trial) {
    Matrix w = Matrix::Zero(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) {
        w(i, j) = gauss(rng);
        w(j, i) = -w(i, j);
      }
    if (w.norm() == 0.0) continue;
    CHECK(normal_metric(SkewGenerator(w), SkewGenerator(w)) > 0.0);
  }
  CHECK_THROWS_AS(normal_metric(w1, SkewGenerator(pair_generator(4, 0, 1))), std::invalid_argument);
}

TEST_CASE("potential rate") {
  const Spectrum s124({1.0, 2.0, 4.0});
  CHECK(potential_rate(SymState::sorted_diagonal(s124)) == 0.0);
  CHECK(potential_rate(constant_diagonal_state({1.0, 2.0})) < 1e-24);

  std::mt19937_64 rng(17);
  for (int n = 2; n <= 6; ++n) {
    const Spectrum s = random_disjoint_spectrum(n, rng);
    for (int trial = 0; trial < 200; ++trial) {
      const SymState h = random_state(s, 100 + static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(n));
      const double rate = potential_rate(h);
      CHECK(rate >= -1e-12);
      // the rate is the pairing of pi(H) with the ascent field
      const double pairing = (diag_part(h.matrix()) * gradient_field(h)).trace();
      CHECK(rate == Catch::Approx(pairing).margin(1e-12 * std::max(1.0, rate)));
    }
  }
}

TEST_CASE("random_state: determinism, isospectrality, barycenter") {
  const Spectrum s({1.0, 2.0, 4.0});
  const SymState a = random_state(s, 42);
  const SymState b = random_state(s, 42);
  CHECK((a.matrix() - b.matrix()).norm() == 0.0);
  CHECK((a.matrix() - random_state(s, 43).matrix()).norm() > 1e-3);

  for (int seed = 0; seed < 20; ++seed) CHECK(random_state(s, static_cast<std::uint64_t>(seed)).isospectral_error() < 1e-10);

  // Monte Carlo: the mean diagonal approaches the hull barycenter mu*(1,1,1)
  const int samples = 1000;
  Vector mean = Vector::Zero(3);
  std::vector<Vector> draws;
  for (int k = 0; k < samples; ++k) {
    draws.push_back(project_diagonal(random_state(s, 1000, static_cast<std::uint64_t>(k))));
    mean += draws.back();
  }
  mean /= samples;
  Vector var = Vector::Zero(3);
  for (const auto& d : draws)
    for (int i = 0; i < 3; ++i) var(i) += (d(i) - mean(i)) * (d(i) - mean(i));
  var /= (samples - 1);
  for (int i = 0; i < 3; ++i) {
    const double se = std::sqrt(var(i) / samples);
    CHECK(std::abs(mean(i) - 7.0 / 3.0) < 3.0 * se);
  }
}

TEST_CASE("constant_diagonal_state") {
  const SymState k12 = constant_diagonal_state({1.0, 2.0});
  CHECK(k12.matrix()(0, 0) == Catch::Approx(1.5).margin(1e-12));
  CHECK(k12.matrix()(1, 1) == Catch::Approx(1.5).margin(1e-12));
  CHECK(std::abs(k12.matrix()(0, 1)) == Catch::Approx(0.5).margin(1e-12));

  const SymState k124 = constant_diagonal_state({1.0, 2.0, 4.0});
  for (int i = 0; i < 3; ++i) CHECK(k124.matrix()(i, i) == Catch::Approx(7.0 / 3.0).margin(1e-10));
  CHECK(k124.isospectral_error() < 1e-10);

  // contract: diagonal within 1e-10 of the mean, for a larger block too
  const SymState k5 = constant_diagonal_state({0.3, 1.1, 2.6, 4.2, 7.0});
  const double mu = (0.3 + 1.1 + 2.6 + 4.2 + 7.0) / 5.0;
  CHECK((project_diagonal(k5) - mu * Vector::Ones(5)).norm() < 1e-10);
  CHECK(k5.isospectral_error() < 1e-10);

  CHECK_THROWS_AS(constant_diagonal_state({1.0}), std::invalid_argument);
}

TEST_CASE("SymState construction and verification") {
  const Spectrum s({1.0, 2.0, 4.0});
  Matrix bad = Matrix::Identity(3, 3);
  CHECK_THROWS_AS(SymState::checked(bad, s), std::invalid_argument);

  const SymState h = random_state(s, 9);
  CHECK_NOTHROW(SymState::checked(h.matrix(), s));
  CHECK(h.verify());
  CHECK(h.verify(1e-12));

  // conjugation by an orthogonal matrix stays on the manifold
  auto rng = stream_rng(31);
  const Matrix q = haar_orthogonal(3, rng);
  CHECK(h.conjugated(q).isospectral_error() < 1e-12);

  // moment conservation: tr(H^k) matches the spectrum power sums
  for (int k = 1; k <= 3; ++k) {
    double want = 0.0;
    for (int i = 0; i < 3; ++i) want += std::pow(s[i], k);
    Matrix pw = Matrix::Identity(3, 3);
    for (int r = 0; r < k; ++r) pw = pw * h.matrix();
    CHECK(pw.trace() == Catch::Approx(want).margin(1e-9));
  }
}
