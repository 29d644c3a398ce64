#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "isoflow/chart2.hpp"
#include "isoflow/flow.hpp"
#include "isoflow/state.hpp"

using namespace isoflow;

namespace {

Matrix perm_matrix(const std::vector<int>& p) {
  const int n = static_cast<int>(p.size());
  Matrix m = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j) m(p[static_cast<std::size_t>(j)], j) = 1.0;
  return m;
}

double spectrum_drift(const Matrix& m, const Spectrum& s) {
  const auto eig = sorted_eigenvalues(m);
  double err = 0.0;
  for (int i = 0; i < s.size(); ++i) err = std::max(err, std::abs(eig[static_cast<std::size_t>(i)] - s[i]));
  return err;
}

}  // namespace

TEST_CASE("step: diagonal fixed point and consistency order") {
  const Spectrum s({1.0, 2.0, 4.0});
  const SymState d = SymState::sorted_diagonal(s);
  CHECK((step(d, 0.1).matrix() - d.matrix()).norm() == 0.0);

  // (step(H,h) - H)/h converges to the gradient field at rate O(h)
  const SymState h = random_state(s, 5);
  const Matrix f = gradient_field(h);
  auto err_at = [&](double hh) {
    const Matrix approx = (flow_step_matrix(h.matrix(), hh) - h.matrix()) / hh;
    return (approx - f).norm() / f.norm();
  };
  const double e4 = err_at(1e-4), e5 = err_at(1e-5);
  CHECK(e4 < 1e-2);
  const double ratio = e4 / e5;
  CHECK(ratio > 7.0);
  CHECK(ratio < 13.0);
}

TEST_CASE("step: exact isospectrality vs naive Euler") {
  const Spectrum s({0.5, 1.3, 2.6, 3.4, 4.45});
  REQUIRE(s.strongly_disjoint());
  const SymState h0 = random_state(s, 77);

  Matrix lie = h0.matrix();
  Matrix euler = h0.matrix();
  const double h = 1e-3;
  for (int k = 0; k < 10000; ++k) {
    lie = flow_step_matrix(lie, h);
    euler = symmetrize(euler + h * gradient_field(euler));
  }
  const double lie_drift = spectrum_drift(lie, s);
  const double euler_drift = spectrum_drift(euler, s);
  CHECK(lie_drift < 1e-9);
  CHECK(euler_drift > 10.0 * lie_drift);
}

TEST_CASE("step: Psi monotone for moderate step sizes") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> hdraw(1e-5, 0.02);
  std::uniform_real_distribution<double> vdraw(0.0, 3.0);
  int draws = 0;
  while (draws < 10000) {
    const int n = 2 + static_cast<int>(rng() % 5);
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& x : v) x = vdraw(rng);
    std::sort(v.begin(), v.end());
    bool distinct = true;
    for (std::size_t i = 1; i < v.size(); ++i) distinct &= v[i] - v[i - 1] > 1e-4;
    if (!distinct) continue;
    const Spectrum s(v);
    const SymState h = random_state(s, rng());
    const double hh = hdraw(rng);
    const double before = potential(h);
    const double after = potential(flow_step_matrix(h.matrix(), hh));
    REQUIRE(after >= before - 1e-12);
    ++draws;
  }
}

TEST_CASE("integrate: diagonal start converges immediately") {
  const Spectrum s({1.0, 2.0, 4.0});
  FlowConfig cfg;
  cfg.h = 1e-2;
  const auto rec = integrate(SymState::sorted_diagonal(s), cfg);
  CHECK(rec.converged);
  CHECK(rec.steps == 0);
  CHECK(rec.terminal_label.stable());
  CHECK(rec.terminal_label.sigma == std::vector<int>{0, 1, 2});
  CHECK((rec.terminal_state->matrix() - SymState::sorted_diagonal(s).matrix()).norm() == 0.0);
}

TEST_CASE("integrate: two-state chart dynamics match the scalar reduction") {
  const PairChart chart(1.0, 2.0);
  const double pi = std::acos(-1.0);
  const double theta0 = pi / 4.0 + 0.01;
  const Spectrum s({1.0, 2.0});
  const SymState h0 = SymState::checked(chart.state_matrix(theta0), s);

  // matrix flow, recording theta every step
  const double h = 1e-3, T = 12.0;
  Matrix m = h0.matrix();
  std::vector<double> theta_matrix;
  const int steps = static_cast<int>(T / h);
  for (int k = 0; k < steps; ++k) {
    theta_matrix.push_back(chart.theta_of(m));
    m = flow_step_matrix(m, h);
  }

  // scalar oracle: RK4 on theta' = -(1/2)(l1-l2)^2 sin(2 theta)
  double th = theta0;
  double max_diff = 0.0;
  for (int k = 0; k < steps; ++k) {
    max_diff = std::max(max_diff, std::abs(th - theta_matrix[static_cast<std::size_t>(k)]));
    auto f = [&](double x) { return chart.drift(x); };
    const double k1 = f(th), k2 = f(th + 0.5 * h * k1), k3 = f(th + 0.5 * h * k2), k4 = f(th + h * k3);
    th += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  CHECK(max_diff < 5e-3);

  // the start above the saddle at pi/4... flows down to theta = 0 (identity)
  FlowConfig cfg;
  cfg.h = 1e-3;
  cfg.max_time = 100.0;
  const auto rec = integrate(h0, cfg);
  REQUIRE(rec.converged);
  CHECK(rec.terminal_label.stable());
  CHECK(rec.terminal_label.sigma == std::vector<int>{0, 1});
}

TEST_CASE("integrate: random starts all reach diagonal states (n=3)") {
  const Spectrum s({1.0, 2.0, 4.0});
  FlowConfig cfg;
  cfg.h = 0.02;
  cfg.max_time = 300.0;
  std::vector<int> seen(6, 0);
  for (int k = 0; k < 100; ++k) {
    const auto rec = integrate(random_state(s, 500, static_cast<std::uint64_t>(k)), cfg);
    REQUIRE(rec.converged);
    REQUIRE(rec.terminal_label.stable());
    ++seen[static_cast<std::size_t>(permutation_rank(rec.terminal_label.sigma))];
  }
  int nonzero = 0;
  for (int c : seen) nonzero += c > 0 ? 1 : 0;
  CHECK(nonzero == 6);
}

TEST_CASE("integrate: potential values non-decreasing along the record") {
  const Spectrum s({0.5, 1.7, 2.2, 3.9});
  FlowConfig cfg;
  cfg.h = 5e-3;
  cfg.max_time = 150.0;
  cfg.record_stride = 10;
  const auto rec = integrate(random_state(s, 8), cfg);
  REQUIRE(rec.converged);
  for (std::size_t i = 1; i < rec.potential_values.size(); ++i)
    CHECK(rec.potential_values[i] >= rec.potential_values[i - 1] - 1e-10);
}

TEST_CASE("integrate: equivariance under permutation conjugation") {
  const Spectrum s({1.0, 2.0, 4.0});
  const SymState h0 = random_state(s, 12);
  std::vector<int> p = {1, 2, 0};
  const Matrix pm = perm_matrix(p);
  const SymState h0c = SymState::trusted(pm.transpose() * h0.matrix() * pm, s);

  FlowConfig cfg;
  cfg.h = 5e-3;
  cfg.max_time = 200.0;
  const auto rec = integrate(h0, cfg);
  const auto rec_c = integrate(h0c, cfg);
  REQUIRE(rec.converged);
  REQUIRE(rec_c.converged);
  const Matrix expected = pm.transpose() * rec.terminal_state->matrix() * pm;
  CHECK((rec_c.terminal_state->matrix() - expected).norm() < 1e-8);
}

TEST_CASE("integrate: block-diagonal initial data stays block-diagonal") {
  const Spectrum s({1.0, 2.0, 4.3, 7.9});
  REQUIRE(s.strongly_disjoint());
  // within-block rotations of diag blocks {1,2} and {4.3, 7.9}
  auto rot2 = [](double d1, double d2, double angle) {
    Matrix r(2, 2);
    r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    Matrix d(2, 2);
    d << d1, 0, 0, d2;
    return Matrix(r * d * r.transpose());
  };
  Matrix m = Matrix::Zero(4, 4);
  m.block(0, 0, 2, 2) = rot2(1.0, 2.0, 0.7);
  m.block(2, 2, 2, 2) = rot2(4.3, 7.9, 1.1);

  double max_offblock = 0.0;
  for (int k = 0; k < 20000; ++k) {
    m = flow_step_matrix(m, 5e-3);
    double ob = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 2; j < 4; ++j) ob += m(i, j) * m(i, j) + m(j, i) * m(j, i);
    max_offblock = std::max(max_offblock, std::sqrt(ob));
  }
  CHECK(max_offblock < 1e-10);
}

TEST_CASE("classify_terminal") {
  const Spectrum s({1.0, 2.0, 4.0});
  // exact diagonal with swapped first pair: sigma = (1 2) transposition
  const SymState swapped = SymState::from_permutation(s, {1, 0, 2});
  const auto label = classify_terminal(swapped, 1e-6);
  CHECK(label.stable());
  CHECK(label.sigma == std::vector<int>{1, 0, 2});

  // the pair saddle is non-stable critical with partition {{0,1}}
  const SymState k = constant_diagonal_state({1.0, 2.0});
  const auto klabel = classify_terminal(k, 1e-6);
  CHECK(klabel.kind == TerminalLabel::Kind::NonStableCritical);
  REQUIRE(klabel.partition.has_value());
  CHECK(klabel.partition->blocks == std::vector<std::vector<int>>{{0, 1}});

  // near-diagonal off-diagonal mass below tolerance: sorted match
  Matrix near = SymState::from_permutation(s, {2, 1, 0}).matrix();
  near(0, 1) = near(1, 0) = 1e-12;
  const auto nlabel = classify_terminal(SymState::trusted(near, s), 1e-6);
  CHECK(nlabel.stable());
  CHECK(nlabel.sigma == std::vector<int>{2, 1, 0});

  // ambiguous: diagonal entries nearly equidistant from two permutations
  const Spectrum s2({1.0, 1.1});
  Matrix amb = Matrix::Zero(2, 2);
  amb(0, 0) = 1.05;
  amb(1, 1) = 1.048;
  CHECK_THROWS_AS(classify_terminal(SymState::trusted(amb, s2), 0.2), std::runtime_error);

  // a big-block critical point: nearest partition is the full block
  const SymState x = constant_diagonal_state({1.0, 2.0, 4.0});
  const auto xlabel = classify_terminal(SymState::trusted(x.matrix(), s), 1e-6);
  CHECK(xlabel.kind == TerminalLabel::Kind::NonStableCritical);
  CHECK(xlabel.partition->blocks == std::vector<std::vector<int>>{{0, 1, 2}});
}

TEST_CASE("integrate: did-not-converge label when T is too small") {
  const Spectrum s({1.0, 2.0, 4.0});
  FlowConfig cfg;
  cfg.h = 1e-3;
  cfg.max_time = 5e-3;
  const auto rec = integrate(random_state(s, 3), cfg);
  CHECK_FALSE(rec.converged);
  CHECK(rec.terminal_label.kind == TerminalLabel::Kind::DidNotConverge);
}
