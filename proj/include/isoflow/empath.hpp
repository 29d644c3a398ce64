#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "isoflow/adjacency.hpp"
#include "isoflow/linalg.hpp"
#include "isoflow/state.hpp"
#include "isoflow/stats.hpp"
#include "isoflow/stochastic.hpp"

namespace isoflow {

// ---------------------------------------------------------------------------
// Euler-Lagrange system for the controlled flow
// ---------------------------------------------------------------------------

/// Right-hand side of the Euler-Lagrange system of the energy-minimizing
/// control problem, in the state/full-generator variables:
///
///   dH = [H, W]
///   dW = [H, [[H,pi(H)], pi(H)]] + [H, pi([H,[H,pi(H)]])]
///
/// The zero-control flow (W = [H,pi(H)]) and the time-reversed escape flow
/// (W = -[H,pi(H)]) both satisfy it, and it conserves
/// (|W|_F^2 - |[H,pi(H)]|_F^2)/2, the Hamiltonian of the variational problem.
inline std::pair<Matrix, Matrix> el_rhs(const Matrix& h, const Matrix& w) {
  const Matrix a = commutator(h, diag_part(h));
  const Matrix f = commutator(h, a);
  const Matrix dh = commutator(h, w);
  const Matrix dw = commutator(h, commutator(a, diag_part(h))) + commutator(h, diag_part(f));
  return {dh, dw};
}

inline std::pair<Matrix, Matrix> el_rhs(const SymState& h, const SkewGenerator& w) {
  return el_rhs(h.matrix(), w.matrix());
}

/// Conserved quantity of el_rhs trajectories.
inline double el_hamiltonian(const Matrix& h, const Matrix& w) {
  return 0.5 * (w.squaredNorm() - commutator(h, diag_part(h)).squaredNorm());
}

/// RK4 step of the Euler-Lagrange system; re-symmetrizes the state and
/// re-skews the generator against roundoff.
inline void el_step_rk4(Matrix& h, Matrix& w, double dt) {
  const auto [k1h, k1w] = el_rhs(h, w);
  const auto [k2h, k2w] = el_rhs(h + 0.5 * dt * k1h, w + 0.5 * dt * k1w);
  const auto [k3h, k3w] = el_rhs(h + 0.5 * dt * k2h, w + 0.5 * dt * k2w);
  const auto [k4h, k4w] = el_rhs(h + dt * k3h, w + dt * k3w);
  h += dt / 6.0 * (k1h + 2.0 * k2h + 2.0 * k3h + k4h);
  w += dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
  h = symmetrize(h);
  w = 0.5 * (w - w.transpose());
}

// ---------------------------------------------------------------------------
// Scalar reduced control problem
// ---------------------------------------------------------------------------

/// An edge control problem between two adjacent stable states: the simple
/// transposition determines the eigenvalue pair whose gap sets the barrier.
struct ControlProblem {
  std::vector<int> sigma_from, sigma_to;
  double epsilon = 0.5;
  double horizon = 20.0;
  std::pair<double, double> lambda_pair{0.0, 0.0};

  ControlProblem(std::vector<int> from, std::vector<int> to, double eps, double t, const Spectrum& spectrum)
      : sigma_from(std::move(from)), sigma_to(std::move(to)), epsilon(eps), horizon(t) {
    if (!(t > 0)) throw std::invalid_argument("ControlProblem: horizon must be positive");
    std::vector<int> diff;
    for (std::size_t i = 0; i < sigma_from.size(); ++i)
      if (sigma_from[i] != sigma_to[i]) diff.push_back(static_cast<int>(i));
    bool simple = diff.size() == 2;
    if (simple) {
      const int a = sigma_from[static_cast<std::size_t>(diff[0])], b = sigma_from[static_cast<std::size_t>(diff[1])];
      simple = std::abs(a - b) == 1 && sigma_to[static_cast<std::size_t>(diff[0])] == b &&
               sigma_to[static_cast<std::size_t>(diff[1])] == a;
    }
    if (!simple) throw std::invalid_argument("ControlProblem: states are not graph-adjacent");
    const int lo = std::min(sigma_from[static_cast<std::size_t>(diff[0])], sigma_from[static_cast<std::size_t>(diff[1])]);
    lambda_pair = {spectrum[lo], spectrum[lo + 1]};
  }

  double gap() const { return lambda_pair.second - lambda_pair.first; }
};

struct ScalarEmpResult {
  std::vector<double> times;
  std::vector<double> theta;
  double energy = 0.0;          // min integral of u^2 dt
  double terminal_error = 0.0;  // |theta(T) - pi|
  bool feasible = false;        // terminal error within 1e-3
  int iterations = 0;
};

namespace detail {

inline double scalar_drift(double gap, double theta) { return -0.5 * gap * gap * std::sin(2.0 * theta); }

}  // namespace detail

/// Solves the reduced scalar problem: minimize  int_0^T u^2 dt  subject to
///   theta' = -(1/2) gap^2 sin(2 theta) + 2 eps u,  theta(0)=0, theta(T)=pi
/// by direct transcription (midpoint collocation, the control eliminated
/// through the dynamics) with a soft terminal constraint of weight 1e6, via
/// Levenberg-Marquardt on the residual vector. The normal equations are
/// tridiagonal-plus-border and small, so a dense solve is used.
inline ScalarEmpResult scalar_emp(double gap, double epsilon, double horizon, int grid_n = 400) {
  if (!(horizon > 0) || !(epsilon > 0) || grid_n < 8) throw std::invalid_argument("scalar_emp: bad parameters");
  const double pi = std::acos(-1.0);
  const double dt = horizon / grid_n;
  const double wterm = 1e6;

  // unknowns theta_1..theta_N (theta_0 = 0 pinned)
  Vector th(grid_n);
  for (int k = 0; k < grid_n; ++k) th(k) = pi * (k + 1) / grid_n;

  auto theta_at = [&](int k) { return k == 0 ? 0.0 : th(k - 1); };
  auto residuals = [&](const Vector& x, Vector& r) {
    for (int k = 0; k < grid_n; ++k) {
      const double a = k == 0 ? 0.0 : x(k - 1);
      const double b = x(k);
      const double u = ((b - a) / dt - detail::scalar_drift(gap, 0.5 * (a + b))) / (2.0 * epsilon);
      r(k) = std::sqrt(dt) * u;
    }
    r(grid_n) = std::sqrt(wterm) * (x(grid_n - 1) - pi);
  };

  Vector r(grid_n + 1), rtrial(grid_n + 1);
  residuals(th, r);
  double cost = r.squaredNorm();
  double lm = 1e-3;
  int iter = 0;
  for (; iter < 300; ++iter) {
    // Jacobian: residual k depends on x(k-1), x(k)
    Matrix jac = Matrix::Zero(grid_n + 1, grid_n);
    for (int k = 0; k < grid_n; ++k) {
      const double a = k == 0 ? 0.0 : th(k - 1);
      const double b = th(k);
      const double mid = 0.5 * (a + b);
      const double dfd = -gap * gap * std::cos(2.0 * mid);  // d drift / d theta
      const double s = std::sqrt(dt) / (2.0 * epsilon);
      if (k > 0) jac(k, k - 1) = s * (-1.0 / dt - 0.5 * dfd);
      jac(k, k) = s * (1.0 / dt - 0.5 * dfd);
    }
    jac(grid_n, grid_n - 1) = std::sqrt(wterm);

    const Matrix jtj = jac.transpose() * jac;
    const Vector g = jac.transpose() * r;
    if (g.norm() < 1e-12 * std::max(1.0, cost)) break;

    bool stepped = false;
    for (int tries = 0; tries < 12; ++tries) {
      Matrix m = jtj;
      for (int d = 0; d < grid_n; ++d) m(d, d) += lm;
      const Vector delta = m.ldlt().solve(-g);
      const Vector trial = th + delta;
      residuals(trial, rtrial);
      const double trial_cost = rtrial.squaredNorm();
      if (trial_cost < cost) {
        th = trial;
        r = rtrial;
        cost = trial_cost;
        lm = std::max(lm * 0.3, 1e-12);
        stepped = true;
        break;
      }
      lm *= 8.0;
    }
    if (!stepped) break;
  }

  ScalarEmpResult result;
  result.iterations = iter;
  result.times.push_back(0.0);
  result.theta.push_back(0.0);
  for (int k = 0; k < grid_n; ++k) {
    result.times.push_back(dt * (k + 1));
    result.theta.push_back(th(k));
  }
  for (int k = 0; k < grid_n; ++k) {
    const double a = theta_at(k), b = theta_at(k + 1);
    const double u = ((b - a) / dt - detail::scalar_drift(gap, 0.5 * (a + b))) / (2.0 * epsilon);
    result.energy += dt * u * u;
  }
  result.terminal_error = std::abs(th(grid_n - 1) - pi);
  result.feasible = result.terminal_error <= 1e-3;
  return result;
}

/// Independent validation of scalar_emp: backward dynamic programming on a
/// (theta, t) grid containing theta = 0 and theta = pi as nodes, with the
/// same midpoint discretization of the control cost. theta_steps counts grid
/// intervals across [0, pi]; the grid is padded beyond both endpoints.
inline double scalar_emp_dp_oracle(double gap, double epsilon, double horizon, int time_steps = 400,
                                   int theta_steps = 360, int pad = 20) {
  const double pi = std::acos(-1.0);
  const double dtheta = pi / theta_steps;
  const double dt = horizon / time_steps;
  const int n_nodes = theta_steps + 2 * pad + 1;
  auto theta_of = [&](int i) { return (i - pad) * dtheta; };

  // window of reachable per-step moves: |theta' - f| <= 2 eps u_cap
  const double fmax = 0.5 * gap * gap;
  const double vmax = 3.0 * fmax + 6.0 * epsilon;  // generous velocity cap
  const int window = std::max(2, static_cast<int>(std::ceil(vmax * dt / dtheta)) + 1);

  const double wterm = 1e6;
  std::vector<double> value(static_cast<std::size_t>(n_nodes)), next(static_cast<std::size_t>(n_nodes));
  for (int i = 0; i < n_nodes; ++i) {
    const double d = theta_of(i) - pi;
    value[static_cast<std::size_t>(i)] = wterm * d * d;
  }
  for (int k = time_steps - 1; k >= 0; --k) {
    for (int i = 0; i < n_nodes; ++i) {
      double best = std::numeric_limits<double>::infinity();
      const double a = theta_of(i);
      for (int j = std::max(0, i - window); j <= std::min(n_nodes - 1, i + window); ++j) {
        const double b = theta_of(j);
        const double u = ((b - a) / dt - detail::scalar_drift(gap, 0.5 * (a + b))) / (2.0 * epsilon);
        const double c = dt * u * u + value[static_cast<std::size_t>(j)];
        best = std::min(best, c);
      }
      next[static_cast<std::size_t>(i)] = best;
    }
    value.swap(next);
  }
  // subtract the residual terminal penalty of the best achievable endpoint:
  // the DP value at theta=0 includes at most wterm*(dtheta/2)^2, negligible
  return value[static_cast<std::size_t>(pad)];
}

// ---------------------------------------------------------------------------
// Transition weights and the Monte-Carlo comparison
// ---------------------------------------------------------------------------

struct EdgeWeight {
  int edge_index = -1;
  double energy = 0.0;
  double weight = 0.0;  // exp(-energy)
  double terminal_error = 0.0;
  bool feasible = false;
};

struct TransitionWeights {
  std::vector<EdgeWeight> edges;                      // aligned with graph.edges
  std::vector<std::vector<double>> stochastic_rows;   // per node, normalized over incident edges
};

inline EdgeWeight transition_weight(const ControlProblem& problem, int grid_n = 400) {
  const auto sol = scalar_emp(problem.gap(), problem.epsilon, problem.horizon, grid_n);
  if (!sol.feasible)
    throw std::runtime_error("transition_weight: horizon too small (terminal error " +
                             std::to_string(sol.terminal_error) + ")");
  EdgeWeight w;
  w.energy = sol.energy;
  w.weight = std::exp(-sol.energy);
  w.terminal_error = sol.terminal_error;
  w.feasible = sol.feasible;
  return w;
}

/// Weights for every edge of the graph, normalized per state over the n-1
/// neighbors to a stochastic-matrix prediction. Distinct gaps need one solve
/// each; edges share solves through a gap cache.
inline TransitionWeights edge_weights(const AdjacencyGraph& graph, double epsilon, double horizon, int grid_n = 400) {
  TransitionWeights out;
  std::vector<std::pair<double, EdgeWeight>> cache;  // gap -> weight
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const auto& edge = graph.edges[e];
    const double gap = graph.spectrum[edge.value_index + 1] - graph.spectrum[edge.value_index];
    EdgeWeight w;
    bool found = false;
    for (const auto& [g, cached] : cache)
      if (std::abs(g - gap) < 1e-14) {
        w = cached;
        found = true;
        break;
      }
    if (!found) {
      const auto sol = scalar_emp(gap, epsilon, horizon, grid_n);
      if (!sol.feasible)
        throw std::runtime_error("edge_weights: infeasible horizon for gap " + std::to_string(gap));
      w.energy = sol.energy;
      w.weight = std::exp(-sol.energy);
      w.terminal_error = sol.terminal_error;
      w.feasible = true;
      cache.emplace_back(gap, w);
    }
    w.edge_index = static_cast<int>(e);
    out.edges.push_back(w);
  }
  out.stochastic_rows.assign(graph.nodes.size(), {});
  for (std::size_t v = 0; v < graph.nodes.size(); ++v) {
    double total = 0.0;
    for (int e : graph.incident[v]) total += out.edges[static_cast<std::size_t>(e)].weight;
    for (int e : graph.incident[v])
      out.stochastic_rows[v].push_back(out.edges[static_cast<std::size_t>(e)].weight / total);
  }
  return out;
}

struct MonteCarloComparison {
  std::vector<double> per_state_tau;  // NaN where undefined
  double aggregate_tau = 0.0;
  int comparable_pairs = 0;
  bool all_tied = false;
  int states_skipped = 0;  // fewer than 2 neighbors or no empirical data
};

/// Rank agreement (Kendall tau) between predicted neighbor weights and the
/// empirical transition frequencies of a Markov estimate, per state and
/// pooled.
inline MonteCarloComparison compare_with_monte_carlo(const AdjacencyGraph& graph, const TransitionWeights& weights,
                                                     const MarkovEstimate& markov) {
  MonteCarloComparison cmp;
  int concordant = 0, discordant = 0;
  for (std::size_t v = 0; v < graph.nodes.size(); ++v) {
    const auto& inc = graph.incident[v];
    if (inc.size() < 2) {
      cmp.per_state_tau.push_back(std::numeric_limits<double>::quiet_NaN());
      ++cmp.states_skipped;
      continue;
    }
    std::vector<double> pred, emp;
    long row_total = 0;
    for (int e : inc) {
      const auto& edge = graph.edges[static_cast<std::size_t>(e)];
      const int other = edge.node_a == static_cast<int>(v) ? edge.node_b : edge.node_a;
      pred.push_back(weights.edges[static_cast<std::size_t>(e)].weight);
      const long c = markov.counts[v][static_cast<std::size_t>(other)];
      emp.push_back(static_cast<double>(c));
      row_total += c;
    }
    if (row_total == 0) {
      cmp.per_state_tau.push_back(std::numeric_limits<double>::quiet_NaN());
      ++cmp.states_skipped;
      continue;
    }
    const auto tau = kendall_tau(pred, emp);
    cmp.per_state_tau.push_back(tau.all_tied ? 0.0 : tau.tau);
    for (std::size_t i = 0; i < pred.size(); ++i)
      for (std::size_t j = i + 1; j < pred.size(); ++j) {
        const double dp = pred[i] - pred[j], de = emp[i] - emp[j];
        if (dp == 0.0 || de == 0.0) continue;
        (dp * de > 0 ? concordant : discordant)++;
      }
  }
  cmp.comparable_pairs = concordant + discordant;
  if (cmp.comparable_pairs == 0)
    cmp.all_tied = true;
  else
    cmp.aggregate_tau = static_cast<double>(concordant - discordant) / cmp.comparable_pairs;
  return cmp;
}

}  // namespace isoflow
