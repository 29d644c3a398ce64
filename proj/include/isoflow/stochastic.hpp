#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "isoflow/adjacency.hpp"
#include "isoflow/chart2.hpp"
#include "isoflow/flow.hpp"
#include "isoflow/linalg.hpp"
#include "isoflow/rng.hpp"
#include "isoflow/state.hpp"
#include "isoflow/stats.hpp"

namespace isoflow {

/// The n! diagonal states with a nearest-state query. The closest diagonal
/// state to H is found by rank-matching the diagonal entries, which is the
/// sorted assignment.
struct StableStates {
  Spectrum spectrum;
  double min_pairwise_distance = 0.0;

  explicit StableStates(const Spectrum& s) : spectrum(s) {
    double min_gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i + 1 < s.size(); ++i) min_gap = std::min(min_gap, s[i + 1] - s[i]);
    // the closest pair of diagonal states swaps the two closest eigenvalues
    min_pairwise_distance = std::sqrt(2.0) * min_gap;
  }

  int count() const {
    int f = 1;
    for (int i = 2; i <= spectrum.size(); ++i) f *= i;
    return f;
  }

  /// (rank of nearest diagonal state, Frobenius distance to it)
  std::pair<int, double> nearest(const Matrix& m) const {
    const int n = spectrum.size();
    const Vector d = m.diagonal();
    std::vector<int> slots(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) slots[static_cast<std::size_t>(i)] = i;
    std::sort(slots.begin(), slots.end(), [&](int a, int b) { return d(a) < d(b); });
    std::vector<int> sigma(static_cast<std::size_t>(n));
    double dist2 = 0.0;
    for (int k = 0; k < n; ++k) {
      sigma[static_cast<std::size_t>(slots[static_cast<std::size_t>(k)])] = k;
      const double diff = d(slots[static_cast<std::size_t>(k)]) - spectrum[k];
      dist2 += diff * diff;
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) dist2 += m(i, j) * m(i, j);
    return {permutation_rank(sigma), std::sqrt(dist2)};
  }

  std::vector<int> perm_of_rank(int rank) const {
    std::vector<int> perm(static_cast<std::size_t>(spectrum.size()));
    std::vector<int> pool;
    for (int i = 0; i < spectrum.size(); ++i) pool.push_back(i);
    int f = 1;
    for (int i = 2; i < spectrum.size(); ++i) f *= i;
    for (int i = 0; i < spectrum.size(); ++i) {
      const int pick = rank / f;
      rank %= f;
      perm[static_cast<std::size_t>(i)] = pool[static_cast<std::size_t>(pick)];
      pool.erase(pool.begin() + pick);
      if (spectrum.size() - 1 - i > 0) f /= (spectrum.size() - 1 - i);
    }
    return perm;
  }
};

struct SdeConfig {
  double epsilon = 0.3;
  double h = 1e-3;
  double horizon = 1e3;
  std::uint64_t seed = 0;
  double state_radius = 0.0;       // 0 = auto: 0.2 x min pairwise stable distance
  int record_stride = 0;           // 0 = no Psi sampling
  double burn_in_fraction = 0.1;   // discarded by the stationarity checks

  void validate(const StableStates& stable) const {
    if (epsilon < 0) throw std::invalid_argument("SdeConfig: epsilon must be >= 0");
    if (!(h > 0)) throw std::invalid_argument("SdeConfig: h must be positive");
    if (!(horizon > 0)) throw std::invalid_argument("SdeConfig: horizon must be positive");
    const double r = radius(stable);
    if (!(r > 0) || r >= 0.5 * stable.min_pairwise_distance)
      throw std::invalid_argument("SdeConfig: state radius must be positive and below half the minimum "
                                  "distance between stable states (visit detection must be exclusive)");
  }

  double radius(const StableStates& stable) const {
    return state_radius > 0 ? state_radius : 0.2 * stable.min_pairwise_distance;
  }
};

/// One step of the spectrum-preserving stochastic integrator. With
/// A = [H,pi(H)], the generator G = h A + eps * sum_{i<j} W_ij dw_ij
/// (W_ij the unit-norm pair generators (e_i e_j^T - e_j e_i^T)/sqrt(2),
/// dw ~ N(0,h)) conjugates the state: H' = e^{-G} H e^{G}. The h->0 drift is
/// [H,[H,pi(H)]], the noise realizes an isotropic unit frame of the normal
/// metric, and the conjugation supplies the Ito correction in distribution,
/// so the invariant density is exp(2 Psi / eps^2) against the volume measure.
/// The eps = 0 path performs bitwise the deterministic step.
inline Matrix sde_step_matrix(const Matrix& m, double h, double eps, std::mt19937_64& rng) {
  const int n = static_cast<int>(m.rows());
  Matrix gen = h * commutator(m, diag_part(m));
  if (eps > 0) {
    std::normal_distribution<double> gauss(0.0, std::sqrt(h));
    const double scale = eps / std::sqrt(2.0);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double dw = scale * gauss(rng);
        gen(i, j) += dw;
        gen(j, i) -= dw;
      }
  }
  if (gen.norm() == 0.0) return m;
  const Matrix q = expm_skew(gen);
  return symmetrize(q.transpose() * m * q);
}

inline SymState sde_step(const SymState& state, const SdeConfig& cfg, std::mt19937_64& rng) {
  return SymState::trusted(sde_step_matrix(state.matrix(), cfg.h, cfg.epsilon, rng), state.spectrum());
}

struct SdePath {
  std::vector<int> chain;            // visited stable states, consecutive distinct
  std::vector<double> enter_times;
  std::vector<double> sojourn_times; // chain[k] was occupied for sojourn_times[k]
  std::vector<double> sample_times;  // strided Psi samples (if requested)
  std::vector<double> psi_samples;
  long steps = 0;
  std::uint64_t seed = 0, stream = 0;

  int transitions() const { return chain.empty() ? 0 : static_cast<int>(chain.size()) - 1; }
};

/// Simulates one path and annotates it with the visit chain: a visit begins
/// when the path enters a state's detection ball and ends when it enters a
/// different state's ball.
inline SdePath simulate_path(const SymState& initial, const SdeConfig& cfg, const StableStates& stable,
                             std::uint64_t stream = 0) {
  cfg.validate(stable);
  const double radius = cfg.radius(stable);
  auto rng = stream_rng(cfg.seed, stream);
  SdePath path;
  path.seed = cfg.seed;
  path.stream = stream;

  Matrix m = initial.matrix();
  const long max_steps = static_cast<long>(std::ceil(cfg.horizon / cfg.h));
  int current = -1;
  for (long k = 0; k <= max_steps; ++k) {
    const double t = k * cfg.h;
    const auto [state, dist] = stable.nearest(m);
    if (dist < radius && state != current) {
      if (!path.chain.empty()) path.sojourn_times.push_back(t - path.enter_times.back());
      path.chain.push_back(state);
      path.enter_times.push_back(t);
      current = state;
    }
    if (cfg.record_stride > 0 && k % cfg.record_stride == 0) {
      path.sample_times.push_back(t);
      path.psi_samples.push_back(potential(m));
    }
    if (k < max_steps) m = sde_step_matrix(m, cfg.h, cfg.epsilon, rng);
  }
  if (!path.chain.empty()) path.sojourn_times.push_back(cfg.horizon - path.enter_times.back());
  path.steps = max_steps;
  return path;
}

struct MarkovEstimate {
  int state_count = 0;
  std::vector<std::vector<long>> counts;  // counts[from][to]
  std::vector<double> dwell_times;
  long total_transitions = 0;
  long adjacent_transitions = 0;
  double adjacency_dominance = 0.0;

  std::vector<long> row_sums() const {
    std::vector<long> s(static_cast<std::size_t>(state_count), 0);
    for (int i = 0; i < state_count; ++i)
      for (int j = 0; j < state_count; ++j) s[static_cast<std::size_t>(i)] += counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return s;
  }
};

/// Aggregates transition counts over paths and scores how often transitions
/// land on graph-adjacent states.
inline MarkovEstimate estimate_markov(const std::vector<SdePath>& paths, const AdjacencyGraph& graph) {
  MarkovEstimate est;
  est.state_count = static_cast<int>(graph.nodes.size());
  est.counts.assign(static_cast<std::size_t>(est.state_count),
                    std::vector<long>(static_cast<std::size_t>(est.state_count), 0));
  est.dwell_times.assign(static_cast<std::size_t>(est.state_count), 0.0);

  for (const auto& path : paths) {
    for (std::size_t k = 0; k < path.chain.size(); ++k) {
      est.dwell_times[static_cast<std::size_t>(path.chain[k])] += path.sojourn_times[k];
      if (k + 1 < path.chain.size()) {
        const int a = path.chain[k], b = path.chain[k + 1];
        ++est.counts[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
        ++est.total_transitions;
        if (graph.find_edge(a, b) >= 0) ++est.adjacent_transitions;
      }
    }
  }
  if (est.total_transitions == 0) throw std::runtime_error("estimate_markov: insufficient data (no transitions)");
  est.adjacency_dominance = static_cast<double>(est.adjacent_transitions) / static_cast<double>(est.total_transitions);
  return est;
}

// ---------------------------------------------------------------------------
// Stationary-density checks
// ---------------------------------------------------------------------------

struct SelfConsistencyReport {
  std::vector<double> bin_edges;
  std::vector<double> histogram_a, histogram_b;
  double tv_distance = 0.0;
  long samples = 0;
};

inline std::vector<double> histogram(const std::vector<double>& samples, double lo, double hi, int bins) {
  std::vector<double> h(static_cast<std::size_t>(bins), 0.0);
  for (double v : samples) {
    int b = static_cast<int>((v - lo) / (hi - lo) * bins);
    b = std::clamp(b, 0, bins - 1);
    h[static_cast<std::size_t>(b)] += 1.0;
  }
  return h;
}

/// Two independent long runs at the same epsilon must produce matching Psi
/// histograms (the Psi pushforward of the stationary density has no closed
/// form, so the check is run-to-run agreement).
inline SelfConsistencyReport stationary_self_consistency(const Spectrum& spectrum, const SdeConfig& cfg, int bins,
                                                         std::uint64_t stream_a, std::uint64_t stream_b) {
  if (cfg.record_stride <= 0) throw std::invalid_argument("stationary_self_consistency: record_stride required");
  const StableStates stable(spectrum);
  const SymState h0 = SymState::sorted_diagonal(spectrum);
  const SdePath pa = simulate_path(h0, cfg, stable, stream_a);
  const SdePath pb = simulate_path(h0, cfg, stable, stream_b);

  auto tail = [&](const SdePath& p) {
    const std::size_t skip = static_cast<std::size_t>(cfg.burn_in_fraction * p.psi_samples.size());
    return std::vector<double>(p.psi_samples.begin() + static_cast<long>(skip), p.psi_samples.end());
  };
  const auto sa = tail(pa), sb = tail(pb);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : sa) lo = std::min(lo, v), hi = std::max(hi, v);
  for (double v : sb) lo = std::min(lo, v), hi = std::max(hi, v);
  hi += 1e-12 * std::max(1.0, std::abs(hi));

  SelfConsistencyReport rep;
  for (int b = 0; b <= bins; ++b) rep.bin_edges.push_back(lo + (hi - lo) * b / bins);
  rep.histogram_a = histogram(sa, lo, hi, bins);
  rep.histogram_b = histogram(sb, lo, hi, bins);
  rep.tv_distance = tv_distance(rep.histogram_a, rep.histogram_b);
  rep.samples = static_cast<long>(sa.size() + sb.size());
  return rep;
}

struct OccupancyScalingReport {
  std::vector<double> inv_eps_sq;  // regressor 1/eps^2
  std::vector<double> log_ratio;   // log(occupancy A / occupancy B)
  LinearFit fit;                   // slope should be ~ 2 (Psi_A - Psi_B)
  double predicted_slope = 0.0;
};

/// Occupancy log-ratio between two Psi windows, regressed against 1/eps^2
/// over an epsilon grid. Under the exp(2 Psi/eps^2) stationary density the
/// relation is linear with slope 2 (midpoint_A - midpoint_B); the unknown
/// window volumes only shift the intercept.
inline OccupancyScalingReport occupancy_scaling(const Spectrum& spectrum, const std::vector<double>& eps_grid,
                                                std::pair<double, double> window_a, std::pair<double, double> window_b,
                                                SdeConfig cfg) {
  const StableStates stable(spectrum);
  const SymState h0 = SymState::sorted_diagonal(spectrum);
  OccupancyScalingReport rep;
  for (std::size_t e = 0; e < eps_grid.size(); ++e) {
    cfg.epsilon = eps_grid[e];
    const SdePath p = simulate_path(h0, cfg, stable, 1000 + e);
    const std::size_t skip = static_cast<std::size_t>(cfg.burn_in_fraction * p.psi_samples.size());
    long in_a = 0, in_b = 0;
    for (std::size_t k = skip; k < p.psi_samples.size(); ++k) {
      const double v = p.psi_samples[k];
      if (v >= window_a.first && v < window_a.second) ++in_a;
      if (v >= window_b.first && v < window_b.second) ++in_b;
    }
    if (in_a == 0 || in_b == 0) throw std::runtime_error("occupancy_scaling: empty occupancy window");
    rep.inv_eps_sq.push_back(1.0 / (cfg.epsilon * cfg.epsilon));
    rep.log_ratio.push_back(std::log(static_cast<double>(in_a) / static_cast<double>(in_b)));
  }
  rep.fit = linear_fit(rep.inv_eps_sq, rep.log_ratio);
  rep.predicted_slope = 2.0 * (0.5 * (window_a.first + window_a.second) - 0.5 * (window_b.first + window_b.second));
  return rep;
}

struct ChartDensityReport {
  ChiSquareReport chi_square;
  int bins = 0;
  long samples = 0;
};

/// Direct test of the stationary density in the two-eigenvalue chart, where
/// the base arc measure is uniform in theta: the empirical theta histogram is
/// tested against bin masses of c exp(2 Psi(theta)/eps^2). Psi is
/// pi-periodic in the chart, so samples are folded to [0,pi); that identifies
/// the two symmetric wells and shortens the decorrelation time to the
/// in-well scale. Samples are strided for approximate independence.
inline ChartDensityReport chart_density_check(const PairChart& chart, const SdeConfig& cfg, int bins,
                                              std::uint64_t stream = 0) {
  if (cfg.record_stride <= 0) throw std::invalid_argument("chart_density_check: record_stride required");
  if (!(cfg.h > 0) || !(cfg.epsilon > 0)) throw std::invalid_argument("chart_density_check: need h > 0, eps > 0");

  auto rng = stream_rng(cfg.seed, stream);
  Matrix m = chart.state_matrix(0.0);
  const long max_steps = static_cast<long>(std::ceil(cfg.horizon / cfg.h));
  const long skip = static_cast<long>(cfg.burn_in_fraction * max_steps);
  std::vector<double> thetas;
  const double pi = std::acos(-1.0);
  for (long k = 0; k < max_steps; ++k) {
    m = sde_step_matrix(m, cfg.h, cfg.epsilon, rng);
    if (k >= skip && k % cfg.record_stride == 0) {
      double th = std::fmod(chart.theta_of(m), pi);
      if (th < 0) th += pi;
      thetas.push_back(th);
    }
  }

  std::vector<double> expected(static_cast<std::size_t>(bins), 0.0);
  for (int b = 0; b < bins; ++b) {
    // Simpson's rule for the bin mass of exp(2 Psi/eps^2)
    const double a = pi * b / bins, c = pi * (b + 1) / bins, mid = 0.5 * (a + c);
    auto dens = [&](double th) { return std::exp(2.0 * chart.psi(th) / (cfg.epsilon * cfg.epsilon)); };
    expected[static_cast<std::size_t>(b)] = (dens(a) + 4.0 * dens(mid) + dens(c)) * (c - a) / 6.0;
  }

  ChartDensityReport rep;
  rep.bins = bins;
  rep.samples = static_cast<long>(thetas.size());
  rep.chi_square = chi_square_gof(histogram(thetas, 0.0, pi, bins), expected);
  return rep;
}

// ---------------------------------------------------------------------------
// First hitting
// ---------------------------------------------------------------------------

struct HittingSample {
  double time = 0.0;
  bool hit = false;       // reached a target state first
  bool failed = false;    // reached some other state first
  bool censored = false;  // horizon exhausted
};

/// First-hitting experiment: start at the source state and run until the
/// path first enters any target ball; entering a non-source non-target ball
/// first counts as a failed attempt, and exhausted horizons are censored
/// (kept in the output, flagged).
inline std::vector<HittingSample> first_hitting(const std::vector<int>& sigma_from, const std::vector<int>& targets,
                                                const SdeConfig& cfg, int n_samples, const Spectrum& spectrum) {
  const StableStates stable(spectrum);
  cfg.validate(stable);
  const double radius = cfg.radius(stable);
  const int from_rank = permutation_rank(sigma_from);
  for (int t : targets)
    if (t == from_rank) throw std::invalid_argument("first_hitting: target set contains the source");
  if (targets.empty()) throw std::invalid_argument("first_hitting: empty target set");

  const SymState h0 = SymState::from_permutation(spectrum, sigma_from);
  std::vector<HittingSample> out(static_cast<std::size_t>(n_samples));
  for (int s = 0; s < n_samples; ++s) {
    auto rng = stream_rng(cfg.seed, 2000 + static_cast<std::uint64_t>(s));
    Matrix m = h0.matrix();
    const long max_steps = static_cast<long>(std::ceil(cfg.horizon / cfg.h));
    HittingSample sample;
    sample.censored = true;
    for (long k = 1; k <= max_steps; ++k) {
      m = sde_step_matrix(m, cfg.h, cfg.epsilon, rng);
      const auto [state, dist] = stable.nearest(m);
      if (dist >= radius || state == from_rank) continue;
      sample.time = k * cfg.h;
      sample.censored = false;
      if (std::find(targets.begin(), targets.end(), state) != targets.end())
        sample.hit = true;
      else
        sample.failed = true;
      break;
    }
    if (sample.censored) sample.time = cfg.horizon;
    out[static_cast<std::size_t>(s)] = sample;
  }
  return out;
}

}  // namespace isoflow
