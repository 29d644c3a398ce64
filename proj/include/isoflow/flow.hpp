#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "isoflow/linalg.hpp"
#include "isoflow/partition.hpp"
#include "isoflow/state.hpp"

namespace isoflow {

struct FlowConfig {
  double h = 1e-3;                 // step size
  double max_time = 200.0;         // horizon T
  double convergence_tol = 1e-10;  // on the gradient Frobenius norm
  double classify_tol = 1e-6;      // off-diagonal mass separating stable from critical
  int record_stride = 0;           // 0 = choose automatically (~2000 samples)

  void validate() const {
    if (!(h > 0)) throw std::invalid_argument("FlowConfig: h must be positive");
    if (!(convergence_tol > 0)) throw std::invalid_argument("FlowConfig: convergence_tol must be positive");
    if (!(classify_tol > 0)) throw std::invalid_argument("FlowConfig: classify_tol must be positive");
  }
};

/// One isospectral step: with W = h*[H,pi(H)], H' = e^{-W} H e^{W}. The
/// derivative at h=0 is [H,[H,pi(H)]], and conjugation by the orthogonal
/// exponential preserves the spectrum to roundoff for any h.
inline Matrix flow_step_matrix(const Matrix& m, double h) {
  const Matrix w = commutator(m, diag_part(m));
  if (w.norm() == 0.0) return m;
  const Matrix q = expm_skew(h * w);  // e^{hW}
  return symmetrize(q.transpose() * m * q);
}

inline SymState step(const SymState& state, double h) {
  if (!(h > 0)) throw std::invalid_argument("step: h must be positive");
  return SymState::trusted(flow_step_matrix(state.matrix(), h), state.spectrum());
}

struct TerminalLabel {
  enum class Kind { Stable, NonStableCritical, DidNotConverge };
  Kind kind = Kind::DidNotConverge;
  std::vector<int> sigma;        // slot -> eigenvalue index (Stable only)
  std::optional<Partition> partition;  // nearest partition (NonStableCritical)
  std::vector<std::vector<int>> placement;  // block -> slots (NonStableCritical)
  double match_distance = 0.0;

  bool stable() const { return kind == Kind::Stable; }
  std::string describe() const {
    switch (kind) {
      case Kind::Stable: {
        std::string s = "stable sigma=[";
        for (std::size_t i = 0; i < sigma.size(); ++i) s += (i ? "," : "") + std::to_string(sigma[i]);
        return s + "]";
      }
      case Kind::NonStableCritical:
        return "non-stable critical";
      default:
        return "did not converge";
    }
  }
};

/// Label a converged state. Off-diagonal mass below tol means a diagonal
/// matrix: match the permutation by sorting (eigenvalues are distinct); an
/// ambiguous match (two permutations within tol) is an error. Otherwise the
/// point sits on a critical manifold: report the nearest partition by
/// comparing the diagonal against block-mean multisets.
inline TerminalLabel classify_terminal(const SymState& state, double tol, int cap = kDefaultEnumerationCap) {
  const int n = state.dim();
  const Matrix& m = state.matrix();
  const auto& lambda = state.spectrum().values();
  TerminalLabel label;

  if (offdiag_mass(m) < tol) {
    const Vector d = m.diagonal();
    std::vector<int> slots(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) slots[static_cast<std::size_t>(i)] = i;
    std::sort(slots.begin(), slots.end(), [&](int a, int b) { return d(a) < d(b); });
    std::vector<int> sigma(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) sigma[static_cast<std::size_t>(slots[static_cast<std::size_t>(k)])] = k;

    auto dist_to = [&](const std::vector<int>& s) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        const double diff = d(i) - lambda[static_cast<std::size_t>(s[static_cast<std::size_t>(i)])];
        acc += diff * diff;
      }
      return std::sqrt(acc);
    };

    const double best = dist_to(sigma);
    if (n >= 2) {
      // runner-up: swap the two sorted entries with the smallest gap
      int kmin = 0;
      double gap = std::abs(d(slots[1]) - d(slots[0]));
      for (int k = 1; k + 1 < n; ++k) {
        const double g = std::abs(d(slots[static_cast<std::size_t>(k + 1)]) - d(slots[static_cast<std::size_t>(k)]));
        if (g < gap) {
          gap = g;
          kmin = k;
        }
      }
      std::vector<int> second = sigma;
      std::swap(second[static_cast<std::size_t>(slots[static_cast<std::size_t>(kmin)])],
                second[static_cast<std::size_t>(slots[static_cast<std::size_t>(kmin + 1)])]);
      if (best < tol && dist_to(second) < tol)
        throw std::runtime_error("classify_terminal: ambiguous permutation match");
    }
    label.kind = TerminalLabel::Kind::Stable;
    label.sigma = std::move(sigma);
    label.match_distance = best;
    return label;
  }

  // nearest critical manifold: compare the sorted diagonal against the
  // sorted multiset {mu_i repeated n_i times} over all partitions
  const Vector d = m.diagonal();
  std::vector<double> ds(d.data(), d.data() + n);
  std::sort(ds.begin(), ds.end());
  const auto partitions = enumerate_partitions(state.spectrum(), cap);
  double best = std::numeric_limits<double>::infinity();
  const Partition* best_p = nullptr;
  for (const auto& p : partitions) {
    const auto means = p.block_means(state.spectrum());
    std::vector<double> expect;
    for (std::size_t b = 0; b < p.blocks.size(); ++b)
      expect.insert(expect.end(), p.blocks[b].size(), means[b]);
    std::sort(expect.begin(), expect.end());
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += (ds[static_cast<std::size_t>(i)] - expect[static_cast<std::size_t>(i)]) *
                                       (ds[static_cast<std::size_t>(i)] - expect[static_cast<std::size_t>(i)]);
    if (acc < best) {
      best = acc;
      best_p = &p;
    }
  }
  label.kind = TerminalLabel::Kind::NonStableCritical;
  label.partition = *best_p;
  label.match_distance = std::sqrt(best);
  // assign slots to blocks by proximity to each block mean
  const auto means = best_p->block_means(state.spectrum());
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  label.placement.assign(best_p->blocks.size(), {});
  for (std::size_t b = 0; b < best_p->blocks.size(); ++b) {
    for (std::size_t r = 0; r < best_p->blocks[b].size(); ++r) {
      int arg = -1;
      double dist = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i) {
        if (taken[static_cast<std::size_t>(i)]) continue;
        const double dd = std::abs(d(i) - means[b]);
        if (dd < dist) {
          dist = dd;
          arg = i;
        }
      }
      taken[static_cast<std::size_t>(arg)] = true;
      label.placement[b].push_back(arg);
    }
    std::sort(label.placement[b].begin(), label.placement[b].end());
  }
  return label;
}

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<double> potential_values;
  std::vector<double> offdiag_masses;
  std::optional<SymState> terminal_state;
  TerminalLabel terminal_label;
  double terminal_gradient_norm = 0.0;
  long steps = 0;
  bool converged = false;
};

/// Advance until the gradient norm drops below convergence_tol or max_time
/// is exceeded, recording Psi at sampled times and labeling the endpoint.
inline TrajectoryRecord integrate(const SymState& initial, const FlowConfig& cfg) {
  cfg.validate();
  TrajectoryRecord rec;
  Matrix m = initial.matrix();
  const long max_steps = static_cast<long>(std::ceil(cfg.max_time / cfg.h));
  int stride = cfg.record_stride;
  if (stride <= 0) stride = static_cast<int>(std::max(1L, max_steps / 2000));

  double grad_norm = gradient_field(m).norm();
  long k = 0;
  for (; k < max_steps; ++k) {
    if (k % stride == 0) {
      rec.times.push_back(k * cfg.h);
      rec.potential_values.push_back(potential(m));
      rec.offdiag_masses.push_back(offdiag_mass(m));
    }
    if (grad_norm < cfg.convergence_tol) break;
    m = flow_step_matrix(m, cfg.h);
    grad_norm = gradient_field(m).norm();
  }
  rec.times.push_back(k * cfg.h);
  rec.potential_values.push_back(potential(m));
  rec.offdiag_masses.push_back(offdiag_mass(m));
  rec.steps = k;
  rec.converged = grad_norm < cfg.convergence_tol;
  rec.terminal_gradient_norm = grad_norm;
  rec.terminal_state = SymState::trusted(m, initial.spectrum());
  if (rec.converged)
    rec.terminal_label = classify_terminal(*rec.terminal_state, cfg.classify_tol);
  else
    rec.terminal_label.kind = TerminalLabel::Kind::DidNotConverge;
  return rec;
}

}  // namespace isoflow
