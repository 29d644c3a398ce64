#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "isoflow/critical.hpp"
#include "isoflow/flow.hpp"
#include "isoflow/partition.hpp"
#include "isoflow/state.hpp"

namespace isoflow {

/// Lexicographic rank of a permutation (Lehmer code).
inline int permutation_rank(const std::vector<int>& perm) {
  const int n = static_cast<int>(perm.size());
  int rank = 0;
  int factorial = 1;
  for (int i = 2; i <= n; ++i) factorial *= i;
  for (int i = 0; i < n; ++i) {
    factorial /= (n - i);
    int smaller = 0;
    for (int j = i + 1; j < n; ++j)
      if (perm[static_cast<std::size_t>(j)] < perm[static_cast<std::size_t>(i)]) ++smaller;
    rank += smaller * factorial;
  }
  return rank;
}

struct AdjacencyEdge {
  int node_a = 0, node_b = 0;     // node indices, a < b
  int value_index = 0;            // the swapped eigenvalues are value_index, value_index+1
  std::array<int, 2> slots{0, 0};  // where they sit
  double barrier = 0.0;           // Psi(stable) - Psi(saddle)
};

/// The predicted neighbor structure of the n! stable states: one node per
/// permutation, one edge per pair related by a swap of two eigenvalues
/// adjacent in sorted order, with the linking saddle data attached.
struct AdjacencyGraph {
  Spectrum spectrum;
  std::vector<std::vector<int>> nodes;       // rank-ordered permutations
  std::vector<AdjacencyEdge> edges;
  std::vector<std::vector<int>> incident;    // node -> edge indices

  explicit AdjacencyGraph(Spectrum s) : spectrum(std::move(s)) {}

  int node_index(const std::vector<int>& perm) const { return permutation_rank(perm); }
  int degree(int node) const { return static_cast<int>(incident[static_cast<std::size_t>(node)].size()); }

  int find_edge(int a, int b) const {
    if (a > b) std::swap(a, b);
    for (std::size_t e = 0; e < edges.size(); ++e)
      if (edges[e].node_a == a && edges[e].node_b == b) return static_cast<int>(e);
    return -1;
  }
};

inline AdjacencyGraph build_graph(const Spectrum& spectrum, int cap = kDefaultEnumerationCap) {
  const int n = spectrum.size();
  if (n > cap) throw std::invalid_argument("build_graph: n exceeds enumeration cap");
  AdjacencyGraph graph(spectrum);

  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  do {
    graph.nodes.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  graph.incident.assign(graph.nodes.size(), {});

  for (std::size_t a = 0; a < graph.nodes.size(); ++a) {
    const auto& pa = graph.nodes[a];
    for (int j = 0; j + 1 < n; ++j) {
      std::vector<int> pb = pa;
      int s = -1, t = -1;
      for (int i = 0; i < n; ++i) {
        if (pa[static_cast<std::size_t>(i)] == j) s = i;
        if (pa[static_cast<std::size_t>(i)] == j + 1) t = i;
      }
      std::swap(pb[static_cast<std::size_t>(s)], pb[static_cast<std::size_t>(t)]);
      const int b = graph.node_index(pb);
      if (static_cast<int>(a) >= b) continue;
      AdjacencyEdge edge;
      edge.node_a = static_cast<int>(a);
      edge.node_b = b;
      edge.value_index = j;
      edge.slots = {std::min(s, t), std::max(s, t)};
      const auto saddle = build_saddle(pa, pb, spectrum);
      edge.barrier = potential(SymState::from_permutation(spectrum, pa)) - potential(saddle.first);
      graph.edges.push_back(edge);
      graph.incident[a].push_back(static_cast<int>(graph.edges.size()) - 1);
      graph.incident[static_cast<std::size_t>(b)].push_back(static_cast<int>(graph.edges.size()) - 1);
    }
  }
  return graph;
}

struct TraceResult {
  TerminalLabel forward;   // endpoint along +N
  TerminalLabel backward;  // endpoint along -N
  double positive_eigenvalue = 0.0;
};

/// Follows the one-dimensional unstable manifold of a co-index-1 saddle: the
/// unique positive eigenmatrix N+ of L is computed from the normal-space
/// pencil, the state is kicked off by an exact conjugation realizing
/// K +- delta N+/|N+| to first order, and both branches are integrated to
/// their stable endpoints.
inline TraceResult trace_unstable_manifold(const SymState& saddle, const FlowConfig& cfg, double delta = 1e-5,
                                           int cap = kDefaultEnumerationCap) {
  const auto label = classify_terminal(saddle, cfg.classify_tol, cap);
  if (label.kind != TerminalLabel::Kind::NonStableCritical)
    throw std::invalid_argument("trace_unstable_manifold: state is not a non-stable critical point");
  const Matrix& k = saddle.matrix();
  if (equilibrium_residual(k) > 1e-8)
    throw std::invalid_argument("trace_unstable_manifold: state is not an equilibrium");

  const HessianBasis basis = build_hessian_basis(k, *label.partition, label.placement, saddle.spectrum());
  const auto sol = detail::pencil_solve(k, basis.all());
  int positives = 0, pos_at = -1;
  for (std::size_t i = 0; i < sol.values.size(); ++i)
    if (sol.values[i] > 0) {
      ++positives;
      pos_at = static_cast<int>(i);
    }
  if (positives != 1) throw std::invalid_argument("trace_unstable_manifold: co-index is " + std::to_string(positives));

  const auto els = basis.all();
  Matrix n_plus = Matrix::Zero(saddle.dim(), saddle.dim());
  Matrix w_plus = Matrix::Zero(saddle.dim(), saddle.dim());
  for (std::size_t i = 0; i < els.size(); ++i) {
    n_plus += sol.vectors(static_cast<int>(i), pos_at) * els[i]->n_mat;
    w_plus += sol.vectors(static_cast<int>(i), pos_at) * els[i]->omega;
  }
  const double s = delta * k.norm() / n_plus.norm();

  TraceResult result;
  result.positive_eigenvalue = sol.values[static_cast<std::size_t>(pos_at)];
  for (int dir = 0; dir < 2; ++dir) {
    const Matrix q = expm_skew((dir == 0 ? s : -s) * w_plus);
    const SymState start = saddle.conjugated(q);
    const TrajectoryRecord rec = integrate(start, cfg);
    if (!rec.converged || !rec.terminal_label.stable())
      throw std::runtime_error("trace_unstable_manifold: branch did not reach a stable state (" +
                               rec.terminal_label.describe() + ")");
    (dir == 0 ? result.forward : result.backward) = rec.terminal_label;
  }
  return result;
}

struct AdjacencyReport {
  int edges_total = 0;
  int confirmed = 0;
  int saddles_traced = 0;
  int higher_coindex_excluded = 0;
  std::vector<std::string> mismatches;
  std::vector<double> barriers;

  bool all_confirmed() const { return mismatches.empty() && confirmed == edges_total; }
};

/// Empirical check of the adjacency theorem: every co-index-1 saddle is
/// traced (both members, both branches) and its endpoints must form exactly
/// the graph edge its block placement predicts.
inline AdjacencyReport verify_adjacency(const Spectrum& spectrum, const FlowConfig& cfg, double delta = 1e-5,
                                        int cap = kDefaultEnumerationCap) {
  const AdjacencyGraph graph = build_graph(spectrum, cap);
  const auto catalog = enumerate_catalog(spectrum, cap);

  AdjacencyReport report;
  report.edges_total = static_cast<int>(graph.edges.size());
  for (const auto& e : graph.edges) report.barriers.push_back(e.barrier);
  std::vector<int> edge_confirmations(graph.edges.size(), 0);

  for (const auto& cm : catalog) {
    if (cm.coindex != 1) {
      if (cm.coindex >= 2) ++report.higher_coindex_excluded;
      continue;
    }
    // the pair block tells us the predicted edge
    int pair_block = -1;
    for (std::size_t b = 0; b < cm.partition.blocks.size(); ++b)
      if (cm.partition.blocks[b].size() == 2) pair_block = static_cast<int>(b);
    if (pair_block < 0) {
      report.mismatches.push_back("co-index-1 manifold without a pair block");
      continue;
    }
    std::vector<int> sigma1(static_cast<std::size_t>(spectrum.size()), -1);
    for (std::size_t b = 0; b < cm.partition.blocks.size(); ++b) {
      if (static_cast<int>(b) == pair_block) continue;
      sigma1[static_cast<std::size_t>(cm.placement[b][0])] = cm.partition.blocks[b][0];
    }
    const auto& pslots = cm.placement[static_cast<std::size_t>(pair_block)];
    const auto& pvals = cm.partition.blocks[static_cast<std::size_t>(pair_block)];
    sigma1[static_cast<std::size_t>(pslots[0])] = pvals[0];
    sigma1[static_cast<std::size_t>(pslots[1])] = pvals[1];
    std::vector<int> sigma2 = sigma1;
    std::swap(sigma2[static_cast<std::size_t>(pslots[0])], sigma2[static_cast<std::size_t>(pslots[1])]);

    const int expect_a = graph.node_index(sigma1), expect_b = graph.node_index(sigma2);
    const int edge_idx = graph.find_edge(expect_a, expect_b);
    if (edge_idx < 0) {
      report.mismatches.push_back("saddle placement does not correspond to any graph edge");
      continue;
    }

    const auto members = build_saddle(sigma1, sigma2, spectrum);
    bool ok = true;
    for (const SymState* member : {&members.first, &members.second}) {
      const TraceResult tr = trace_unstable_manifold(*member, cfg, delta, cap);
      ++report.saddles_traced;
      std::vector<int> got = {graph.node_index(tr.forward.sigma), graph.node_index(tr.backward.sigma)};
      std::sort(got.begin(), got.end());
      if (got[0] != std::min(expect_a, expect_b) || got[1] != std::max(expect_a, expect_b)) {
        std::ostringstream oss;
        oss << "edge (" << expect_a << "," << expect_b << ") traced to (" << got[0] << "," << got[1] << ")";
        report.mismatches.push_back(oss.str());
        ok = false;
      }
    }
    if (ok) ++edge_confirmations[static_cast<std::size_t>(edge_idx)];
  }

  for (int c : edge_confirmations)
    if (c > 0) ++report.confirmed;
  return report;
}

/// Graphviz export of the adjacency graph.
inline std::string to_dot(const AdjacencyGraph& graph) {
  std::ostringstream oss;
  oss << "graph adjacency {\n";
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    oss << "  n" << i << " [label=\"";
    for (std::size_t j = 0; j < graph.nodes[i].size(); ++j) oss << (j ? "," : "") << graph.nodes[i][j];
    oss << "\"];\n";
  }
  for (const auto& e : graph.edges)
    oss << "  n" << e.node_a << " -- n" << e.node_b << " [label=\"" << e.barrier << "\"];\n";
  oss << "}\n";
  return oss.str();
}

}  // namespace isoflow
