#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "isoflow/linalg.hpp"
#include "isoflow/partition.hpp"
#include "isoflow/state.hpp"

namespace isoflow {

// Sign convention used throughout: the flow is gradient ASCENT of Psi
// (dPsi/dt >= 0), so stable manifolds are local maxima with all-negative
// normal Hessian; the co-index counts positive eigenvalues.

/// dim E_alpha = 1/2 sum (n_i - 1)(n_i - 2), from E_alpha ~ prod X(Lambda_i)
/// with each factor of dimension 1/2 (#-1)(#-2).
inline int manifold_dimension(const Partition& partition) {
  int acc = 0;
  for (const auto& b : partition.blocks) {
    const int ni = static_cast<int>(b.size());
    acc += (ni - 1) * (ni - 2);
  }
  return acc / 2;
}

inline double equilibrium_residual(const Matrix& m) { return commutator(m, diag_part(m)).norm(); }

/// Hessian of the diagonal potential at an equilibrium H, evaluated on the
/// tangent pair ([H,W1], [H,W2]):
///
///   Hess = -tr([H,W1][pi(H),W2]) + <pi([H,W1]), pi([H,W2])>
///
/// The second term enters with a PLUS sign: that is what a direct expansion
/// of X(g(grad Psi, Y)) gives, it reproduces d^2/dt^2 Psi(e^{tW} H e^{-tW})
/// exactly, and it makes the diagonal-block Gram entries positive so that
/// constant-diagonal blocks contribute unstable directions.
inline double hessian_form(const Matrix& h, const Matrix& w1, const Matrix& w2, double equilibrium_tol = 1e-10) {
  const double res = equilibrium_residual(h);
  if (res > equilibrium_tol * std::max(1.0, h.squaredNorm()))
    throw std::invalid_argument("hessian_form: not an equilibrium (|[H,pi(H)]| = " + std::to_string(res) + ")");
  const Matrix x1 = commutator(h, w1);
  const Matrix x2 = commutator(h, w2);
  const Matrix pw2 = commutator(diag_part(h), w2);
  return -(x1 * pw2).trace() + x1.diagonal().dot(x2.diagonal());
}

inline double hessian_form(const SymState& h, const SkewGenerator& w1, const SkewGenerator& w2,
                           double equilibrium_tol = 1e-10) {
  return hessian_form(h.matrix(), w1.matrix(), w2.matrix(), equilibrium_tol);
}

/// One element of the Hessian-orthogonal basis of the normal space: the
/// symmetric matrix N together with the generator W such that N = [H,W].
struct HessianBasisElement {
  Matrix n_mat;
  Matrix omega;
  bool off_diag = false;
  int p = -1, q = -1, i = -1, j = -1;  // block/eigenvector labels
  double analytic_eigenvalue = 0.0;    // off-diagonal elements only
};

struct HessianBasis {
  std::vector<HessianBasisElement> off_diag;  // the N_{pq,ij} family
  std::vector<HessianBasisElement> diag;      // the N_{i,j} family
  int n_alpha() const { return static_cast<int>(off_diag.size() + diag.size()); }
  std::vector<const HessianBasisElement*> all() const {
    std::vector<const HessianBasisElement*> v;
    v.reserve(static_cast<std::size_t>(n_alpha()));
    for (const auto& e : off_diag) v.push_back(&e);
    for (const auto& e : diag) v.push_back(&e);
    return v;
  }
};

/// A critical manifold: a partition of the spectrum, an assignment of blocks
/// to index slots (one orbit member), a canonical representative, and the
/// Morse data (dim, index, co-index) with the L-operator eigenvalues.
struct CriticalManifold {
  Partition partition;                      // blocks ordered by ascending block mean
  std::vector<std::vector<int>> placement;  // block b -> sorted slot list
  SymState representative;
  int dim = 0;
  int index = 0;
  int coindex = 0;
  std::vector<double> l_eigenvalues;  // ascending, size n_alpha

  CriticalManifold(Partition p, std::vector<std::vector<int>> place, SymState rep)
      : partition(std::move(p)), placement(std::move(place)), representative(std::move(rep)) {}

  bool stable() const { return coindex == 0; }
  int n_alpha() const { return static_cast<int>(l_eigenvalues.size()); }
};

namespace detail {

struct BlockEigen {
  std::vector<double> values;        // ascending
  std::vector<Vector> vectors;       // matching unit eigenvectors (block-local)
};

inline BlockEigen block_eigen(const Matrix& block) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(block);
  BlockEigen out;
  for (int i = 0; i < block.rows(); ++i) {
    out.values.push_back(es.eigenvalues()(i));
    out.vectors.push_back(es.eigenvectors().col(i));
  }
  return out;
}

inline Matrix extract_block(const Matrix& m, const std::vector<int>& slots) {
  const int k = static_cast<int>(slots.size());
  Matrix b(k, k);
  for (int a = 0; a < k; ++a)
    for (int c = 0; c < k; ++c) b(a, c) = m(slots[static_cast<std::size_t>(a)], slots[static_cast<std::size_t>(c)]);
  return b;
}

/// Orthonormal basis of the hyperplane perpendicular to the all-ones vector.
inline std::vector<Vector> ones_complement_basis(int k) {
  Matrix e = Matrix::Zero(k, 1);
  for (int i = 0; i < k; ++i) e(i, 0) = 1.0;
  Eigen::HouseholderQR<Matrix> qr(e);
  Matrix q = qr.householderQ();
  std::vector<Vector> out;
  for (int c = 1; c < k; ++c) out.push_back(q.col(c));
  return out;
}

}  // namespace detail

/// Builds the Hessian-orthogonal basis N = N_o (off block-diagonal) plus
/// N_d (block-diagonal) of the normal space at the representative.
///
/// N_o: for blocks p < q and block eigenpairs (l_pi, v_pi), (l_qj, v_qj),
/// the symmetric matrix with pq-block (l_pi - l_qj) v_pi v_qj^T, realized as
/// [H, W] for the skew W with pq-block v_pi v_qj^T. Its L-eigenvalue is
/// -(mu_p - mu_q)/(l_pi - l_qj).
///
/// N_d: per block i of size >= 2, generators solved from the linear map
/// W -> diag([H_i, W]) so that diag([H_i, W_ij]) equals the j-th vector of an
/// orthonormal basis of the ones-complement; the solve is minimal-norm least
/// squares and a large residual (submersion failure) is an error.
inline HessianBasis build_hessian_basis(const Matrix& rep, const Partition& partition,
                                        const std::vector<std::vector<int>>& placement, const Spectrum& spectrum) {
  const int n = static_cast<int>(rep.rows());
  const int k = static_cast<int>(partition.blocks.size());
  const auto means = partition.block_means(spectrum);

  std::vector<detail::BlockEigen> eigs;
  for (int b = 0; b < k; ++b)
    eigs.push_back(detail::block_eigen(detail::extract_block(rep, placement[static_cast<std::size_t>(b)])));

  HessianBasis basis;
  for (int p = 0; p < k; ++p) {
    const auto& sp = placement[static_cast<std::size_t>(p)];
    for (int q = p + 1; q < k; ++q) {
      const auto& sq = placement[static_cast<std::size_t>(q)];
      for (std::size_t i = 0; i < eigs[static_cast<std::size_t>(p)].values.size(); ++i) {
        for (std::size_t j = 0; j < eigs[static_cast<std::size_t>(q)].values.size(); ++j) {
          const double lpi = eigs[static_cast<std::size_t>(p)].values[i];
          const double lqj = eigs[static_cast<std::size_t>(q)].values[j];
          const Vector& vpi = eigs[static_cast<std::size_t>(p)].vectors[i];
          const Vector& vqj = eigs[static_cast<std::size_t>(q)].vectors[j];
          HessianBasisElement el;
          el.off_diag = true;
          el.p = p;
          el.q = q;
          el.i = static_cast<int>(i);
          el.j = static_cast<int>(j);
          el.n_mat = Matrix::Zero(n, n);
          el.omega = Matrix::Zero(n, n);
          for (std::size_t a = 0; a < sp.size(); ++a)
            for (std::size_t c = 0; c < sq.size(); ++c) {
              const int ra = sp[a], rc = sq[c];
              const double nv = (lpi - lqj) * vpi(static_cast<int>(a)) * vqj(static_cast<int>(c));
              const double ov = vpi(static_cast<int>(a)) * vqj(static_cast<int>(c));
              el.n_mat(ra, rc) = nv;
              el.n_mat(rc, ra) = nv;
              el.omega(ra, rc) = ov;
              el.omega(rc, ra) = -ov;
            }
          el.analytic_eigenvalue = -(means[static_cast<std::size_t>(p)] - means[static_cast<std::size_t>(q)]) / (lpi - lqj);
          basis.off_diag.push_back(std::move(el));
        }
      }
    }
  }

  for (int b = 0; b < k; ++b) {
    const auto& slots = placement[static_cast<std::size_t>(b)];
    const int nb = static_cast<int>(slots.size());
    if (nb < 2) continue;
    const Matrix hb = detail::extract_block(rep, slots);
    // columns of the map W -> diag([H_b, W]) over the pair-generator basis
    const int dof = nb * (nb - 1) / 2;
    Matrix map(nb, dof);
    std::vector<std::pair<int, int>> pairs;
    {
      int c = 0;
      for (int a = 0; a < nb; ++a)
        for (int d = a + 1; d < nb; ++d, ++c) {
          pairs.emplace_back(a, d);
          Vector col = Vector::Zero(nb);
          col(a) = -2.0 * hb(a, d);
          col(d) = 2.0 * hb(a, d);
          map.col(c) = col;
        }
    }
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(map);
    const auto units = detail::ones_complement_basis(nb);
    for (std::size_t j = 0; j < units.size(); ++j) {
      const Vector coeff = cod.solve(units[j]);
      if ((map * coeff - units[j]).norm() > 1e-8)
        throw std::runtime_error("build_hessian_basis: block generator solve is rank-deficient");
      Matrix wb = Matrix::Zero(nb, nb);
      for (int c = 0; c < dof; ++c) {
        wb(pairs[static_cast<std::size_t>(c)].first, pairs[static_cast<std::size_t>(c)].second) += coeff(c);
        wb(pairs[static_cast<std::size_t>(c)].second, pairs[static_cast<std::size_t>(c)].first) -= coeff(c);
      }
      const Matrix nb_mat = commutator(hb, wb);
      HessianBasisElement el;
      el.off_diag = false;
      el.p = b;
      el.j = static_cast<int>(j);
      el.n_mat = Matrix::Zero(n, n);
      el.omega = Matrix::Zero(n, n);
      for (int a = 0; a < nb; ++a)
        for (int c = 0; c < nb; ++c) {
          el.n_mat(slots[static_cast<std::size_t>(a)], slots[static_cast<std::size_t>(c)]) = nb_mat(a, c);
          el.omega(slots[static_cast<std::size_t>(a)], slots[static_cast<std::size_t>(c)]) = wb(a, c);
        }
      basis.diag.push_back(std::move(el));
    }
  }
  return basis;
}

inline HessianBasis build_hessian_basis(const CriticalManifold& cm) {
  return build_hessian_basis(cm.representative.matrix(), cm.partition, cm.placement, cm.representative.spectrum());
}

namespace detail {

struct PencilSolution {
  std::vector<double> values;  // ascending
  Matrix vectors;              // matching columns, coordinates in the basis
};

/// Generalized eigenproblem of the pencil (Hessian Gram, Frobenius Gram)
/// over the given elements; the eigenvalues are those of L restricted to the
/// span and the vectors are basis coordinates of the eigenmatrices.
inline PencilSolution pencil_solve(const Matrix& rep, const std::vector<const HessianBasisElement*>& els) {
  const int m = static_cast<int>(els.size());
  PencilSolution sol;
  if (m == 0) return sol;
  Matrix a(m, m), b(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = r; c < m; ++c) {
      a(r, c) = a(c, r) = hessian_form(rep, els[static_cast<std::size_t>(r)]->omega, els[static_cast<std::size_t>(c)]->omega);
      b(r, c) = b(c, r) = (els[static_cast<std::size_t>(r)]->n_mat * els[static_cast<std::size_t>(c)]->n_mat).trace();
    }
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(symmetrize(a), symmetrize(b));
  sol.values.assign(ges.eigenvalues().data(), ges.eigenvalues().data() + m);
  sol.vectors = ges.eigenvectors();
  return sol;
}

inline std::vector<double> pencil_eigenvalues(const Matrix& rep, const std::vector<const HessianBasisElement*>& els) {
  return pencil_solve(rep, els).values;
}

}  // namespace detail

/// Full multiset of L eigenvalues at the manifold: the analytic values
/// -(mu_p - mu_q)/(l_pi - l_qj) for the off-diagonal family, plus the
/// numerically diagonalized (all positive) diagonal-block contribution.
inline std::vector<double> l_operator_eigenvalues(const Matrix& rep, const HessianBasis& basis) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(basis.n_alpha()));
  for (const auto& el : basis.off_diag) out.push_back(el.analytic_eigenvalue);
  std::vector<const HessianBasisElement*> diag_els;
  for (const auto& el : basis.diag) diag_els.push_back(&el);
  for (double v : detail::pencil_eigenvalues(rep, diag_els)) out.push_back(v);
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<double> l_operator_eigenvalues(const CriticalManifold& cm) {
  return l_operator_eigenvalues(cm.representative.matrix(), build_hessian_basis(cm));
}

/// Index / co-index from the numerically diagonalized normal-space pencil.
/// An eigenvalue of magnitude below the degeneracy threshold violates the
/// Morse-Bott expectation (it signals a non-strongly-disjoint spectrum).
inline std::pair<int, int> index_coindex(const Matrix& rep, const HessianBasis& basis,
                                         double degenerate_tol = 1e-10) {
  const auto eigs = detail::pencil_eigenvalues(rep, basis.all());
  int neg = 0, pos = 0;
  for (double v : eigs) {
    if (std::abs(v) < degenerate_tol)
      throw std::runtime_error("index_coindex: degenerate L eigenvalue " + std::to_string(v));
    (v < 0 ? neg : pos)++;
  }
  return {neg, pos};
}

inline std::pair<int, int> index_coindex(const CriticalManifold& cm, double degenerate_tol = 1e-10) {
  return index_coindex(cm.representative.matrix(), build_hessian_basis(cm), degenerate_tol);
}

/// The two-point saddle set linking two diagonal states that differ by a
/// swap of eigenvalues adjacent in sorted order: at the two swapped slots the
/// diagonal holds (l_i + l_{i+1})/2 and the off-diagonal +-(l_i - l_{i+1})/2;
/// every other slot keeps its common diagonal value.
inline std::pair<SymState, SymState> build_saddle(const std::vector<int>& sigma1, const std::vector<int>& sigma2,
                                                  const Spectrum& spectrum) {
  const int n = spectrum.size();
  if (static_cast<int>(sigma1.size()) != n || static_cast<int>(sigma2.size()) != n)
    throw std::invalid_argument("build_saddle: permutation size mismatch");
  std::vector<int> diff;
  for (int i = 0; i < n; ++i)
    if (sigma1[static_cast<std::size_t>(i)] != sigma2[static_cast<std::size_t>(i)]) diff.push_back(i);
  bool simple = diff.size() == 2;
  if (simple) {
    const int a = sigma1[static_cast<std::size_t>(diff[0])], b = sigma1[static_cast<std::size_t>(diff[1])];
    simple = sigma2[static_cast<std::size_t>(diff[0])] == b && sigma2[static_cast<std::size_t>(diff[1])] == a &&
             std::abs(a - b) == 1;
  }
  if (!simple) throw std::invalid_argument("build_saddle: permutations are not related by a simple transposition");

  const int s = diff[0], t = diff[1];
  const double li = spectrum[std::min(sigma1[static_cast<std::size_t>(s)], sigma1[static_cast<std::size_t>(t)])];
  const double lj = spectrum[std::max(sigma1[static_cast<std::size_t>(s)], sigma1[static_cast<std::size_t>(t)])];
  Matrix base = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) base(i, i) = spectrum[sigma1[static_cast<std::size_t>(i)]];
  base(s, s) = base(t, t) = 0.5 * (li + lj);
  Matrix plus = base, minus = base;
  plus(s, t) = plus(t, s) = 0.5 * (li - lj);
  minus(s, t) = minus(t, s) = -0.5 * (li - lj);
  return {SymState::trusted(plus, spectrum), SymState::trusted(minus, spectrum)};
}

namespace detail {

inline void enumerate_placements(const std::vector<int>& sizes, std::vector<int> free_slots,
                                 std::vector<std::vector<int>>& current,
                                 std::vector<std::vector<std::vector<int>>>& out) {
  const std::size_t b = current.size();
  if (b == sizes.size()) {
    out.push_back(current);
    return;
  }
  const int nb = sizes[b];
  const int avail = static_cast<int>(free_slots.size());
  std::vector<int> pick(static_cast<std::size_t>(nb));
  // lexicographic combinations of free_slots
  std::vector<int> idx(static_cast<std::size_t>(nb));
  for (int i = 0; i < nb; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    for (int i = 0; i < nb; ++i) pick[static_cast<std::size_t>(i)] = free_slots[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    std::vector<int> rest;
    for (int i = 0, j = 0; i < avail; ++i) {
      if (j < nb && idx[static_cast<std::size_t>(j)] == i) {
        ++j;
        continue;
      }
      rest.push_back(free_slots[static_cast<std::size_t>(i)]);
    }
    current.push_back(pick);
    enumerate_placements(sizes, rest, current, out);
    current.pop_back();
    // next combination
    int i = nb - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == avail - nb + i) --i;
    if (i < 0) break;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < nb; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

}  // namespace detail

/// Representative matrix for a block placement: singleton blocks put their
/// eigenvalue on the slot, larger blocks embed a constant-diagonal member of
/// X(Lambda_b) on their slots.
inline Matrix placement_representative(const Partition& partition, const std::vector<std::vector<int>>& placement,
                                       const Spectrum& spectrum) {
  const int n = spectrum.size();
  Matrix rep = Matrix::Zero(n, n);
  for (std::size_t b = 0; b < partition.blocks.size(); ++b) {
    const auto& block = partition.blocks[b];
    const auto& slots = placement[b];
    if (block.size() == 1) {
      rep(slots[0], slots[0]) = spectrum[block[0]];
      continue;
    }
    std::vector<double> vals;
    for (int e : block) vals.push_back(spectrum[e]);
    const Matrix hb = constant_diagonal_block(vals);
    for (std::size_t a = 0; a < slots.size(); ++a)
      for (std::size_t c = 0; c < slots.size(); ++c)
        rep(slots[a], slots[c]) = hb(static_cast<int>(a), static_cast<int>(c));
  }
  return rep;
}

/// Every critical manifold of the flow: one entry per partition and per
/// orbit placement, with Morse data attached. Counts per partition equal
/// n!/prod(n_i!) and the identity ind + co-ind + dim = n(n-1)/2 is checked
/// for every entry.
inline std::vector<CriticalManifold> enumerate_catalog(const Spectrum& spectrum, int cap = kDefaultEnumerationCap) {
  const int n = spectrum.size();
  if (n > cap) throw std::invalid_argument("enumerate_catalog: n exceeds enumeration cap");
  if (!spectrum.strongly_disjoint()) throw std::invalid_argument("enumerate_catalog: spectrum is not strongly disjoint");

  std::vector<CriticalManifold> catalog;
  for (auto partition : enumerate_partitions(spectrum, cap)) {
    // canonical block order: ascending block means
    {
      const auto means = partition.block_means(spectrum);
      std::vector<std::size_t> order(partition.blocks.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return means[a] < means[b]; });
      std::vector<std::vector<int>> blocks;
      for (std::size_t i : order) blocks.push_back(partition.blocks[i]);
      partition.blocks = std::move(blocks);
    }

    std::vector<int> all_slots(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) all_slots[static_cast<std::size_t>(i)] = i;
    std::vector<std::vector<std::vector<int>>> placements;
    std::vector<std::vector<int>> scratch;
    detail::enumerate_placements(partition.block_sizes(), all_slots, scratch, placements);
    if (placements.size() != orbit_size(partition))
      throw std::logic_error("enumerate_catalog: placement count does not match the orbit size");

    for (auto& placement : placements) {
      const Matrix rep = placement_representative(partition, placement, spectrum);
      CriticalManifold cm(partition, placement, SymState::trusted(rep, spectrum));
      cm.dim = manifold_dimension(partition);
      const HessianBasis basis = build_hessian_basis(rep, partition, placement, spectrum);
      cm.l_eigenvalues = l_operator_eigenvalues(rep, basis);
      const auto [neg, pos] = index_coindex(rep, basis);
      cm.index = neg;
      cm.coindex = pos;
      if (cm.index + cm.coindex + cm.dim != n * (n - 1) / 2)
        throw std::logic_error("enumerate_catalog: index + co-index + dim mismatch");
      catalog.push_back(std::move(cm));
    }
  }
  return catalog;
}

/// Nullity of the Hessian over the full tangent space (pair-generator
/// basis); equals the manifold dimension when the potential is Morse-Bott.
/// Eigenvalues below cutoff_rel times the largest magnitude count as zero.
inline int full_tangent_hessian_nullity(const Matrix& rep, double cutoff_rel = 1e-7) {
  const int n = static_cast<int>(rep.rows());
  std::vector<HessianBasisElement> els;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      HessianBasisElement el;
      el.omega = pair_generator(n, i, j);
      el.n_mat = commutator(rep, el.omega);
      els.push_back(std::move(el));
    }
  std::vector<const HessianBasisElement*> ptrs;
  for (const auto& e : els) ptrs.push_back(&e);
  const auto eigs = detail::pencil_eigenvalues(rep, ptrs);
  double scale = 0.0;
  for (double v : eigs) scale = std::max(scale, std::abs(v));
  int nullity = 0;
  for (double v : eigs)
    if (std::abs(v) < cutoff_rel * scale) ++nullity;
  return nullity;
}

}  // namespace isoflow
