#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "isoflow/spectrum.hpp"

namespace isoflow {

inline constexpr int kDefaultEnumerationCap = 8;

/// A set partition of the index set {0..n-1}. Blocks are kept in canonical
/// order: each block sorted ascending, blocks sorted by smallest element.
struct Partition {
  std::vector<std::vector<int>> blocks;

  int element_count() const {
    int n = 0;
    for (const auto& b : blocks) n += static_cast<int>(b.size());
    return n;
  }

  std::vector<int> block_sizes() const {
    std::vector<int> s;
    s.reserve(blocks.size());
    for (const auto& b : blocks) s.push_back(static_cast<int>(b.size()));
    return s;
  }

  /// Block means mu(Lambda_i) = s(Lambda_i)/#(Lambda_i).
  std::vector<double> block_means(const Spectrum& spectrum) const {
    std::vector<double> m;
    m.reserve(blocks.size());
    for (const auto& b : blocks) {
      double s = 0.0;
      for (int i : b) s += spectrum[i];
      m.push_back(s / static_cast<double>(b.size()));
    }
    return m;
  }

  bool all_singletons() const {
    for (const auto& b : blocks)
      if (b.size() != 1) return false;
    return true;
  }
};

/// All set partitions of {0..n-1} in restricted-growth-string lexicographic
/// order (which is also blocks-by-smallest-element canonical order). Count
/// equals the Bell number B(n). Refuses n above the cap to bound B(n).
inline std::vector<Partition> enumerate_partitions(int n, int cap = kDefaultEnumerationCap) {
  if (n < 1) throw std::invalid_argument("enumerate_partitions: n must be positive");
  if (n > cap) throw std::invalid_argument("enumerate_partitions: n exceeds enumeration cap");
  std::vector<Partition> out;
  std::vector<int> rgs(static_cast<std::size_t>(n), 0);
  // rgs[0]=0; rgs[k] <= 1 + max(rgs[0..k-1]); enumerate in lexicographic order
  auto emit = [&]() {
    int k = 1 + *std::max_element(rgs.begin(), rgs.end());
    Partition p;
    p.blocks.assign(static_cast<std::size_t>(k), {});
    for (int i = 0; i < n; ++i) p.blocks[static_cast<std::size_t>(rgs[static_cast<std::size_t>(i)])].push_back(i);
    out.push_back(std::move(p));
  };
  while (true) {
    emit();
    int i = n - 1;
    for (; i >= 1; --i) {
      int m = 0;
      for (int j = 0; j < i; ++j) m = std::max(m, rgs[static_cast<std::size_t>(j)]);
      if (rgs[static_cast<std::size_t>(i)] <= m) break;
    }
    if (i < 1) break;
    ++rgs[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j) rgs[static_cast<std::size_t>(j)] = 0;
  }
  return out;
}

inline std::vector<Partition> enumerate_partitions(const Spectrum& spectrum, int cap = kDefaultEnumerationCap) {
  return enumerate_partitions(spectrum.size(), cap);
}

/// Orbit size of the block-diagonal equilibrium set under conjugation by
/// permutation matrices: n!/prod(n_i!).
inline std::uint64_t orbit_size(const Partition& partition) {
  const int n = partition.element_count();
  std::uint64_t num = 1;
  for (int i = 2; i <= n; ++i) num *= static_cast<std::uint64_t>(i);
  for (const auto& b : partition.blocks) {
    std::uint64_t f = 1;
    for (int i = 2; i <= static_cast<int>(b.size()); ++i) f *= static_cast<std::uint64_t>(i);
    num /= f;
  }
  return num;
}

struct Permutohedron {
  std::vector<std::vector<double>> vertices;       // coordinate permutations of the spectrum
  std::vector<std::vector<int>> vertex_perms;      // slot -> eigenvalue index
  std::vector<std::pair<int, int>> edges;          // indices into vertices
};

/// The convex polytope spanned by all coordinate permutations of the
/// spectrum. Edges join vertices that differ by swapping two values adjacent
/// in sorted order; there are (n-1)*n!/2 of them and every vertex meets n-1.
inline Permutohedron permutohedron(const Spectrum& spectrum, int cap = kDefaultEnumerationCap) {
  const int n = spectrum.size();
  if (n > cap) throw std::invalid_argument("permutohedron: n exceeds enumeration cap");
  Permutohedron poly;
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  do {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = spectrum[perm[static_cast<std::size_t>(i)]];
    poly.vertices.push_back(std::move(v));
    poly.vertex_perms.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));

  const int count = static_cast<int>(poly.vertex_perms.size());
  for (int a = 0; a < count; ++a) {
    for (int b = a + 1; b < count; ++b) {
      const auto& pa = poly.vertex_perms[static_cast<std::size_t>(a)];
      const auto& pb = poly.vertex_perms[static_cast<std::size_t>(b)];
      int diff[2] = {-1, -1};
      int ndiff = 0;
      for (int i = 0; i < n && ndiff <= 2; ++i)
        if (pa[static_cast<std::size_t>(i)] != pb[static_cast<std::size_t>(i)]) {
          if (ndiff < 2) diff[ndiff] = i;
          ++ndiff;
        }
      if (ndiff != 2) continue;
      const int x = pa[static_cast<std::size_t>(diff[0])], y = pa[static_cast<std::size_t>(diff[1])];
      const bool swapped = pb[static_cast<std::size_t>(diff[0])] == y && pb[static_cast<std::size_t>(diff[1])] == x;
      if (swapped && std::abs(x - y) == 1) poly.edges.emplace_back(a, b);
    }
  }
  return poly;
}

}  // namespace isoflow
