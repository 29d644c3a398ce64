#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace isoflow {

struct SubsetPairWitness {
  std::vector<int> subset_a;  // 0-based indices into the eigenvalue list
  std::vector<int> subset_b;
  double mean_a = 0.0;
  double mean_b = 0.0;
};

struct DisjointCheckResult {
  bool strongly_disjoint = false;
  std::optional<SubsetPairWitness> witness;  // one violating pair on failure
};

/// An ordered eigenvalue set lambda_1 < ... < lambda_n. Duplicates are
/// rejected at construction; the strongly-disjoint certificate is computed
/// lazily and cached.
class Spectrum {
 public:
  explicit Spectrum(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw std::invalid_argument("Spectrum: empty value list");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) throw std::invalid_argument("Spectrum: non-finite value");
      if (i > 0 && !(values_[i] > values_[i - 1]))
        throw std::invalid_argument("Spectrum: values must be strictly increasing");
    }
  }

  int size() const { return static_cast<int>(values_.size()); }
  const std::vector<double>& values() const { return values_; }
  double operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }

  double mean() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s / static_cast<double>(values_.size());
  }

  bool strongly_disjoint() const;

 private:
  std::vector<double> values_;
  mutable std::optional<bool> strongly_disjoint_;
};

/// Tests whether every two nonempty disjoint index subsets have distinct
/// means. Enumerates all subset pairs (A over all nonempty masks, B over
/// nonempty masks of the complement), O(3^n) pairs total. Mean equality uses
/// relative tolerance 1e-12; exact rational arithmetic is out of scope.
inline DisjointCheckResult check_strongly_disjoint(const Spectrum& spectrum) {
  const int n = spectrum.size();
  if (n > 20) throw std::invalid_argument("check_strongly_disjoint: n too large for exhaustive check");
  const auto& v = spectrum.values();

  auto mask_stats = [&](unsigned mask) {
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) {
        sum += v[static_cast<std::size_t>(i)];
        ++count;
      }
    return std::pair<double, int>{sum, count};
  };
  auto mask_indices = [&](unsigned mask) {
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) idx.push_back(i);
    return idx;
  };

  const unsigned full = (n == 32) ? ~0u : ((1u << n) - 1u);
  for (unsigned a = 1; a <= full; ++a) {
    const auto [sum_a, cnt_a] = mask_stats(a);
    const double mean_a = sum_a / cnt_a;
    const unsigned comp = full & ~a;
    // enumerate nonempty subsets of the complement
    for (unsigned b = comp; b != 0; b = (b - 1) & comp) {
      const auto [sum_b, cnt_b] = mask_stats(b);
      const double mean_b = sum_b / cnt_b;
      const double scale = std::max({1.0, std::abs(mean_a), std::abs(mean_b)});
      if (std::abs(mean_a - mean_b) <= 1e-12 * scale) {
        return DisjointCheckResult{false, SubsetPairWitness{mask_indices(a), mask_indices(b), mean_a, mean_b}};
      }
    }
  }
  return DisjointCheckResult{true, std::nullopt};
}

inline bool Spectrum::strongly_disjoint() const {
  if (!strongly_disjoint_) strongly_disjoint_ = check_strongly_disjoint(*this).strongly_disjoint;
  return *strongly_disjoint_;
}

}  // namespace isoflow
