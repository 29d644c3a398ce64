#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "isoflow/partition.hpp"
#include "isoflow/spectrum.hpp"

using namespace isoflow;

namespace {

// Independent oracle: ternary digit enumeration (0 = unused, 1 = A, 2 = B)
// with exact integer arithmetic, so it has no tolerance at all.
bool oracle_strongly_disjoint(const std::vector<long>& values) {
  const int n = static_cast<int>(values.size());
  long total = 1;
  for (int i = 0; i < n; ++i) total *= 3;
  for (long code = 0; code < total; ++code) {
    long c = code;
    long sum_a = 0, sum_b = 0;
    int cnt_a = 0, cnt_b = 0;
    for (int i = 0; i < n; ++i) {
      const int digit = static_cast<int>(c % 3);
      c /= 3;
      if (digit == 1) {
        sum_a += values[static_cast<std::size_t>(i)];
        ++cnt_a;
      } else if (digit == 2) {
        sum_b += values[static_cast<std::size_t>(i)];
        ++cnt_b;
      }
    }
    if (cnt_a == 0 || cnt_b == 0) continue;
    if (sum_a * cnt_b == sum_b * cnt_a) return false;
  }
  return true;
}

std::uint64_t bell_number(int n) {
  // triangle recurrence
  std::vector<std::vector<std::uint64_t>> tri(static_cast<std::size_t>(n + 1));
  tri[0] = {1};
  for (int r = 1; r <= n; ++r) {
    tri[static_cast<std::size_t>(r)].push_back(tri[static_cast<std::size_t>(r - 1)].back());
    for (int c = 1; c <= r; ++c)
      tri[static_cast<std::size_t>(r)].push_back(tri[static_cast<std::size_t>(r)][static_cast<std::size_t>(c - 1)] +
                                                 tri[static_cast<std::size_t>(r - 1)][static_cast<std::size_t>(c - 1)]);
  }
  return tri[static_cast<std::size_t>(n)][0];
}

}  // namespace

TEST_CASE("spectrum validation") {
  CHECK_THROWS_AS(Spectrum({}), std::invalid_argument);
  CHECK_THROWS_AS(Spectrum({1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(Spectrum({2.0, 1.0}), std::invalid_argument);
  const Spectrum s({1.0, 2.0, 4.0});
  CHECK(s.size() == 3);
  CHECK(s[2] == 4.0);
  CHECK(s.mean() == Catch::Approx(7.0 / 3.0));
}

TEST_CASE("strongly disjoint: examples") {
  CHECK(check_strongly_disjoint(Spectrum({1.0})).strongly_disjoint);

  const auto bad = check_strongly_disjoint(Spectrum({1.0, 2.0, 3.0}));
  REQUIRE_FALSE(bad.strongly_disjoint);
  REQUIRE(bad.witness.has_value());
  CHECK(bad.witness->mean_a == Catch::Approx(bad.witness->mean_b).margin(1e-12));
  // witness subsets must be disjoint and nonempty
  CHECK_FALSE(bad.witness->subset_a.empty());
  CHECK_FALSE(bad.witness->subset_b.empty());
  for (int a : bad.witness->subset_a)
    for (int b : bad.witness->subset_b) CHECK(a != b);

  CHECK(check_strongly_disjoint(Spectrum({1.0, 2.0, 4.0})).strongly_disjoint);
  CHECK(Spectrum({1.0, 2.0, 4.0}).strongly_disjoint());
}

TEST_CASE("strongly disjoint: agreement with exact integer oracle") {
  std::mt19937_64 rng(12345);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 6);  // n <= 7
    std::set<long> vals;
    std::uniform_int_distribution<long> draw(0, 24);
    while (static_cast<int>(vals.size()) < n) vals.insert(draw(rng));
    std::vector<long> ints(vals.begin(), vals.end());
    std::vector<double> doubles(ints.begin(), ints.end());
    CHECK(check_strongly_disjoint(Spectrum(doubles)).strongly_disjoint == oracle_strongly_disjoint(ints));
  }
}

TEST_CASE("partition enumeration: Bell counts and canonical order") {
  CHECK(enumerate_partitions(1).size() == 1);
  CHECK(enumerate_partitions(3).size() == 5);
  CHECK(enumerate_partitions(4).size() == 15);
  for (int n = 1; n <= 7; ++n) CHECK(enumerate_partitions(n).size() == bell_number(n));
  CHECK_THROWS_AS(enumerate_partitions(9), std::invalid_argument);
  CHECK(enumerate_partitions(9, 10).size() == bell_number(9));

  const auto parts = enumerate_partitions(3);
  // restricted-growth-string lexicographic order
  CHECK(parts[0].blocks == std::vector<std::vector<int>>{{0, 1, 2}});
  CHECK(parts[1].blocks == std::vector<std::vector<int>>{{0, 1}, {2}});
  CHECK(parts[2].blocks == std::vector<std::vector<int>>{{0, 2}, {1}});
  CHECK(parts[3].blocks == std::vector<std::vector<int>>{{0}, {1, 2}});
  CHECK(parts[4].blocks == std::vector<std::vector<int>>{{0}, {1}, {2}});
  for (const auto& p : parts) {
    // blocks sorted by smallest element, each block ascending
    for (std::size_t b = 1; b < p.blocks.size(); ++b) CHECK(p.blocks[b - 1][0] < p.blocks[b][0]);
  }
}

TEST_CASE("block means distinct for strongly disjoint spectra") {
  std::mt19937_64 rng(99);
  for (int n = 2; n <= 6; ++n) {
    std::vector<double> vals;
    std::uniform_real_distribution<double> draw(0.0, 3.0);
    Spectrum spectrum({0.0});
    while (true) {
      std::set<double> s;
      while (static_cast<int>(s.size()) < n) s.insert(draw(rng));
      spectrum = Spectrum(std::vector<double>(s.begin(), s.end()));
      if (spectrum.strongly_disjoint()) break;
    }
    for (const auto& p : enumerate_partitions(spectrum)) {
      const auto means = p.block_means(spectrum);
      for (std::size_t i = 0; i < means.size(); ++i)
        for (std::size_t j = i + 1; j < means.size(); ++j) CHECK(std::abs(means[i] - means[j]) > 1e-9);
    }
  }
}

TEST_CASE("orbit sizes") {
  Partition singletons{{{0}, {1}, {2}}};
  CHECK(orbit_size(singletons) == 6);
  Partition whole{{{0, 1, 2}}};
  CHECK(orbit_size(whole) == 1);
  Partition pair{{{0, 1}, {2}}};
  CHECK(orbit_size(pair) == 3);
}

TEST_CASE("orbit sizes match direct enumeration of conjugated placements") {
  for (int n = 2; n <= 5; ++n) {
    for (const auto& p : enumerate_partitions(n)) {
      // base pattern: slot -> block id, blocks on contiguous slot groups
      std::vector<int> base(static_cast<std::size_t>(n));
      {
        int slot = 0;
        for (std::size_t b = 0; b < p.blocks.size(); ++b)
          for (std::size_t r = 0; r < p.blocks[b].size(); ++r) base[static_cast<std::size_t>(slot++)] = static_cast<int>(b);
      }
      std::set<std::vector<int>> distinct;
      std::vector<int> perm(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
      do {
        std::vector<int> pattern(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) pattern[static_cast<std::size_t>(i)] = base[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
        distinct.insert(pattern);
      } while (std::next_permutation(perm.begin(), perm.end()));
      CHECK(distinct.size() == orbit_size(p));
    }
  }
}

TEST_CASE("permutohedron vertices and edges") {
  const auto p2 = permutohedron(Spectrum({1.0, 2.0}));
  CHECK(p2.vertices.size() == 2);
  CHECK(p2.edges.size() == 1);

  const auto p3 = permutohedron(Spectrum({1.0, 2.0, 4.0}));
  CHECK(p3.vertices.size() == 6);
  CHECK(p3.edges.size() == 6);

  const auto p4 = permutohedron(Spectrum({1.0, 2.0, 4.0, 8.5}));
  CHECK(p4.vertices.size() == 24);
  CHECK(p4.edges.size() == 36);

  // degree n-1 at every vertex
  std::vector<int> degree(p4.vertices.size(), 0);
  for (const auto& [a, b] : p4.edges) {
    ++degree[static_cast<std::size_t>(a)];
    ++degree[static_cast<std::size_t>(b)];
  }
  for (int d : degree) CHECK(d == 3);
}
