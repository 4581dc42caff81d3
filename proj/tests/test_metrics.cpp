// Wasserstein distances and MC summaries.  w1_assignment is checked against
// a permutation-enumeration oracle, which is exact for m <= 8.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gmfc/metrics.hpp"
#include "gmfc/rng.hpp"

using namespace gmfc;

namespace {

double brute_force_matching(const std::vector<double>& a, const std::vector<double>& b,
                            int m, int k) {
  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  do {
    double total = 0;
    for (int i = 0; i < m; ++i) {
      double s2 = 0;
      for (int c = 0; c < k; ++c) {
        double d = a[(size_t)i * k + c] - b[(size_t)perm[i] * k + c];
        s2 += d * d;
      }
      total += std::sqrt(s2);
    }
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / m;
}

}  // namespace

TEST_CASE("w1_sorted basics") {
  std::vector<double> a{3, 1, 2}, b{2, 3, 1};
  CHECK(w1_sorted(a, b) == 0.0);
  std::vector<double> z{0}, o{1};
  CHECK(w1_sorted(z, o) == 1.0);
  std::vector<double> p{0, 2}, q{1, 1};
  CHECK(w1_sorted(p, q) == 1.0);  // optimal coupling pairs 0-1 and 2-1
  std::vector<double> shorter{1, 2};
  CHECK_THROWS_AS(w1_sorted(a, shorter), LengthMismatch);
}

TEST_CASE("w1_sorted translation invariance and metric axioms") {
  CounterRng rng = keyed_rng(77, kStreamTest, 1);
  for (int rep = 0; rep < 25; ++rep) {
    int m = 1 + (int)(rng.next_u64() % 9);
    std::vector<double> a(m), b(m), c(m), ac(m), bc(m);
    for (int i = 0; i < m; ++i) {
      a[i] = rng.uniform(-2, 2);
      b[i] = rng.uniform(-2, 2);
      c[i] = rng.uniform(-2, 2);
    }
    double shift = rng.uniform(-5, 5);
    for (int i = 0; i < m; ++i) {
      ac[i] = a[i] + shift;
      bc[i] = b[i] + shift;
    }
    CHECK(w1_sorted(ac, bc) == doctest::Approx(w1_sorted(a, b)).epsilon(1e-12));
    CHECK(w1_sorted(a, b) == w1_sorted(b, a));
    CHECK(w1_sorted(a, b) >= 0.0);
    CHECK(w1_sorted(a, c) <= w1_sorted(a, b) + w1_sorted(b, c) + 1e-12);
  }
}

TEST_CASE("w1_quantile handles unequal lengths exactly") {
  // {0} vs {0,1}: quantile functions differ by 1 on half the mass
  std::vector<double> a{0}, b{0, 1};
  CHECK(w1_quantile(a, b) == 0.5);
  // equal lengths reduce to w1_sorted
  CounterRng rng = keyed_rng(77, kStreamTest, 2);
  for (int rep = 0; rep < 20; ++rep) {
    int m = 1 + (int)(rng.next_u64() % 8);
    std::vector<double> x(m), y(m);
    for (int i = 0; i < m; ++i) {
      x[i] = rng.uniform(-3, 3);
      y[i] = rng.uniform(-3, 3);
    }
    CHECK(w1_quantile(x, y) == doctest::Approx(w1_sorted(x, y)).epsilon(1e-14));
  }
  // duplicating every atom changes nothing
  std::vector<double> s{0.3, -1.2, 2.0}, s2;
  for (double v : s) {
    s2.push_back(v);
    s2.push_back(v);
  }
  std::vector<double> t{1.0, 0.0, -0.5};
  CHECK(w1_quantile(s2, t) == doctest::Approx(w1_quantile(s, t)).epsilon(1e-14));
}

TEST_CASE("w1_assignment frozen cases") {
  // permuted copies are at distance zero
  std::vector<double> a{0, 0, 1, 0}, b{1, 0, 0, 0};  // two points in R^2
  CHECK(w1_assignment(a, b, 2, 2) == 0.0);
  // both matchings cost 1 by symmetry
  std::vector<double> p{0, 0, 1, 0}, q{0, 1, 1, 1};
  CHECK(w1_assignment(p, q, 2, 2) == 1.0);
}

TEST_CASE("w1_assignment equals w1_sorted in one dimension, bitwise") {
  CounterRng rng = keyed_rng(77, kStreamTest, 3);
  for (int rep = 0; rep < 30; ++rep) {
    int m = 1 + (int)(rng.next_u64() % 10);
    std::vector<double> a(m), b(m);
    for (int i = 0; i < m; ++i) {
      a[i] = rng.uniform(-4, 4);
      b[i] = rng.uniform(-4, 4);
    }
    CHECK(w1_assignment(a, b, m, 1) == w1_sorted(a, b));
  }
  // the 1-d path is not subject to the matching solver's size cap
  std::vector<double> big_a(600), big_b(600);
  for (int i = 0; i < 600; ++i) {
    big_a[i] = rng.uniform(-4, 4);
    big_b[i] = rng.uniform(-4, 4);
  }
  CHECK(w1_assignment(big_a, big_b, 600, 1) == w1_sorted(big_a, big_b));
}

TEST_CASE("w1_assignment agrees with permutation brute force") {
  CounterRng rng = keyed_rng(77, kStreamTest, 4);
  for (int rep = 0; rep < 25; ++rep) {
    int m = 2 + (int)(rng.next_u64() % 6);  // 2..7
    int k = 1 + (int)(rng.next_u64() % 3);  // 1..3
    std::vector<double> a((size_t)m * k), b((size_t)m * k);
    for (double& x : a) x = rng.uniform(-1, 1);
    for (double& x : b) x = rng.uniform(-1, 1);
    CHECK(w1_assignment(a, b, m, k) ==
          doctest::Approx(brute_force_matching(a, b, m, k)).epsilon(1e-10));
  }
}

TEST_CASE("w1_assignment errors") {
  std::vector<double> a(4, 0.0), b(4, 0.0);
  CHECK_THROWS_AS(w1_assignment(a, b, 3, 1), LengthMismatch);
  std::vector<double> big(1200, 0.0);  // cap guards the matching solver (k > 1)
  CHECK_THROWS_AS(w1_assignment(big, big, 600, 2), SizeCapExceeded);
}

TEST_CASE("metric axioms for w1_assignment on random triples") {
  CounterRng rng = keyed_rng(77, kStreamTest, 5);
  for (int rep = 0; rep < 15; ++rep) {
    int m = 2 + (int)(rng.next_u64() % 4), k = 2;
    std::vector<double> a((size_t)m * k), b((size_t)m * k), c((size_t)m * k);
    for (double& x : a) x = rng.uniform(-1, 1);
    for (double& x : b) x = rng.uniform(-1, 1);
    for (double& x : c) x = rng.uniform(-1, 1);
    double ab = w1_assignment(a, b, m, k), ba = w1_assignment(b, a, m, k);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
    CHECK(ab >= 0.0);
    CHECK(w1_assignment(a, c, m, k) <= ab + w1_assignment(b, c, m, k) + 1e-12);
    CHECK(w1_assignment(a, a, m, k) == 0.0);
  }
}

TEST_CASE("mc_summary") {
  std::vector<double> one{5};
  McSummary s1 = mc_summary(one);
  CHECK(s1.mean == 5.0);
  CHECK(s1.stderror == 0.0);
  CHECK(s1.count == 1);

  std::vector<double> zeros{0, 0, 0};
  McSummary s2 = mc_summary(zeros);
  CHECK(s2.mean == 0.0);
  CHECK(s2.stderror == 0.0);
  CHECK(s2.count == 3);

  std::vector<double> v{1, 2, 3};
  McSummary s3 = mc_summary(v);
  CHECK(s3.mean == 2.0);
  CHECK(s3.stderror == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-14));
}

TEST_CASE("empirical measure construction") {
  EmpiricalMeasure e = EmpiricalMeasure::from_atoms(2, 2, {0, 1, 2, 3});
  CHECK(e.atom(1)[0] == 2.0);
  CHECK_THROWS_AS(EmpiricalMeasure::from_atoms(2, 2, {0, 1, 2}), DimensionMismatch);
  CHECK_THROWS_AS(EmpiricalMeasure::from_atoms(2, 1, {0, 1}, {0.3, 0.7}), BadSpec);
  CHECK_NOTHROW(EmpiricalMeasure::from_atoms(2, 1, {0, 1}, {0.5, 0.5}));
}
