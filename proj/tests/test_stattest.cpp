#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "relpol/errors.hpp"
#include "relpol/rng.hpp"
#include "relpol/stattest.hpp"

using namespace relpol;

namespace {

// Brute-force oracle: enumerate every n-subset of pooled positions, compute
// the rank sum each assignment gives sample x, and count assignments whose
// rank sum reaches the observed one. Independent of the tested code path.
double enumeration_p_value(const std::vector<double>& x,
                           const std::vector<double>& y) {
  std::vector<double> pooled(x);
  pooled.insert(pooled.end(), y.begin(), y.end());
  const auto ranks = stattest::midranks(pooled);
  double observed = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) observed += ranks[i];

  const std::size_t total = pooled.size();
  const std::size_t n = x.size();
  std::vector<std::size_t> combo(n);
  std::iota(combo.begin(), combo.end(), std::size_t{0});
  std::size_t favourable = 0, count = 0;
  for (;;) {
    double sum = 0.0;
    for (const auto idx : combo) sum += ranks[idx];
    ++count;
    if (sum >= observed - 1e-9) ++favourable;
    // next combination
    std::size_t i = n;
    while (i > 0) {
      --i;
      if (combo[i] != i + total - n) {
        ++combo[i];
        for (std::size_t j = i + 1; j < n; ++j) combo[j] = combo[j - 1] + 1;
        break;
      }
      if (i == 0) {
        return static_cast<double>(favourable) / static_cast<double>(count);
      }
    }
  }
}

}  // namespace

TEST_SUITE_BEGIN("stattest");

TEST_CASE("all-greater 5 vs 5 has p = 1/252") {
  const std::vector<double> x = {0.91, 0.92, 0.93, 0.94, 0.95};
  const std::vector<double> y = {0.81, 0.82, 0.83, 0.84, 0.85};
  const auto result = stattest::wilcoxon_rank_sum(x, y);
  CHECK(result.method == stattest::Method::exact);
  CHECK(result.statistic == 40.0);  // ranks 6..10
  CHECK(result.p_one_sided == doctest::Approx(1.0 / 252.0).epsilon(1e-12));
  CHECK(result.significant());
}

TEST_CASE("identical constant samples are not significant") {
  const std::vector<double> x = {0.5, 0.5, 0.5, 0.5, 0.5};
  const std::vector<double> y = {0.5, 0.5, 0.5, 0.5, 0.5};
  const auto result = stattest::wilcoxon_rank_sum(x, y);
  CHECK(result.method == stattest::Method::normal_approx);  // all tied
  CHECK(result.p_one_sided == 1.0);
  CHECK_FALSE(result.significant());
}

TEST_CASE("exact p matches the enumeration oracle for all n,m <= 6") {
  Rng rng(1234);
  int checked = 0;
  while (checked < 500) {
    const std::size_t n = 1 + rng.uniform_int(6);
    const std::size_t m = 1 + rng.uniform_int(6);
    std::vector<double> x(n), y(m);
    for (auto& v : x) v = rng.uniform01();
    for (auto& v : y) v = rng.uniform01();
    // continuous draws are tie-free with probability 1
    const auto result = stattest::wilcoxon_rank_sum(x, y);
    REQUIRE(result.method == stattest::Method::exact);
    const double oracle = enumeration_p_value(x, y);
    CHECK(std::fabs(result.p_one_sided - oracle) <= 1e-12);
    ++checked;
  }
}

TEST_CASE("every tie-free (n,m) pair up to 6 hits the exact path") {
  Rng rng(77);
  for (std::size_t n = 1; n <= 6; ++n) {
    for (std::size_t m = 1; m <= 6; ++m) {
      std::vector<double> x(n), y(m);
      for (auto& v : x) v = rng.uniform01();
      for (auto& v : y) v = rng.uniform01();
      const auto result = stattest::wilcoxon_rank_sum(x, y);
      CHECK(result.method == stattest::Method::exact);
      CHECK(std::fabs(result.p_one_sided - enumeration_p_value(x, y)) <= 1e-12);
    }
  }
}

TEST_CASE("rank invariance under a common shift") {
  Rng rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(5), y(5);
    for (auto& v : x) v = rng.uniform01();
    for (auto& v : y) v = rng.uniform01();
    const auto base = stattest::wilcoxon_rank_sum(x, y);
    const double shift = rng.uniform(-10.0, 10.0);
    for (auto& v : x) v += shift;
    for (auto& v : y) v += shift;
    const auto shifted = stattest::wilcoxon_rank_sum(x, y);
    CHECK(shifted.statistic == base.statistic);
    CHECK(shifted.p_one_sided == base.p_one_sided);
  }
}

TEST_CASE("swapping samples maps p to 1 - p + point mass") {
  Rng rng(66);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.uniform_int(5);
    const std::size_t m = 2 + rng.uniform_int(5);
    std::vector<double> x(n), y(m);
    for (auto& v : x) v = rng.uniform01();
    for (auto& v : y) v = rng.uniform01();
    const auto forward = stattest::wilcoxon_rank_sum(x, y);
    const auto backward = stattest::wilcoxon_rank_sum(y, x);
    // point mass at the observed statistic of the swapped test, from the
    // enumeration oracle run at equality
    std::vector<double> pooled(x);
    pooled.insert(pooled.end(), y.begin(), y.end());
    const auto ranks = stattest::midranks(pooled);
    double w_y = 0.0;
    for (std::size_t i = n; i < pooled.size(); ++i) w_y += ranks[i];
    // P(W_y >= w_y) + P(W_y <= w_y) = 1 + P(W_y == w_y)
    const double point =
        backward.p_one_sided - (1.0 - forward.p_one_sided);
    CHECK(point >= -1e-12);
    CHECK(point <= 1.0);
    // verify against the oracle: P(>= w) for y-side
    const double oracle_backward = enumeration_p_value(y, x);
    CHECK(std::fabs(backward.p_one_sided - oracle_backward) <= 1e-12);
  }
}

TEST_CASE("normal approximation engages past 20 observations") {
  Rng rng(88);
  std::vector<double> x(15), y(15);
  for (auto& v : x) v = rng.uniform01() + 0.5;
  for (auto& v : y) v = rng.uniform01();
  const auto result = stattest::wilcoxon_rank_sum(x, y);
  CHECK(result.method == stattest::Method::normal_approx);
  CHECK(result.p_one_sided > 0.0);
  CHECK(result.p_one_sided <= 1.0);
  CHECK(result.significant());  // strong separation
}

TEST_CASE("ties force the approximate path even for small samples") {
  const std::vector<double> x = {1.0, 2.0, 3.0};
  const std::vector<double> y = {2.0, 4.0, 5.0};
  const auto result = stattest::wilcoxon_rank_sum(x, y);
  CHECK(result.method == stattest::Method::normal_approx);
}

TEST_CASE("empty samples are rejected") {
  const std::vector<double> x = {1.0};
  CHECK_THROWS_AS(stattest::wilcoxon_rank_sum(x, {}), DataError);
  CHECK_THROWS_AS(stattest::wilcoxon_rank_sum({}, x), DataError);
}

TEST_CASE("signed-rank variant") {
  SUBCASE("all-positive differences, n=5, exact") {
    // distinct |differences|: 0.10, 0.11, 0.13, 0.16, 0.20
    const std::vector<double> x = {0.90, 0.92, 0.95, 0.99, 1.04};
    const std::vector<double> y = {0.80, 0.81, 0.82, 0.83, 0.84};
    const auto result = stattest::wilcoxon_signed_rank(x, y);
    CHECK(result.method == stattest::Method::exact);
    CHECK(result.statistic == 15.0);
    // P(W+ >= 15) = 1/32 under random signs
    CHECK(result.p_one_sided == doctest::Approx(1.0 / 32.0).epsilon(1e-12));
    CHECK(result.significant());
  }
  SUBCASE("identical samples give p = 1") {
    const std::vector<double> x = {1.0, 2.0, 3.0};
    const auto result = stattest::wilcoxon_signed_rank(x, x);
    CHECK(result.n_nonzero == 0);
    CHECK(result.p_one_sided == 1.0);
  }
  SUBCASE("exact matches a hand enumeration for n=3") {
    // diffs +3, -1, +2 -> |d| ranks: 3->3, 1->1, 2->2; W+ = 5.
    // Subsets of {1,2,3} with sum >= 5: {2,3}, {1,2,3} -> 2/8.
    const std::vector<double> x = {4.0, 1.0, 5.0};
    const std::vector<double> y = {1.0, 2.0, 3.0};
    const auto result = stattest::wilcoxon_signed_rank(x, y);
    CHECK(result.method == stattest::Method::exact);
    CHECK(result.statistic == 5.0);
    CHECK(result.p_one_sided == doctest::Approx(2.0 / 8.0).epsilon(1e-12));
  }
  SUBCASE("length mismatch is rejected") {
    const std::vector<double> x = {1.0, 2.0};
    const std::vector<double> y = {1.0};
    CHECK_THROWS_AS(stattest::wilcoxon_signed_rank(x, y), DataError);
  }
}

TEST_SUITE_END();
