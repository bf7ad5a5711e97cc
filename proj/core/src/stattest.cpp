#include "relpol/stattest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "relpol/errors.hpp"

namespace relpol::stattest {

const char* to_string(Method m) {
  return m == Method::exact ? "exact" : "normal_approx";
}

std::vector<double> midranks(std::span<const double> pooled) {
  const std::size_t n = pooled.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && pooled[order[j]] == pooled[order[i]]) ++j;
    // Average of 1-based positions i+1 .. j over the tied run.
    const double rank = static_cast<double>(i + j + 1) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

namespace {

double normal_upper_tail(double z) {
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

// Number of k-subsets of {1..total} for each achievable rank sum.
// counts[k][s]; fits in unsigned 64-bit comfortably for total <= 20.
std::vector<std::vector<unsigned long long>> subset_sum_counts(
    std::size_t total, std::size_t k) {
  const std::size_t max_sum = total * (total + 1) / 2;
  std::vector<std::vector<unsigned long long>> counts(
      k + 1, std::vector<unsigned long long>(max_sum + 1, 0));
  counts[0][0] = 1;
  for (std::size_t element = 1; element <= total; ++element) {
    for (std::size_t chosen = std::min(k, element); chosen >= 1; --chosen) {
      for (std::size_t s = max_sum; s >= element; --s) {
        counts[chosen][s] += counts[chosen - 1][s - element];
      }
    }
  }
  return counts;
}

bool has_ties(std::span<const double> x, std::span<const double> y) {
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  std::sort(pooled.begin(), pooled.end());
  return std::adjacent_find(pooled.begin(), pooled.end()) != pooled.end();
}

// Sum over tied runs of t^3 - t in a pooled sorted copy.
double tie_term(std::vector<double> pooled) {
  std::sort(pooled.begin(), pooled.end());
  double total = 0.0;
  std::size_t i = 0;
  while (i < pooled.size()) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j] == pooled[i]) ++j;
    const double t = static_cast<double>(j - i);
    total += t * t * t - t;
    i = j;
  }
  return total;
}

}  // namespace

RankSumResult wilcoxon_rank_sum(std::span<const double> x,
                                std::span<const double> y, double alpha) {
  if (x.empty() || y.empty()) {
    throw DataError("wilcoxon_rank_sum: empty sample");
  }
  const std::size_t n = x.size();
  const std::size_t m = y.size();
  const std::size_t total = n + m;

  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  const auto ranks = midranks(pooled);
  double w = 0.0;
  for (std::size_t i = 0; i < n; ++i) w += ranks[i];

  RankSumResult result;
  result.statistic = w;
  result.n = n;
  result.m = m;
  result.alpha = alpha;

  const bool tie_free = !has_ties(x, y);
  if (total <= 20 && tie_free) {
    result.method = Method::exact;
    // Tie-free ranks are integers; p = #{n-subsets of {1..total} with rank
    // sum >= W} / C(total, n).
    const auto counts = subset_sum_counts(total, n);
    const std::size_t w_int = static_cast<std::size_t>(std::llround(w));
    const std::size_t max_sum = total * (total + 1) / 2;
    unsigned long long at_least = 0, all = 0;
    for (std::size_t s = 0; s <= max_sum; ++s) {
      all += counts[n][s];
      if (s >= w_int) at_least += counts[n][s];
    }
    result.p_one_sided =
        static_cast<double>(at_least) / static_cast<double>(all);
    return result;
  }

  result.method = Method::normal_approx;
  const double dn = static_cast<double>(n);
  const double dm = static_cast<double>(m);
  const double dt = static_cast<double>(total);
  const double mu = dn * (dt + 1.0) / 2.0;
  const double correction = tie_term(pooled) / (dt * (dt - 1.0));
  const double sigma2 = dn * dm / 12.0 * ((dt + 1.0) - correction);
  if (sigma2 <= 0.0) {
    result.p_one_sided = 1.0;  // all observations tied, no evidence
    return result;
  }
  const double z = (w - mu - 0.5) / std::sqrt(sigma2);
  result.p_one_sided = std::min(1.0, std::max(normal_upper_tail(z),
                                              std::numeric_limits<double>::min()));
  return result;
}

SignedRankResult wilcoxon_signed_rank(std::span<const double> x,
                                      std::span<const double> y, double alpha) {
  if (x.size() != y.size()) {
    throw DataError("wilcoxon_signed_rank: paired samples differ in length");
  }
  if (x.empty()) throw DataError("wilcoxon_signed_rank: empty sample");

  std::vector<double> abs_diffs;
  std::vector<bool> positive;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    if (d == 0.0) continue;  // zero differences dropped
    abs_diffs.push_back(std::fabs(d));
    positive.push_back(d > 0.0);
  }

  SignedRankResult result;
  result.alpha = alpha;
  result.n_nonzero = abs_diffs.size();
  if (abs_diffs.empty()) {
    result.method = Method::exact;
    result.p_one_sided = 1.0;
    return result;
  }

  const auto ranks = midranks(abs_diffs);
  double w_plus = 0.0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (positive[i]) w_plus += ranks[i];
  }
  result.statistic = w_plus;

  const std::size_t n = abs_diffs.size();
  std::vector<double> sorted_abs(abs_diffs);
  std::sort(sorted_abs.begin(), sorted_abs.end());
  const bool tie_free = std::adjacent_find(sorted_abs.begin(),
                                           sorted_abs.end()) == sorted_abs.end();
  if (n <= 30 && tie_free) {
    result.method = Method::exact;
    // p = #{subsets of {1..n} with sum >= W+} / 2^n.
    const std::size_t max_sum = n * (n + 1) / 2;
    std::vector<unsigned long long> counts(max_sum + 1, 0);
    counts[0] = 1;
    for (std::size_t element = 1; element <= n; ++element) {
      for (std::size_t s = max_sum; s >= element; --s) {
        counts[s] += counts[s - element];
      }
    }
    const std::size_t w_int = static_cast<std::size_t>(std::llround(w_plus));
    unsigned long long at_least = 0;
    for (std::size_t s = w_int; s <= max_sum; ++s) at_least += counts[s];
    result.p_one_sided = static_cast<double>(at_least) /
                         std::pow(2.0, static_cast<double>(n));
    return result;
  }

  result.method = Method::normal_approx;
  const double dn = static_cast<double>(n);
  const double mu = dn * (dn + 1.0) / 4.0;
  const double sigma2 =
      dn * (dn + 1.0) * (2.0 * dn + 1.0) / 24.0 - tie_term(abs_diffs) / 48.0;
  if (sigma2 <= 0.0) {
    result.p_one_sided = 1.0;
    return result;
  }
  const double z = (w_plus - mu - 0.5) / std::sqrt(sigma2);
  result.p_one_sided = std::min(1.0, std::max(normal_upper_tail(z),
                                              std::numeric_limits<double>::min()));
  return result;
}

}  // namespace relpol::stattest
