#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace relpol::stattest {

enum class Method { exact, normal_approx };

const char* to_string(Method m);

// One-sided two-sample rank-sum test, alternative: x tends greater than y.
struct RankSumResult {
  double statistic = 0.0;    // rank sum W of sample x over the pooled sample
  double p_one_sided = 1.0;  // in (0, 1]
  Method method = Method::exact;
  std::size_t n = 0;  // |x|
  std::size_t m = 0;  // |y|
  double alpha = 0.05;
  bool significant() const { return p_one_sided < alpha; }
};

// Midranks over the pooled sample; exact p by recursion over rank partitions
// when n+m <= 20 and the pooled sample is tie-free, otherwise a normal
// approximation with tie and continuity corrections. Throws DataError on an
// empty sample.
RankSumResult wilcoxon_rank_sum(std::span<const double> x,
                                std::span<const double> y,
                                double alpha = 0.05);

// Paired signed-rank variant (sensitivity analysis), alternative: x tends
// greater than y elementwise. Zero differences are dropped.
struct SignedRankResult {
  double statistic = 0.0;  // W+: rank sum of positive differences
  double p_one_sided = 1.0;
  Method method = Method::exact;
  std::size_t n_nonzero = 0;
  double alpha = 0.05;
  bool significant() const { return p_one_sided < alpha; }
};

SignedRankResult wilcoxon_signed_rank(std::span<const double> x,
                                      std::span<const double> y,
                                      double alpha = 0.05);

// Midranks of a pooled sample (average rank over tied runs), 1-based.
std::vector<double> midranks(std::span<const double> pooled);

}  // namespace relpol::stattest
