#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "relpol/matrix.hpp"

namespace relpol::metrics {

// F_beta = ((beta^2+1) * P * R) / (beta^2 * P + R); 0 when the denominator
// is 0. Evaluation stays total, never throws on degenerate scores.
double fbeta(double precision, double recall, double beta);

struct PerClassScores {
  std::string label;
  std::uint64_t tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct EvalReport {
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double micro_f1 = 0.0;
  double beta = 1.0;
  std::vector<std::string> labels;
  Matrix<std::uint64_t> confusion;  // confusion[gold][predicted]
  std::vector<PerClassScores> per_class;
  std::uint64_t n = 0;
  bool had_zero_denominator = false;
};

// Micro-averaged precision/recall/F1 from pooled per-class TP/FP/FN. Throws
// DataError on length mismatch or labels outside label_set. For single-label
// multi-class predictions the micro scores all equal accuracy.
EvalReport micro_scores(std::span<const std::string> predictions,
                        std::span<const std::string> golds,
                        std::span<const std::string> label_set);

double accuracy(std::span<const std::string> predictions,
                std::span<const std::string> golds);

}  // namespace relpol::metrics
