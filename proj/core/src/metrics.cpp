#include "relpol/metrics.hpp"

#include <unordered_map>

#include "relpol/errors.hpp"

namespace relpol::metrics {

double fbeta(double precision, double recall, double beta) {
  const double beta2 = beta * beta;
  const double denom = beta2 * precision + recall;
  if (denom == 0.0) return 0.0;
  return ((beta2 + 1.0) * precision * recall) / denom;
}

EvalReport micro_scores(std::span<const std::string> predictions,
                        std::span<const std::string> golds,
                        std::span<const std::string> label_set) {
  if (predictions.size() != golds.size()) {
    throw DataError("micro_scores: " + std::to_string(predictions.size()) +
                    " predictions vs " + std::to_string(golds.size()) +
                    " golds");
  }
  if (predictions.empty()) throw DataError("micro_scores: empty input");

  std::unordered_map<std::string, std::size_t> label_id;
  for (const auto& label : label_set) label_id.emplace(label, label_id.size());

  EvalReport report;
  report.labels.assign(label_set.begin(), label_set.end());
  report.confusion = Matrix<std::uint64_t>(label_set.size(), label_set.size());
  report.n = predictions.size();
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto g = label_id.find(golds[i]);
    if (g == label_id.end()) {
      throw DataError("micro_scores: unknown gold label \"" + golds[i] + "\"");
    }
    const auto p = label_id.find(predictions[i]);
    if (p == label_id.end()) {
      throw DataError("micro_scores: unknown predicted label \"" +
                      predictions[i] + "\"");
    }
    ++report.confusion.at(g->second, p->second);
  }

  std::uint64_t pooled_tp = 0, pooled_fp = 0, pooled_fn = 0;
  for (std::size_t c = 0; c < report.labels.size(); ++c) {
    PerClassScores scores;
    scores.label = report.labels[c];
    scores.tp = report.confusion.at(c, c);
    for (std::size_t other = 0; other < report.labels.size(); ++other) {
      if (other == c) continue;
      scores.fp += report.confusion.at(other, c);
      scores.fn += report.confusion.at(c, other);
    }
    const std::uint64_t p_denom = scores.tp + scores.fp;
    const std::uint64_t r_denom = scores.tp + scores.fn;
    if (p_denom == 0 || r_denom == 0) report.had_zero_denominator = true;
    scores.precision =
        p_denom == 0 ? 0.0
                     : static_cast<double>(scores.tp) / static_cast<double>(p_denom);
    scores.recall =
        r_denom == 0 ? 0.0
                     : static_cast<double>(scores.tp) / static_cast<double>(r_denom);
    scores.f1 = fbeta(scores.precision, scores.recall, 1.0);
    pooled_tp += scores.tp;
    pooled_fp += scores.fp;
    pooled_fn += scores.fn;
    report.per_class.push_back(std::move(scores));
  }
  const std::uint64_t micro_p_denom = pooled_tp + pooled_fp;
  const std::uint64_t micro_r_denom = pooled_tp + pooled_fn;
  if (micro_p_denom == 0 || micro_r_denom == 0) {
    report.had_zero_denominator = true;
  }
  report.micro_precision = micro_p_denom == 0
                               ? 0.0
                               : static_cast<double>(pooled_tp) /
                                     static_cast<double>(micro_p_denom);
  report.micro_recall = micro_r_denom == 0
                            ? 0.0
                            : static_cast<double>(pooled_tp) /
                                  static_cast<double>(micro_r_denom);
  // F1 of equal precision and recall is identically that value; taking the
  // shortcut keeps the single-label micro-F1 == accuracy identity exact in
  // floating point.
  report.micro_f1 = report.micro_precision == report.micro_recall
                        ? report.micro_precision
                        : fbeta(report.micro_precision, report.micro_recall, 1.0);
  return report;
}

double accuracy(std::span<const std::string> predictions,
                std::span<const std::string> golds) {
  if (predictions.size() != golds.size()) {
    throw DataError("accuracy: length mismatch");
  }
  if (predictions.empty()) throw DataError("accuracy: empty input");
  std::uint64_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] == golds[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

}  // namespace relpol::metrics
