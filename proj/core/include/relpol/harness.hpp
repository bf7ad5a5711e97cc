#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "relpol/adapt.hpp"
#include "relpol/corpus.hpp"
#include "relpol/metrics.hpp"
#include "relpol/normalize.hpp"
#include "relpol/textmodel.hpp"

namespace relpol::harness {

// Everything a run needs; the id keys the results store.
struct ExperimentConfig {
  std::string id;
  std::string train_path;
  std::string dev_path;
  std::string test_syn_path;
  std::string test_dia_path;
  corpus::Task subtask = corpus::Task::relevance;  // A=relevance, B=sentiment
  textmodel::TrainConfig train_config;
  std::optional<adapt::AdaptPlan> adapt_plan;
  std::string base_vectors_path;    // pretrained/base embeddings, optional
  std::string task_corpus_path;     // unlabeled task text for adaptation
  std::string domain_corpus_path;   // unlabeled domain text for adaptation
  normalize::RuleSet ruleset;
  std::uint64_t fold_seed = 42;
  int cv_k = 5;
};

struct CVReport {
  std::vector<double> fold_scores;  // micro-F1 per held-out fold
  double mean = 0.0;
  double std_dev = 0.0;  // sample standard deviation (k-1 denominator)
  std::string config_id;
};

// mean and sample std recomputed from the scores.
void finalize(CVReport& report);

struct ResultRecord {
  std::string config_id;
  std::string timestamp;  // honors SOURCE_DATE_EPOCH for reproducible runs
  std::string split;
  std::string metric;
  double value = 0.0;
  std::map<std::string, std::string> provenance;
};

std::string serialize_record(const ResultRecord& record);
ResultRecord parse_record(const std::string& line);

// Newline-delimited JSON records, append-only.
class ResultStore {
 public:
  explicit ResultStore(std::string path) : path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  void append(const ResultRecord& record) const;
  std::vector<ResultRecord> load() const;  // empty when the file is absent

  // Fold scores of a config id, taking the last record per fold split.
  std::vector<double> fold_scores(const std::string& config_id) const;

 private:
  std::string path_;
};

// ISO-8601 UTC; SOURCE_DATE_EPOCH overrides the wall clock so identical runs
// yield byte-identical records.
std::string current_timestamp();

// FNV-1a content hash of a file, "absent" when unreadable.
std::string file_content_hash(const std::string& path);

// Stratified 5-fold CV on the training split: train on k-1 folds, micro-F1 on
// the held-out fold. With an adapt plan the embedding adaptation runs once
// (it uses unlabeled data only) and every fold attaches the adapted vectors.
CVReport run_cv(const ExperimentConfig& config, const ResultStore* store,
                int k = 5);

// Train on training+development, evaluate on both test splits. Returns
// reports keyed "test_syn"/"test_dia".
std::map<std::string, metrics::EvalReport> run_test_eval(
    const ExperimentConfig& config, const ResultStore* store,
    const std::string& save_model_path = "");

struct ComparisonRow {
  std::string id;
  std::vector<double> fold_scores;
  double mean = 0.0;
  double std_dev = 0.0;
  double p_value = 1.0;
  bool significant = false;  // p < alpha, the star of the comparison table
  bool is_baseline = false;
};

// One-sided rank-sum of each candidate against the baseline over stored CV
// fold scores. Throws DataError when fold scores are missing.
std::vector<ComparisonRow> compare_to_baseline(
    const ResultStore& store, const std::string& baseline_id,
    const std::vector<std::string>& candidate_ids, double alpha = 0.05,
    bool paired = false);

// Plain-text table: "System  micro F1 (%)  p  " with the star annotation.
std::string render_comparison(const std::vector<ComparisonRow>& rows,
                              double alpha = 0.05);

std::string render_eval_report(const metrics::EvalReport& report);

// Top prediction, falling back to the most frequent training label when the
// text normalizes to nothing; evaluation must score every document.
std::string predict_label_for_eval(const textmodel::SupervisedModel& model,
                                   const std::string& text);

}  // namespace relpol::harness
