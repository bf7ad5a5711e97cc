#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "relpol/errors.hpp"
#include "relpol/harness.hpp"
#include "testutil.hpp"

using namespace relpol;
using harness::ExperimentConfig;
using harness::ResultRecord;
using harness::ResultStore;

namespace {

ExperimentConfig synthetic_config(const testutil::TempDir& dir,
                                  const std::string& id,
                                  corpus::Task subtask) {
  const auto dataset = testutil::make_synthetic_dataset(150, 77, 0.05);
  testutil::write_file(dir.path(id + "_train.tsv"), testutil::to_tsv(dataset));
  ExperimentConfig config;
  config.id = id;
  config.train_path = dir.path(id + "_train.tsv");
  config.subtask = subtask;
  config.train_config.dim = 12;
  config.train_config.epochs = 8;
  config.train_config.bucket_count = 1000;
  config.train_config.word_ngrams = 2;
  config.ruleset.casing_mode = normalize::CasingMode::lowercased;
  return config;
}

}  // namespace

TEST_SUITE_BEGIN("harness");

TEST_CASE("cv report statistics") {
  harness::CVReport report;
  report.fold_scores = {0.9, 0.9, 0.9, 0.9, 0.9};
  harness::finalize(report);
  CHECK(report.mean == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(report.std_dev == 0.0);

  report.fold_scores = {0.8, 0.9, 1.0};
  harness::finalize(report);
  CHECK(report.mean == doctest::Approx(0.9).epsilon(1e-12));
  // sample std of {0.8, 0.9, 1.0} = 0.1
  CHECK(report.std_dev == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("result records serialize deterministically and round-trip") {
  ResultRecord record;
  record.config_id = "baseline_A";
  record.timestamp = "2024-01-01T00:00:00Z";
  record.split = "cv_fold_0";
  record.metric = "micro_f1";
  record.value = 0.90625;
  record.provenance = {{"seed", "42"}, {"train_hash", "abc"}};
  const std::string line = harness::serialize_record(record);
  CHECK(line == harness::serialize_record(record));
  const auto parsed = harness::parse_record(line);
  CHECK(parsed.config_id == record.config_id);
  CHECK(parsed.timestamp == record.timestamp);
  CHECK(parsed.split == record.split);
  CHECK(parsed.metric == record.metric);
  CHECK(parsed.value == record.value);
  CHECK(parsed.provenance == record.provenance);
  CHECK_THROWS_AS(harness::parse_record("{not json"), DataError);
}

TEST_CASE("store appends and reloads records") {
  testutil::TempDir dir("store");
  ResultStore store(dir.path("results.jsonl"));
  CHECK(store.load().empty());
  for (int f = 0; f < 5; ++f) {
    ResultRecord record;
    record.config_id = "x";
    record.timestamp = "t";
    record.split = "cv_fold_" + std::to_string(f);
    record.metric = "micro_f1";
    record.value = 0.8 + 0.01 * f;
    store.append(record);
  }
  CHECK(store.load().size() == 5);
  const auto scores = store.fold_scores("x");
  REQUIRE(scores.size() == 5);
  CHECK(scores[0] == doctest::Approx(0.80));
  CHECK(scores[4] == doctest::Approx(0.84));
  CHECK(store.fold_scores("missing").empty());
}

TEST_CASE("timestamp honors SOURCE_DATE_EPOCH") {
  setenv("SOURCE_DATE_EPOCH", "0", 1);
  CHECK(harness::current_timestamp() == "1970-01-01T00:00:00Z");
  setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
  CHECK(harness::current_timestamp() == "2023-11-14T22:13:20Z");
  unsetenv("SOURCE_DATE_EPOCH");
}

TEST_CASE("file content hashes change iff content changes") {
  testutil::TempDir dir("hash");
  testutil::write_file(dir.path("a.txt"), "inhalt eins");
  testutil::write_file(dir.path("b.txt"), "inhalt eins");
  testutil::write_file(dir.path("c.txt"), "inhalt zwei");
  const auto ha = harness::file_content_hash(dir.path("a.txt"));
  CHECK(ha == harness::file_content_hash(dir.path("b.txt")));
  CHECK(ha != harness::file_content_hash(dir.path("c.txt")));
  CHECK(harness::file_content_hash(dir.path("missing.txt")) == "absent");
}

TEST_CASE("run_cv produces k folds, stores records, and is deterministic") {
  testutil::TempDir dir("cv");
  const auto config = synthetic_config(dir, "base", corpus::Task::relevance);
  ResultStore store(dir.path("results.jsonl"));
  const auto report = harness::run_cv(config, &store, 5);
  REQUIRE(report.fold_scores.size() == 5);
  // Learnable synthetic signal: clearly better than the 80% majority class.
  CHECK(report.mean > 0.85);
  harness::CVReport recomputed = report;
  harness::finalize(recomputed);
  CHECK(std::fabs(recomputed.mean - report.mean) < 1e-12);
  CHECK(std::fabs(recomputed.std_dev - report.std_dev) < 1e-12);

  // Stored fold scores match the report.
  const auto stored = store.fold_scores("base");
  CHECK(stored == report.fold_scores);

  // Same config, same folds, same scores.
  const auto again = harness::run_cv(config, nullptr, 5);
  CHECK(again.fold_scores == report.fold_scores);

  // Provenance carries content hashes and seeds.
  const auto records = store.load();
  REQUIRE_FALSE(records.empty());
  CHECK(records[0].provenance.contains("train_hash"));
  CHECK(records[0].provenance.at("fold_seed") == "42");
}

TEST_CASE("evaluation scores documents that normalize to nothing") {
  testutil::TempDir dir("empty_norm");
  auto train = testutil::make_synthetic_dataset(80, 14, 0.05);
  auto test = testutil::make_synthetic_dataset(30, 15, 0.05);
  // Emoji-only text survives raw cleaning but normalizes to "".
  test.documents[0].text = "🚆";
  testutil::write_file(dir.path("train.tsv"), testutil::to_tsv(train));
  testutil::write_file(dir.path("test.tsv"), testutil::to_tsv(test));

  ExperimentConfig config;
  config.id = "empty_norm";
  config.train_path = dir.path("train.tsv");
  config.test_syn_path = dir.path("test.tsv");
  config.subtask = corpus::Task::relevance;
  config.train_config.dim = 10;
  config.train_config.epochs = 4;
  config.train_config.bucket_count = 400;
  config.ruleset.casing_mode = normalize::CasingMode::lowercased;
  const auto reports = harness::run_test_eval(config, nullptr);
  CHECK(reports.at("test_syn").n == test.size());  // every document scored
}

TEST_CASE("run_test_eval trains on train+dev and scores both test splits") {
  testutil::TempDir dir("eval");
  const auto train = testutil::make_synthetic_dataset(120, 7, 0.05);
  const auto dev = testutil::make_synthetic_dataset(30, 8, 0.05);
  const auto test_syn = testutil::make_synthetic_dataset(40, 9, 0.05);
  const auto test_dia = testutil::make_synthetic_dataset(40, 10, 0.05);
  testutil::write_file(dir.path("train.tsv"), testutil::to_tsv(train));
  testutil::write_file(dir.path("dev.tsv"), testutil::to_tsv(dev));
  testutil::write_file(dir.path("syn.tsv"), testutil::to_tsv(test_syn));
  testutil::write_file(dir.path("dia.tsv"), testutil::to_tsv(test_dia));

  ExperimentConfig config;
  config.id = "eval_run";
  config.train_path = dir.path("train.tsv");
  config.dev_path = dir.path("dev.tsv");
  config.test_syn_path = dir.path("syn.tsv");
  config.test_dia_path = dir.path("dia.tsv");
  config.subtask = corpus::Task::relevance;
  config.train_config.dim = 12;
  config.train_config.epochs = 8;
  config.train_config.bucket_count = 1000;
  config.ruleset.casing_mode = normalize::CasingMode::lowercased;

  ResultStore store(dir.path("results.jsonl"));
  const auto reports =
      harness::run_test_eval(config, &store, dir.path("model.bin"));
  REQUIRE(reports.contains("test_syn"));
  REQUIRE(reports.contains("test_dia"));
  CHECK(reports.at("test_syn").micro_f1 > 0.8);

  // A saved model evaluates identically to the in-memory one.
  const auto loaded = textmodel::load_model_file(dir.path("model.bin"));
  const auto prepared = normalize::normalize_dataset(
      corpus::clean(test_syn), config.ruleset);
  std::vector<std::string> predictions, golds;
  for (const auto& doc : prepared.documents) {
    predictions.push_back(textmodel::predict(loaded, doc.text, 1).front().label);
    golds.push_back(corpus::label_of(doc, corpus::Task::relevance));
  }
  const auto re_eval = metrics::micro_scores(predictions, golds, loaded.labels);
  CHECK(re_eval.micro_f1 == reports.at("test_syn").micro_f1);

  SUBCASE("degenerate one-class training set fails cleanly") {
    auto degenerate = train;
    for (auto& doc : degenerate.documents) doc.relevance = true;
    testutil::write_file(dir.path("degenerate.tsv"),
                         testutil::to_tsv(degenerate));
    auto bad = config;
    bad.train_path = dir.path("degenerate.tsv");
    bad.dev_path.clear();
    CHECK_THROWS_AS(harness::run_test_eval(bad, nullptr), DataError);
  }
}

TEST_CASE("compare_to_baseline stars candidates that dominate") {
  testutil::TempDir dir("cmp");
  ResultStore store(dir.path("results.jsonl"));
  auto put = [&](const std::string& id, const std::vector<double>& scores) {
    for (std::size_t f = 0; f < scores.size(); ++f) {
      ResultRecord record;
      record.config_id = id;
      record.timestamp = "t";
      record.split = "cv_fold_" + std::to_string(f);
      record.metric = "micro_f1";
      record.value = scores[f];
      store.append(record);
    }
  };
  // "better" sits 0.040..0.044 above the baseline fold-wise, so the paired
  // differences are distinct and the signed-rank path stays exact.
  put("baseline", {0.905, 0.902, 0.908, 0.899, 0.911});
  put("better", {0.945, 0.943, 0.950, 0.942, 0.955});
  put("same", {0.905, 0.902, 0.908, 0.899, 0.911});

  const auto rows = harness::compare_to_baseline(store, "baseline",
                                                 {"better", "same"}, 0.05);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].is_baseline);
  CHECK(rows[1].id == "better");
  CHECK(rows[1].significant);
  CHECK(rows[1].p_value == doctest::Approx(1.0 / 252.0).epsilon(1e-9));
  CHECK(rows[2].id == "same");
  CHECK_FALSE(rows[2].significant);

  const std::string table = harness::render_comparison(rows, 0.05);
  CHECK(table.find("better") != std::string::npos);
  CHECK(table.find("*") != std::string::npos);
  CHECK(table.find("baseline") != std::string::npos);

  SUBCASE("missing ids are an error") {
    CHECK_THROWS_AS(
        harness::compare_to_baseline(store, "baseline", {"ghost"}, 0.05),
        DataError);
    CHECK_THROWS_AS(harness::compare_to_baseline(store, "ghost", {}, 0.05),
                    DataError);
  }
  SUBCASE("empty candidate list renders only the baseline") {
    const auto only = harness::compare_to_baseline(store, "baseline", {}, 0.05);
    CHECK(only.size() == 1);
  }
  SUBCASE("paired variant runs") {
    const auto paired = harness::compare_to_baseline(store, "baseline",
                                                     {"better"}, 0.05, true);
    CHECK(paired[1].significant);  // all five diffs positive: p = 1/32
    CHECK(paired[1].p_value == doctest::Approx(1.0 / 32.0).epsilon(1e-9));
  }
}

TEST_CASE("adapted cv runs end to end with provenance") {
  testutil::TempDir dir("adapt_cv");
  auto config = synthetic_config(dir, "adapted", corpus::Task::sentiment);
  // Base vectors over the synthetic vocabulary.
  std::vector<std::string> pretrain_lines;
  for (int i = 0; i < 50; ++i) {
    pretrain_lines.push_back("info fahrplan ticket anschluss umstieg auskunft");
    pretrain_lines.push_back("verspätung ausfall ärger schlecht kaputt warten");
    pretrain_lines.push_back("super toll danke freundlich pünktlich klasse");
  }
  textmodel::UnsupervisedConfig ucfg;
  ucfg.dim = 12;
  ucfg.epochs = 2;
  ucfg.min_count = 1;
  const auto base = textmodel::train_unsupervised(pretrain_lines, ucfg);
  {
    std::ofstream out(dir.path("base.vec"));
    textmodel::save_vectors(base.table, base.vocab, out);
  }
  testutil::write_file(dir.path("task.txt"),
                       "info fahrplan ticket\nverspätung ausfall ärger\n");
  testutil::write_file(dir.path("domain.txt"),
                       "super toll danke\nfahrplan ticket info\n");
  config.base_vectors_path = dir.path("base.vec");
  config.task_corpus_path = dir.path("task.txt");
  config.domain_corpus_path = dir.path("domain.txt");
  adapt::AdaptPlan plan;
  plan.source = adapt::AdaptSource::task_plus_domain;
  plan.domain_subset = 100;
  plan.epochs = 1;
  config.adapt_plan = plan;

  ResultStore store(dir.path("results.jsonl"));
  const auto report = harness::run_cv(config, &store, 3);
  CHECK(report.fold_scores.size() == 3);
  const auto records = store.load();
  REQUIRE_FALSE(records.empty());
  CHECK(records[0].provenance.at("adapt_source") == "task_plus_domain");
  CHECK(records[0].provenance.contains("adapt_mask_prob"));

  const auto again = harness::run_cv(config, nullptr, 3);
  CHECK(again.fold_scores == report.fold_scores);
}

TEST_SUITE_END();
