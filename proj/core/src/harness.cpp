#include "relpol/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "relpol/errors.hpp"
#include "relpol/hash.hpp"
#include "relpol/stattest.hpp"

namespace relpol::harness {

void finalize(CVReport& report) {
  const std::size_t k = report.fold_scores.size();
  if (k == 0) {
    report.mean = 0.0;
    report.std_dev = 0.0;
    return;
  }
  double sum = 0.0;
  for (const double s : report.fold_scores) sum += s;
  report.mean = sum / static_cast<double>(k);
  if (k < 2) {
    report.std_dev = 0.0;
    return;
  }
  double sq = 0.0;
  for (const double s : report.fold_scores) {
    sq += (s - report.mean) * (s - report.mean);
  }
  report.std_dev = std::sqrt(sq / static_cast<double>(k - 1));
}

std::string serialize_record(const ResultRecord& record) {
  nlohmann::json j;
  j["config_id"] = record.config_id;
  j["timestamp"] = record.timestamp;
  j["split"] = record.split;
  j["metric"] = record.metric;
  j["value"] = record.value;
  j["provenance"] = record.provenance;
  return j.dump();
}

ResultRecord parse_record(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("result store: bad record: ") + e.what());
  }
  ResultRecord record;
  record.config_id = j.at("config_id").get<std::string>();
  record.timestamp = j.at("timestamp").get<std::string>();
  record.split = j.at("split").get<std::string>();
  record.metric = j.at("metric").get<std::string>();
  record.value = j.at("value").get<double>();
  if (j.contains("provenance")) {
    record.provenance =
        j.at("provenance").get<std::map<std::string, std::string>>();
  }
  return record;
}

void ResultStore::append(const ResultRecord& record) const {
  std::ofstream out(path_, std::ios::app);
  if (!out) throw DataError("cannot open results store: " + path_);
  out << serialize_record(record) << "\n";
}

std::vector<ResultRecord> ResultStore::load() const {
  std::vector<ResultRecord> records;
  std::ifstream in(path_);
  if (!in) return records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(parse_record(line));
  }
  return records;
}

std::vector<double> ResultStore::fold_scores(
    const std::string& config_id) const {
  // Last record wins per fold split; re-runs append identical values.
  std::map<std::size_t, double> by_fold;
  for (const auto& record : load()) {
    if (record.config_id == config_id &&
        record.split.starts_with("cv_fold_")) {
      by_fold[std::stoul(record.split.substr(8))] = record.value;
    }
  }
  std::vector<double> scores;
  scores.reserve(by_fold.size());
  for (const auto& [fold, value] : by_fold) scores.push_back(value);
  return scores;
}

std::string current_timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string file_content_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "absent";
  std::uint64_t h = kFnvOffsetBasis;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(h));
  return hex;
}

namespace {

corpus::LabeledDataset load_prepared(const std::string& path,
                                     const normalize::RuleSet& rules,
                                     corpus::Split split) {
  auto dataset = corpus::parse_tsv_file(path, corpus::ParseMode::strict,
                                        nullptr, split);
  return normalize::normalize_dataset(corpus::clean(dataset), rules);
}

std::map<std::string, std::string> base_provenance(
    const ExperimentConfig& config) {
  std::map<std::string, std::string> prov;
  prov["subtask"] =
      config.subtask == corpus::Task::relevance ? "A" : "B";
  prov["ruleset"] = config.ruleset.id();
  prov["train_seed"] = std::to_string(config.train_config.seed);
  prov["fold_seed"] = std::to_string(config.fold_seed);
  prov["train_hash"] = file_content_hash(config.train_path);
  if (!config.dev_path.empty()) {
    prov["dev_hash"] = file_content_hash(config.dev_path);
  }
  if (!config.base_vectors_path.empty()) {
    prov["base_vectors_hash"] = file_content_hash(config.base_vectors_path);
  }
  if (!config.task_corpus_path.empty()) {
    prov["task_corpus_hash"] = file_content_hash(config.task_corpus_path);
  }
  if (!config.domain_corpus_path.empty()) {
    prov["domain_corpus_hash"] = file_content_hash(config.domain_corpus_path);
  }
  return prov;
}

// Resolves the supervised config: with an adapt plan the adaptation runs
// first and its vectors are attached; otherwise plain base vectors attach
// when given.
textmodel::TrainConfig resolve_train_config(
    const ExperimentConfig& config,
    std::map<std::string, std::string>* provenance) {
  textmodel::TrainConfig tc = config.train_config;
  if (config.adapt_plan) {
    if (config.base_vectors_path.empty()) {
      throw DataError("adapt plan requires base vectors (--base)");
    }
    const auto base = textmodel::load_vectors_file(config.base_vectors_path);
    corpus::UnlabeledCorpus task_corpus, domain_corpus;
    if (!config.task_corpus_path.empty()) {
      task_corpus = corpus::read_lines_file(config.task_corpus_path, "task");
    }
    if (!config.domain_corpus_path.empty()) {
      domain_corpus =
          corpus::read_lines_file(config.domain_corpus_path, "domain");
    }
    textmodel::UnsupervisedConfig ucfg;
    ucfg.dim = static_cast<int>(base.table.cols());
    ucfg.seed = config.adapt_plan->seed;
    auto adapted = adapt::continue_pretraining(*config.adapt_plan, base,
                                               task_corpus, domain_corpus,
                                               ucfg);
    if (provenance) {
      for (const auto& [key, value] : adapted.provenance) {
        (*provenance)["adapt_" + key] = value;
      }
    }
    tc = textmodel::attach_pretrained(
        tc, std::make_shared<textmodel::WordVectors>(
                std::move(adapted.vectors)));
  } else if (!config.base_vectors_path.empty()) {
    tc = textmodel::attach_pretrained(
        tc, std::make_shared<textmodel::WordVectors>(
                textmodel::load_vectors_file(config.base_vectors_path)));
  }
  return tc;
}

metrics::EvalReport evaluate_on(const textmodel::SupervisedModel& model,
                                const corpus::LabeledDataset& data,
                                corpus::Task task) {
  std::vector<std::string> predictions, golds;
  predictions.reserve(data.documents.size());
  golds.reserve(data.documents.size());
  for (const auto& doc : data.documents) {
    golds.push_back(corpus::label_of(doc, task));
    predictions.push_back(predict_label_for_eval(model, doc.text));
  }
  return metrics::micro_scores(predictions, golds, model.labels);
}

}  // namespace

std::string predict_label_for_eval(const textmodel::SupervisedModel& model,
                                   const std::string& text) {
  try {
    return textmodel::predict(model, text, 1).front().label;
  } catch (const DataError&) {
    // Text that normalizes to nothing still counts against the score;
    // labels[0] is the most frequent training label.
    return model.labels.front();
  }
}

CVReport run_cv(const ExperimentConfig& config, const ResultStore* store,
                int k) {
  const auto train = load_prepared(config.train_path, config.ruleset,
                                   corpus::Split::training);
  auto provenance = base_provenance(config);
  provenance["cv_k"] = std::to_string(k);
  const auto tc = resolve_train_config(config, &provenance);

  CVReport report;
  report.config_id = config.id;
  const auto folds =
      corpus::stratified_kfold(train, k, config.subtask, config.fold_seed);
  for (const auto& fold : folds) {
    const auto model =
        textmodel::train_supervised(fold.train, config.subtask, tc,
                                    config.ruleset);
    report.fold_scores.push_back(
        evaluate_on(model, fold.validation, config.subtask).micro_f1);
  }
  finalize(report);

  if (store) {
    const std::string timestamp = current_timestamp();
    for (std::size_t f = 0; f < report.fold_scores.size(); ++f) {
      store->append({config.id, timestamp, "cv_fold_" + std::to_string(f),
                     "micro_f1", report.fold_scores[f], provenance});
    }
    store->append(
        {config.id, timestamp, "cv", "micro_f1_mean", report.mean, provenance});
    store->append(
        {config.id, timestamp, "cv", "micro_f1_std", report.std_dev, provenance});
  }
  return report;
}

std::map<std::string, metrics::EvalReport> run_test_eval(
    const ExperimentConfig& config, const ResultStore* store,
    const std::string& save_model_path) {
  if (config.test_syn_path.empty() && config.test_dia_path.empty()) {
    throw DataError("run_test_eval: no test split given");
  }
  auto train = corpus::parse_tsv_file(config.train_path,
                                      corpus::ParseMode::strict, nullptr,
                                      corpus::Split::training);
  if (!config.dev_path.empty()) {
    const auto dev = corpus::parse_tsv_file(config.dev_path,
                                            corpus::ParseMode::strict, nullptr,
                                            corpus::Split::development);
    train.documents.insert(train.documents.end(), dev.documents.begin(),
                           dev.documents.end());
  }
  const auto prepared =
      normalize::normalize_dataset(corpus::clean(train), config.ruleset);

  auto provenance = base_provenance(config);
  const auto tc = resolve_train_config(config, &provenance);
  const auto model =
      textmodel::train_supervised(prepared, config.subtask, tc, config.ruleset);
  if (!save_model_path.empty()) {
    textmodel::save_model_file(model, save_model_path);
  }

  std::map<std::string, metrics::EvalReport> reports;
  const std::string timestamp = current_timestamp();
  auto eval_split = [&](const std::string& path, const std::string& name,
                        corpus::Split split) {
    if (path.empty()) return;
    const auto data = load_prepared(path, config.ruleset, split);
    auto split_provenance = provenance;
    split_provenance["eval_hash"] = file_content_hash(path);
    const auto report = evaluate_on(model, data, config.subtask);
    if (store) {
      store->append({config.id, timestamp, name, "micro_f1", report.micro_f1,
                     split_provenance});
    }
    reports.emplace(name, report);
  };
  eval_split(config.test_syn_path, "test_syn", corpus::Split::test_syn);
  eval_split(config.test_dia_path, "test_dia", corpus::Split::test_dia);
  return reports;
}

std::vector<ComparisonRow> compare_to_baseline(
    const ResultStore& store, const std::string& baseline_id,
    const std::vector<std::string>& candidate_ids, double alpha, bool paired) {
  const auto baseline_scores = store.fold_scores(baseline_id);
  if (baseline_scores.empty()) {
    throw DataError("no CV fold scores stored for baseline \"" + baseline_id +
                    "\"");
  }
  std::vector<ComparisonRow> rows;
  ComparisonRow base_row;
  base_row.id = baseline_id;
  base_row.fold_scores = baseline_scores;
  base_row.is_baseline = true;
  CVReport tmp;
  tmp.fold_scores = baseline_scores;
  finalize(tmp);
  base_row.mean = tmp.mean;
  base_row.std_dev = tmp.std_dev;
  rows.push_back(std::move(base_row));

  for (const auto& id : candidate_ids) {
    ComparisonRow row;
    row.id = id;
    row.fold_scores = store.fold_scores(id);
    if (row.fold_scores.empty()) {
      throw DataError("no CV fold scores stored for \"" + id + "\"");
    }
    tmp.fold_scores = row.fold_scores;
    finalize(tmp);
    row.mean = tmp.mean;
    row.std_dev = tmp.std_dev;
    if (paired) {
      const auto result = stattest::wilcoxon_signed_rank(row.fold_scores,
                                                         baseline_scores, alpha);
      row.p_value = result.p_one_sided;
      row.significant = result.significant();
    } else {
      const auto result = stattest::wilcoxon_rank_sum(row.fold_scores,
                                                      baseline_scores, alpha);
      row.p_value = result.p_one_sided;
      row.significant = result.significant();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::string format_double(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

}  // namespace

std::string render_comparison(const std::vector<ComparisonRow>& rows,
                              double alpha) {
  std::size_t id_width = std::string("System").size();
  for (const auto& row : rows) id_width = std::max(id_width, row.id.size());

  std::ostringstream out;
  out << "System";
  out << std::string(id_width - 6, ' ');
  out << "  micro F1 (%)    p\n";
  for (const auto& row : rows) {
    out << row.id << std::string(id_width - row.id.size(), ' ') << "  ";
    out << format_double(row.mean * 100.0, 1) << " +/- "
        << format_double(row.std_dev * 100.0, 1);
    if (row.is_baseline) {
      out << "    (baseline)";
    } else {
      out << "    " << format_double(row.p_value, 6);
      if (row.significant) out << " *";
    }
    out << "\n";
  }
  out << "(*) p < " << format_double(alpha, 2)
      << ", one-sided rank-sum test against the baseline\n";
  return out.str();
}

std::string render_eval_report(const metrics::EvalReport& report) {
  std::ostringstream out;
  out << "n=" << report.n << "\n";
  out << "micro_precision=" << format_double(report.micro_precision, 6) << "\n";
  out << "micro_recall=" << format_double(report.micro_recall, 6) << "\n";
  out << "micro_f1=" << format_double(report.micro_f1, 6) << "\n";
  out << "\nper-class:\n";
  std::size_t label_width = 5;
  for (const auto& scores : report.per_class) {
    label_width = std::max(label_width, scores.label.size());
  }
  out << "label" << std::string(label_width - 5, ' ')
      << "  precision  recall  f1\n";
  for (const auto& scores : report.per_class) {
    out << scores.label << std::string(label_width - scores.label.size(), ' ')
        << "  " << format_double(scores.precision, 4) << "     "
        << format_double(scores.recall, 4) << "  "
        << format_double(scores.f1, 4) << "\n";
  }
  out << "\nconfusion (rows=gold, cols=predicted):\n";
  for (std::size_t g = 0; g < report.labels.size(); ++g) {
    out << report.labels[g]
        << std::string(label_width - report.labels[g].size(), ' ');
    for (std::size_t p = 0; p < report.labels.size(); ++p) {
      out << "  " << report.confusion.at(g, p);
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace relpol::harness
