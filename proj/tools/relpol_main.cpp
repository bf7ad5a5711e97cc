// relpol: German customer-feedback classification pipeline.
// Machine-readable results go to stdout, human logs to stderr; subcommands
// are pure functions of (inputs, config, seeds).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "relpol/adapt.hpp"
#include "relpol/corpus.hpp"
#include "relpol/corpus_stats.hpp"
#include "relpol/errors.hpp"
#include "relpol/harness.hpp"
#include "relpol/metrics.hpp"
#include "relpol/normalize.hpp"
#include "relpol/textmodel.hpp"

namespace {

using namespace relpol;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

corpus::Task subtask_from_flag(const std::string& subtask) {
  if (subtask == "A" || subtask == "a" || subtask == "relevance") {
    return corpus::Task::relevance;
  }
  if (subtask == "B" || subtask == "b" || subtask == "sentiment") {
    return corpus::Task::sentiment;
  }
  throw UsageError("unknown subtask \"" + subtask + "\" (use A or B)");
}

normalize::RuleSet make_ruleset(bool lowercase, const std::string& rules_path) {
  normalize::RuleSet rules;
  if (!rules_path.empty()) {
    std::ifstream in(rules_path);
    if (!in) throw DataError("cannot open rules file: " + rules_path);
    rules = normalize::read_rules(in);
  }
  if (lowercase) rules.casing_mode = normalize::CasingMode::lowercased;
  return rules;
}

void add_train_options(CLI::App* cmd, textmodel::TrainConfig* config) {
  cmd->add_option("--dim", config->dim, "Embedding dimensionality");
  cmd->add_option("--lr", config->lr0, "Initial learning rate");
  cmd->add_option("--epochs", config->epochs, "Training epochs");
  cmd->add_option("--ngrams", config->word_ngrams, "Max word n-gram order");
  cmd->add_option("--min-count", config->min_count, "Min word frequency");
  cmd->add_option("--bucket", config->bucket_count, "Hashed feature buckets");
  cmd->add_option("--threads", config->threads,
                  "Worker threads (1 = reproducible)");
  cmd->add_option("--seed", config->seed, "Random seed")
      ->envname("RELPOL_SEED");
}

void add_unsup_options(CLI::App* cmd, textmodel::UnsupervisedConfig* config) {
  cmd->add_option("--dim", config->dim, "Embedding dimensionality");
  cmd->add_option("--lr", config->lr0, "Initial learning rate");
  cmd->add_option("--epochs", config->epochs, "Training epochs");
  cmd->add_option("--window", config->window, "Context window");
  cmd->add_option("--negatives", config->negatives, "Negative samples");
  cmd->add_option("--min-count", config->min_count, "Min word frequency");
  cmd->add_option("--bucket", config->bucket_count, "Hashed subword buckets");
  cmd->add_option("--minn", config->subwords.min_n, "Min subword length");
  cmd->add_option("--maxn", config->subwords.max_n, "Max subword length");
  cmd->add_option("--threads", config->threads,
                  "Worker threads (1 = reproducible)");
  cmd->add_option("--seed", config->seed, "Random seed")
      ->envname("RELPOL_SEED");
}

std::vector<std::string> texts_of(const corpus::LabeledDataset& dataset) {
  std::vector<std::string> texts;
  texts.reserve(dataset.documents.size());
  for (const auto& doc : dataset.documents) texts.push_back(doc.text);
  return texts;
}

// ---------------------------------------------------------------------------

int cmd_ingest(const std::string& input, const std::string& mode,
               bool do_clean, const std::string& output,
               const std::string& distribution) {
  std::vector<corpus::ParseIssue> issues;
  const auto parse_mode = mode == "lenient" ? corpus::ParseMode::lenient
                                            : corpus::ParseMode::strict;
  auto dataset = corpus::parse_tsv_file(input, parse_mode, &issues);
  std::cout << "documents=" << dataset.size() << "\n";
  std::cout << "skipped=" << issues.size() << "\n";
  for (const auto& issue : issues) {
    std::cerr << "line " << issue.line << ": " << issue.message << "\n";
  }
  if (do_clean) {
    dataset = corpus::clean(dataset);
    std::cout << "documents_after_clean=" << dataset.size() << "\n";
  }
  if (!distribution.empty()) {
    const auto task = corpus::task_from_string(distribution);
    for (const auto& [label, count] : corpus::class_distribution(dataset, task)) {
      std::cout << "count_" << distribution << "_" << label << "=" << count
                << "\n";
    }
  }
  if (!output.empty()) {
    std::ofstream out(output);
    if (!out) throw DataError("cannot open output file: " + output);
    corpus::write_tsv(dataset, out);
    std::cerr << "wrote " << dataset.size() << " documents to " << output
              << "\n";
  }
  return kExitOk;
}

int cmd_preprocess(const std::string& input, const std::string& output,
                   const std::string& text, bool lowercase,
                   const std::string& rules_path,
                   const std::string& dump_rules) {
  const auto rules = make_ruleset(lowercase, rules_path);
  if (!dump_rules.empty()) {
    std::ofstream out(dump_rules);
    if (!out) throw DataError("cannot open rules output: " + dump_rules);
    normalize::write_rules(rules, out);
    std::cerr << "wrote ruleset " << rules.id() << " to " << dump_rules << "\n";
  }
  if (!text.empty()) {
    std::cout << normalize::normalize(text, rules) << "\n";
    return kExitOk;
  }
  if (input.empty()) {
    if (dump_rules.empty()) {
      throw UsageError("preprocess needs --input, --text or --dump-rules");
    }
    return kExitOk;
  }
  const auto dataset = corpus::parse_tsv_file(input);
  const auto normalized = normalize::normalize_dataset(dataset, rules);
  if (output.empty()) throw UsageError("preprocess --input needs --output");
  std::ofstream out(output);
  if (!out) throw DataError("cannot open output file: " + output);
  corpus::write_tsv(normalized, out);
  std::cout << "documents=" << normalized.size() << "\n";
  std::cout << "ruleset=" << rules.id() << "\n";
  return kExitOk;
}

int cmd_stats(const std::string& input, bool tsv, bool do_normalize,
              bool lowercase) {
  std::vector<std::string> texts;
  if (tsv || input.ends_with(".tsv")) {
    texts = texts_of(corpus::clean(corpus::parse_tsv_file(input)));
  } else {
    texts = corpus::read_lines_file(input).lines;
  }
  if (do_normalize) {
    const auto rules = make_ruleset(lowercase, "");
    for (auto& text : texts) text = normalize::normalize(text, rules);
  }
  const auto stats = stats::compute_stats(texts);
  std::cout << "documents  unigrams  bigrams  trigrams  mean_tokens  "
               "mean_chars\n";
  char row[256];
  std::snprintf(row, sizeof(row), "%-9llu  %-8llu  %-7llu  %-8llu  %-11.2f  %.2f\n",
                static_cast<unsigned long long>(stats.doc_count),
                static_cast<unsigned long long>(stats.unique_unigrams),
                static_cast<unsigned long long>(stats.unique_bigrams),
                static_cast<unsigned long long>(stats.unique_trigrams),
                stats.mean_doc_length_tokens, stats.mean_doc_length_chars);
  std::cout << row;
  std::cout << "documents=" << stats.doc_count << "\n";
  std::cout << "unique_unigrams=" << stats.unique_unigrams << "\n";
  std::cout << "unique_bigrams=" << stats.unique_bigrams << "\n";
  std::cout << "unique_trigrams=" << stats.unique_trigrams << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", stats.mean_doc_length_tokens);
  std::cout << "mean_doc_length_tokens=" << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.6f", stats.mean_doc_length_chars);
  std::cout << "mean_doc_length_chars=" << buf << "\n";
  return kExitOk;
}

int cmd_train(const std::string& train_path, const std::string& dev_path,
              const std::string& subtask, const std::string& output,
              const std::string& pretrained_path, bool cased,
              const textmodel::TrainConfig& base_config,
              const std::string& plan_path, const std::string& base_path,
              const std::string& task_corpus_path,
              const std::string& domain_corpus_path) {
  const auto task = subtask_from_flag(subtask);
  auto rules = make_ruleset(!cased, "");
  auto dataset = corpus::parse_tsv_file(train_path, corpus::ParseMode::strict,
                                        nullptr, corpus::Split::training);
  if (!dev_path.empty()) {
    const auto dev = corpus::parse_tsv_file(dev_path, corpus::ParseMode::strict,
                                            nullptr,
                                            corpus::Split::development);
    dataset.documents.insert(dataset.documents.end(), dev.documents.begin(),
                             dev.documents.end());
  }
  const auto prepared =
      normalize::normalize_dataset(corpus::clean(dataset), rules);

  textmodel::TrainConfig config = base_config;
  if (!plan_path.empty()) {
    std::ifstream plan_in(plan_path);
    if (!plan_in) throw DataError("cannot open plan file: " + plan_path);
    const auto plan = adapt::read_plan(plan_in);
    if (base_path.empty()) throw UsageError("--plan requires --base vectors");
    const auto base = textmodel::load_vectors_file(base_path);
    corpus::UnlabeledCorpus task_corpus, domain_corpus;
    if (!task_corpus_path.empty()) {
      task_corpus = corpus::read_lines_file(task_corpus_path, "task");
    }
    if (!domain_corpus_path.empty()) {
      domain_corpus = corpus::read_lines_file(domain_corpus_path, "domain");
    }
    textmodel::UnsupervisedConfig ucfg;
    ucfg.dim = static_cast<int>(base.table.cols());
    ucfg.seed = plan.seed;
    auto adapted = adapt::continue_pretraining(plan, base, task_corpus,
                                               domain_corpus, ucfg);
    for (const auto& [key, value] : adapted.provenance) {
      std::cerr << "adapt." << key << "=" << value << "\n";
    }
    config = textmodel::attach_pretrained(
        config, std::make_shared<textmodel::WordVectors>(
                    std::move(adapted.vectors)));
  } else if (!pretrained_path.empty()) {
    config = textmodel::attach_pretrained(
        config, std::make_shared<textmodel::WordVectors>(
                    textmodel::load_vectors_file(pretrained_path)));
  }

  std::cerr << "training on " << prepared.size() << " documents, "
            << config.epochs << " epochs\n";
  std::vector<double> losses;
  const auto model =
      textmodel::train_supervised(prepared, task, config, rules, &losses);
  textmodel::save_model_file(model, output);
  std::cout << "documents=" << prepared.size() << "\n";
  std::cout << "labels=" << model.labels.size() << "\n";
  std::cout << "vocabulary=" << model.vocab.n_words() << "\n";
  if (!losses.empty()) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", losses.back());
    std::cout << "final_epoch_loss=" << buf << "\n";
  }
  std::cout << "model=" << output << "\n";
  return kExitOk;
}

int cmd_pretrain(const std::string& input, const std::string& output,
                 const std::string& objective, const std::string& init_path,
                 textmodel::UnsupervisedConfig config) {
  config.objective = objective == "cbow"
                         ? textmodel::UnsupervisedObjective::cbow
                         : textmodel::UnsupervisedObjective::skipgram;
  const auto lines = corpus::read_lines_file(input).lines;
  textmodel::WordVectors init;
  const textmodel::WordVectors* init_ptr = nullptr;
  if (!init_path.empty()) {
    init = textmodel::load_vectors_file(init_path);
    config.dim = static_cast<int>(init.table.cols());
    init_ptr = &init;
  }
  const auto vectors = textmodel::train_unsupervised(lines, config, init_ptr);
  std::ofstream out(output);
  if (!out) throw DataError("cannot open output file: " + output);
  textmodel::save_vectors(vectors.table, vectors.vocab, out);
  std::cout << "words=" << vectors.vocab.n_words() << "\n";
  std::cout << "dim=" << vectors.table.cols() << "\n";
  std::cout << "vectors=" << output << "\n";
  return kExitOk;
}

int cmd_adapt(const std::string& plan_path, bool paper_matrix,
              const std::string& base_path, const std::string& task_path,
              const std::string& domain_path, const std::string& output,
              const std::string& store_path, std::uint64_t seed) {
  const auto base = textmodel::load_vectors_file(base_path);
  corpus::UnlabeledCorpus task_corpus, domain_corpus;
  if (!task_path.empty()) {
    task_corpus = corpus::read_lines_file(task_path, "task");
  }
  if (!domain_path.empty()) {
    domain_corpus = corpus::read_lines_file(domain_path, "domain");
  }
  std::vector<adapt::AdaptPlan> plans;
  if (paper_matrix) {
    plans = adapt::reference_plan_matrix(seed);
  } else {
    if (plan_path.empty()) {
      throw UsageError("adapt needs --plan or --reference-matrix");
    }
    std::ifstream in(plan_path);
    if (!in) throw DataError("cannot open plan file: " + plan_path);
    plans.push_back(adapt::read_plan(in));
  }

  textmodel::UnsupervisedConfig ucfg;
  ucfg.dim = static_cast<int>(base.table.cols());
  const harness::ResultStore store(store_path);
  for (const auto& plan : plans) {
    ucfg.seed = plan.seed;
    auto result = adapt::continue_pretraining(plan, base, task_corpus,
                                              domain_corpus, ucfg);
    std::string path = output;
    if (plans.size() > 1) {
      std::string tag = plan.name();
      for (auto& c : tag) {
        if (c == '(' || c == ')' || c == '+') c = '_';
      }
      path += "." + tag + ".vec";
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot open output file: " + path);
    textmodel::save_vectors(result.vectors.table, result.vectors.vocab, out);
    result.provenance["base_vectors_hash"] =
        harness::file_content_hash(base_path);
    if (!task_path.empty()) {
      result.provenance["task_corpus_hash"] =
          harness::file_content_hash(task_path);
    }
    if (!domain_path.empty()) {
      result.provenance["domain_corpus_hash"] =
          harness::file_content_hash(domain_path);
    }
    if (!store_path.empty()) {
      store.append({"adapt:" + plan.name(), harness::current_timestamp(),
                    "adapt", "words",
                    static_cast<double>(result.vectors.vocab.n_words()),
                    result.provenance});
    }
    std::cout << "plan=" << plan.name() << " words="
              << result.vectors.vocab.n_words() << " vectors=" << path << "\n";
  }
  return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& text,
                const std::string& input, int k) {
  const auto model = textmodel::load_model_file(model_path);
  auto emit = [&](const std::string& line) {
    const auto predictions = textmodel::predict(model, line, k);
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      if (i) std::cout << '\t';
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.6f", predictions[i].probability);
      std::cout << predictions[i].label << '\t' << buf;
    }
    std::cout << "\n";
  };
  if (!text.empty()) {
    emit(text);
    return kExitOk;
  }
  if (input.empty()) throw UsageError("predict needs --text or --input");
  const auto lines = corpus::read_lines_file(input).lines;
  for (const auto& line : lines) emit(line);
  return kExitOk;
}

int cmd_evaluate(const std::string& model_path, const std::string& input,
                 const std::string& subtask, const std::string& store_path,
                 const std::string& id, const std::string& split) {
  const auto task = subtask_from_flag(subtask);
  const auto model = textmodel::load_model_file(model_path);
  const auto dataset = corpus::clean(corpus::parse_tsv_file(input));
  std::vector<std::string> predictions, golds;
  predictions.reserve(dataset.size());
  for (const auto& doc : dataset.documents) {
    golds.push_back(corpus::label_of(doc, task));
    predictions.push_back(harness::predict_label_for_eval(model, doc.text));
  }
  const auto report = metrics::micro_scores(predictions, golds, model.labels);
  std::cout << harness::render_eval_report(report);
  if (!store_path.empty()) {
    harness::ResultStore store(store_path);
    std::map<std::string, std::string> provenance;
    provenance["eval_hash"] = harness::file_content_hash(input);
    provenance["model"] = model_path;
    store.append({id.empty() ? "evaluate" : id, harness::current_timestamp(),
                  split, "micro_f1", report.micro_f1, provenance});
  }
  return kExitOk;
}

int cmd_cv(harness::ExperimentConfig config, const std::string& subtask,
           int k, const std::string& store_path, bool cased,
           const std::string& plan_path) {
  config.subtask = subtask_from_flag(subtask);
  config.ruleset = make_ruleset(!cased, "");
  if (!plan_path.empty()) {
    std::ifstream in(plan_path);
    if (!in) throw DataError("cannot open plan file: " + plan_path);
    config.adapt_plan = adapt::read_plan(in);
  }
  if (config.id.empty()) {
    config.id = std::string("cv_") + (config.subtask == corpus::Task::relevance
                                          ? "A"
                                          : "B");
  }
  std::cerr << "running " << k << "-fold cross-validation on "
            << config.train_path << "\n";
  const harness::ResultStore store(store_path);
  const auto report =
      harness::run_cv(config, store_path.empty() ? nullptr : &store, k);
  char buf[64];
  for (std::size_t f = 0; f < report.fold_scores.size(); ++f) {
    std::snprintf(buf, sizeof(buf), "%.6f", report.fold_scores[f]);
    std::cout << "fold_" << f << "=" << buf << "\n";
  }
  std::snprintf(buf, sizeof(buf), "%.6f", report.mean);
  std::cout << "mean=" << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.6f", report.std_dev);
  std::cout << "std=" << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.1f +/- %.1f", report.mean * 100.0,
                report.std_dev * 100.0);
  std::cout << "micro_f1_percent=" << buf << "\n";
  return kExitOk;
}

int cmd_compare(const std::string& store_path, const std::string& baseline,
                const std::vector<std::string>& candidates, double alpha,
                bool paired) {
  const harness::ResultStore store(store_path);
  const auto rows =
      harness::compare_to_baseline(store, baseline, candidates, alpha, paired);
  std::cout << harness::render_comparison(rows, alpha);
  return kExitOk;
}

int cmd_mask(const std::string& input, double mask_prob,
             std::uint32_t mask_id, std::uint32_t vocab_size,
             const std::vector<std::uint32_t>& special, std::uint64_t seed) {
  adapt::MaskingConfig config;
  config.mask_prob = mask_prob;
  config.mask_token_id = mask_id;
  config.vocab_size = vocab_size;
  config.special_token_ids = special;
  config.seed = seed;

  std::vector<std::vector<std::uint32_t>> sequences;
  for (const auto& line : corpus::read_lines_file(input).lines) {
    std::vector<std::uint32_t> ids;
    std::istringstream stream(line);
    std::uint64_t id = 0;
    while (stream >> id) {
      if (id >= vocab_size) {
        throw DataError("token id " + std::to_string(id) +
                        " outside vocab size " + std::to_string(vocab_size));
      }
      ids.push_back(static_cast<std::uint32_t>(id));
    }
    if (!ids.empty()) sequences.push_back(std::move(ids));
  }
  const auto batch = adapt::mlm_mask(sequences, config);
  std::size_t selected = 0, masked = 0, randomized = 0, kept = 0, total = 0;
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    for (std::size_t i = 0; i < sequences[s].size(); ++i) {
      ++total;
      std::cout << s << '\t' << i << '\t' << sequences[s][i] << '\t'
                << batch.input_ids[s][i] << '\t' << batch.labels[s][i] << '\t'
                << static_cast<int>(batch.selection_mask[s][i]) << "\n";
      if (batch.selection_mask[s][i]) {
        ++selected;
        if (batch.input_ids[s][i] == mask_id) {
          ++masked;
        } else if (batch.input_ids[s][i] == sequences[s][i]) {
          ++kept;
        } else {
          ++randomized;
        }
      }
    }
  }
  std::cerr << "tokens=" << total << " selected=" << selected
            << " masked=" << masked << " randomized=" << randomized
            << " kept=" << kept << "\n";
  return kExitOk;
}

// Splices --config file values into the argument list: key=value lines with
// "#" comments, command-line flags override the file, unknown keys are
// usage errors.
void merge_config_file(CLI::App* sub, std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      break;
    }
    if (args[i].starts_with("--config=")) {
      path = args[i].substr(9);
      break;
    }
  }
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t')) {
      line.pop_back();
    }
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(line_no) +
                       ": expected key=value");
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);

    const CLI::Option* option = nullptr;
    for (const auto* candidate : sub->get_options()) {
      const auto& lnames = candidate->get_lnames();
      if (std::find(lnames.begin(), lnames.end(), key) != lnames.end()) {
        option = candidate;
        break;
      }
    }
    if (option == nullptr || key == "config") {
      throw UsageError("unknown config key \"" + key + "\" in " + path);
    }
    // Flags given on the command line win over the file.
    bool given = false;
    for (const auto& arg : args) {
      if (arg == "--" + key || arg.starts_with("--" + key + "=")) {
        given = true;
        break;
      }
    }
    if (given) continue;
    if (option->get_expected() == 0) {
      // boolean flag
      if (value == "true" || value == "1" || value == "yes") {
        args.push_back("--" + key);
      } else if (value != "false" && value != "0" && value != "no") {
        throw UsageError("config key \"" + key + "\" expects a boolean");
      }
      continue;
    }
    // Multi-value options take space-separated values.
    std::istringstream pieces(value);
    std::string piece;
    bool any = false;
    while (pieces >> piece) {
      args.push_back("--" + key + "=" + piece);
      any = true;
    }
    if (!any) args.push_back("--" + key + "=");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"German customer-feedback relevance and polarity pipeline",
               "relpol"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Parse and validate TSV data");
  std::string ingest_input, ingest_mode = "strict", ingest_output;
  std::string ingest_distribution;
  bool ingest_clean = false;
  ingest->add_option("--input", ingest_input, "TSV file")->required();
  ingest->add_option("--mode", ingest_mode, "strict|lenient")
      ->check(CLI::IsMember({"strict", "lenient"}));
  ingest->add_flag("--clean", ingest_clean,
                   "Drop duplicate and empty-text documents");
  ingest->add_option("--output", ingest_output, "Write the dataset back");
  ingest->add_option("--distribution", ingest_distribution,
                     "Print class counts (relevance|sentiment)")
      ->check(CLI::IsMember({"relevance", "sentiment"}));

  // preprocess
  auto* preprocess =
      app.add_subcommand("preprocess", "Apply the normalization rules");
  std::string pre_input, pre_output, pre_text, pre_rules, pre_dump;
  bool pre_lowercase = false;
  preprocess->add_option("--input", pre_input, "TSV file");
  preprocess->add_option("--output", pre_output, "Normalized TSV output");
  preprocess->add_option("--text", pre_text, "Normalize one string");
  preprocess->add_flag("--lowercase", pre_lowercase, "Fold case at the end");
  preprocess->add_option("--rules", pre_rules, "Rules file to load");
  preprocess->add_option("--dump-rules", pre_dump, "Write the active rules");

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Corpus statistics");
  std::string stats_input;
  bool stats_tsv = false, stats_norm = false, stats_lower = false;
  stats_cmd->add_option("--input", stats_input, "Text or TSV file")->required();
  stats_cmd->add_flag("--tsv", stats_tsv,
                      "Input is labeled TSV (implied by a .tsv extension)");
  stats_cmd->add_flag("--normalize", stats_norm, "Normalize before counting");
  stats_cmd->add_flag("--lowercase", stats_lower, "Lowercase normalization");

  // train
  auto* train = app.add_subcommand("train", "Train the supervised classifier");
  std::string train_train, train_dev, train_subtask = "A", train_output;
  std::string train_pretrained, train_plan, train_base, train_task_corpus;
  std::string train_domain_corpus;
  bool train_cased = false;
  textmodel::TrainConfig train_config;
  train->add_option("--train", train_train, "Training TSV")->required();
  train->add_option("--dev", train_dev, "Development TSV (concatenated)");
  train->add_option("--subtask", train_subtask, "A (relevance) or B (sentiment)");
  train->add_option("--output", train_output, "Model file")->required();
  train->add_option("--pretrained", train_pretrained,
                    "Word vectors for input-row initialization");
  train->add_flag("--cased", train_cased, "Keep case when normalizing");
  train->add_option("--plan", train_plan, "Adaptation plan file");
  train->add_option("--base", train_base, "Base vectors for the plan");
  train->add_option("--task-corpus", train_task_corpus, "Unlabeled task text");
  train->add_option("--domain-corpus", train_domain_corpus,
                    "Unlabeled domain text");
  add_train_options(train, &train_config);

  // pretrain
  auto* pretrain =
      app.add_subcommand("pretrain", "Train word vectors on unlabeled text");
  std::string pre2_input, pre2_output, pre2_objective = "skipgram", pre2_init;
  textmodel::UnsupervisedConfig pre2_config;
  pretrain->add_option("--input", pre2_input, "Newline-delimited text")
      ->required();
  pretrain->add_option("--output", pre2_output, "Vectors file")->required();
  pretrain->add_option("--objective", pre2_objective, "skipgram|cbow")
      ->check(CLI::IsMember({"skipgram", "cbow"}));
  pretrain->add_option("--init", pre2_init, "Continue from these vectors");
  add_unsup_options(pretrain, &pre2_config);

  // adapt
  auto* adapt_cmd = app.add_subcommand(
      "adapt", "Continue pretraining embeddings on domain/task text");
  std::string adapt_plan, adapt_base, adapt_task, adapt_domain, adapt_output;
  std::string adapt_store;
  bool adapt_matrix = false;
  std::uint64_t adapt_seed = 42;
  adapt_cmd->add_option("--plan", adapt_plan, "Plan file (key=value)");
  adapt_cmd->add_flag("--reference-matrix", adapt_matrix,
                      "Run the Domain/Task/Task+Domain grid");
  adapt_cmd->add_option("--base", adapt_base, "Base vectors")->required();
  adapt_cmd->add_option("--task-corpus", adapt_task, "Unlabeled task text");
  adapt_cmd->add_option("--domain-corpus", adapt_domain,
                        "Unlabeled domain text");
  adapt_cmd->add_option("--output", adapt_output, "Adapted vectors file")
      ->required();
  adapt_cmd->add_option("--store", adapt_store, "Results store (JSONL)")
      ->envname("RELPOL_STORE");
  adapt_cmd->add_option("--seed", adapt_seed, "Seed for matrix plans")
      ->envname("RELPOL_SEED");

  // predict
  auto* predict = app.add_subcommand("predict", "Classify text");
  std::string predict_model, predict_text, predict_input;
  int predict_k = 1;
  predict->add_option("--model", predict_model, "Model file")->required();
  predict->add_option("--text", predict_text, "One input text");
  predict->add_option("--input", predict_input, "File, one text per line");
  predict->add_option("-k,--k", predict_k, "Top-k labels");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score a model on a TSV");
  std::string eval_model, eval_input, eval_subtask = "A", eval_store, eval_id;
  std::string eval_split = "custom";
  evaluate->add_option("--model", eval_model, "Model file")->required();
  evaluate->add_option("--input", eval_input, "Labeled TSV")->required();
  evaluate->add_option("--subtask", eval_subtask, "A or B");
  evaluate->add_option("--store", eval_store, "Results store (JSONL)")
      ->envname("RELPOL_STORE");
  evaluate->add_option("--id", eval_id, "Config id for stored records");
  evaluate->add_option("--split", eval_split, "Split name for stored records");

  // cv
  auto* cv = app.add_subcommand("cv", "Stratified cross-validation");
  harness::ExperimentConfig cv_config;
  std::string cv_subtask = "A", cv_store, cv_plan;
  bool cv_cased = false;
  int cv_k = 5;
  cv->add_option("--train", cv_config.train_path, "Training TSV")->required();
  cv->add_option("--subtask", cv_subtask, "A or B");
  cv->add_option("--k", cv_k, "Folds");
  cv->add_option("--id", cv_config.id, "Config id in the results store");
  cv->add_option("--store", cv_store, "Results store (JSONL)")
      ->envname("RELPOL_STORE");
  cv->add_option("--fold-seed", cv_config.fold_seed, "Fold assignment seed");
  cv->add_flag("--cased", cv_cased, "Keep case when normalizing");
  cv->add_option("--pretrained", cv_config.base_vectors_path,
                 "Word vectors (also the base for --plan)");
  cv->add_option("--plan", cv_plan, "Adaptation plan file");
  cv->add_option("--task-corpus", cv_config.task_corpus_path,
                 "Unlabeled task text");
  cv->add_option("--domain-corpus", cv_config.domain_corpus_path,
                 "Unlabeled domain text");
  add_train_options(cv, &cv_config.train_config);

  // compare
  auto* compare = app.add_subcommand(
      "compare", "Rank-sum comparison of stored CV runs against a baseline");
  std::string compare_store, compare_baseline;
  std::vector<std::string> compare_candidates;
  double compare_alpha = 0.05;
  bool compare_paired = false;
  compare->add_option("--store", compare_store, "Results store (JSONL)")
      ->required()
      ->envname("RELPOL_STORE");
  compare->add_option("--baseline", compare_baseline, "Baseline config id")
      ->required();
  compare->add_option("--candidates", compare_candidates,
                      "Candidate config ids");
  compare->add_option("--alpha", compare_alpha, "Significance level");
  compare->add_flag("--paired", compare_paired,
                    "Signed-rank variant instead of rank-sum");

  // mask
  auto* mask = app.add_subcommand(
      "mask", "Masked language modeling collator debug dump");
  std::string mask_input;
  double mask_prob = 0.15;
  std::uint32_t mask_id = 0, mask_vocab = 0;
  std::vector<std::uint32_t> mask_special;
  std::uint64_t mask_seed = 42;
  mask->add_option("--input", mask_input, "Token id sequences, one per line")
      ->required();
  mask->add_option("--mask-prob", mask_prob, "Selection probability");
  mask->add_option("--mask-id", mask_id, "Mask token id");
  mask->add_option("--vocab-size", mask_vocab, "Vocabulary size")->required();
  mask->add_option("--special", mask_special, "Special token ids");
  mask->add_option("--seed", mask_seed, "Seed")->envname("RELPOL_SEED");

  // Every subcommand takes "--config file": key=value lines, "#" comments,
  // flags override the file, unknown keys are errors. The file's values are
  // spliced into the argument list before parsing.
  for (auto* sub : app.get_subcommands({})) {
    sub->add_option("--config", "key=value config file (flags override)");
  }

  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  try {
    if (!args.empty()) {
      if (CLI::App* sub = app.get_subcommand_no_throw(args[0])) {
        merge_config_file(sub, args);
      }
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (ingest->parsed()) {
      return cmd_ingest(ingest_input, ingest_mode, ingest_clean, ingest_output,
                        ingest_distribution);
    }
    if (preprocess->parsed()) {
      return cmd_preprocess(pre_input, pre_output, pre_text, pre_lowercase,
                            pre_rules, pre_dump);
    }
    if (stats_cmd->parsed()) {
      return cmd_stats(stats_input, stats_tsv, stats_norm, stats_lower);
    }
    if (train->parsed()) {
      return cmd_train(train_train, train_dev, train_subtask, train_output,
                       train_pretrained, train_cased, train_config, train_plan,
                       train_base, train_task_corpus, train_domain_corpus);
    }
    if (pretrain->parsed()) {
      return cmd_pretrain(pre2_input, pre2_output, pre2_objective, pre2_init,
                          pre2_config);
    }
    if (adapt_cmd->parsed()) {
      return cmd_adapt(adapt_plan, adapt_matrix, adapt_base, adapt_task,
                       adapt_domain, adapt_output, adapt_store, adapt_seed);
    }
    if (predict->parsed()) {
      return cmd_predict(predict_model, predict_text, predict_input, predict_k);
    }
    if (evaluate->parsed()) {
      return cmd_evaluate(eval_model, eval_input, eval_subtask, eval_store,
                          eval_id, eval_split);
    }
    if (cv->parsed()) {
      return cmd_cv(cv_config, cv_subtask, cv_k, cv_store, cv_cased, cv_plan);
    }
    if (compare->parsed()) {
      return cmd_compare(compare_store, compare_baseline, compare_candidates,
                         compare_alpha, compare_paired);
    }
    if (mask->parsed()) {
      return cmd_mask(mask_input, mask_prob, mask_id, mask_vocab, mask_special,
                      mask_seed);
    }
    throw UsageError("no subcommand given");
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
