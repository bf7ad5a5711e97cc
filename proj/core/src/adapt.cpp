#include "relpol/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "relpol/errors.hpp"
#include "relpol/harness.hpp"
#include "relpol/rng.hpp"

namespace relpol::adapt {

MaskedBatch mlm_mask(const std::vector<std::vector<std::uint32_t>>& token_ids,
                     const MaskingConfig& config) {
  if (config.mask_prob < 0.0 || config.mask_prob > 1.0) {
    throw DataError("mlm_mask: mask_prob outside [0,1]");
  }
  const double prop_sum = config.mask_proportion + config.random_proportion +
                          config.keep_proportion;
  if (std::fabs(prop_sum - 1.0) > 1e-9) {
    throw DataError("mlm_mask: mask/random/keep proportions must sum to 1");
  }

  std::unordered_set<std::uint32_t> special(config.special_token_ids.begin(),
                                            config.special_token_ids.end());
  // Replacement pool: every non-special id except the mask token itself.
  std::vector<std::uint32_t> pool;
  pool.reserve(config.vocab_size);
  for (std::uint32_t id = 0; id < config.vocab_size; ++id) {
    if (id != config.mask_token_id && !special.contains(id)) {
      pool.push_back(id);
    }
  }

  Rng rng(config.seed);
  MaskedBatch batch;
  batch.input_ids.reserve(token_ids.size());
  batch.labels.reserve(token_ids.size());
  batch.selection_mask.reserve(token_ids.size());
  for (const auto& sequence : token_ids) {
    std::vector<std::uint32_t> input(sequence);
    std::vector<std::int64_t> labels(sequence.size(), kIgnoreLabel);
    std::vector<std::uint8_t> selected(sequence.size(), 0);
    for (std::size_t i = 0; i < sequence.size(); ++i) {
      const std::uint32_t id = sequence[i];
      if (special.contains(id) || id == config.mask_token_id) continue;
      if (!rng.bernoulli(config.mask_prob)) continue;
      selected[i] = 1;
      labels[i] = static_cast<std::int64_t>(id);
      const double action = rng.uniform01();
      if (action < config.mask_proportion) {
        input[i] = config.mask_token_id;
      } else if (action < config.mask_proportion + config.random_proportion &&
                 !pool.empty()) {
        input[i] =
            pool[static_cast<std::size_t>(rng.uniform_int(pool.size()))];
      }
      // else: keep the original token
    }
    batch.input_ids.push_back(std::move(input));
    batch.labels.push_back(std::move(labels));
    batch.selection_mask.push_back(std::move(selected));
  }
  return batch;
}

ExpansionResult expand_vocab(const textmodel::Vocabulary& vocab,
                             const textmodel::EmbeddingTable& table,
                             std::span<const std::string> corpus_lines,
                             std::size_t max_new, std::uint64_t seed) {
  if (table.rows() != vocab.n_words() || vocab.bucket_count != 0) {
    throw DataError("expand_vocab: table must hold exactly the word rows");
  }
  struct Entry {
    std::uint64_t count = 0;
    std::size_t first_seen = 0;
  };
  std::unordered_map<std::string, Entry> novel;
  std::size_t order = 0;
  for (const auto& line : corpus_lines) {
    for (const auto token : textmodel::split_tokens(line)) {
      if (vocab.contains(token)) continue;
      auto [it, inserted] = novel.try_emplace(std::string(token));
      if (inserted) it->second.first_seen = order++;
      ++it->second.count;
    }
  }
  std::vector<std::pair<std::string_view, Entry>> ranked;
  ranked.reserve(novel.size());
  for (const auto& [word, entry] : novel) ranked.emplace_back(word, entry);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count > b.second.count;
    return a.second.first_seen < b.second.first_seen;
  });
  if (ranked.size() > max_new) ranked.resize(max_new);

  ExpansionResult result;
  result.vocab = vocab;
  result.added = ranked.size();
  const std::size_t dim = table.cols();
  result.table = textmodel::EmbeddingTable(vocab.n_words() + ranked.size(), dim);
  std::copy(table.data().begin(), table.data().end(),
            result.table.data().begin());

  // Per-component standard deviation of the existing rows.
  std::vector<double> mean(dim, 0.0), sq(dim, 0.0);
  const double n_rows = static_cast<double>(table.rows());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const auto row = table.row(r);
    for (std::size_t j = 0; j < dim; ++j) {
      mean[j] += row[j];
      sq[j] += static_cast<double>(row[j]) * row[j];
    }
  }
  std::vector<double> stddev(dim, 0.0);
  if (table.rows() > 0) {
    for (std::size_t j = 0; j < dim; ++j) {
      mean[j] /= n_rows;
      const double var = sq[j] / n_rows - mean[j] * mean[j];
      stddev[j] = var > 0.0 ? std::sqrt(var) : 0.0;
    }
  }

  Rng rng(seed);
  for (const auto& [word, entry] : ranked) {
    const std::size_t id =
        result.vocab.append_word(std::string(word), entry.count);
    auto row = result.table.row(id);
    for (std::size_t j = 0; j < dim; ++j) {
      row[j] = static_cast<float>(rng.normal() * stddev[j]);
    }
  }
  return result;
}

const char* to_string(AdaptSource s) {
  switch (s) {
    case AdaptSource::domain:
      return "domain";
    case AdaptSource::task:
      return "task";
    case AdaptSource::task_plus_domain:
      return "task_plus_domain";
  }
  return "?";
}

AdaptSource adapt_source_from_string(const std::string& s) {
  if (s == "domain") return AdaptSource::domain;
  if (s == "task") return AdaptSource::task;
  if (s == "task_plus_domain") return AdaptSource::task_plus_domain;
  throw DataError("unknown adapt source: \"" + s + "\"");
}

std::string AdaptPlan::name() const {
  std::string name = to_string(source);
  if (source != AdaptSource::task && domain_subset) {
    name += "(" + std::to_string(*domain_subset) + ")";
  }
  if (mask_prob != 0.15) {
    name += "+mask" + std::to_string(static_cast<int>(mask_prob * 100.0 + 0.5));
  }
  if (expand_vocab) name += "+vocab";
  return name;
}

AdaptPlan read_plan(std::istream& in) {
  AdaptPlan plan;
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
      throw DataError("plan line " + std::to_string(line_no) +
                      ": expected key=value");
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "source") {
        plan.source = adapt_source_from_string(value);
      } else if (key == "domain_subset") {
        if (value == "all")
          plan.domain_subset.reset();
        else
          plan.domain_subset = std::stoull(value);
      } else if (key == "mask_prob") {
        plan.mask_prob = std::stod(value);
      } else if (key == "expand_vocab") {
        plan.expand_vocab = value == "true" || value == "1";
      } else if (key == "epochs") {
        plan.epochs = std::stoi(value);
      } else if (key == "max_seq_len") {
        plan.max_seq_len = std::stoi(value);
      } else if (key == "seed") {
        plan.seed = std::stoull(value);
      } else {
        throw DataError("unknown plan key \"" + key + "\"");
      }
    } catch (const std::invalid_argument&) {
      throw DataError("plan line " + std::to_string(line_no) +
                      ": bad value for " + key);
    } catch (const std::out_of_range&) {
      throw DataError("plan line " + std::to_string(line_no) +
                      ": value out of range for " + key);
    }
  }
  return plan;
}

void write_plan(const AdaptPlan& plan, std::ostream& out) {
  out << "source=" << to_string(plan.source) << "\n";
  out << "domain_subset="
      << (plan.domain_subset ? std::to_string(*plan.domain_subset)
                             : std::string("all"))
      << "\n";
  out << "mask_prob=" << plan.mask_prob << "\n";
  out << "expand_vocab=" << (plan.expand_vocab ? "true" : "false") << "\n";
  out << "epochs=" << plan.epochs << "\n";
  out << "max_seq_len=" << plan.max_seq_len << "\n";
  out << "seed=" << plan.seed << "\n";
}

std::vector<AdaptPlan> reference_plan_matrix(std::uint64_t seed) {
  std::vector<AdaptPlan> plans;
  auto add = [&](AdaptSource source, std::optional<std::size_t> subset,
                 double mask, bool vocab) {
    AdaptPlan plan;
    plan.source = source;
    plan.domain_subset = subset;
    plan.mask_prob = mask;
    plan.expand_vocab = vocab;
    plan.seed = seed;
    plans.push_back(plan);
  };
  add(AdaptSource::domain, std::nullopt, 0.15, false);
  add(AdaptSource::domain, std::nullopt, 0.30, false);
  add(AdaptSource::domain, std::nullopt, 0.15, true);
  add(AdaptSource::domain, std::nullopt, 0.30, true);
  add(AdaptSource::task, std::nullopt, 0.15, false);
  add(AdaptSource::task, std::nullopt, 0.30, false);
  add(AdaptSource::task_plus_domain, 100'000, 0.15, false);
  add(AdaptSource::task_plus_domain, 100'000, 0.30, false);
  add(AdaptSource::task_plus_domain, 200'000, 0.15, false);
  add(AdaptSource::task_plus_domain, 200'000, 0.30, false);
  return plans;
}

AdaptResult continue_pretraining(const AdaptPlan& plan,
                                 const textmodel::WordVectors& base,
                                 const corpus::UnlabeledCorpus& task_corpus,
                                 const corpus::UnlabeledCorpus& domain_corpus,
                                 const textmodel::UnsupervisedConfig& base_config) {
  const bool needs_task = plan.source == AdaptSource::task ||
                          plan.source == AdaptSource::task_plus_domain;
  const bool needs_domain = plan.source == AdaptSource::domain ||
                            plan.source == AdaptSource::task_plus_domain;
  if (needs_task && task_corpus.lines.empty()) {
    throw DataError("continue_pretraining: plan needs the task corpus");
  }
  if (needs_domain && domain_corpus.lines.empty()) {
    throw DataError("continue_pretraining: plan needs the domain corpus");
  }

  std::vector<std::string> lines;
  std::size_t domain_lines_used = 0;
  if (needs_task) {
    lines.insert(lines.end(), task_corpus.lines.begin(),
                 task_corpus.lines.end());
  }
  if (needs_domain) {
    const corpus::UnlabeledCorpus sampled =
        plan.domain_subset
            ? corpus::subsample(domain_corpus, *plan.domain_subset, plan.seed)
            : domain_corpus;
    domain_lines_used = sampled.lines.size();
    lines.insert(lines.end(), sampled.lines.begin(), sampled.lines.end());
  }

  textmodel::WordVectors working = base;
  std::size_t added_words = 0;
  if (plan.expand_vocab) {
    auto expanded = expand_vocab(working.vocab, working.table, lines, 20'000,
                                 plan.seed);
    added_words = expanded.added;
    working.vocab = std::move(expanded.vocab);
    working.table = std::move(expanded.table);
  }

  textmodel::UnsupervisedConfig config = base_config;
  config.objective = textmodel::UnsupervisedObjective::cbow;
  config.context_dropout = plan.mask_prob;
  config.epochs = plan.epochs;
  config.max_seq_len = plan.max_seq_len;
  config.seed = plan.seed;
  config.dim = static_cast<int>(working.table.cols());

  AdaptResult result;
  if (plan.epochs == 0) {
    result.vectors = std::move(working);
  } else {
    result.vectors = textmodel::train_unsupervised(lines, config, &working);
  }

  result.provenance["plan"] = plan.name();
  result.provenance["source"] = to_string(plan.source);
  result.provenance["domain_subset"] =
      plan.domain_subset ? std::to_string(*plan.domain_subset) : "all";
  result.provenance["domain_lines_used"] = std::to_string(domain_lines_used);
  result.provenance["task_lines_used"] =
      std::to_string(needs_task ? task_corpus.lines.size() : 0);
  result.provenance["mask_prob"] = std::to_string(plan.mask_prob);
  result.provenance["expand_vocab"] = plan.expand_vocab ? "true" : "false";
  result.provenance["added_words"] = std::to_string(added_words);
  result.provenance["epochs"] = std::to_string(plan.epochs);
  result.provenance["max_seq_len"] = std::to_string(plan.max_seq_len);
  result.provenance["seed"] = std::to_string(plan.seed);
  result.provenance["train_objective"] = "cbow+context_dropout";
  return result;
}

PipelineResult adapt_then_finetune(const std::optional<AdaptPlan>& plan,
                                   const textmodel::WordVectors* base,
                                   const corpus::UnlabeledCorpus& task_corpus,
                                   const corpus::UnlabeledCorpus& domain_corpus,
                                   const corpus::LabeledDataset& train_data,
                                   const corpus::LabeledDataset& eval_data,
                                   corpus::Task task,
                                   const textmodel::TrainConfig& train_config,
                                   const normalize::RuleSet& rules,
                                   const textmodel::UnsupervisedConfig& ucfg) {
  PipelineResult result;
  textmodel::TrainConfig config = train_config;
  if (plan) {
    if (!base) {
      throw DataError("adapt_then_finetune: a plan requires base vectors");
    }
    auto adapted =
        continue_pretraining(*plan, *base, task_corpus, domain_corpus, ucfg);
    result.provenance = adapted.provenance;
    config = textmodel::attach_pretrained(
        config, std::make_shared<textmodel::WordVectors>(
                    std::move(adapted.vectors)));
  } else {
    result.provenance["plan"] = "none";
  }
  result.provenance["train_seed"] = std::to_string(config.seed);
  result.provenance["subtask"] = corpus::to_string(task);

  result.model = textmodel::train_supervised(train_data, task, config, rules);
  std::vector<std::string> predictions, golds;
  predictions.reserve(eval_data.documents.size());
  golds.reserve(eval_data.documents.size());
  for (const auto& doc : eval_data.documents) {
    golds.push_back(corpus::label_of(doc, task));
    predictions.push_back(harness::predict_label_for_eval(result.model,
                                                          doc.text));
  }
  result.report =
      metrics::micro_scores(predictions, golds, result.model.labels);
  return result;
}

}  // namespace relpol::adapt
