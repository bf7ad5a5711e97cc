#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "relpol/corpus.hpp"
#include "relpol/metrics.hpp"
#include "relpol/textmodel.hpp"

namespace relpol::adapt {

// ---------------------------------------------------------------------------
// Masked language modeling collator.

inline constexpr std::int64_t kIgnoreLabel = -1;

struct MaskingConfig {
  double mask_prob = 0.15;
  std::uint32_t mask_token_id = 0;
  std::vector<std::uint32_t> special_token_ids;
  double mask_proportion = 0.8;
  double random_proportion = 0.1;
  double keep_proportion = 0.1;
  std::uint32_t vocab_size = 0;  // ids are valid in [0, vocab_size)
  std::uint64_t seed = 42;
};

struct MaskedBatch {
  std::vector<std::vector<std::uint32_t>> input_ids;
  // Original ids at selected positions, kIgnoreLabel elsewhere.
  std::vector<std::vector<std::int64_t>> labels;
  std::vector<std::vector<std::uint8_t>> selection_mask;
};

// Each non-special position is independently selected with probability
// mask_prob; of the selected positions, 80% become the mask token, 10% a
// uniformly random non-special token, 10% stay unchanged. Special-token
// positions (and pre-existing mask tokens) are never selected. Deterministic
// given the seed.
MaskedBatch mlm_mask(const std::vector<std::vector<std::uint32_t>>& token_ids,
                     const MaskingConfig& config);

// ---------------------------------------------------------------------------
// Vocabulary expansion.

struct ExpansionResult {
  textmodel::Vocabulary vocab;
  textmodel::EmbeddingTable table;
  std::size_t added = 0;
};

// Appends the top-frequency corpus words absent from the vocabulary, up to
// max_new, by descending frequency. Existing ids and rows are untouched; new
// rows are drawn from a seeded normal whose per-component standard deviation
// matches the existing rows. The table must hold word rows only.
ExpansionResult expand_vocab(const textmodel::Vocabulary& vocab,
                             const textmodel::EmbeddingTable& table,
                             std::span<const std::string> corpus_lines,
                             std::size_t max_new = 20'000,
                             std::uint64_t seed = 42);

// ---------------------------------------------------------------------------
// Continued pretraining of embedding tables on unlabeled text.

enum class AdaptSource { domain, task, task_plus_domain };

const char* to_string(AdaptSource s);
AdaptSource adapt_source_from_string(const std::string& s);

struct AdaptPlan {
  AdaptSource source = AdaptSource::task;
  std::optional<std::size_t> domain_subset;  // lines; nullopt = all
  double mask_prob = 0.15;  // fraction of context tokens dropped per example
  bool expand_vocab = false;
  int epochs = 5;
  int max_seq_len = 512;
  std::uint64_t seed = 42;

  std::string name() const;
};

// key=value plan files ("#" comments, unknown keys are errors).
AdaptPlan read_plan(std::istream& in);
void write_plan(const AdaptPlan& plan, std::ostream& out);

// The Domain / Task / Task+Domain(100K) / Task+Domain(200K) grid with the
// 30%-mask and vocabulary-expansion variants, ten plans in total.
std::vector<AdaptPlan> reference_plan_matrix(std::uint64_t seed = 42);

using Provenance = std::map<std::string, std::string>;

struct AdaptResult {
  textmodel::WordVectors vectors;
  Provenance provenance;
};

// Builds the training corpus per plan (task text, a deterministic domain
// subsample, or their concatenation), optionally expands the vocabulary
// first, then continues CBOW training from the base table with mask_prob as
// the context-dropout analog. The provenance names source, subset size,
// mask_prob, expansion and seeds.
AdaptResult continue_pretraining(const AdaptPlan& plan,
                                 const textmodel::WordVectors& base,
                                 const corpus::UnlabeledCorpus& task_corpus,
                                 const corpus::UnlabeledCorpus& domain_corpus,
                                 const textmodel::UnsupervisedConfig& base_config);

struct PipelineResult {
  textmodel::SupervisedModel model;
  metrics::EvalReport report;
  Provenance provenance;
};

// continue_pretraining -> attach_pretrained -> train_supervised -> evaluate.
// Without a plan this reduces exactly to the baseline run. Both datasets must
// already be normalized with `rules`.
PipelineResult adapt_then_finetune(const std::optional<AdaptPlan>& plan,
                                   const textmodel::WordVectors* base,
                                   const corpus::UnlabeledCorpus& task_corpus,
                                   const corpus::UnlabeledCorpus& domain_corpus,
                                   const corpus::LabeledDataset& train_data,
                                   const corpus::LabeledDataset& eval_data,
                                   corpus::Task task,
                                   const textmodel::TrainConfig& train_config,
                                   const normalize::RuleSet& rules,
                                   const textmodel::UnsupervisedConfig& ucfg);

}  // namespace relpol::adapt
