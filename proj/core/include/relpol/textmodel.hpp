#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "relpol/corpus.hpp"
#include "relpol/matrix.hpp"
#include "relpol/normalize.hpp"

namespace relpol::textmodel {

// Whitespace tokenization of normalized text.
std::vector<std::string_view> split_tokens(std::string_view text);

struct SubwordRange {
  int min_n = 0;
  int max_n = 0;
  bool enabled() const { return min_n > 0 && max_n >= min_n; }
  bool operator==(const SubwordRange&) const = default;
};

// Word-to-row mapping plus the hashed feature space. Word ids are dense in
// [0, n_words); hashed word n-grams and subwords occupy
// [n_words, n_words + bucket_count).
class Vocabulary {
 public:
  Vocabulary() = default;

  std::size_t n_words() const { return words_.size(); }
  std::size_t total_rows() const { return words_.size() + bucket_count; }

  const std::string& word(std::size_t id) const { return words_[id]; }
  std::uint64_t count(std::size_t id) const { return counts_[id]; }
  const std::vector<std::string>& words() const { return words_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }

  std::optional<std::size_t> id_of(std::string_view word) const;
  bool contains(std::string_view word) const { return id_of(word).has_value(); }

  // Appends a word with the next dense id; existing ids never change.
  std::size_t append_word(std::string word, std::uint64_t count);

  // Row index for a hashed feature string (word n-gram or subword).
  std::size_t bucket_row(std::string_view feature) const;

  std::uint64_t bucket_count = 0;
  int word_ngrams = 1;
  SubwordRange subwords{};

 private:
  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const {
      return std::hash<std::string_view>{}(s);
    }
  };

  std::vector<std::string> words_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, std::size_t, StringHash, std::equal_to<>>
      index_;
};

struct VocabConfig {
  std::uint64_t min_count = 1;
  int word_ngrams = 1;
  std::uint64_t bucket_count = 0;
  SubwordRange subwords{};
};

// Words with frequency >= min_count, ids assigned by (count desc,
// first-occurrence asc). Throws DataError on an empty corpus or when no word
// survives min_count.
Vocabulary build_vocab(std::span<const std::string> texts,
                       const VocabConfig& config);

using EmbeddingTable = Matrix<float>;

// Word rows only; the text vectors format and the object passed between
// pretraining and supervised training.
struct WordVectors {
  Vocabulary vocab;
  EmbeddingTable table;  // n_words x dim
};

// UTF-8 codepoint n-grams of "<word>" in [min_n, max_n].
std::vector<std::string> subword_ngrams(std::string_view word,
                                        const SubwordRange& range);

// Feature rows of a text: word ids of in-vocabulary tokens, hashed word
// n-grams (orders 2..word_ngrams) over the surviving token sequence, and
// subword rows of each surviving token when enabled.
std::vector<std::size_t> featurize(const Vocabulary& vocab,
                                   std::span<const std::string_view> tokens);

struct TrainConfig {
  int dim = 50;
  double lr0 = 0.1;  // linear decay to 0 over epochs * corpus tokens
  int epochs = 20;
  int word_ngrams = 4;
  int threads = 1;  // 1 is the reproducibility contract
  std::uint64_t seed = 42;
  std::uint64_t min_count = 1;
  std::uint64_t bucket_count = 2'000'000;
  SubwordRange subwords{};  // off for supervised training by default
  std::shared_ptr<const WordVectors> pretrained;  // set via attach_pretrained
};

// Validates dimensions and returns a config whose supervised training
// initializes input rows for in-vocabulary words from the pretrained table.
TrainConfig attach_pretrained(const TrainConfig& config,
                              std::shared_ptr<const WordVectors> vectors);

struct SupervisedModel {
  normalize::RuleSet ruleset;  // applied to incoming text before featurizing
  Vocabulary vocab;
  EmbeddingTable input;   // (n_words + bucket_count) x dim
  Matrix<float> output;   // n_labels x dim
  std::vector<std::string> labels;
  TrainConfig config;
};

// Softmax cross-entropy over averaged feature embeddings, SGD with linear
// learning-rate decay. Bit-reproducible with threads=1 and a fixed seed.
// The dataset must already be normalized with `rules`. epoch_losses, when
// given, receives the average training loss per epoch (threads=1 only).
SupervisedModel train_supervised(const corpus::LabeledDataset& dataset,
                                 corpus::Task label_field,
                                 const TrainConfig& config,
                                 const normalize::RuleSet& rules,
                                 std::vector<double>* epoch_losses = nullptr);

struct Prediction {
  std::string label;
  double probability;
};

// Top-k labels by softmax probability; raw text is normalized with the
// model's recorded ruleset first. Throws DataError("empty input") when the
// text normalizes to nothing.
std::vector<Prediction> predict(const SupervisedModel& model,
                                const std::string& text, int k);

// Full distribution in model label order.
std::vector<double> predict_distribution(const SupervisedModel& model,
                                         const std::string& text);

enum class UnsupervisedObjective { skipgram, cbow };

struct UnsupervisedConfig {
  int dim = 50;
  double lr0 = 0.05;
  int epochs = 5;  // 0 with an init table is the identity
  UnsupervisedObjective objective = UnsupervisedObjective::skipgram;
  int window = 5;
  int negatives = 5;
  std::uint64_t min_count = 5;
  std::uint64_t bucket_count = 2'000'000;
  SubwordRange subwords{3, 6};
  double context_dropout = 0.0;  // CBOW masking-noise knob
  int max_seq_len = 0;           // 0 = unlimited; otherwise truncate lines
  int threads = 1;
  std::uint64_t seed = 42;
};

// Skip-gram or CBOW with negative sampling (5 negatives, unigram^0.75 noise).
// With `init`, training continues from its word rows and reuses its
// vocabulary; corpus tokens outside the vocabulary are dropped. Returns the
// trained word rows.
WordVectors train_unsupervised(std::span<const std::string> lines,
                               const UnsupervisedConfig& config,
                               const WordVectors* init = nullptr);

// Text vector format: header "<n_words> <dim>", then one word per line
// followed by dim decimal reals, locale-independent.
void save_vectors(const EmbeddingTable& table, const Vocabulary& vocab,
                  std::ostream& out);
WordVectors load_vectors(std::istream& in);
WordVectors load_vectors_file(const std::string& path);

// Versioned binary model container (4-byte magic, format version).
void save_model(const SupervisedModel& model, std::ostream& out);
void save_model_file(const SupervisedModel& model, const std::string& path);
SupervisedModel load_model(std::istream& in);
SupervisedModel load_model_file(const std::string& path);

// ---------------------------------------------------------------------------
// Classifier math, shared by the trainer and by numerical checks (the checks
// instantiate it in double precision).

template <typename F>
void average_rows(const Matrix<F>& input, std::span<const std::size_t> rows,
                  std::vector<F>& hidden) {
  hidden.assign(input.cols(), F{0});
  for (const std::size_t r : rows) {
    const auto row = input.row(r);
    for (std::size_t j = 0; j < hidden.size(); ++j) hidden[j] += row[j];
  }
  const F inv = F{1} / static_cast<F>(rows.size());
  for (auto& h : hidden) h *= inv;
}

// Fills probs with softmax(output * hidden) and returns -log probs[gold].
template <typename F>
F softmax_loss(const Matrix<F>& output, const std::vector<F>& hidden,
               std::size_t gold, std::vector<F>& probs) {
  const std::size_t n_labels = output.rows();
  probs.assign(n_labels, F{0});
  F max_score = std::numeric_limits<F>::lowest();
  for (std::size_t r = 0; r < n_labels; ++r) {
    const auto row = output.row(r);
    F s = F{0};
    for (std::size_t j = 0; j < hidden.size(); ++j) s += row[j] * hidden[j];
    probs[r] = s;
    if (s > max_score) max_score = s;
  }
  F z = F{0};
  for (auto& p : probs) {
    p = std::exp(p - max_score);
    z += p;
  }
  for (auto& p : probs) p /= z;
  return -std::log(probs[gold]);
}

struct BatchExample {
  std::vector<std::size_t> features;
  std::size_t gold = 0;
};

// Mean loss over a batch plus analytic gradients of the mean loss w.r.t. the
// input and output matrices. Used by the finite-difference check.
template <typename F>
F softmax_batch_gradients(const Matrix<F>& input, const Matrix<F>& output,
                          std::span<const BatchExample> batch,
                          Matrix<F>& grad_input, Matrix<F>& grad_output) {
  grad_input = Matrix<F>(input.rows(), input.cols());
  grad_output = Matrix<F>(output.rows(), output.cols());
  std::vector<F> hidden, probs;
  F total = F{0};
  const F inv_batch = F{1} / static_cast<F>(batch.size());
  for (const auto& ex : batch) {
    average_rows(input, ex.features, hidden);
    total += softmax_loss(output, hidden, ex.gold, probs);
    std::vector<F> grad_hidden(hidden.size(), F{0});
    for (std::size_t r = 0; r < output.rows(); ++r) {
      const F g = probs[r] - (r == ex.gold ? F{1} : F{0});
      const auto out_row = output.row(r);
      auto gout = grad_output.row(r);
      for (std::size_t j = 0; j < hidden.size(); ++j) {
        grad_hidden[j] += g * out_row[j];
        gout[j] += inv_batch * g * hidden[j];
      }
    }
    // Averaged hidden: each feature row receives grad_hidden / |features|.
    const F inv_feats = F{1} / static_cast<F>(ex.features.size());
    for (const std::size_t f : ex.features) {
      auto gin = grad_input.row(f);
      for (std::size_t j = 0; j < hidden.size(); ++j) {
        gin[j] += inv_batch * inv_feats * grad_hidden[j];
      }
    }
  }
  return total * inv_batch;
}

template <typename F>
F softmax_batch_loss(const Matrix<F>& input, const Matrix<F>& output,
                     std::span<const BatchExample> batch) {
  std::vector<F> hidden, probs;
  F total = F{0};
  for (const auto& ex : batch) {
    average_rows(input, ex.features, hidden);
    total += softmax_loss(output, hidden, ex.gold, probs);
  }
  return total / static_cast<F>(batch.size());
}

}  // namespace relpol::textmodel
