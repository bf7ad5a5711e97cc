#include "relpol/textmodel.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include "relpol/errors.hpp"
#include "relpol/hash.hpp"
#include "relpol/rng.hpp"

namespace relpol::textmodel {

std::vector<std::string_view> split_tokens(std::string_view text) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ') ++j;
    if (j > i) tokens.push_back(text.substr(i, j - i));
    i = j;
  }
  return tokens;
}

std::optional<std::size_t> Vocabulary::id_of(std::string_view word) const {
  const auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocabulary::append_word(std::string word, std::uint64_t count) {
  const std::size_t id = words_.size();
  index_.emplace(word, id);
  words_.push_back(std::move(word));
  counts_.push_back(count);
  return id;
}

std::size_t Vocabulary::bucket_row(std::string_view feature) const {
  return n_words() + static_cast<std::size_t>(fnv1a64(feature) % bucket_count);
}

Vocabulary build_vocab(std::span<const std::string> texts,
                       const VocabConfig& config) {
  if (texts.empty()) throw DataError("build_vocab: empty corpus");
  struct Entry {
    std::uint64_t count = 0;
    std::size_t first_seen = 0;
  };
  std::unordered_map<std::string, Entry> counts;
  std::size_t order = 0;
  for (const auto& text : texts) {
    for (const auto token : split_tokens(text)) {
      auto [it, inserted] = counts.try_emplace(std::string(token));
      if (inserted) it->second.first_seen = order++;
      ++it->second.count;
    }
  }
  std::vector<std::pair<std::string_view, Entry>> kept;
  kept.reserve(counts.size());
  for (const auto& [word, entry] : counts) {
    if (entry.count >= config.min_count) kept.emplace_back(word, entry);
  }
  if (kept.empty()) {
    throw DataError("build_vocab: no word reaches min_count=" +
                    std::to_string(config.min_count));
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count > b.second.count;
    return a.second.first_seen < b.second.first_seen;
  });
  Vocabulary vocab;
  vocab.bucket_count = config.bucket_count;
  vocab.word_ngrams = config.word_ngrams;
  vocab.subwords = config.subwords;
  for (const auto& [word, entry] : kept) {
    vocab.append_word(std::string(word), entry.count);
  }
  return vocab;
}

std::vector<std::string> subword_ngrams(std::string_view word,
                                        const SubwordRange& range) {
  std::vector<std::string> out;
  if (!range.enabled()) return out;
  std::string decorated = "<";
  decorated += word;
  decorated += ">";
  // Codepoint boundaries: bytes that are not UTF-8 continuation bytes.
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < decorated.size(); ++i) {
    if ((static_cast<unsigned char>(decorated[i]) & 0xC0) != 0x80) {
      starts.push_back(i);
    }
  }
  starts.push_back(decorated.size());
  const std::size_t n_chars = starts.size() - 1;
  for (std::size_t i = 0; i < n_chars; ++i) {
    for (int n = range.min_n; n <= range.max_n; ++n) {
      if (i + static_cast<std::size_t>(n) > n_chars) break;
      out.push_back(decorated.substr(starts[i], starts[i + n] - starts[i]));
    }
  }
  return out;
}

std::vector<std::size_t> featurize(const Vocabulary& vocab,
                                   std::span<const std::string_view> tokens) {
  std::vector<std::size_t> features;
  std::vector<std::string_view> kept;
  for (const auto token : tokens) {
    if (const auto id = vocab.id_of(token)) {
      features.push_back(*id);
      kept.push_back(token);
    }
  }
  if (vocab.bucket_count == 0) return features;
  if (vocab.subwords.enabled()) {
    for (const auto token : kept) {
      for (const auto& sub : subword_ngrams(token, vocab.subwords)) {
        features.push_back(vocab.bucket_row(sub));
      }
    }
  }
  std::string joined;
  for (int order = 2; order <= vocab.word_ngrams; ++order) {
    if (kept.size() < static_cast<std::size_t>(order)) break;
    for (std::size_t i = 0; i + order <= kept.size(); ++i) {
      joined.clear();
      for (int j = 0; j < order; ++j) {
        if (j) joined += ' ';
        joined += kept[i + j];
      }
      features.push_back(vocab.bucket_row(joined));
    }
  }
  return features;
}

TrainConfig attach_pretrained(const TrainConfig& config,
                              std::shared_ptr<const WordVectors> vectors) {
  if (!vectors) throw DataError("attach_pretrained: null vectors");
  if (vectors->table.cols() != static_cast<std::size_t>(config.dim)) {
    throw DataError("attach_pretrained: vector dim " +
                    std::to_string(vectors->table.cols()) +
                    " does not match config dim " + std::to_string(config.dim));
  }
  TrainConfig attached = config;
  attached.pretrained = std::move(vectors);
  return attached;
}

namespace {

void uniform_init(Matrix<float>& m, double bound, Rng& rng) {
  for (auto& v : m.data()) {
    v = static_cast<float>(rng.uniform(-bound, bound));
  }
}

struct EncodedDoc {
  std::vector<std::size_t> features;
  std::size_t gold = 0;
  std::size_t token_count = 0;
};

// One SGD step on a labeled example. grad_hidden is formed from the
// pre-update output rows, matching the reference classifier.
float supervised_step(Matrix<float>& input, Matrix<float>& output,
                      const EncodedDoc& doc, float lr,
                      std::vector<float>& hidden, std::vector<float>& probs,
                      std::vector<float>& grad_hidden) {
  average_rows(input, doc.features, hidden);
  const float loss = softmax_loss(output, hidden, doc.gold, probs);
  grad_hidden.assign(hidden.size(), 0.0f);
  for (std::size_t r = 0; r < output.rows(); ++r) {
    const float g = probs[r] - (r == doc.gold ? 1.0f : 0.0f);
    auto row = output.row(r);
    for (std::size_t j = 0; j < hidden.size(); ++j) {
      grad_hidden[j] += g * row[j];
      row[j] -= lr * g * hidden[j];
    }
  }
  const float scale = lr / static_cast<float>(doc.features.size());
  for (const std::size_t f : doc.features) {
    auto row = input.row(f);
    for (std::size_t j = 0; j < hidden.size(); ++j) {
      row[j] -= scale * grad_hidden[j];
    }
  }
  return loss;
}

}  // namespace

SupervisedModel train_supervised(const corpus::LabeledDataset& dataset,
                                 corpus::Task label_field,
                                 const TrainConfig& config,
                                 const normalize::RuleSet& rules,
                                 std::vector<double>* epoch_losses) {
  if (dataset.documents.empty()) {
    throw DataError("train_supervised: empty dataset");
  }
  if (config.epochs < 1) throw DataError("train_supervised: epochs must be >= 1");
  if (config.lr0 <= 0) throw DataError("train_supervised: lr0 must be > 0");

  // Label ids by (count desc, first occurrence asc).
  std::vector<std::string> doc_labels;
  doc_labels.reserve(dataset.documents.size());
  for (const auto& doc : dataset.documents) {
    doc_labels.push_back(corpus::label_of(doc, label_field));
  }
  struct LabelEntry {
    std::uint64_t count = 0;
    std::size_t first_seen = 0;
  };
  std::unordered_map<std::string, LabelEntry> label_counts;
  for (std::size_t i = 0; i < doc_labels.size(); ++i) {
    auto [it, inserted] = label_counts.try_emplace(doc_labels[i]);
    if (inserted) it->second.first_seen = i;
    ++it->second.count;
  }
  if (label_counts.size() < 2) {
    throw DataError("train_supervised: softmax needs at least 2 labels, got " +
                    std::to_string(label_counts.size()));
  }
  std::vector<std::pair<std::string, LabelEntry>> ordered(label_counts.begin(),
                                                          label_counts.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count > b.second.count;
    return a.second.first_seen < b.second.first_seen;
  });
  std::vector<std::string> labels;
  std::unordered_map<std::string, std::size_t> label_id;
  for (const auto& [name, entry] : ordered) {
    label_id.emplace(name, labels.size());
    labels.push_back(name);
  }

  std::vector<std::string> texts;
  texts.reserve(dataset.documents.size());
  for (const auto& doc : dataset.documents) texts.push_back(doc.text);
  VocabConfig vc;
  vc.min_count = config.min_count;
  vc.word_ngrams = config.word_ngrams;
  vc.bucket_count = config.bucket_count;
  vc.subwords = config.subwords;
  Vocabulary vocab = build_vocab(texts, vc);

  std::vector<EncodedDoc> docs(dataset.documents.size());
  std::size_t total_tokens = 0;
  for (std::size_t i = 0; i < dataset.documents.size(); ++i) {
    const auto tokens = split_tokens(texts[i]);
    docs[i].features = featurize(vocab, tokens);
    docs[i].gold = label_id.at(doc_labels[i]);
    // Progress is measured in kept tokens.
    for (const auto token : tokens) {
      if (vocab.contains(token)) ++docs[i].token_count;
    }
    total_tokens += docs[i].token_count;
  }

  SupervisedModel model;
  model.ruleset = rules;
  model.vocab = std::move(vocab);
  model.labels = std::move(labels);
  model.config = config;
  model.input = EmbeddingTable(model.vocab.total_rows(),
                               static_cast<std::size_t>(config.dim));
  model.output =
      Matrix<float>(model.labels.size(), static_cast<std::size_t>(config.dim));

  Rng rng(config.seed);
  uniform_init(model.input, 1.0 / config.dim, rng);
  if (config.pretrained) {
    const auto& pre = *config.pretrained;
    if (pre.table.cols() != static_cast<std::size_t>(config.dim)) {
      throw DataError("pretrained vector dim mismatch");
    }
    for (std::size_t id = 0; id < model.vocab.n_words(); ++id) {
      if (const auto pre_id = pre.vocab.id_of(model.vocab.word(id))) {
        const auto src = pre.table.row(*pre_id);
        auto dst = model.input.row(id);
        std::copy(src.begin(), src.end(), dst.begin());
      }
    }
  }

  const std::uint64_t target = static_cast<std::uint64_t>(config.epochs) *
                               std::max<std::size_t>(total_tokens, 1);
  if (epoch_losses) epoch_losses->clear();
  auto run_range = [&](std::size_t begin, std::size_t end, std::size_t stride,
                       std::atomic<std::uint64_t>* shared_processed) {
    std::vector<float> hidden, probs, grad_hidden;
    std::uint64_t local = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      double loss_sum = 0.0;
      std::size_t loss_n = 0;
      for (std::size_t i = begin; i < end; i += stride) {
        const auto& doc = docs[i];
        if (!doc.features.empty()) {
          const std::uint64_t processed =
              shared_processed ? shared_processed->load(std::memory_order_relaxed)
                               : local;
          const float lr = static_cast<float>(
              config.lr0 *
              std::max(0.0, 1.0 - static_cast<double>(processed) /
                                      static_cast<double>(target)));
          loss_sum += supervised_step(model.input, model.output, doc, lr,
                                      hidden, probs, grad_hidden);
          ++loss_n;
        }
        if (shared_processed) {
          shared_processed->fetch_add(doc.token_count,
                                      std::memory_order_relaxed);
        } else {
          local += doc.token_count;
        }
      }
      if (epoch_losses && !shared_processed && loss_n > 0) {
        epoch_losses->push_back(loss_sum / static_cast<double>(loss_n));
      }
    }
  };

  if (config.threads <= 1) {
    run_range(0, docs.size(), 1, nullptr);
  } else {
    // Hogwild-style: shared matrices, races tolerated, nondeterministic.
    std::atomic<std::uint64_t> processed{0};
    std::vector<std::thread> workers;
    for (int t = 0; t < config.threads; ++t) {
      workers.emplace_back(run_range, static_cast<std::size_t>(t), docs.size(),
                           static_cast<std::size_t>(config.threads),
                           &processed);
    }
    for (auto& w : workers) w.join();
  }
  return model;
}

namespace {

std::vector<double> score_distribution(const SupervisedModel& model,
                                       const std::string& raw_text) {
  const std::string text = normalize::normalize(raw_text, model.ruleset);
  if (text.empty()) throw DataError("empty input");
  const auto tokens = split_tokens(text);
  const auto features = featurize(model.vocab, tokens);
  std::vector<float> hidden(model.input.cols(), 0.0f);
  if (!features.empty()) {
    average_rows(model.input, features, hidden);
  }
  std::vector<float> probs;
  std::vector<float> h(hidden.begin(), hidden.end());
  softmax_loss(model.output, h, 0, probs);
  return {probs.begin(), probs.end()};
}

}  // namespace

std::vector<double> predict_distribution(const SupervisedModel& model,
                                         const std::string& text) {
  return score_distribution(model, text);
}

std::vector<Prediction> predict(const SupervisedModel& model,
                                const std::string& text, int k) {
  if (k < 1) throw DataError("predict: k must be >= 1");
  const auto probs = score_distribution(model, text);
  std::vector<std::size_t> order(probs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return probs[a] > probs[b];
  });
  const std::size_t take =
      std::min<std::size_t>(static_cast<std::size_t>(k), probs.size());
  std::vector<Prediction> result;
  result.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    result.push_back({model.labels[order[i]], probs[order[i]]});
  }
  return result;
}

// ---------------------------------------------------------------------------
// Unsupervised training.

namespace {

constexpr std::size_t kNegativeTableSize = 1'000'000;

// Unigram^0.75 noise table over corpus-frequency counts.
std::vector<std::uint32_t> build_negative_table(
    const std::vector<std::uint64_t>& counts) {
  std::vector<std::uint32_t> table;
  double total = 0.0;
  for (const auto c : counts) total += std::pow(static_cast<double>(c), 0.75);
  if (total <= 0.0) return table;
  table.reserve(kNegativeTableSize);
  std::size_t word = 0;
  double cumulative = std::pow(static_cast<double>(counts[0]), 0.75) / total;
  for (std::size_t i = 0; i < kNegativeTableSize; ++i) {
    table.push_back(static_cast<std::uint32_t>(word));
    if (static_cast<double>(i + 1) / kNegativeTableSize > cumulative &&
        word + 1 < counts.size()) {
      ++word;
      cumulative += std::pow(static_cast<double>(counts[word]), 0.75) / total;
    }
  }
  return table;
}

float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

// Binary logistic step for one (hidden, target) pair. Accumulates dL/dh from
// the pre-update output row.
void binary_logistic_step(Matrix<float>& output, std::size_t target, bool label,
                          const std::vector<float>& hidden, float lr,
                          std::vector<float>& grad_hidden) {
  auto row = output.row(target);
  float score = 0.0f;
  for (std::size_t j = 0; j < hidden.size(); ++j) score += row[j] * hidden[j];
  const float g = (label ? 1.0f : 0.0f) - sigmoid(score);
  for (std::size_t j = 0; j < hidden.size(); ++j) {
    grad_hidden[j] += g * row[j];
    row[j] += lr * g * hidden[j];
  }
}

}  // namespace

WordVectors train_unsupervised(std::span<const std::string> lines,
                               const UnsupervisedConfig& config,
                               const WordVectors* init) {
  if (lines.empty()) throw DataError("train_unsupervised: empty corpus");
  if (config.epochs < 0) throw DataError("train_unsupervised: negative epochs");
  if (init && init->table.rows() != init->vocab.n_words()) {
    throw DataError("train_unsupervised: init table must hold word rows only");
  }
  if (init && init->table.cols() != static_cast<std::size_t>(config.dim)) {
    throw DataError("train_unsupervised: init dim " +
                    std::to_string(init->table.cols()) +
                    " does not match config dim " + std::to_string(config.dim));
  }

  Vocabulary vocab;
  if (init) {
    vocab = init->vocab;
    vocab.bucket_count = config.subwords.enabled() ? config.bucket_count : 0;
    vocab.subwords = config.subwords;
    vocab.word_ngrams = 1;
  } else {
    std::vector<std::string> texts(lines.begin(), lines.end());
    VocabConfig vc;
    vc.min_count = config.min_count;
    vc.word_ngrams = 1;
    vc.bucket_count = config.subwords.enabled() ? config.bucket_count : 0;
    vc.subwords = config.subwords;
    vocab = build_vocab(texts, vc);
  }
  const std::size_t n_words = vocab.n_words();

  // Encode lines; out-of-vocabulary tokens are dropped.
  std::vector<std::vector<std::uint32_t>> encoded;
  encoded.reserve(lines.size());
  std::vector<std::uint64_t> corpus_counts(n_words, 0);
  std::size_t total_tokens = 0;
  for (const auto& line : lines) {
    std::vector<std::uint32_t> ids;
    for (const auto token : split_tokens(line)) {
      if (config.max_seq_len > 0 &&
          ids.size() >= static_cast<std::size_t>(config.max_seq_len)) {
        break;
      }
      if (const auto id = vocab.id_of(token)) {
        ids.push_back(static_cast<std::uint32_t>(*id));
        ++corpus_counts[*id];
      }
    }
    total_tokens += ids.size();
    if (!ids.empty()) encoded.push_back(std::move(ids));
  }

  // Per-word feature rows: the word row plus its hashed subword rows.
  std::vector<std::vector<std::size_t>> word_features(n_words);
  for (std::size_t id = 0; id < n_words; ++id) {
    word_features[id].push_back(id);
    if (vocab.subwords.enabled() && vocab.bucket_count > 0) {
      for (const auto& sub : subword_ngrams(vocab.word(id), vocab.subwords)) {
        word_features[id].push_back(vocab.bucket_row(sub));
      }
    }
  }

  Matrix<float> input(vocab.total_rows(), static_cast<std::size_t>(config.dim));
  Matrix<float> output(n_words, static_cast<std::size_t>(config.dim), 0.0f);
  Rng init_rng(config.seed);
  uniform_init(input, 1.0 / config.dim, init_rng);
  if (init) {
    for (std::size_t id = 0; id < init->vocab.n_words(); ++id) {
      const auto src = init->table.row(id);
      auto dst = input.row(id);
      std::copy(src.begin(), src.end(), dst.begin());
    }
  }

  const auto negative_table = build_negative_table(corpus_counts);
  const std::uint64_t target_tokens =
      static_cast<std::uint64_t>(config.epochs) *
      std::max<std::size_t>(total_tokens, 1);

  auto run_range = [&](std::size_t begin, std::size_t stride,
                       std::uint64_t rng_salt,
                       std::atomic<std::uint64_t>* shared_processed) {
    Rng rng(config.seed + rng_salt);
    std::vector<float> hidden(static_cast<std::size_t>(config.dim));
    std::vector<float> grad_hidden(static_cast<std::size_t>(config.dim));
    std::vector<std::size_t> bag;
    std::uint64_t local = 0;

    // Bounded retries: a near-degenerate noise table must not spin forever.
    auto draw_negative = [&](std::uint32_t positive) -> std::int64_t {
      for (int attempt = 0; attempt < 16; ++attempt) {
        const auto id = negative_table[static_cast<std::size_t>(
            rng.uniform_int(negative_table.size()))];
        if (id != positive) return id;
      }
      return -1;
    };

    auto train_pair = [&](std::span<const std::size_t> features,
                          std::uint32_t target_word, float lr) {
      average_rows(input, features, hidden);
      grad_hidden.assign(hidden.size(), 0.0f);
      binary_logistic_step(output, target_word, true, hidden, lr, grad_hidden);
      for (int neg = 0; neg < config.negatives; ++neg) {
        const std::int64_t negative = draw_negative(target_word);
        if (negative < 0) break;
        binary_logistic_step(output, static_cast<std::size_t>(negative), false,
                             hidden, lr, grad_hidden);
      }
      for (const std::size_t f : features) {
        auto row = input.row(f);
        for (std::size_t j = 0; j < hidden.size(); ++j) {
          row[j] += grad_hidden[j];
        }
      }
    };

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      for (std::size_t li = begin; li < encoded.size(); li += stride) {
        const auto& ids = encoded[li];
        for (std::size_t i = 0; i < ids.size(); ++i) {
          const std::uint64_t processed =
              shared_processed ? shared_processed->load(std::memory_order_relaxed)
                               : local;
          const float lr = static_cast<float>(
              config.lr0 *
              std::max(0.0, 1.0 - static_cast<double>(processed) /
                                      static_cast<double>(target_tokens)));
          const std::size_t window_here =
              1 + static_cast<std::size_t>(
                      rng.uniform_int(static_cast<std::uint64_t>(config.window)));
          const std::size_t lo = i >= window_here ? i - window_here : 0;
          const std::size_t hi = std::min(ids.size() - 1, i + window_here);
          if (config.objective == UnsupervisedObjective::skipgram) {
            for (std::size_t c = lo; c <= hi; ++c) {
              if (c == i) continue;
              train_pair(word_features[ids[i]], ids[c], lr);
            }
          } else {
            bag.clear();
            for (std::size_t c = lo; c <= hi; ++c) {
              if (c == i) continue;
              if (config.context_dropout > 0.0 &&
                  rng.bernoulli(config.context_dropout)) {
                continue;  // masking-noise analog: drop from context
              }
              const auto& feats = word_features[ids[c]];
              bag.insert(bag.end(), feats.begin(), feats.end());
            }
            if (!bag.empty()) train_pair(bag, ids[i], lr);
          }
          if (shared_processed) {
            shared_processed->fetch_add(1, std::memory_order_relaxed);
          } else {
            ++local;
          }
        }
      }
    }
  };

  if (config.epochs > 0 && total_tokens > 0 && !negative_table.empty()) {
    if (config.threads <= 1) {
      run_range(0, 1, 0, nullptr);
    } else {
      std::atomic<std::uint64_t> processed{0};
      std::vector<std::thread> workers;
      for (int t = 0; t < config.threads; ++t) {
        workers.emplace_back(run_range, static_cast<std::size_t>(t),
                             static_cast<std::size_t>(config.threads),
                             static_cast<std::uint64_t>(t), &processed);
      }
      for (auto& w : workers) w.join();
    }
  }

  WordVectors result;
  result.vocab = vocab;
  result.vocab.bucket_count = 0;
  result.vocab.subwords = SubwordRange{};
  result.table = EmbeddingTable(n_words, static_cast<std::size_t>(config.dim));
  for (std::size_t id = 0; id < n_words; ++id) {
    const auto src = input.row(id);
    auto dst = result.table.row(id);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return result;
}

// ---------------------------------------------------------------------------
// Vector text format.

namespace {

void append_float(std::string& out, float v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

void save_vectors(const EmbeddingTable& table, const Vocabulary& vocab,
                  std::ostream& out) {
  if (table.rows() < vocab.n_words()) {
    throw DataError("save_vectors: table has fewer rows than words");
  }
  std::string line;
  line += std::to_string(vocab.n_words());
  line += ' ';
  line += std::to_string(table.cols());
  line += '\n';
  out << line;
  for (std::size_t id = 0; id < vocab.n_words(); ++id) {
    line.clear();
    line += vocab.word(id);
    for (const float v : table.row(id)) {
      line += ' ';
      append_float(line, v);
    }
    line += '\n';
    out << line;
  }
}

WordVectors load_vectors(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("vectors: empty stream");
  std::size_t n_words = 0, dim = 0;
  {
    std::istringstream header(line);
    if (!(header >> n_words >> dim) || dim == 0) {
      throw DataError("vectors line 1: malformed header");
    }
  }
  WordVectors result;
  result.table = EmbeddingTable(n_words, dim);
  for (std::size_t id = 0; id < n_words; ++id) {
    if (!std::getline(in, line)) {
      throw DataError("vectors line " + std::to_string(id + 2) +
                      ": unexpected end of stream");
    }
    const std::size_t space = line.find(' ');
    if (space == std::string::npos) {
      throw DataError("vectors line " + std::to_string(id + 2) +
                      ": missing values");
    }
    result.vocab.append_word(line.substr(0, space), 0);
    auto row = result.table.row(id);
    const char* p = line.data() + space;
    const char* end = line.data() + line.size();
    for (std::size_t j = 0; j < dim; ++j) {
      while (p < end && *p == ' ') ++p;
      float v = 0.0f;
      const auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc()) {
        throw DataError("vectors line " + std::to_string(id + 2) + ": expected " +
                        std::to_string(dim) + " values");
      }
      row[j] = v;
      p = res.ptr;
    }
    while (p < end && *p == ' ') ++p;
    if (p != end) {
      throw DataError("vectors line " + std::to_string(id + 2) +
                      ": trailing data");
    }
  }
  return result;
}

WordVectors load_vectors_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vectors file: " + path);
  return load_vectors(in);
}

// ---------------------------------------------------------------------------
// Binary model container.

namespace {

constexpr char kModelMagic[4] = {'R', 'P', 'S', 'M'};
constexpr std::uint32_t kModelVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 8);
}

void write_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64(out, bits);
}

void write_string(std::ostream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void write_matrix(std::ostream& out, const Matrix<float>& m) {
  write_u64(out, m.rows());
  write_u64(out, m.cols());
  for (const float v : m.data()) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(out, bits);
  }
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  if (!in) throw DataError("model: truncated stream");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  if (!in) throw DataError("model: truncated stream");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

double read_f64(std::istream& in) {
  const std::uint64_t bits = read_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

std::string read_string(std::istream& in) {
  const std::uint64_t len = read_u64(in);
  std::string s(len, '\0');
  in.read(s.data(), static_cast<std::streamsize>(len));
  if (!in) throw DataError("model: truncated stream");
  return s;
}

Matrix<float> read_matrix(std::istream& in) {
  const std::uint64_t rows = read_u64(in);
  const std::uint64_t cols = read_u64(in);
  Matrix<float> m(rows, cols);
  for (auto& v : m.data()) {
    const std::uint32_t bits = read_u32(in);
    std::memcpy(&v, &bits, 4);
  }
  return m;
}

}  // namespace

void save_model(const SupervisedModel& model, std::ostream& out) {
  out.write(kModelMagic, 4);
  write_u32(out, kModelVersion);
  write_string(out, model.ruleset.version);
  write_u32(out, model.ruleset.casing_mode == normalize::CasingMode::lowercased
                     ? 1u
                     : 0u);
  write_u64(out, model.ruleset.db_handles.size());
  for (const auto& h : model.ruleset.db_handles) write_string(out, h);
  write_u64(out, model.labels.size());
  for (const auto& label : model.labels) write_string(out, label);
  write_u32(out, static_cast<std::uint32_t>(model.config.dim));
  write_f64(out, model.config.lr0);
  write_u32(out, static_cast<std::uint32_t>(model.config.epochs));
  write_u32(out, static_cast<std::uint32_t>(model.config.word_ngrams));
  write_u64(out, model.config.seed);
  write_u64(out, model.config.min_count);
  write_u64(out, model.config.bucket_count);
  write_u32(out, static_cast<std::uint32_t>(model.config.subwords.min_n));
  write_u32(out, static_cast<std::uint32_t>(model.config.subwords.max_n));
  write_u64(out, model.vocab.n_words());
  for (std::size_t id = 0; id < model.vocab.n_words(); ++id) {
    write_string(out, model.vocab.word(id));
    write_u64(out, model.vocab.count(id));
  }
  write_u64(out, model.vocab.bucket_count);
  write_u32(out, static_cast<std::uint32_t>(model.vocab.word_ngrams));
  write_u32(out, static_cast<std::uint32_t>(model.vocab.subwords.min_n));
  write_u32(out, static_cast<std::uint32_t>(model.vocab.subwords.max_n));
  write_matrix(out, model.input);
  write_matrix(out, model.output);
}

void save_model_file(const SupervisedModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open model file for writing: " + path);
  save_model(model, out);
}

SupervisedModel load_model(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kModelMagic, 4) != 0) {
    throw DataError("model: bad magic");
  }
  const std::uint32_t version = read_u32(in);
  if (version != kModelVersion) {
    throw DataError("model: unsupported format version " +
                    std::to_string(version));
  }
  SupervisedModel model;
  model.ruleset.version = read_string(in);
  model.ruleset.casing_mode = read_u32(in) == 1
                                  ? normalize::CasingMode::lowercased
                                  : normalize::CasingMode::cased;
  model.ruleset.db_handles.clear();
  const std::uint64_t n_handles = read_u64(in);
  for (std::uint64_t i = 0; i < n_handles; ++i) {
    model.ruleset.db_handles.push_back(read_string(in));
  }
  const std::uint64_t n_labels = read_u64(in);
  for (std::uint64_t i = 0; i < n_labels; ++i) {
    model.labels.push_back(read_string(in));
  }
  model.config.dim = static_cast<int>(read_u32(in));
  model.config.lr0 = read_f64(in);
  model.config.epochs = static_cast<int>(read_u32(in));
  model.config.word_ngrams = static_cast<int>(read_u32(in));
  model.config.seed = read_u64(in);
  model.config.min_count = read_u64(in);
  model.config.bucket_count = read_u64(in);
  model.config.subwords.min_n = static_cast<int>(read_u32(in));
  model.config.subwords.max_n = static_cast<int>(read_u32(in));
  const std::uint64_t n_words = read_u64(in);
  for (std::uint64_t i = 0; i < n_words; ++i) {
    std::string word = read_string(in);
    const std::uint64_t count = read_u64(in);
    model.vocab.append_word(std::move(word), count);
  }
  model.vocab.bucket_count = read_u64(in);
  model.vocab.word_ngrams = static_cast<int>(read_u32(in));
  model.vocab.subwords.min_n = static_cast<int>(read_u32(in));
  model.vocab.subwords.max_n = static_cast<int>(read_u32(in));
  model.input = read_matrix(in);
  model.output = read_matrix(in);
  if (model.input.rows() != model.vocab.total_rows() ||
      model.output.rows() != model.labels.size()) {
    throw DataError("model: inconsistent matrix shapes");
  }
  return model;
}

SupervisedModel load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path);
  return load_model(in);
}

}  // namespace relpol::textmodel
