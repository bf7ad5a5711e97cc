#include <doctest.h>

#include <cmath>
#include <sstream>

#include "relpol/errors.hpp"
#include "relpol/hash.hpp"
#include "relpol/rng.hpp"
#include "relpol/textmodel.hpp"
#include "testutil.hpp"

using namespace relpol;
using namespace relpol::textmodel;

namespace {

TrainConfig small_config() {
  TrainConfig config;
  config.dim = 16;
  config.epochs = 20;
  config.word_ngrams = 2;
  config.bucket_count = 2000;
  config.seed = 42;
  return config;
}

double cosine(std::span<const float> a, std::span<const float> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

TEST_SUITE_BEGIN("textmodel");

TEST_CASE("fnv1a64 matches the published test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("vocabulary ids follow (count desc, first occurrence asc)") {
  const std::vector<std::string> corpus = {"a b a"};
  VocabConfig config;
  const auto vocab = build_vocab(corpus, config);
  REQUIRE(vocab.n_words() == 2);
  CHECK(vocab.word(0) == "a");
  CHECK(vocab.word(1) == "b");
  CHECK(vocab.count(0) == 2);
  CHECK(vocab.count(1) == 1);

  SUBCASE("ties break by first occurrence") {
    const std::vector<std::string> tied = {"zz yy xx"};
    const auto tied_vocab = build_vocab(tied, config);
    CHECK(tied_vocab.word(0) == "zz");
    CHECK(tied_vocab.word(1) == "yy");
    CHECK(tied_vocab.word(2) == "xx");
  }
  SUBCASE("two runs agree") {
    const auto again = build_vocab(corpus, config);
    CHECK(again.words() == vocab.words());
    CHECK(again.counts() == vocab.counts());
  }
  SUBCASE("min_count filters and can empty the vocabulary") {
    VocabConfig strict;
    strict.min_count = 2;
    const auto filtered = build_vocab(corpus, strict);
    CHECK(filtered.n_words() == 1);
    strict.min_count = 3;
    CHECK_THROWS_AS(build_vocab(corpus, strict), DataError);
  }
  SUBCASE("empty corpus is rejected") {
    CHECK_THROWS_AS(build_vocab({}, config), DataError);
  }
}

TEST_CASE("subword n-grams respect UTF-8 boundaries") {
  SubwordRange range{3, 4};
  const auto subs = subword_ngrams("über", range);
  // "<über>" has 6 codepoints -> 3-grams: <üb übe ber er> ; 4-grams: <übe über ber>
  CHECK(subs.size() == 7);
  CHECK(std::find(subs.begin(), subs.end(), "<üb") != subs.end());
  CHECK(std::find(subs.begin(), subs.end(), "ber") != subs.end());
  CHECK(std::find(subs.begin(), subs.end(), "er>") != subs.end());
  for (const auto& sub : subs) {
    CHECK(sub.find('\xFF') == std::string::npos);
  }
}

TEST_CASE("featurize: word ids plus hashed n-grams over surviving tokens") {
  const std::vector<std::string> corpus = {"a b c a b"};
  VocabConfig config;
  config.word_ngrams = 2;
  config.bucket_count = 100;
  const auto vocab = build_vocab(corpus, config);
  const std::vector<std::string_view> tokens = {"a", "oov", "b"};
  const auto features = featurize(vocab, tokens);
  // 2 word ids + 1 bigram over the surviving sequence ("a b").
  REQUIRE(features.size() == 3);
  CHECK(features[0] == *vocab.id_of("a"));
  CHECK(features[1] == *vocab.id_of("b"));
  CHECK(features[2] == vocab.n_words() + fnv1a64("a b") % 100);
}

TEST_CASE("separable toy set converges to 100% training accuracy") {
  const auto dataset = testutil::make_separable_dataset();
  const normalize::RuleSet rules;
  const auto model = train_supervised(dataset, corpus::Task::relevance,
                                      small_config(), rules);
  for (const auto& doc : dataset.documents) {
    const auto top = predict(model, doc.text, 1);
    REQUIRE(top.size() == 1);
    CHECK(top[0].label == corpus::label_of(doc, corpus::Task::relevance));
  }
}

TEST_CASE("noisy data: accuracy reaches the Bayes rate without overfitting") {
  // One informative token at a 90/10 class-conditional rate over shared
  // fillers; the best any classifier can do is 0.9.
  const std::vector<std::string> fill = {"die",  "bahn",   "zug", "heute",
                                         "wieder", "einfach", "mal", "gleis",
                                         "fahrt", "morgen", "lange", "immer"};
  auto make = [&](std::size_t n, std::uint64_t salt) {
    corpus::LabeledDataset dataset;
    Rng rng(salt);
    for (std::size_t i = 0; i < n; ++i) {
      corpus::Document doc;
      doc.id = "http://x/" + std::to_string(i);
      const bool neg = rng.bernoulli(0.5);
      doc.relevance = neg;
      std::string text;
      if (rng.bernoulli(neg ? 0.9 : 0.1)) text += "ausfall";
      for (int j = 0; j < 8; ++j) {
        if (!text.empty()) text += ' ';
        text += fill[rng.uniform_int(fill.size())];
      }
      doc.text = std::move(text);
      dataset.documents.push_back(std::move(doc));
    }
    return dataset;
  };
  const auto train = make(800, 1);
  const auto held_out = make(400, 2);
  auto config = small_config();
  config.epochs = 20;
  const auto model = train_supervised(train, corpus::Task::relevance, config,
                                      normalize::RuleSet{});
  auto acc = [&](const corpus::LabeledDataset& dataset) {
    std::size_t ok = 0;
    for (const auto& doc : dataset.documents) {
      if (predict(model, doc.text, 1).front().label ==
          corpus::label_of(doc, corpus::Task::relevance)) {
        ++ok;
      }
    }
    return static_cast<double>(ok) / dataset.documents.size();
  };
  CHECK(acc(train) > 0.85);
  const double held_out_acc = acc(held_out);
  CHECK(held_out_acc > 0.85);
  CHECK(held_out_acc < 0.95);
}

TEST_CASE("per-epoch loss never rises above the first epoch") {
  const auto dataset = testutil::make_separable_dataset();
  auto config = small_config();
  std::vector<double> losses;
  train_supervised(dataset, corpus::Task::relevance, config,
                   normalize::RuleSet{}, &losses);
  REQUIRE(static_cast<int>(losses.size()) == config.epochs);
  for (const auto loss : losses) {
    CHECK(loss <= losses.front() + 1e-9);
  }
  CHECK(losses.back() < losses.front());
}

TEST_CASE("training twice with one seed is bit-identical") {
  const auto dataset = testutil::make_synthetic_dataset(60, 3);
  const normalize::RuleSet rules;
  const auto config = small_config();
  const auto a = train_supervised(dataset, corpus::Task::sentiment, config, rules);
  const auto b = train_supervised(dataset, corpus::Task::sentiment, config, rules);
  CHECK(a.input == b.input);
  CHECK(a.output == b.output);
  CHECK(a.labels == b.labels);

  auto other = config;
  other.seed = 43;
  const auto c = train_supervised(dataset, corpus::Task::sentiment, other, rules);
  CHECK(a.input.data() != c.input.data());
}

TEST_CASE("label renaming permutes predictions consistently") {
  auto dataset = testutil::make_synthetic_dataset(60, 21);
  const normalize::RuleSet rules;
  const auto config = small_config();
  const auto base = train_supervised(dataset, corpus::Task::relevance, config, rules);

  // Rename labels through relevance inversion: swap true/false on every
  // document. Same texts, same counts per class, swapped names.
  auto renamed = dataset;
  for (auto& doc : renamed.documents) doc.relevance = !*doc.relevance;
  const auto flipped = train_supervised(renamed, corpus::Task::relevance,
                                        config, rules);
  for (const auto& doc : dataset.documents) {
    const auto p = predict(base, doc.text, 1).front();
    const auto q = predict(flipped, doc.text, 1).front();
    CHECK(p.label != q.label);  // the bijection true<->false
    CHECK(p.probability == doctest::Approx(q.probability).epsilon(1e-6));
  }
}

TEST_CASE("prediction distribution sums to one") {
  const auto dataset = testutil::make_synthetic_dataset(60, 31);
  const auto model = train_supervised(dataset, corpus::Task::sentiment,
                                      small_config(), normalize::RuleSet{});
  const auto probs = predict_distribution(model, "bahn heute verspätung");
  double sum = 0.0;
  for (const auto p : probs) sum += p;
  CHECK(std::fabs(sum - 1.0) <= 1e-6);

  const auto top2 = predict(model, "bahn heute verspätung", 2);
  REQUIRE(top2.size() == 2);
  CHECK(top2[0].probability >= top2[1].probability);
  // k beyond the label count clamps
  CHECK(predict(model, "bahn heute", 10).size() == model.labels.size());
}

TEST_CASE("predict rejects text that normalizes to nothing") {
  const auto dataset = testutil::make_separable_dataset();
  const auto model = train_supervised(dataset, corpus::Task::relevance,
                                      small_config(), normalize::RuleSet{});
  // single punctuation marks vanish during normalization
  CHECK_THROWS_WITH_AS(predict(model, "? !", 1), "empty input", DataError);
  CHECK_THROWS_WITH_AS(predict(model, "", 1), "empty input", DataError);
}

TEST_CASE("degenerate datasets are rejected") {
  const normalize::RuleSet rules;
  CHECK_THROWS_AS(train_supervised(corpus::LabeledDataset{},
                                   corpus::Task::relevance, small_config(),
                                   rules),
                  DataError);
  corpus::LabeledDataset single_class;
  for (int i = 0; i < 5; ++i) {
    corpus::Document doc;
    doc.id = "http://" + std::to_string(i);
    doc.text = "text " + std::to_string(i);
    doc.relevance = true;
    single_class.documents.push_back(doc);
  }
  CHECK_THROWS_AS(train_supervised(single_class, corpus::Task::relevance,
                                   small_config(), rules),
                  DataError);
  corpus::Document unlabeled;
  unlabeled.id = "http://u";
  unlabeled.text = "ohne label";
  single_class.documents.push_back(unlabeled);
  CHECK_THROWS_AS(train_supervised(single_class, corpus::Task::relevance,
                                   small_config(), rules),
                  DataError);
}

TEST_CASE("gradient check: analytic vs central differences") {
  Rng rng(2024);
  for (int batch_idx = 0; batch_idx < 20; ++batch_idx) {
    const std::size_t n_rows = 12;
    const std::size_t dim = 6;
    const std::size_t n_labels = 3;
    Matrix<double> input(n_rows, dim);
    Matrix<double> output(n_labels, dim);
    for (auto& v : input.data()) v = rng.uniform(-0.5, 0.5);
    for (auto& v : output.data()) v = rng.uniform(-0.5, 0.5);

    std::vector<BatchExample> batch(4);
    for (auto& ex : batch) {
      const std::size_t n_feats = 1 + rng.uniform_int(4);
      for (std::size_t f = 0; f < n_feats; ++f) {
        ex.features.push_back(rng.uniform_int(n_rows));
      }
      ex.gold = rng.uniform_int(n_labels);
    }

    Matrix<double> grad_input, grad_output;
    softmax_batch_gradients<double>(input, output, batch, grad_input,
                                    grad_output);

    const double h = 1e-6;
    auto check_param = [&](Matrix<double>& params, const Matrix<double>& grads,
                           std::size_t r, std::size_t c) {
      const double saved = params.at(r, c);
      params.at(r, c) = saved + h;
      const double up = softmax_batch_loss<double>(input, output, batch);
      params.at(r, c) = saved - h;
      const double down = softmax_batch_loss<double>(input, output, batch);
      params.at(r, c) = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = grads.at(r, c);
      const double scale =
          std::max({std::fabs(numeric), std::fabs(analytic), 1e-8});
      CHECK(std::fabs(numeric - analytic) / scale < 1e-4);
    };
    for (std::size_t r = 0; r < n_labels; ++r) {
      for (std::size_t c = 0; c < dim; ++c) check_param(output, grad_output, r, c);
    }
    // Input rows actually touched by the batch.
    for (const auto& ex : batch) {
      for (const auto f : ex.features) check_param(input, grad_input, f, 0);
    }
  }
}

TEST_CASE("vectors text format round-trips") {
  const std::vector<std::string> corpus = {"wort eins zwei drei wort eins"};
  VocabConfig vc;
  const auto vocab = build_vocab(corpus, vc);
  EmbeddingTable table(vocab.n_words(), 5);
  Rng rng(9);
  for (auto& v : table.data()) v = static_cast<float>(rng.uniform(-2.0, 2.0));

  std::stringstream stream;
  save_vectors(table, vocab, stream);
  const auto loaded = load_vectors(stream);
  REQUIRE(loaded.vocab.n_words() == vocab.n_words());
  for (std::size_t id = 0; id < vocab.n_words(); ++id) {
    CHECK(loaded.vocab.word(id) == vocab.word(id));  // order preserved
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(std::fabs(loaded.table.at(id, j) - table.at(id, j)) <= 1e-5);
    }
  }
}

TEST_CASE("malformed vector files name the line") {
  std::stringstream short_row("2 3\nwort 1.0 2.0 3.0\nkurz 1.0 2.0\n");
  CHECK_THROWS_WITH_AS(load_vectors(short_row), doctest::Contains("line 3"),
                       DataError);
  std::stringstream bad_header("zwei drei\n");
  CHECK_THROWS_WITH_AS(load_vectors(bad_header), doctest::Contains("line 1"),
                       DataError);
  std::stringstream long_row("1 2\nwort 1.0 2.0 3.0\n");
  CHECK_THROWS_AS(load_vectors(long_row), DataError);
}

TEST_CASE("attach_pretrained validates dimensions") {
  auto vectors = std::make_shared<WordVectors>();
  vectors->vocab.append_word("wort", 1);
  vectors->table = EmbeddingTable(1, 50);
  TrainConfig config;
  config.dim = 50;
  CHECK_NOTHROW(attach_pretrained(config, vectors));
  config.dim = 100;
  CHECK_THROWS_AS(attach_pretrained(config, vectors), DataError);
}

TEST_CASE("pretrained rows seed supervised input rows") {
  const auto dataset = testutil::make_separable_dataset();
  auto config = small_config();
  config.epochs = 1;
  config.lr0 = 1e-9;  // leave init essentially untouched
  config.bucket_count = 0;
  config.word_ngrams = 1;

  auto vectors = std::make_shared<WordVectors>();
  vectors->table = EmbeddingTable(1, config.dim);
  for (std::size_t j = 0; j < vectors->table.cols(); ++j) {
    vectors->table.at(0, j) = 7.0f;
  }
  vectors->vocab.append_word("xa", 1);

  const auto attached = attach_pretrained(config, vectors);
  const auto model = train_supervised(dataset, corpus::Task::relevance,
                                      attached, normalize::RuleSet{});
  const auto id = model.vocab.id_of("xa");
  REQUIRE(id.has_value());
  CHECK(model.input.at(*id, 0) == doctest::Approx(7.0f).epsilon(1e-4));
}

TEST_CASE("unsupervised: co-occurring tokens end up closer") {
  // aa and bb sit in identical xx_yy frames (likewise cc/dd in uu_vv), so
  // their context distributions match and the input vectors converge.
  std::vector<std::string> lines;
  for (int i = 0; i < 300; ++i) {
    lines.push_back(i % 2 == 0 ? "xx aa yy xx bb yy xx aa yy xx bb yy"
                               : "uu cc vv uu dd vv uu cc vv uu dd vv");
  }
  UnsupervisedConfig config;
  config.dim = 16;
  config.epochs = 10;
  config.window = 1;
  config.min_count = 1;
  config.subwords = SubwordRange{};  // plain word vectors
  config.seed = 5;
  for (const auto objective :
       {UnsupervisedObjective::skipgram, UnsupervisedObjective::cbow}) {
    config.objective = objective;
    const auto vectors = train_unsupervised(lines, config);
    const auto aa = *vectors.vocab.id_of("aa");
    const auto bb = *vectors.vocab.id_of("bb");
    const auto cc = *vectors.vocab.id_of("cc");
    CHECK(cosine(vectors.table.row(aa), vectors.table.row(bb)) >
          cosine(vectors.table.row(aa), vectors.table.row(cc)));
  }
}

TEST_CASE("unsupervised training is deterministic per seed") {
  std::vector<std::string> lines;
  for (int i = 0; i < 50; ++i) lines.push_back("ein zug kommt selten allein");
  UnsupervisedConfig config;
  config.dim = 8;
  config.epochs = 3;
  config.min_count = 1;
  const auto a = train_unsupervised(lines, config);
  const auto b = train_unsupervised(lines, config);
  CHECK(a.table == b.table);
  CHECK(a.vocab.words() == b.vocab.words());
}

TEST_CASE("epochs=0 with init returns the init table") {
  WordVectors init;
  init.vocab.append_word("alpha", 5);
  init.vocab.append_word("beta", 3);
  init.table = EmbeddingTable(2, 8);
  Rng rng(77);
  for (auto& v : init.table.data()) v = static_cast<float>(rng.uniform01());

  const std::vector<std::string> lines = {"alpha beta alpha"};
  UnsupervisedConfig config;
  config.dim = 8;
  config.epochs = 0;
  config.min_count = 1;
  const auto out = train_unsupervised(lines, config, &init);
  CHECK(out.table == init.table);
  CHECK(out.vocab.words() == init.vocab.words());
}

TEST_CASE("a word absent from the corpus keeps its init row") {
  WordVectors init;
  init.vocab.append_word("alpha", 5);
  init.vocab.append_word("beta", 3);
  init.table = EmbeddingTable(2, 8);
  Rng rng(78);
  for (auto& v : init.table.data()) v = static_cast<float>(rng.uniform01());

  std::vector<std::string> lines;
  for (int i = 0; i < 30; ++i) lines.push_back("alpha alpha alpha alpha");
  UnsupervisedConfig config;
  config.dim = 8;
  config.epochs = 2;
  config.min_count = 1;
  config.subwords = SubwordRange{};  // no shared gradient path
  const auto out = train_unsupervised(lines, config, &init);
  const auto beta = *out.vocab.id_of("beta");
  for (std::size_t j = 0; j < 8; ++j) {
    CHECK(out.table.at(beta, j) == init.table.at(beta, j));
  }
}

TEST_CASE("a corpus sharing no vocabulary leaves every init row unchanged") {
  WordVectors init;
  init.vocab.append_word("alpha", 5);
  init.vocab.append_word("beta", 3);
  init.table = EmbeddingTable(2, 8);
  Rng rng(79);
  for (auto& v : init.table.data()) v = static_cast<float>(rng.uniform01());

  std::vector<std::string> lines = {"gamma delta gamma", "delta gamma delta"};
  UnsupervisedConfig config;
  config.dim = 8;
  config.epochs = 5;
  config.min_count = 1;
  const auto out = train_unsupervised(lines, config, &init);
  CHECK(out.table == init.table);
}

TEST_CASE("model container round-trips bit-exactly") {
  const auto dataset = testutil::make_synthetic_dataset(40, 13);
  normalize::RuleSet rules;
  rules.casing_mode = normalize::CasingMode::lowercased;
  const auto model = train_supervised(dataset, corpus::Task::sentiment,
                                      small_config(), rules);
  std::stringstream stream;
  save_model(model, stream);
  const auto loaded = load_model(stream);
  CHECK(loaded.input == model.input);
  CHECK(loaded.output == model.output);
  CHECK(loaded.labels == model.labels);
  CHECK(loaded.vocab.words() == model.vocab.words());
  CHECK(loaded.vocab.bucket_count == model.vocab.bucket_count);
  CHECK(loaded.ruleset.casing_mode == rules.casing_mode);
  CHECK(loaded.config.dim == model.config.dim);

  // Same predictions after the round trip.
  const std::string text = dataset.documents[0].text;
  CHECK(predict(loaded, text, 1).front().label ==
        predict(model, text, 1).front().label);

  std::stringstream garbage("XXXX????");
  CHECK_THROWS_AS(load_model(garbage), DataError);
}

TEST_SUITE_END();
