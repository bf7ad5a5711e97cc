#include <doctest.h>

#include <string>
#include <vector>

#include "relpol/corpus_stats.hpp"
#include "relpol/rng.hpp"

using namespace relpol;

TEST_SUITE_BEGIN("stats");

TEST_CASE("hand-counted n-grams") {
  const std::vector<std::string> corpus = {"a b a b"};
  const auto stats = stats::compute_stats(corpus);
  CHECK(stats.unique_unigrams == 2);   // a, b
  CHECK(stats.unique_bigrams == 2);    // "a b", "b a"
  CHECK(stats.unique_trigrams == 2);   // "a b a", "b a b"
  CHECK(stats.mean_doc_length_tokens == 4.0);
  CHECK(stats.mean_doc_length_chars == 7.0);
  CHECK(stats.doc_count == 1);
}

TEST_CASE("empty document corpus") {
  const std::vector<std::string> corpus = {""};
  const auto stats = stats::compute_stats(corpus);
  CHECK(stats.unique_unigrams == 0);
  CHECK(stats.unique_bigrams == 0);
  CHECK(stats.unique_trigrams == 0);
  CHECK(stats.mean_doc_length_tokens == 0.0);
  CHECK(stats.mean_doc_length_chars == 0.0);
  CHECK(stats.doc_count == 1);
}

TEST_CASE("n-grams never cross document boundaries") {
  const std::vector<std::string> split = {"a b", "c d"};
  const auto stats = stats::compute_stats(split);
  CHECK(stats.unique_unigrams == 4);
  CHECK(stats.unique_bigrams == 2);  // "a b", "c d" but not "b c"
  CHECK(stats.unique_trigrams == 0);
}

TEST_CASE("short documents contribute max(L-n+1, 0) instances") {
  const std::vector<std::string> corpus = {"nur", "zwei hier"};
  const auto stats = stats::compute_stats(corpus);
  CHECK(stats.unique_unigrams == 3);
  CHECK(stats.unique_bigrams == 1);
  CHECK(stats.unique_trigrams == 0);
}

TEST_CASE("umlauts count as single characters") {
  const std::vector<std::string> corpus = {"über"};
  const auto stats = stats::compute_stats(corpus);
  CHECK(stats.mean_doc_length_chars == 4.0);
}

TEST_CASE("permutation of document order changes nothing") {
  std::vector<std::string> corpus;
  Rng rng(5);
  const std::vector<std::string> words = {"zug", "bahn", "spät", "halt", "weg"};
  for (int i = 0; i < 100; ++i) {
    std::string doc;
    const std::size_t len = 1 + rng.uniform_int(8);
    for (std::size_t j = 0; j < len; ++j) {
      if (j) doc += ' ';
      doc += words[rng.uniform_int(words.size())];
    }
    corpus.push_back(doc);
  }
  const auto before = stats::compute_stats(corpus);
  rng.shuffle(corpus);
  const auto after = stats::compute_stats(corpus);
  CHECK(after.unique_unigrams == before.unique_unigrams);
  CHECK(after.unique_bigrams == before.unique_bigrams);
  CHECK(after.unique_trigrams == before.unique_trigrams);
  CHECK(after.mean_doc_length_tokens == before.mean_doc_length_tokens);
  CHECK(after.mean_doc_length_chars == before.mean_doc_length_chars);
}

TEST_CASE("adding a document never decreases uniqueness counts") {
  Rng rng(6);
  const std::vector<std::string> words = {"ein", "zwei", "drei", "vier"};
  std::vector<std::string> corpus;
  auto previous = stats::compute_stats(corpus);
  for (int i = 0; i < 50; ++i) {
    std::string doc;
    const std::size_t len = 1 + rng.uniform_int(6);
    for (std::size_t j = 0; j < len; ++j) {
      if (j) doc += ' ';
      doc += words[rng.uniform_int(words.size())];
    }
    corpus.push_back(doc);
    const auto current = stats::compute_stats(corpus);
    CHECK(current.unique_unigrams >= previous.unique_unigrams);
    CHECK(current.unique_bigrams >= previous.unique_bigrams);
    CHECK(current.unique_trigrams >= previous.unique_trigrams);
    CHECK(current.unique_unigrams <= current.total_tokens);
    previous = current;
  }
}

TEST_SUITE_END();
