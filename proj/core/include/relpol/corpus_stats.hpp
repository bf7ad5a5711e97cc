#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace relpol::stats {

// Corpus statistics over normalized, lowercased text. Tokens are
// whitespace-split words; n-grams are counted within documents only and
// uniqueness is global across the corpus. Mean document length is reported
// both in tokens and in codepoints since the published unit is ambiguous.
struct CorpusStats {
  std::uint64_t unique_unigrams = 0;
  std::uint64_t unique_bigrams = 0;
  std::uint64_t unique_trigrams = 0;
  std::uint64_t doc_count = 0;
  std::uint64_t total_tokens = 0;
  double mean_doc_length_tokens = 0.0;
  double mean_doc_length_chars = 0.0;
};

CorpusStats compute_stats(std::span<const std::string> texts);

}  // namespace relpol::stats
