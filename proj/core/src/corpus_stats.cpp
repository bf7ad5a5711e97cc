#include "relpol/corpus_stats.hpp"

#include <unordered_set>

#include "relpol/textmodel.hpp"

namespace relpol::stats {

namespace {

std::size_t codepoint_count(const std::string& s) {
  std::size_t n = 0;
  for (const char c : s) {
    if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
  }
  return n;
}

}  // namespace

CorpusStats compute_stats(std::span<const std::string> texts) {
  CorpusStats result;
  std::unordered_set<std::string> unigrams, bigrams, trigrams;
  std::uint64_t total_chars = 0;
  std::string joined;
  for (const auto& text : texts) {
    ++result.doc_count;
    total_chars += codepoint_count(text);
    const auto tokens = textmodel::split_tokens(text);
    result.total_tokens += tokens.size();
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      unigrams.emplace(tokens[i]);
      if (i + 1 < tokens.size()) {
        joined.assign(tokens[i]);
        joined += ' ';
        joined += tokens[i + 1];
        bigrams.insert(joined);
        if (i + 2 < tokens.size()) {
          joined += ' ';
          joined += tokens[i + 2];
          trigrams.insert(joined);
        }
      }
    }
  }
  result.unique_unigrams = unigrams.size();
  result.unique_bigrams = bigrams.size();
  result.unique_trigrams = trigrams.size();
  if (result.doc_count > 0) {
    result.mean_doc_length_tokens =
        static_cast<double>(result.total_tokens) /
        static_cast<double>(result.doc_count);
    result.mean_doc_length_chars = static_cast<double>(total_chars) /
                                   static_cast<double>(result.doc_count);
  }
  return result;
}

}  // namespace relpol::stats
