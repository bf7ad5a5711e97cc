#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "relpol/corpus.hpp"

namespace relpol::normalize {

enum class CasingMode { cased, lowercased };

// The ordered rewrite pipeline. Rule order is fixed and versioned; the only
// configurable parts are the casing mode and the pooled railway handle list.
struct RuleSet {
  std::string version = "v1";
  CasingMode casing_mode = CasingMode::cased;
  // Handles pooled into "dbusername" (matched case-insensitively).
  std::vector<std::string> db_handles = {"DB_Bahn", "Bahnansagen", "Bahn_Info"};

  std::string id() const;  // version plus casing, recorded in trained models
};

// Tokens a rule may emit. Closed set; rules never re-match their own output.
const std::vector<std::string>& replacement_tokens();

// Applies, in order: URL replacement; emoticon classes; handle pooling;
// hashtag mark stripping; S-Bahn variants; money/date/time/number tokens;
// punctuation-run tokens; punctuation deletion; emoji and symbol deletion;
// whitespace collapsing; optional lowercase fold. Total on any UTF-8 input.
std::string normalize(const std::string& text, const RuleSet& rules);

// normalize() applied to every document text; labels and order preserved.
corpus::LabeledDataset normalize_dataset(const corpus::LabeledDataset& dataset,
                                         const RuleSet& rules);

// Human-readable rules file (one rule per line: class, pattern, replacement)
// so golden tests can pin the exact version.
void write_rules(const RuleSet& rules, std::ostream& out);
RuleSet read_rules(std::istream& in);

}  // namespace relpol::normalize
