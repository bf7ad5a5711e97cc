#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace relpol::corpus {

enum class Sentiment { neutral, negative, positive };

const char* to_string(Sentiment s);
Sentiment sentiment_from_string(const std::string& s);

// One feedback text plus its labels; the unit of all splits and metrics.
struct Document {
  std::string id;  // URL
  std::string text;
  std::optional<bool> relevance;
  std::optional<Sentiment> sentiment;

  bool operator==(const Document&) const = default;
};

enum class Split { training, development, test_syn, test_dia, custom };

const char* to_string(Split s);

struct LabeledDataset {
  std::vector<Document> documents;
  Split split_name = Split::custom;

  std::size_t size() const { return documents.size(); }
  bool operator==(const LabeledDataset&) const = default;
};

struct UnlabeledCorpus {
  std::vector<std::string> lines;
  std::string source_tag;

  std::size_t size() const { return lines.size(); }
};

enum class Task { relevance, sentiment };

const char* to_string(Task t);
Task task_from_string(const std::string& s);

enum class ParseMode { strict, lenient };

struct ParseIssue {
  std::size_t line;  // 1-based
  std::string message;
};

// Reads the tab-separated schema: id, text, relevance, sentiment. Relevance
// and sentiment columns may be empty (label absent). In strict mode the first
// malformed record throws DataError naming the line; in lenient mode bad
// records are skipped and reported through `issues`, and a leading header
// line whose first field is not a URL is ignored.
LabeledDataset parse_tsv(std::istream& in, ParseMode mode = ParseMode::strict,
                         std::vector<ParseIssue>* issues = nullptr,
                         Split split = Split::custom);
LabeledDataset parse_tsv_file(const std::string& path,
                              ParseMode mode = ParseMode::strict,
                              std::vector<ParseIssue>* issues = nullptr,
                              Split split = Split::custom);

// Writes the same schema back; absent labels become empty columns.
void write_tsv(const LabeledDataset& dataset, std::ostream& out);

// Removes duplicate texts (keeping the first occurrence) and documents whose
// text is empty or whitespace-only. Order is otherwise preserved. Idempotent.
LabeledDataset clean(const LabeledDataset& dataset);

// Per-class counts for the requested task. Every document must carry the
// label, otherwise DataError. Keys follow the canonical label order.
std::map<std::string, std::size_t> class_distribution(
    const LabeledDataset& dataset, Task task);

struct Fold {
  LabeledDataset train;
  LabeledDataset validation;
};

// Stratified k-fold split: indices are shuffled within each class with a
// seeded generator and dealt round-robin with one running fold counter across
// classes, so validation folds partition the dataset, per-class counts across
// folds differ by at most one, and fold sizes stay as even as the class
// remainders allow. Throws DataError when any class has fewer than k members.
std::vector<Fold> stratified_kfold(const LabeledDataset& dataset, int k,
                                   Task label, std::uint64_t seed);

// min(n, |corpus|) lines sampled without replacement, original order kept.
UnlabeledCorpus subsample(const UnlabeledCorpus& corpus, std::size_t n,
                          std::uint64_t seed);

UnlabeledCorpus read_lines_file(const std::string& path,
                                const std::string& source_tag = "");

// The string label a document carries for the given task ("true"/"false" or
// the sentiment name). DataError when absent.
std::string label_of(const Document& doc, Task task);

}  // namespace relpol::corpus
