#include "relpol/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "relpol/errors.hpp"
#include "relpol/rng.hpp"

namespace relpol::corpus {

const char* to_string(Sentiment s) {
  switch (s) {
    case Sentiment::neutral:
      return "neutral";
    case Sentiment::negative:
      return "negative";
    case Sentiment::positive:
      return "positive";
  }
  return "?";
}

Sentiment sentiment_from_string(const std::string& s) {
  if (s == "neutral") return Sentiment::neutral;
  if (s == "negative") return Sentiment::negative;
  if (s == "positive") return Sentiment::positive;
  throw DataError("unknown sentiment literal: \"" + s + "\"");
}

const char* to_string(Split s) {
  switch (s) {
    case Split::training:
      return "training";
    case Split::development:
      return "development";
    case Split::test_syn:
      return "test_syn";
    case Split::test_dia:
      return "test_dia";
    case Split::custom:
      return "custom";
  }
  return "?";
}

const char* to_string(Task t) {
  return t == Task::relevance ? "relevance" : "sentiment";
}

Task task_from_string(const std::string& s) {
  if (s == "relevance") return Task::relevance;
  if (s == "sentiment") return Task::sentiment;
  throw DataError("unknown task: \"" + s + "\"");
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

bool looks_like_url(const std::string& s) {
  return s.starts_with("http://") || s.starts_with("https://");
}

bool is_whitespace_only(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' ||
           c == '\v';
  });
}

// Parses one record; throws DataError with a line-local message.
Document parse_record(const std::vector<std::string>& fields) {
  if (fields.size() != 4) {
    throw DataError("expected 4 tab-separated fields, got " +
                    std::to_string(fields.size()));
  }
  Document doc;
  doc.id = fields[0];
  doc.text = fields[1];
  if (doc.id.empty()) throw DataError("empty document id");
  const std::string& rel = fields[2];
  if (!rel.empty()) {
    if (rel == "true")
      doc.relevance = true;
    else if (rel == "false")
      doc.relevance = false;
    else
      throw DataError("unknown relevance literal: \"" + rel + "\"");
  }
  const std::string& sent = fields[3];
  if (!sent.empty()) doc.sentiment = sentiment_from_string(sent);
  return doc;
}

}  // namespace

LabeledDataset parse_tsv(std::istream& in, ParseMode mode,
                         std::vector<ParseIssue>* issues, Split split) {
  LabeledDataset dataset;
  dataset.split_name = split;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (mode == ParseMode::lenient && line_no == 1 && !fields.empty() &&
        !looks_like_url(fields[0])) {
      continue;  // header line
    }
    try {
      dataset.documents.push_back(parse_record(fields));
    } catch (const DataError& e) {
      if (mode == ParseMode::strict) {
        throw DataError("line " + std::to_string(line_no) + ": " + e.what());
      }
      if (issues) issues->push_back({line_no, e.what()});
    }
  }
  return dataset;
}

LabeledDataset parse_tsv_file(const std::string& path, ParseMode mode,
                              std::vector<ParseIssue>* issues, Split split) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open TSV file: " + path);
  return parse_tsv(in, mode, issues, split);
}

void write_tsv(const LabeledDataset& dataset, std::ostream& out) {
  for (const auto& doc : dataset.documents) {
    out << doc.id << '\t' << doc.text << '\t';
    if (doc.relevance) out << (*doc.relevance ? "true" : "false");
    out << '\t';
    if (doc.sentiment) out << to_string(*doc.sentiment);
    out << '\n';
  }
}

LabeledDataset clean(const LabeledDataset& dataset) {
  LabeledDataset result;
  result.split_name = dataset.split_name;
  std::unordered_set<std::string> seen;
  for (const auto& doc : dataset.documents) {
    if (doc.text.empty() || is_whitespace_only(doc.text)) continue;
    if (!seen.insert(doc.text).second) continue;
    result.documents.push_back(doc);
  }
  return result;
}

std::string label_of(const Document& doc, Task task) {
  if (task == Task::relevance) {
    if (!doc.relevance) {
      throw DataError("document " + doc.id + " has no relevance label");
    }
    return *doc.relevance ? "true" : "false";
  }
  if (!doc.sentiment) {
    throw DataError("document " + doc.id + " has no sentiment label");
  }
  return to_string(*doc.sentiment);
}

std::map<std::string, std::size_t> class_distribution(
    const LabeledDataset& dataset, Task task) {
  std::map<std::string, std::size_t> counts;
  if (task == Task::relevance) {
    counts = {{"true", 0}, {"false", 0}};
  } else {
    counts = {{"neutral", 0}, {"negative", 0}, {"positive", 0}};
  }
  for (const auto& doc : dataset.documents) ++counts[label_of(doc, task)];
  return counts;
}

std::vector<Fold> stratified_kfold(const LabeledDataset& dataset, int k,
                                   Task label, std::uint64_t seed) {
  if (k < 2) throw DataError("stratified_kfold: k must be >= 2");
  // Group indices by class in first-occurrence order.
  std::vector<std::string> class_order;
  std::unordered_map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < dataset.documents.size(); ++i) {
    const std::string lab = label_of(dataset.documents[i], label);
    auto [it, inserted] = by_class.try_emplace(lab);
    if (inserted) class_order.push_back(lab);
    it->second.push_back(i);
  }
  for (const auto& lab : class_order) {
    if (by_class[lab].size() < static_cast<std::size_t>(k)) {
      throw DataError("class \"" + lab + "\" has " +
                      std::to_string(by_class[lab].size()) +
                      " members, fewer than k=" + std::to_string(k));
    }
  }

  // Shuffle within each class, then deal round-robin with one running fold
  // counter across classes. The running counter keeps fold totals as even as
  // the class remainders allow.
  Rng rng(seed);
  std::vector<std::size_t> fold_of(dataset.documents.size());
  std::size_t next_fold = 0;
  for (const auto& lab : class_order) {
    auto& indices = by_class[lab];
    rng.shuffle(indices);
    for (const std::size_t idx : indices) {
      fold_of[idx] = next_fold;
      next_fold = (next_fold + 1) % static_cast<std::size_t>(k);
    }
  }

  std::vector<Fold> folds(static_cast<std::size_t>(k));
  for (auto& fold : folds) {
    fold.train.split_name = Split::custom;
    fold.validation.split_name = Split::custom;
  }
  for (std::size_t i = 0; i < dataset.documents.size(); ++i) {
    for (std::size_t f = 0; f < folds.size(); ++f) {
      auto& target = (fold_of[i] == f) ? folds[f].validation : folds[f].train;
      target.documents.push_back(dataset.documents[i]);
    }
  }
  return folds;
}

UnlabeledCorpus subsample(const UnlabeledCorpus& corpus, std::size_t n,
                          std::uint64_t seed) {
  UnlabeledCorpus result;
  result.source_tag = corpus.source_tag;
  if (n >= corpus.lines.size()) {
    result.lines = corpus.lines;
    return result;
  }
  std::vector<std::size_t> indices(corpus.lines.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  Rng rng(seed);
  // Partial Fisher-Yates: the first n slots are the sample.
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(
                                  rng.uniform_int(indices.size() - i));
    std::swap(indices[i], indices[j]);
  }
  indices.resize(n);
  std::sort(indices.begin(), indices.end());
  result.lines.reserve(n);
  for (const std::size_t idx : indices) result.lines.push_back(corpus.lines[idx]);
  return result;
}

UnlabeledCorpus read_lines_file(const std::string& path,
                                const std::string& source_tag) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path);
  UnlabeledCorpus corpus;
  corpus.source_tag = source_tag.empty() ? path : source_tag;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    corpus.lines.push_back(line);
  }
  return corpus;
}

}  // namespace relpol::corpus
