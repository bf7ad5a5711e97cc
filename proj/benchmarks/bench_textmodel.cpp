#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "relpol/corpus.hpp"
#include "relpol/normalize.hpp"
#include "relpol/rng.hpp"
#include "relpol/textmodel.hpp"

namespace {

using namespace relpol;

corpus::LabeledDataset synthetic(std::size_t n_docs) {
  Rng rng(7);
  const std::vector<std::string> words = {
      "zug",   "bahn",  "gleis", "halt",   "info",  "spät",
      "toll",  "super", "warte", "ticket", "fährt", "heute"};
  corpus::LabeledDataset dataset;
  for (std::size_t i = 0; i < n_docs; ++i) {
    corpus::Document doc;
    doc.id = "http://bench/" + std::to_string(i);
    doc.relevance = rng.bernoulli(0.8);
    std::string text = "d" + std::to_string(i);
    const std::size_t len = 6 + rng.uniform_int(10);
    for (std::size_t j = 0; j < len; ++j) {
      text += ' ';
      text += words[rng.uniform_int(words.size())];
    }
    doc.text = std::move(text);
    dataset.documents.push_back(std::move(doc));
  }
  return dataset;
}

void BM_TrainSupervisedEpoch(benchmark::State& state) {
  const auto dataset = synthetic(static_cast<std::size_t>(state.range(0)));
  textmodel::TrainConfig config;
  config.dim = 50;
  config.epochs = 1;
  config.word_ngrams = 4;
  config.bucket_count = 100'000;
  const normalize::RuleSet rules;
  for (auto _ : state) {
    benchmark::DoNotOptimize(textmodel::train_supervised(
        dataset, corpus::Task::relevance, config, rules));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrainSupervisedEpoch)->Arg(500)->Arg(2000);

void BM_Predict(benchmark::State& state) {
  const auto dataset = synthetic(500);
  textmodel::TrainConfig config;
  config.dim = 50;
  config.epochs = 3;
  config.bucket_count = 100'000;
  const normalize::RuleSet rules;
  const auto model = textmodel::train_supervised(dataset,
                                                 corpus::Task::relevance,
                                                 config, rules);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& text = dataset.documents[i++ % dataset.documents.size()].text;
    benchmark::DoNotOptimize(textmodel::predict(model, text, 1));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Predict);

void BM_TrainUnsupervisedEpoch(benchmark::State& state) {
  Rng rng(11);
  const std::vector<std::string> words = {"zug",  "bahn", "gleis", "halt",
                                          "info", "spät", "toll",  "super"};
  std::vector<std::string> lines;
  for (int i = 0; i < 500; ++i) {
    std::string line;
    for (int j = 0; j < 12; ++j) {
      if (j) line += ' ';
      line += words[rng.uniform_int(words.size())];
    }
    lines.push_back(std::move(line));
  }
  textmodel::UnsupervisedConfig config;
  config.dim = 50;
  config.epochs = 1;
  config.min_count = 1;
  config.objective = state.range(0) == 0
                         ? textmodel::UnsupervisedObjective::skipgram
                         : textmodel::UnsupervisedObjective::cbow;
  for (auto _ : state) {
    benchmark::DoNotOptimize(textmodel::train_unsupervised(lines, config));
  }
  state.SetItemsProcessed(state.iterations() * 500 * 12);
}
BENCHMARK(BM_TrainUnsupervisedEpoch)->Arg(0)->Arg(1);

}  // namespace

BENCHMARK_MAIN();
