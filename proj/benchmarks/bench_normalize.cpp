#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "relpol/normalize.hpp"

namespace {

const std::vector<std::string>& sample_texts() {
  static const std::vector<std::string> texts = {
      "@nordschaf theoretisch kannste dir überall im Kölner Stadtbereich was "
      "suchen. Mit der KVB + S-Bahn kommt man überall fix hin.",
      "Warum schon wieder Verspätung??? http://t.co/x @DB_Bahn #bahn :(",
      "Treffen am 01.05.2017 um 10:30 für 9,99 € am Gleis 7!!",
      "Super Tag :) mit der S-Bahn nach Köln, danke @Bahnansagen 🚆",
      "RT @wer_auch_immer: checkt www.bahn.de/news ... einfach toll XD",
  };
  return texts;
}

void BM_Normalize(benchmark::State& state) {
  relpol::normalize::RuleSet rules;
  rules.casing_mode = state.range(0) == 1
                          ? relpol::normalize::CasingMode::lowercased
                          : relpol::normalize::CasingMode::cased;
  const auto& texts = sample_texts();
  std::size_t bytes = 0;
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& text = texts[i++ % texts.size()];
    benchmark::DoNotOptimize(relpol::normalize::normalize(text, rules));
    bytes += text.size();
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(bytes));
}
BENCHMARK(BM_Normalize)->Arg(0)->Arg(1);

}  // namespace
