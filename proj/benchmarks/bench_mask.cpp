#include <benchmark/benchmark.h>

#include <vector>

#include "relpol/adapt.hpp"
#include "relpol/rng.hpp"

namespace {

void BM_MlmMask(benchmark::State& state) {
  relpol::Rng rng(5);
  std::vector<std::vector<std::uint32_t>> sequences(128);
  for (auto& seq : sequences) {
    seq.resize(512);
    for (auto& id : seq) {
      id = 5 + static_cast<std::uint32_t>(rng.uniform_int(29995));
    }
  }
  relpol::adapt::MaskingConfig config;
  config.mask_prob = state.range(0) / 100.0;
  config.vocab_size = 30000;
  config.mask_token_id = 4;
  config.special_token_ids = {0, 1, 2, 3};
  for (auto _ : state) {
    benchmark::DoNotOptimize(relpol::adapt::mlm_mask(sequences, config));
  }
  state.SetItemsProcessed(state.iterations() * 128 * 512);
}
BENCHMARK(BM_MlmMask)->Arg(15)->Arg(30);

}  // namespace
