#include <benchmark/benchmark.h>

#include "vdn/datasets.hpp"
#include "vdn/trainer.hpp"

namespace {

vdn::ModelConfig bench_model_config(std::size_t input_dim) {
  vdn::ModelConfig cfg;
  cfg.input_dim = input_dim;
  cfg.zc_dim = 8;
  cfg.zd_dim = 4;
  cfg.hidden = 64;
  cfg.critic_hidden = 64;
  cfg.ep_dim = 32;
  cfg.class_count = 4;
  cfg.domain_count = 4;
  return cfg;
}

void BM_TrainStep(benchmark::State& state) {
  const std::size_t hw = static_cast<std::size_t>(state.range(0));
  vdn::DomainSpec spec = vdn::default_domain_spec(4, 4, hw, 42);
  vdn::Rng rng(1);
  vdn::Dataset data = vdn::gen_multidomain(spec, 32, rng);
  vdn::VdnModel model(bench_model_config(data.feature_dim), 7);
  vdn::TrainConfig cfg;
  cfg.batch_size = 32;
  vdn::Trainer trainer(model, cfg);

  std::vector<std::size_t> idx(32);
  for (std::size_t i = 0; i < 32; ++i) idx[i] = i * 4 % data.size();
  vdn::Batch batch{vdn::examples_tensor(data, idx), vdn::labels_of(data, idx),
                   vdn::domains_of(data, idx)};
  std::size_t step = 0;
  for (auto _ : state) {
    trainer.train_step(batch, ++step);
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_TrainStep)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_GenMultidomain(benchmark::State& state) {
  vdn::DomainSpec spec = vdn::default_domain_spec(4, 4, 12, 42);
  for (auto _ : state) {
    vdn::Rng rng(static_cast<std::uint64_t>(state.iterations()));
    benchmark::DoNotOptimize(vdn::gen_multidomain(spec, 16, rng).examples.data());
  }
}
BENCHMARK(BM_GenMultidomain)->Unit(benchmark::kMillisecond);

}  // namespace
