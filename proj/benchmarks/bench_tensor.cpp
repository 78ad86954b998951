#include <benchmark/benchmark.h>

#include "vdn/rng.hpp"
#include "vdn/tensor.hpp"

namespace {

vdn::Tensor random_tensor(vdn::Shape shape, vdn::Rng& rng, bool grad = false) {
  return vdn::Tensor::from_data(shape, rng.normal_vec(vdn::shape_size(shape)), grad);
}

void BM_MatmulForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  vdn::Rng rng(1);
  vdn::Tensor a = random_tensor({64, n}, rng);
  vdn::Tensor b = random_tensor({n, 64}, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(vdn::matmul(a, b).data().data());
  }
  state.SetItemsProcessed(state.iterations() * 64 * n * 64);
}
BENCHMARK(BM_MatmulForward)->Arg(64)->Arg(256)->Arg(432);

void BM_MlpBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  vdn::Rng rng(2);
  vdn::Tensor w1 = random_tensor({n, 64}, rng, true);
  vdn::Tensor b1 = random_tensor({64}, rng, true);
  vdn::Tensor w2 = random_tensor({64, 8}, rng, true);
  vdn::Tensor x = random_tensor({64, n}, rng);
  for (auto _ : state) {
    for (auto p : {w1, b1, w2}) p.zero_grad();
    vdn::Tensor loss =
        vdn::mean(vdn::square(vdn::matmul(vdn::relu(vdn::add(vdn::matmul(x, w1), b1)), w2)));
    loss.backward();
    benchmark::DoNotOptimize(w1.grad().data());
  }
}
BENCHMARK(BM_MlpBackward)->Arg(128)->Arg(432);

void BM_SoftmaxCrossEntropy(benchmark::State& state) {
  vdn::Rng rng(3);
  vdn::Tensor logits = random_tensor({128, 10}, rng, true);
  std::vector<int> labels(128);
  for (auto& y : labels) y = static_cast<int>(rng.uniform_index(10));
  for (auto _ : state) {
    logits.zero_grad();
    vdn::Tensor loss = vdn::softmax_cross_entropy(logits, labels);
    loss.backward();
    benchmark::DoNotOptimize(logits.grad().data());
  }
}
BENCHMARK(BM_SoftmaxCrossEntropy);

}  // namespace

BENCHMARK_MAIN();
