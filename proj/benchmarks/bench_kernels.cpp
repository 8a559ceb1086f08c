// Microbenchmarks for the kernels that dominate training time. Sizes
// mirror the first two feature blocks at 64x64 input, where most of the
// arithmetic lives.

#include <benchmark/benchmark.h>

#include "statenet/augment.hpp"
#include "statenet/layers.hpp"
#include "statenet/rng.hpp"
#include "statenet/tensor.hpp"

using namespace statenet;

namespace {

Tensor random_tensor(std::vector<int> shape, uint64_t seed) {
  Rng rng(seed);
  Tensor t(std::move(shape));
  for (auto& v : t.data) v = rng.uniform(-1.f, 1.f);
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const int k = static_cast<int>(state.range(1));
  const int n = static_cast<int>(state.range(2));
  Tensor a = random_tensor({m, k}, 1);
  Tensor b = random_tensor({k, n}, 2);
  for (auto _ : state) {
    Tensor c = matmul(a, b);
    benchmark::DoNotOptimize(c.data.data());
  }
  state.SetItemsProcessed(state.iterations() * 2LL * m * k * n);
}

void BM_Im2col(benchmark::State& state) {
  const int hw = static_cast<int>(state.range(0));
  const int c = static_cast<int>(state.range(1));
  Tensor x = random_tensor({1, hw, hw, c}, 3);
  for (auto _ : state) {
    Tensor col = im2col(x, 3, 3, 1, 1);
    benchmark::DoNotOptimize(col.data.data());
  }
}

void BM_ConvForward(benchmark::State& state) {
  const int hw = static_cast<int>(state.range(0));
  const int cin = static_cast<int>(state.range(1));
  const int cout = static_cast<int>(state.range(2));
  Conv2D conv(cin, cout);
  Rng rng(4);
  conv.init_params(rng);
  Tensor x = random_tensor({1, hw, hw, cin}, 5);
  for (auto _ : state) {
    Tensor y = conv.forward(x, ForwardCtx{});
    benchmark::DoNotOptimize(y.data.data());
  }
  state.SetItemsProcessed(state.iterations() * 2LL * hw * hw * 9 * cin * cout);
}

void BM_ConvBackward(benchmark::State& state) {
  const int hw = static_cast<int>(state.range(0));
  const int cin = static_cast<int>(state.range(1));
  const int cout = static_cast<int>(state.range(2));
  Conv2D conv(cin, cout);
  Rng rng(6);
  conv.init_params(rng);
  Tensor x = random_tensor({1, hw, hw, cin}, 7);
  Tensor dy = random_tensor({1, hw, hw, cout}, 8);
  for (auto _ : state) {
    conv.forward(x, ForwardCtx{});
    Tensor dx = conv.backward(dy);
    benchmark::DoNotOptimize(dx.data.data());
  }
}

void BM_MaxPool(benchmark::State& state) {
  const int hw = static_cast<int>(state.range(0));
  const int c = static_cast<int>(state.range(1));
  MaxPool2D pool;
  Tensor x = random_tensor({1, hw, hw, c}, 9);
  for (auto _ : state) {
    Tensor y = pool.forward(x, ForwardCtx{});
    benchmark::DoNotOptimize(y.data.data());
  }
}

void BM_Augment(benchmark::State& state) {
  const int hw = static_cast<int>(state.range(0));
  Tensor img = random_tensor({hw, hw, 3}, 10);
  for (auto& v : img.data) v = (v + 1.f) * 127.f;
  AugmentConfig cfg;
  Rng rng(11);
  for (auto _ : state) {
    Tensor out = augment_image(img, cfg, rng, true);
    benchmark::DoNotOptimize(out.data.data());
  }
}

BENCHMARK(BM_Matmul)->Args({4096, 576, 64})->Args({1024, 1152, 128});
BENCHMARK(BM_Im2col)->Args({64, 64})->Args({32, 128});
BENCHMARK(BM_ConvForward)->Args({64, 3, 64})->Args({64, 64, 64})->Args({32, 64, 128});
BENCHMARK(BM_ConvBackward)->Args({64, 64, 64})->Args({32, 64, 128});
BENCHMARK(BM_MaxPool)->Args({64, 64})->Args({32, 128});
BENCHMARK(BM_Augment)->Args({64})->Args({150});

}  // namespace

BENCHMARK_MAIN();
