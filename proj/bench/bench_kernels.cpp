// Serial reference kernels against the OpenMP versions.
#include <benchmark/benchmark.h>

#include <random>

#include "qsv/kernels.hpp"
#include "qsv/model.hpp"
#include "qsv/quantization.hpp"

using namespace qsv;

namespace {

Tensor rand_tensor(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> v(shape_numel(shape));
  for (auto& x : v) x = u(rng);
  return Tensor(std::move(shape), std::move(v));
}

struct ConvCase {
  Tensor x, w, b;
  QuantizedTensor qx, qw;
  explicit ConvCase(std::size_t c, std::size_t t = 200)
      : x(rand_tensor({c, t}, 1)), w(rand_tensor({c, c, 3}, 2)), b(rand_tensor({c}, 3)) {
    qx = quantize(x, compute_params(-1.0, 1.0, Scheme::affine));
    qw = quantize_weight(w);
  }
};

template <bool Ref>
void BM_conv1d(benchmark::State& state) {
  const ConvCase c(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto y = Ref ? ref::conv1d(c.x, c.w, c.b, 2, Padding::same) : conv1d(c.x, c.w, c.b, 2, Padding::same);
    benchmark::DoNotOptimize(y);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.w.numel() * c.x.dim(1)));
}

template <bool Ref>
void BM_qconv1d(benchmark::State& state) {
  const ConvCase c(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto y = Ref ? ref::qconv1d(c.qx, c.qw, c.b, 2, Padding::same) : qconv1d(c.qx, c.qw, c.b, 2, Padding::same);
    benchmark::DoNotOptimize(y);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.w.numel() * c.x.dim(1)));
}

template <bool Ref>
void BM_qlinear(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto qx = quantize(rand_tensor({n}, 4), compute_params(-1.0, 1.0, Scheme::affine));
  const auto qw = quantize_weight(rand_tensor({n, n}, 5));
  const auto b = rand_tensor({n}, 6);
  for (auto _ : state) {
    auto y = Ref ? ref::qlinear(qx, qw, b) : qlinear(qx, qw, b);
    benchmark::DoNotOptimize(y);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

void BM_forward(benchmark::State& state) {
  const ModelConfig cfg;
  const auto w = init_model(cfg);
  const auto x = rand_tensor({cfg.feat_dim, 100}, 7);
  std::map<LayerName, QuantParams> act;
  for (auto l : kAllLayers) act[l] = compute_params(-8.0, 8.0, Scheme::affine);
  const auto ctx = prepare_quant(w, state.range(0) ? QuantConfig::all() : QuantConfig{}, act);
  for (auto _ : state) {
    auto e = forward(w, cfg, x, &ctx);
    benchmark::DoNotOptimize(e);
  }
}

}  // namespace

BENCHMARK(BM_conv1d<true>)->Name("conv1d/ref")->Arg(32)->Arg(128)->Arg(512);
BENCHMARK(BM_conv1d<false>)->Name("conv1d/omp")->Arg(32)->Arg(128)->Arg(512);
BENCHMARK(BM_qconv1d<true>)->Name("qconv1d/ref")->Arg(32)->Arg(128)->Arg(512);
BENCHMARK(BM_qconv1d<false>)->Name("qconv1d/omp")->Arg(32)->Arg(128)->Arg(512);
BENCHMARK(BM_qlinear<true>)->Name("qlinear/ref")->Arg(256)->Arg(2048);
BENCHMARK(BM_qlinear<false>)->Name("qlinear/omp")->Arg(256)->Arg(2048);
BENCHMARK(BM_forward)->Name("forward/float")->Arg(0);
BENCHMARK(BM_forward)->Name("forward/int8")->Arg(1);

BENCHMARK_MAIN();
