#include <benchmark/benchmark.h>

#include <cstddef>
#include <vector>

#include "hgl/cvm.hpp"
#include "hgl/generator.hpp"
#include "hgl/model.hpp"
#include "hgl/ops.hpp"
#include "hgl/rng.hpp"
#include "hgl/tape.hpp"
#include "hgl/trainer.hpp"

namespace {

using namespace hgl;

Tensor uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return Tensor({rows, cols}, std::move(v));
}

/// First problem of a reference-sized scene with `positions` grid cells.
Instance reference_instance(std::size_t side) {
  GeneratorConfig g;
  g.instances = 2;
  g.grid_rows = side;
  g.grid_cols = side;
  return generate(g).instances.front();
}

Model reference_model(const Instance& inst, std::size_t dim) {
  TrainConfig c;
  c.dim = dim;
  return Model(c.model(32, inst.scene.cols()), 1);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = uniform(n, n, rng), b = uniform(n, n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(16)->Arg(32)->Arg(64);

void BM_CvmForward(benchmark::State& state) {
  const auto positions = static_cast<std::size_t>(state.range(0));
  ParameterStore store;
  Rng rng(2);
  const CvmWeights w = register_cvm(store, "cvm", 20, Activation::kRelu, rng);
  const Tensor x = uniform(positions, 20, rng);
  for (auto _ : state) {
    Tape t;
    benchmark::DoNotOptimize(cvm_forward(t.constant(x), store, w).features.value());
  }
}
BENCHMARK(BM_CvmForward)->Arg(16)->Arg(36)->Arg(64);

void BM_CvmForwardBackward(benchmark::State& state) {
  const auto positions = static_cast<std::size_t>(state.range(0));
  ParameterStore store;
  Rng rng(3);
  const CvmWeights w = register_cvm(store, "cvm", 20, Activation::kRelu, rng);
  store.add("x", uniform(positions, 20, rng));
  for (auto _ : state) {
    store.zero_grad();
    Tape t;
    Var loss = sum(cvm_forward(t.parameter(store, "x"), store, w).features);
    t.backward(loss);
    t.accumulate_gradients(store);
  }
}
BENCHMARK(BM_CvmForwardBackward)->Arg(16)->Arg(36)->Arg(64);

void BM_ModelPredict(benchmark::State& state) {
  const Instance inst = reference_instance(6);
  const Model m = reference_model(inst, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(m.predict(inst));
}
BENCHMARK(BM_ModelPredict)->Arg(16)->Arg(32)->Arg(64);

void BM_ModelTrainStep(benchmark::State& state) {
  const Instance inst = reference_instance(6);
  Model m = reference_model(inst, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    m.params().zero_grad();
    Tape t;
    const ForwardPass pass = m.forward(t, inst);
    Var l = loss(pass.logits, inst.gold);
    t.backward(l);
    t.accumulate_gradients(m.params());
  }
}
BENCHMARK(BM_ModelTrainStep)->Arg(16)->Arg(32)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
