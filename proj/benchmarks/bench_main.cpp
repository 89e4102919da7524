#include <benchmark/benchmark.h>

#include "sqzt/baselines.hpp"
#include "sqzt/fock.hpp"
#include "sqzt/homodyne.hpp"
#include "sqzt/nn/model.hpp"
#include "sqzt/nn/train.hpp"

using namespace sqzt;

namespace {

void BM_SqueezedThermalState(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const SqueezedThermalParams p(0.8, 0.4, 0.2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(squeezed_thermal_state(p, m, 2 * m, 0.9));
  }
}
BENCHMARK(BM_SqueezedThermalState)->Arg(20)->Arg(35)->Arg(70);

void BM_QuadraturePdfGrid(benchmark::State& state) {
  const auto rho = squeezed_thermal_state(SqueezedThermalParams(0.8, 0.4, 0.2), 35, 70);
  RVector xs(1001);
  for (int i = 0; i < 1001; ++i) xs(i) = -10.0 + 0.02 * i;
  for (auto _ : state) {
    benchmark::DoNotOptimize(quadrature_pdf_grid(rho, 0.7, xs));
  }
}
BENCHMARK(BM_QuadraturePdfGrid);

void BM_SampleScan(benchmark::State& state) {
  const SqueezedThermalParams p(1.0, 1.3, 0.3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        sample_scan(p, static_cast<int>(state.range(0)), PhaseMode::kUniformRandomSorted, 7));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleScan)->Arg(4096)->Arg(65536);

void BM_Fidelity(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const auto a = squeezed_thermal_state(SqueezedThermalParams(0.5, 0.7, 0.1), m, 2 * m, 0.9);
  const auto b = squeezed_thermal_state(SqueezedThermalParams(0.6, 0.9, 0.2), m, 2 * m, 0.9);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fidelity(a, b));
  }
}
BENCHMARK(BM_Fidelity)->Arg(15)->Arg(35);

void BM_MleIterations(benchmark::State& state) {
  const auto scan = sample_scan(SqueezedThermalParams(0.5, 0.7, 0.1), 4096,
                                PhaseMode::kUniformRandomSorted, 3);
  MleConfig cfg;
  cfg.m = 15;
  cfg.max_iter = static_cast<int>(state.range(0));
  cfg.tol = 0.0;  // run the full budget
  for (auto _ : state) {
    benchmark::DoNotOptimize(mle_reconstruct(scan, cfg));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MleIterations)->Arg(50);

void BM_ForwardDeskModel(benchmark::State& state) {
  nn::CnnConfig cfg;
  cfg.input_len = 1024;
  cfg.width_scale = 0.25;
  const auto model = nn::build_model<float>(cfg, 1);
  Rng rng(5);
  std::vector<float> vals(cfg.input_len);
  for (auto& v : vals) v = static_cast<float>(rng.gaussian());
  const auto input = nn::make_input<float>(cfg, vals, {});
  nn::Workspace<float> ws;
  for (auto _ : state) {
    benchmark::DoNotOptimize(nn::forward(model, input, ws));
  }
}
BENCHMARK(BM_ForwardDeskModel);

void BM_TrainStep(benchmark::State& state) {
  nn::CnnConfig cfg;
  cfg.input_len = 1024;
  cfg.width_scale = 0.25;
  const auto model = nn::build_model<float>(cfg, 1);
  Rng rng(5);
  std::vector<float> vals(cfg.input_len);
  for (auto& v : vals) v = static_cast<float>(rng.gaussian());
  const auto input = nn::make_input<float>(cfg, vals, {});
  nn::Workspace<float> ws;
  nn::Vec<float> grad = nn::Vec<float>::Zero(model.plan.param_count);
  nn::Vec<float> dout = nn::Vec<float>::Constant(4, 0.1f);
  for (auto _ : state) {
    benchmark::DoNotOptimize(nn::forward(model, input, ws));
    nn::backward(model, dout, ws, grad);
    benchmark::DoNotOptimize(grad);
  }
}
BENCHMARK(BM_TrainStep);

}  // namespace

BENCHMARK_MAIN();
