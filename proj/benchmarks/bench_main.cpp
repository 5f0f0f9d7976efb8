#include <benchmark/benchmark.h>

#include "cmsm/cmsm.hpp"

using namespace cmsm;

namespace {

DatasetRecord const &record() {
  static DatasetRecord const r = simulate_record(SimulationSpec{}, 1, 0);
  return r;
}

Model<float> const &model() {
  static Model<float> const m(ModelSpec::defaults(4), 7);
  return m;
}

void BM_Fft2(benchmark::State &state) {
  int const n = static_cast<int>(state.range(0));
  Image<double> img(n, n);
  Rng rng(1);
  for (auto &v : img.data) v = rng.complex_normal(1.0);
  for (auto _ : state) benchmark::DoNotOptimize(fft2_unitary(img));
}
BENCHMARK(BM_Fft2)->Arg(32)->Arg(64)->Arg(256);

void BM_ForwardAdjoint(benchmark::State &state) {
  auto const &r = record();
  for (auto _ : state) {
    auto const y = apply_forward(r.ground_truth, r.true_maps, r.mask);
    benchmark::DoNotOptimize(apply_adjoint(y, r.true_maps));
  }
}
BENCHMARK(BM_ForwardAdjoint);

void BM_DenoiserForward(benchmark::State &state) {
  auto const &r = record();
  for (auto _ : state) benchmark::DoNotOptimize(denoiser_forward(r.ground_truth, 0.5f, model()));
}
BENCHMARK(BM_DenoiserForward);

void BM_TrainingStep(benchmark::State &state) {
  Model<float> m = model();
  TrainingView const view(record());
  auto const s_t = perturb(view.s(), 0.5, 3);
  LossTape<float> tape;
  for (auto _ : state) {
    m.params().zero_grad();
    benchmark::DoNotOptimize(total_loss(view.s(), view.s_acs(), s_t, 0.5f, m, 1000.0, &tape));
    backward(tape, m);
  }
}
BENCHMARK(BM_TrainingStep);

void BM_SamplerStep(benchmark::State &state) {
  auto const &r = record();
  auto const y = restrict(r.z, make_mask(32, 32, 4.0, r.mask.acs_width, 9));
  SamplerConfig config;
  config.steps = 2;
  for (auto _ : state) benchmark::DoNotOptimize(reconstruct(y, model(), config));
  state.SetItemsProcessed(state.iterations() * config.steps);
}
BENCHMARK(BM_SamplerStep)->Unit(benchmark::kMillisecond);

void BM_TvReconstruct(benchmark::State &state) {
  auto const &r = record();
  auto const y = cast<double>(restrict(r.z, make_mask(32, 32, 4.0, r.mask.acs_width, 9)));
  auto const maps = cast<double>(r.true_maps);
  for (auto _ : state) benchmark::DoNotOptimize(tv_reconstruct(y, maps));
}
BENCHMARK(BM_TvReconstruct)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
