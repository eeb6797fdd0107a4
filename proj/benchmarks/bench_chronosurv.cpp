// Microbenchmarks for the hot paths: collage construction, encoder
// forward/backward, and the survival statistics.
//
//   ./build/benchmarks/chronosurv_bench [--benchmark_filter=...]

#include <benchmark/benchmark.h>

#include <vector>

#include "chronosurv/cohort.hpp"
#include "chronosurv/model.hpp"
#include "chronosurv/projection.hpp"
#include "chronosurv/rng.hpp"
#include "chronosurv/sampling.hpp"
#include "chronosurv/stratify.hpp"
#include "chronosurv/survstats.hpp"

using namespace chronosurv;

namespace {

CohortConfig bench_cohort_config() {
  CohortConfig cc;
  cc.n = 4;
  cc.vol_nx = 36;
  cc.vol_ny = 36;
  cc.vol_nz = 48;
  cc.beta_tmtv = 2.0;
  cc.lambda0 = 2.5e-4;
  return cc;
}

ModelConfig desk_model_config() {
  ModelConfig cfg;
  cfg.stem_pool = 4;
  cfg.conv_widths = {8, 16, 32};
  cfg.embed_dim = 32;
  cfg.temporal_hidden = 16;
  cfg.classifier_hidden = 16;
  return cfg;
}

const VolumeSet& bench_volume() {
  static const CohortDataset cohort = generate_cohort(bench_cohort_config(), 42);
  return cohort.volumes.begin()->second;
}

const Tensor3& bench_input() {
  static const Tensor3 input = normalize_collage(build_collage(bench_volume()));
  return input;
}

}  // namespace

static void BM_build_collage(benchmark::State& state) {
  const VolumeSet& vs = bench_volume();
  for (auto _ : state) {
    const ProjectionCollage collage = build_collage(vs);
    benchmark::DoNotOptimize(collage.channels.v.data());
  }
}
BENCHMARK(BM_build_collage)->Unit(benchmark::kMillisecond);

static void BM_normalize_collage(benchmark::State& state) {
  const ProjectionCollage collage = build_collage(bench_volume());
  for (auto _ : state) {
    const Tensor3 norm = normalize_collage(collage);
    benchmark::DoNotOptimize(norm.v.data());
  }
}
BENCHMARK(BM_normalize_collage)->Unit(benchmark::kMillisecond);

static void BM_encoder_forward(benchmark::State& state) {
  const ModelConfig cfg = desk_model_config();
  ModelParams params = make_params(cfg);
  Rng rng(7);
  init_params(params, rng);
  ModelInput input;
  input.image = &bench_input();
  for (auto _ : state) {
    const EncoderCache ec = encode_forward(params, input);
    benchmark::DoNotOptimize(ec.emb.data());
  }
}
BENCHMARK(BM_encoder_forward)->Unit(benchmark::kMillisecond);

static void BM_forward_backward(benchmark::State& state) {
  const ModelConfig cfg = desk_model_config();
  ModelParams params = make_params(cfg);
  Rng rng(7);
  init_params(params, rng);
  ModelInput input;
  input.image = &bench_input();
  for (auto _ : state) {
    const ForwardResult fr = forward(params, input, 0.4);
    const GradientStore grads = backward(params, fr.cache, 1.0);
    benchmark::DoNotOptimize(grads.data());
  }
}
BENCHMARK(BM_forward_backward)->Unit(benchmark::kMillisecond);

static void BM_predict_curve(benchmark::State& state) {
  const ModelConfig cfg = desk_model_config();
  ModelParams params = make_params(cfg);
  Rng rng(7);
  init_params(params, rng);
  ModelInput input;
  input.image = &bench_input();
  const std::vector<int> grid = evaluation_grid();
  for (auto _ : state) {
    const SurvivalCurve curve = predict_curve(params, input, grid, true);
    benchmark::DoNotOptimize(curve.probs.data());
  }
}
BENCHMARK(BM_predict_curve)->Unit(benchmark::kMillisecond);

static void BM_km_fit(benchmark::State& state) {
  Rng rng(11);
  const int n = static_cast<int>(state.range(0));
  std::vector<double> times;
  std::vector<int> events;
  for (int i = 0; i < n; ++i) {
    times.push_back(rng.uniform(1.0, 1825.0));
    events.push_back(rng.bernoulli(0.5) ? 1 : 0);
  }
  for (auto _ : state) {
    const KMCurve km = km_fit(times, events);
    benchmark::DoNotOptimize(km.survival.data());
  }
}
BENCHMARK(BM_km_fit)->Arg(200)->Arg(1000);

static void BM_c_index(benchmark::State& state) {
  Rng rng(12);
  const int n = static_cast<int>(state.range(0));
  std::vector<double> risk, times;
  std::vector<int> events;
  for (int i = 0; i < n; ++i) {
    risk.push_back(rng.uniform(0.0, 1.0));
    times.push_back(rng.uniform(1.0, 1825.0));
    events.push_back(rng.bernoulli(0.5) ? 1 : 0);
  }
  for (auto _ : state) {
    const auto c = c_index(risk, times, events);
    benchmark::DoNotOptimize(&c);
  }
}
BENCHMARK(BM_c_index)->Arg(200)->Arg(1000);

static void BM_kmeans_1d(benchmark::State& state) {
  Rng rng(13);
  std::vector<double> values;
  for (int i = 0; i < static_cast<int>(state.range(0)); ++i)
    values.push_back(rng.uniform(0.0, 1825.0));
  for (auto _ : state) {
    const KMeans1DResult r = kmeans_1d(values, 2);
    benchmark::DoNotOptimize(r.centroids.data());
  }
}
BENCHMARK(BM_kmeans_1d)->Arg(200)->Arg(1000);

BENCHMARK_MAIN();
