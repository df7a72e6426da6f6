#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "attribens/codebook.hpp"
#include "attribens/denoiser.hpp"
#include "attribens/diffusion.hpp"
#include "attribens/ensemble.hpp"
#include "attribens/metrics.hpp"
#include "attribens/rng.hpp"
#include "attribens/tensor.hpp"

using namespace attribens;

namespace {

// The arch used by the toy glyph studies; big enough that the MLP loops
// dominate over call overhead.
MlpArchitecture bench_arch() {
  MlpArchitecture arch;
  arch.sample_dim = 64;
  arch.time_embed_dim = 16;
  arch.hidden = {128, 128};
  return arch;
}

// Untrained members are fine here: parameter values do not change the cost.
EnsembleDenoiser bench_ensemble() {
  EnsembleDenoiser ens;
  ens.codebook = assign_codes(70, 8, 4, 3);
  ens.schedule = make_schedule(150, 1e-4, 0.10);
  for (std::size_t i = 0; i < 8; ++i) ens.members.push_back(init_params(bench_arch(), i));
  return ens;
}

void BM_PhiloxBlock(benchmark::State& state) {
  std::uint64_t counter = 0;
  for (auto _ : state) {
    Block128 b = philox_block(42, 7, counter++);
    benchmark::DoNotOptimize(b);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PhiloxBlock);

void BM_FillGaussian(benchmark::State& state) {
  RngStream rng{1, 2, 0};
  std::vector<double> buf(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    fill_gaussian(rng, buf.data(), buf.size());
    benchmark::DoNotOptimize(buf.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FillGaussian)->Arg(64)->Arg(4096);

void BM_DenoiserForward(benchmark::State& state) {
  const DenoiserParams p = init_params(bench_arch(), 11);
  RngStream rng{3, 0, 0};
  std::vector<double> x(p.arch.sample_dim), out(p.arch.sample_dim);
  fill_gaussian(rng, x.data(), x.size());
  MlpScratch ws;
  for (auto _ : state) {
    predict_noise_into(p, x, 25, out, ws);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_DenoiserForward);

void BM_DenoiserLossGrad(benchmark::State& state) {
  const DenoiserParams p = init_params(bench_arch(), 11);
  RngStream rng{4, 0, 0};
  std::vector<double> x(p.arch.sample_dim), target(p.arch.sample_dim);
  fill_gaussian(rng, x.data(), x.size());
  fill_gaussian(rng, target.data(), target.size());
  std::vector<double> grad(p.weights.size());
  MlpScratch ws;
  for (auto _ : state) {
    std::fill(grad.begin(), grad.end(), 0.0);
    benchmark::DoNotOptimize(loss_and_grad_accumulate(p, x, 25, target, grad, ws));
  }
}
BENCHMARK(BM_DenoiserLossGrad);

void BM_DenoiserDual(benchmark::State& state) {
  const DenoiserParams p = init_params(bench_arch(), 11);
  RngStream rng{5, 0, 0};
  std::vector<double> x(p.arch.sample_dim), x_dot(p.arch.sample_dim);
  std::vector<double> out(p.arch.sample_dim), out_dot(p.arch.sample_dim);
  fill_gaussian(rng, x.data(), x.size());
  fill_gaussian(rng, x_dot.data(), x_dot.size());
  MlpScratch ws;
  for (auto _ : state) {
    predict_noise_dual_into(p, x, x_dot, 25, out, out_dot, ws);
    benchmark::DoNotOptimize(out_dot.data());
  }
}
BENCHMARK(BM_DenoiserDual);

void BM_EnsembleDenoise(benchmark::State& state) {
  const EnsembleDenoiser ens = bench_ensemble();
  const WeightVector u0 = weight_vector(ens.codebook);
  RngStream rng{6, 0, 0};
  std::vector<double> x(64), out(64);
  fill_gaussian(rng, x.data(), x.size());
  EnsembleScratch ws;
  for (auto _ : state) {
    weighted_denoise_into(ens, u0, x, 25, out, ws);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_EnsembleDenoise);

void BM_EnsembleGenerate(benchmark::State& state) {
  const EnsembleDenoiser ens = bench_ensemble();
  const WeightVector u0 = weight_vector(ens.codebook);
  NoiseRecord rec;
  rec.seed = 9;
  rec.T = ens.schedule.T;
  rec.shape = {64};
  for (auto _ : state) {
    rec.stream_id++;
    benchmark::DoNotOptimize(generate_raw(ens, u0, rec));
  }
}
BENCHMARK(BM_EnsembleGenerate)->Unit(benchmark::kMillisecond);

void BM_AssignCodes(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(assign_codes(5000, 16, 8, 21));
}
BENCHMARK(BM_AssignCodes)->Unit(benchmark::kMillisecond);

void BM_VerifyCoverage(benchmark::State& state) {
  const Codebook cb = assign_codes(5000, 16, 8, 21);
  for (auto _ : state) benchmark::DoNotOptimize(verify_coverage(cb));
}
BENCHMARK(BM_VerifyCoverage)->Unit(benchmark::kMillisecond);

void BM_FrechetGaussian(benchmark::State& state) {
  RngStream rng{7, 0, 0};
  std::vector<Tensor> a, b;
  for (std::size_t i = 0; i < 500; ++i) {
    a.push_back(gaussian_tensor(rng, {64}));
    b.push_back(gaussian_tensor(rng, {64}));
  }
  for (auto _ : state) benchmark::DoNotOptimize(frechet_gaussian(a, b));
}
BENCHMARK(BM_FrechetGaussian)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
