#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "attribens/denoiser.hpp"
#include "attribens/tensor.hpp"

namespace attribens {

// Beta schedule and derived quantities, indexed 1..T (index 0 unused).
struct NoiseSchedule {
  std::size_t T = 0;
  std::vector<double> betas, alphas, alpha_bars, sigmas;
};

// Linear beta schedule, endpoints inclusive. Defaults follow the usual DDPM
// convention; toy experiments override beta_end so x_T is actually noise-like
// at short horizons.
NoiseSchedule make_schedule(std::size_t T, double beta_start = 1e-4, double beta_end = 0.02);

// Forward process draw: sqrt(abar_t) x0 + sqrt(1 - abar_t) eps.
Tensor q_sample(const Tensor& x0, std::size_t t, const Tensor& eps, const NoiseSchedule& s);

// All exogenous randomness of one trajectory. x_T and every per-step z_t are
// pure functions of this record: the initial noise lives at counter block 0,
// z_t at block t * gaussian_blocks(numel), z_1 is zero by convention. Two
// generations that share a record differ only through their denoisers.
struct NoiseRecord {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  std::string algorithm_id = std::string(kRngAlgorithmId);
  std::size_t T = 0;
  std::vector<std::size_t> shape;
};

void record_initial_noise_into(const NoiseRecord& r, std::span<double> out);
void record_step_noise_into(const NoiseRecord& r, std::size_t t, std::span<double> out);
Tensor record_initial_noise(const NoiseRecord& r);
Tensor record_step_noise(const NoiseRecord& r, std::size_t t);

std::string noise_record_to_json(const NoiseRecord& r);
NoiseRecord noise_record_from_json(const std::string& text);
void save_noise_record(const std::string& path, const NoiseRecord& r);
NoiseRecord load_noise_record(const std::string& path);

struct TrainingConfig {
  std::size_t epochs = 40;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
};

// Minibatch denoising-loss training with Adam. Deterministic: identical
// (split, dataset, config) reproduce bit-identical parameters; the result is
// quantized through float32 so it equals its own checkpoint round-trip.
// Returns the per-epoch mean losses through `epoch_losses` when non-null.
DenoiserParams train_model(std::span<const std::size_t> split, const std::vector<Tensor>& dataset,
                           const MlpArchitecture& arch, const TrainingConfig& config,
                           const NoiseSchedule& schedule,
                           std::vector<double>* epoch_losses = nullptr);

// One reverse step: x_{t-1} = (x_t - beta_t/sqrt(1-abar_t) * eps_hat)/sqrt(alpha_t)
// + sigma_t z. z must be zero at t = 1 (rejected otherwise).
Tensor ddpm_step(const Tensor& x_t, std::size_t t, const Tensor& predicted_noise,
                 const Tensor& z, const NoiseSchedule& s);

// Denoiser callback for the sampler: writes the noise estimate for state x at
// step t into eps_out. All buffers are double; storage conversion happens at
// the boundary.
using DenoiseFn =
    std::function<void(std::span<const double> x, std::size_t t, std::span<double> eps_out)>;

// Full reverse trajectory driven entirely by the record. The state stays in
// double precision across steps; sample() rounds the final tensor to storage.
std::vector<double> sample_raw(const DenoiseFn& denoise, const NoiseRecord& record,
                               const NoiseSchedule& s);
Tensor sample(const DenoiseFn& denoise, const NoiseRecord& record, const NoiseSchedule& s);

}  // namespace attribens
