#include "attribens/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "io_util.hpp"

namespace attribens {

using json = nlohmann::ordered_json;

NoiseSchedule make_schedule(std::size_t T, double beta_start, double beta_end) {
  if (T == 0) throw std::invalid_argument("make_schedule: T must be positive");
  if (!(beta_start > 0.0) || !(beta_end < 1.0) || beta_start > beta_end)
    throw std::invalid_argument("make_schedule: need 0 < beta_start <= beta_end < 1");
  NoiseSchedule s;
  s.T = T;
  s.betas.assign(T + 1, 0.0);
  s.alphas.assign(T + 1, 0.0);
  s.alpha_bars.assign(T + 1, 1.0);
  s.sigmas.assign(T + 1, 0.0);
  for (std::size_t t = 1; t <= T; ++t) {
    const double frac = T == 1 ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(T - 1);
    s.betas[t] = beta_start + (beta_end - beta_start) * frac;
    s.alphas[t] = 1.0 - s.betas[t];
    s.alpha_bars[t] = s.alpha_bars[t - 1] * s.alphas[t];
    s.sigmas[t] = std::sqrt(s.betas[t]);
  }
  return s;
}

static void check_step(const NoiseSchedule& s, std::size_t t) {
  if (t == 0 || t > s.T) throw std::out_of_range("schedule: step index must be in 1..T");
}

Tensor q_sample(const Tensor& x0, std::size_t t, const Tensor& eps, const NoiseSchedule& s) {
  check_step(s, t);
  if (!x0.same_shape(eps)) throw std::invalid_argument("q_sample: shape mismatch");
  const double sa = std::sqrt(s.alpha_bars[t]);
  const double sb = std::sqrt(1.0 - s.alpha_bars[t]);
  std::vector<double> out(x0.numel());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = sa * static_cast<double>(x0[i]) + sb * static_cast<double>(eps[i]);
  return tensor_from_doubles(x0.shape(), out);
}

// ---- noise records --------------------------------------------------------

static void check_record(const NoiseRecord& r) {
  if (r.T == 0) throw std::invalid_argument("noise record: T must be positive");
  if (r.shape.empty()) throw std::invalid_argument("noise record: shape must be set");
  if (r.algorithm_id != kRngAlgorithmId)
    throw std::invalid_argument("noise record: unknown algorithm id '" + r.algorithm_id + "'");
}

void record_initial_noise_into(const NoiseRecord& r, std::span<double> out) {
  check_record(r);
  if (out.size() != shape_numel(r.shape))
    throw std::invalid_argument("noise record: buffer does not match shape");
  RngStream s{r.seed, r.stream_id, 0};
  fill_gaussian(s, out.data(), out.size());
}

void record_step_noise_into(const NoiseRecord& r, std::size_t t, std::span<double> out) {
  check_record(r);
  if (t == 0 || t > r.T) throw std::out_of_range("noise record: step index must be in 1..T");
  if (out.size() != shape_numel(r.shape))
    throw std::invalid_argument("noise record: buffer does not match shape");
  if (t == 1) {  // the final reverse step adds no noise
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  RngStream s{r.seed, r.stream_id, static_cast<std::uint64_t>(t) * gaussian_blocks(out.size())};
  fill_gaussian(s, out.data(), out.size());
}

Tensor record_initial_noise(const NoiseRecord& r) {
  std::vector<double> buf(shape_numel(r.shape));
  record_initial_noise_into(r, buf);
  return tensor_from_doubles(r.shape, buf);
}

Tensor record_step_noise(const NoiseRecord& r, std::size_t t) {
  std::vector<double> buf(shape_numel(r.shape));
  record_step_noise_into(r, t, buf);
  return tensor_from_doubles(r.shape, buf);
}

std::string noise_record_to_json(const NoiseRecord& r) {
  json doc{{"version", 1},       {"seed", r.seed}, {"stream_id", r.stream_id},
           {"algorithm_id", r.algorithm_id}, {"T", r.T},   {"shape", r.shape}};
  return doc.dump(2) + "\n";
}

NoiseRecord noise_record_from_json(const std::string& text) {
  json doc = json::parse(text);
  if (doc.at("version").get<int>() != 1)
    throw std::runtime_error("noise record: unsupported version");
  NoiseRecord r;
  r.seed = doc.at("seed").get<std::uint64_t>();
  r.stream_id = doc.at("stream_id").get<std::uint64_t>();
  r.algorithm_id = doc.at("algorithm_id").get<std::string>();
  r.T = doc.at("T").get<std::size_t>();
  r.shape = doc.at("shape").get<std::vector<std::size_t>>();
  check_record(r);
  return r;
}

void save_noise_record(const std::string& path, const NoiseRecord& r) {
  detail::write_file_atomic(path, noise_record_to_json(r));
}

NoiseRecord load_noise_record(const std::string& path) {
  return noise_record_from_json(detail::read_file(path));
}

// ---- training ---------------------------------------------------------------

DenoiserParams train_model(std::span<const std::size_t> split, const std::vector<Tensor>& dataset,
                           const MlpArchitecture& arch, const TrainingConfig& config,
                           const NoiseSchedule& schedule, std::vector<double>* epoch_losses) {
  if (split.empty()) throw std::invalid_argument("train_model: split is empty");
  if (config.epochs == 0 || config.batch_size == 0)
    throw std::invalid_argument("train_model: epochs and batch size must be positive");
  for (std::size_t idx : split) {
    if (idx >= dataset.size()) throw std::invalid_argument("train_model: split index out of range");
    if (dataset[idx].numel() != arch.sample_dim)
      throw std::invalid_argument("train_model: item dimension does not match architecture");
  }

  DenoiserParams params = init_params(arch, mix_seed(config.seed, 0x1417));
  const std::size_t pcount = params.weights.size();
  std::vector<double> grad(pcount), m(pcount, 0.0), v(pcount, 0.0);
  std::vector<double> x_in(arch.sample_dim), eps(arch.sample_dim);
  MlpScratch ws;

  // Separate streams for epoch shuffling and per-item noise so the draw
  // layout is easy to reason about when reproducing runs.
  RngStream order_rng{config.seed, 0x0DD5EED5, 0};
  RngStream noise_rng{config.seed, 0x71E5EED5, 0};

  std::vector<std::size_t> order(split.begin(), split.end());
  std::sort(order.begin(), order.end());  // canonical start independent of caller order

  if (epoch_losses) epoch_losses->clear();
  std::uint64_t adam_step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[next_below(order_rng, i)]);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = start; k < stop; ++k) {
        const Tensor& x0 = dataset[order[k]];
        const std::size_t t = 1 + next_below(noise_rng, schedule.T);
        fill_gaussian(noise_rng, eps.data(), eps.size());
        const double sa = std::sqrt(schedule.alpha_bars[t]);
        const double sb = std::sqrt(1.0 - schedule.alpha_bars[t]);
        for (std::size_t j = 0; j < x_in.size(); ++j)
          x_in[j] = sa * static_cast<double>(x0[j]) + sb * eps[j];
        epoch_loss += loss_and_grad_accumulate(params, x_in, t, eps, grad, ws);
      }
      const double inv_batch = 1.0 / static_cast<double>(stop - start);
      ++adam_step;
      const double bc1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(adam_step));
      const double bc2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(adam_step));
      for (std::size_t j = 0; j < pcount; ++j) {
        const double g = grad[j] * inv_batch;
        m[j] = config.adam_beta1 * m[j] + (1.0 - config.adam_beta1) * g;
        v[j] = config.adam_beta2 * v[j] + (1.0 - config.adam_beta2) * g * g;
        params.weights[j] -=
            config.learning_rate * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + config.adam_eps);
      }
    }
    if (epoch_losses) epoch_losses->push_back(epoch_loss / static_cast<double>(order.size()));
  }
  quantize_params(params);
  return params;
}

// ---- sampling ---------------------------------------------------------------

Tensor ddpm_step(const Tensor& x_t, std::size_t t, const Tensor& predicted_noise, const Tensor& z,
                 const NoiseSchedule& s) {
  check_step(s, t);
  if (!x_t.same_shape(predicted_noise) || !x_t.same_shape(z))
    throw std::invalid_argument("ddpm_step: shape mismatch");
  if (t == 1)
    for (float zi : z.data())
      if (zi != 0.0f) throw std::invalid_argument("ddpm_step: z must be zero at t = 1");

  const double inv_sqrt_alpha = 1.0 / std::sqrt(s.alphas[t]);
  const double noise_coef = s.betas[t] / std::sqrt(1.0 - s.alpha_bars[t]);
  const double sigma = s.sigmas[t];
  std::vector<double> out(x_t.numel());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = inv_sqrt_alpha * (static_cast<double>(x_t[i]) -
                               noise_coef * static_cast<double>(predicted_noise[i])) +
             sigma * static_cast<double>(z[i]);
  return tensor_from_doubles(x_t.shape(), out);
}

std::vector<double> sample_raw(const DenoiseFn& denoise, const NoiseRecord& record,
                               const NoiseSchedule& s) {
  check_record(record);
  if (record.T != s.T)
    throw std::invalid_argument("sample: record and schedule disagree about T");
  const std::size_t n = shape_numel(record.shape);
  std::vector<double> x(n), eps_hat(n), z(n);
  record_initial_noise_into(record, x);
  for (std::size_t t = s.T; t >= 1; --t) {
    denoise(x, t, eps_hat);
    record_step_noise_into(record, t, z);
    const double inv_sqrt_alpha = 1.0 / std::sqrt(s.alphas[t]);
    const double noise_coef = s.betas[t] / std::sqrt(1.0 - s.alpha_bars[t]);
    const double sigma = s.sigmas[t];
    for (std::size_t i = 0; i < n; ++i)
      x[i] = inv_sqrt_alpha * (x[i] - noise_coef * eps_hat[i]) + sigma * z[i];
  }
  return x;
}

Tensor sample(const DenoiseFn& denoise, const NoiseRecord& record, const NoiseSchedule& s) {
  return tensor_from_doubles(record.shape, sample_raw(denoise, record, s));
}

}  // namespace attribens
