#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "attribens/tensor.hpp"

namespace attribens {

// Fully-connected noise predictor: input is the flattened sample concatenated
// with a sinusoidal embedding of the step index, hidden layers use SiLU, the
// output layer is linear (noise estimates are unclamped by design).
struct MlpArchitecture {
  std::size_t sample_dim = 0;
  std::size_t time_embed_dim = 16;  // must be even
  std::vector<std::size_t> hidden;

  std::size_t input_dim() const noexcept { return sample_dim + time_embed_dim; }
  std::size_t num_layers() const noexcept { return hidden.size() + 1; }
  std::size_t layer_in(std::size_t l) const noexcept {
    return l == 0 ? input_dim() : hidden[l - 1];
  }
  std::size_t layer_out(std::size_t l) const noexcept {
    return l == hidden.size() ? sample_dim : hidden[l];
  }
  std::size_t param_count() const noexcept;
  bool operator==(const MlpArchitecture&) const = default;
};

// Parameters of one member model. Weights live in one flat buffer, layer by
// layer ([W0 row-major | b0 | W1 | b1 | ...]); double in memory for exact
// gradient checks, float32 on disk (quantize_params keeps both in sync).
struct DenoiserParams {
  MlpArchitecture arch;
  std::vector<double> weights;
};

// Scratch buffers reused across forward/backward calls. One per thread.
struct MlpScratch {
  std::vector<std::vector<double>> act, pre, act_dot, pre_dot, delta;
  std::vector<double> input, input_dot;
};

DenoiserParams init_params(const MlpArchitecture& arch, std::uint64_t seed);

// Rounds every weight through float32, so in-memory parameters are identical
// to their checkpoint round-trip.
void quantize_params(DenoiserParams& p);

void time_embedding(std::size_t t, std::size_t dim, double* out);

// f(x, t, theta) written into `out` (both spans of length sample_dim).
void predict_noise_into(const DenoiserParams& p, std::span<const double> x, std::size_t t,
                        std::span<double> out, MlpScratch& ws);
Tensor predict_noise(const DenoiserParams& p, const Tensor& x, std::size_t t);

// Squared-error loss against `target` plus its parameter gradient, accumulated
// (+=) into `grad` (length param_count) for minibatch summation. Returns the
// loss value.
double loss_and_grad_accumulate(const DenoiserParams& p, std::span<const double> x,
                                std::size_t t, std::span<const double> target,
                                std::span<double> grad, MlpScratch& ws);

// Reverse-mode gradient of the denoising objective
//   || eps - f(sqrt(abar)*x0 + sqrt(1-abar)*eps, t, theta) ||^2
// with respect to every parameter. alpha_bar is the schedule value at t.
std::vector<double> loss_gradient(const DenoiserParams& p, const Tensor& x0, std::size_t t,
                                  const Tensor& eps, double alpha_bar);

// Forward-mode (dual number) pass: propagates an input tangent x_dot through
// the network alongside the value, yielding the exact JVP d f(x)/dx * x_dot.
void predict_noise_dual_into(const DenoiserParams& p, std::span<const double> x,
                             std::span<const double> x_dot, std::size_t t,
                             std::span<double> out, std::span<double> out_dot, MlpScratch& ws);
std::pair<Tensor, Tensor> predict_noise_dual(const DenoiserParams& p, const Tensor& x,
                                             const Tensor& x_dot, std::size_t t);

// Reverse-mode input cotangent pull-back: (d f(x)/dx)^T * u. Used to check
// forward and reverse differentiation against each other.
std::vector<double> input_vjp(const DenoiserParams& p, std::span<const double> x, std::size_t t,
                              std::span<const double> u);

// Checkpoint format: "ENSD" magic, little-endian u32 version, architecture
// descriptor, then the weights as little-endian float32 in layer order.
std::string checkpoint_bytes(const DenoiserParams& p);
DenoiserParams params_from_checkpoint_bytes(const std::string& bytes);
void save_checkpoint(const std::string& path, const DenoiserParams& p);
DenoiserParams load_checkpoint(const std::string& path);

}  // namespace attribens
