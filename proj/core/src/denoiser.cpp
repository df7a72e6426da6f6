#include "attribens/denoiser.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "attribens/rng.hpp"
#include "io_util.hpp"

namespace attribens {
namespace {

inline double silu(double x) { return x / (1.0 + std::exp(-x)); }
inline double silu_prime(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}

void check_arch(const MlpArchitecture& a) {
  if (a.sample_dim == 0) throw std::invalid_argument("denoiser: sample_dim must be positive");
  if (a.time_embed_dim == 0 || a.time_embed_dim % 2 != 0)
    throw std::invalid_argument("denoiser: time_embed_dim must be positive and even");
  for (std::size_t h : a.hidden)
    if (h == 0) throw std::invalid_argument("denoiser: hidden width must be positive");
}

void check_params(const DenoiserParams& p) {
  if (p.weights.size() != p.arch.param_count())
    throw std::invalid_argument("denoiser: weight buffer does not match architecture");
}

void prepare_scratch(const MlpArchitecture& a, MlpScratch& ws, bool dual, bool backward) {
  const std::size_t layers = a.num_layers();
  ws.act.resize(layers + 1);
  ws.pre.resize(layers);
  ws.act[0].resize(a.input_dim());
  for (std::size_t l = 0; l < layers; ++l) {
    ws.pre[l].resize(a.layer_out(l));
    ws.act[l + 1].resize(a.layer_out(l));
  }
  if (dual) {
    ws.act_dot.resize(layers + 1);
    ws.pre_dot.resize(layers);
    ws.act_dot[0].resize(a.input_dim());
    for (std::size_t l = 0; l < layers; ++l) {
      ws.pre_dot[l].resize(a.layer_out(l));
      ws.act_dot[l + 1].resize(a.layer_out(l));
    }
  }
  if (backward) {
    ws.delta.resize(layers + 1);
    ws.delta[0].resize(a.input_dim());
    for (std::size_t l = 0; l < layers; ++l) ws.delta[l + 1].resize(a.layer_out(l));
  }
}

// Runs the value pass over ws.act / ws.pre; ws.act[0] must hold the input.
void forward_pass(const DenoiserParams& p, MlpScratch& ws) {
  const MlpArchitecture& a = p.arch;
  const double* w = p.weights.data();
  for (std::size_t l = 0; l < a.num_layers(); ++l) {
    const std::size_t in = a.layer_in(l), out = a.layer_out(l);
    const double* bias = w + out * in;
    const double* src = ws.act[l].data();
    const bool last = l + 1 == a.num_layers();
    for (std::size_t o = 0; o < out; ++o) {
      const double* row = w + o * in;
      double acc = bias[o];
      for (std::size_t i = 0; i < in; ++i) acc += row[i] * src[i];
      ws.pre[l][o] = acc;
      ws.act[l + 1][o] = last ? acc : silu(acc);
    }
    w += out * (in + 1);
  }
}

void load_input(const MlpArchitecture& a, std::span<const double> x, std::size_t t,
                MlpScratch& ws) {
  if (x.size() != a.sample_dim) throw std::invalid_argument("denoiser: input dimension mismatch");
  std::memcpy(ws.act[0].data(), x.data(), x.size() * sizeof(double));
  time_embedding(t, a.time_embed_dim, ws.act[0].data() + a.sample_dim);
}

}  // namespace

std::size_t MlpArchitecture::param_count() const noexcept {
  std::size_t n = 0;
  for (std::size_t l = 0; l < num_layers(); ++l) n += layer_out(l) * (layer_in(l) + 1);
  return n;
}

DenoiserParams init_params(const MlpArchitecture& arch, std::uint64_t seed) {
  check_arch(arch);
  DenoiserParams p{arch, std::vector<double>(arch.param_count())};
  double* w = p.weights.data();
  for (std::size_t l = 0; l < arch.num_layers(); ++l) {
    const std::size_t in = arch.layer_in(l), out = arch.layer_out(l);
    RngStream rng{seed, /*stream_id=*/l, 0};
    // He-style scaling on hidden layers; the linear output layer starts small
    // so early training steps stay near the zero-prediction regime.
    const bool last = l + 1 == arch.num_layers();
    const double scale = last ? 0.1 / std::sqrt(static_cast<double>(in))
                              : std::sqrt(2.0 / static_cast<double>(in));
    std::vector<double> buf(out * in);
    fill_gaussian(rng, buf.data(), buf.size());
    for (std::size_t i = 0; i < buf.size(); ++i) w[i] = buf[i] * scale;
    for (std::size_t i = 0; i < out; ++i) w[out * in + i] = 0.0;  // biases
    w += out * (in + 1);
  }
  quantize_params(p);
  return p;
}

void quantize_params(DenoiserParams& p) {
  for (double& w : p.weights) w = static_cast<double>(static_cast<float>(w));
}

void time_embedding(std::size_t t, std::size_t dim, double* out) {
  const std::size_t half = dim / 2;
  const double td = static_cast<double>(t);
  for (std::size_t k = 0; k < half; ++k) {
    const double denom = half > 1 ? static_cast<double>(half - 1) : 1.0;
    const double omega = std::exp(-std::log(10000.0) * static_cast<double>(k) / denom);
    out[2 * k] = std::sin(td * omega);
    out[2 * k + 1] = std::cos(td * omega);
  }
}

void predict_noise_into(const DenoiserParams& p, std::span<const double> x, std::size_t t,
                        std::span<double> out, MlpScratch& ws) {
  check_params(p);
  prepare_scratch(p.arch, ws, false, false);
  load_input(p.arch, x, t, ws);
  forward_pass(p, ws);
  if (out.size() != p.arch.sample_dim)
    throw std::invalid_argument("denoiser: output dimension mismatch");
  std::memcpy(out.data(), ws.act.back().data(), out.size() * sizeof(double));
}

Tensor predict_noise(const DenoiserParams& p, const Tensor& x, std::size_t t) {
  const auto xd = to_doubles(x);
  std::vector<double> out(p.arch.sample_dim);
  MlpScratch ws;
  predict_noise_into(p, xd, t, out, ws);
  return tensor_from_doubles(x.shape(), out);
}

double loss_and_grad_accumulate(const DenoiserParams& p, std::span<const double> x,
                                std::size_t t, std::span<const double> target,
                                std::span<double> grad, MlpScratch& ws) {
  check_params(p);
  if (grad.size() != p.weights.size())
    throw std::invalid_argument("denoiser: gradient buffer size mismatch");
  if (target.size() != p.arch.sample_dim)
    throw std::invalid_argument("denoiser: target dimension mismatch");
  const MlpArchitecture& a = p.arch;
  prepare_scratch(a, ws, false, true);
  load_input(a, x, t, ws);
  forward_pass(p, ws);

  const std::size_t layers = a.num_layers();
  double loss = 0.0;
  {
    auto& d = ws.delta[layers];
    const auto& out = ws.act[layers];
    for (std::size_t k = 0; k < a.sample_dim; ++k) {
      const double r = out[k] - target[k];
      loss += r * r;
      d[k] = 2.0 * r;  // dL/dz of the linear output layer
    }
  }

  // Walk the layers backwards; parameter offsets are easiest recomputed.
  std::vector<std::size_t> offsets(layers);
  {
    std::size_t off = 0;
    for (std::size_t l = 0; l < layers; ++l) {
      offsets[l] = off;
      off += a.layer_out(l) * (a.layer_in(l) + 1);
    }
  }
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t in = a.layer_in(l), out = a.layer_out(l);
    const double* w = p.weights.data() + offsets[l];
    double* gw = grad.data() + offsets[l];
    double* gb = gw + out * in;
    const auto& d = ws.delta[l + 1];
    const auto& src = ws.act[l];
    auto& dprev = ws.delta[l];
    std::fill(dprev.begin(), dprev.end(), 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double dv = d[o];
      const double* row = w + o * in;
      double* grow = gw + o * in;
      for (std::size_t i = 0; i < in; ++i) {
        grow[i] += dv * src[i];
        dprev[i] += dv * row[i];
      }
      gb[o] += dv;
    }
    if (l > 0)
      for (std::size_t i = 0; i < in; ++i) dprev[i] *= silu_prime(ws.pre[l - 1][i]);
  }
  return loss;
}

std::vector<double> loss_gradient(const DenoiserParams& p, const Tensor& x0, std::size_t t,
                                  const Tensor& eps, double alpha_bar) {
  if (!x0.same_shape(eps)) throw std::invalid_argument("loss_gradient: shape mismatch");
  if (!(alpha_bar > 0.0) || alpha_bar > 1.0)
    throw std::invalid_argument("loss_gradient: alpha_bar must be in (0, 1]");
  const double sa = std::sqrt(alpha_bar);
  const double sb = std::sqrt(1.0 - alpha_bar);
  std::vector<double> x(x0.numel());
  std::vector<double> target(x0.numel());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = static_cast<double>(eps[i]);
    x[i] = sa * static_cast<double>(x0[i]) + sb * e;
    target[i] = e;
  }
  std::vector<double> grad(p.weights.size(), 0.0);
  MlpScratch ws;
  loss_and_grad_accumulate(p, x, t, target, grad, ws);
  return grad;
}

void predict_noise_dual_into(const DenoiserParams& p, std::span<const double> x,
                             std::span<const double> x_dot, std::size_t t,
                             std::span<double> out, std::span<double> out_dot, MlpScratch& ws) {
  check_params(p);
  if (x_dot.size() != x.size()) throw std::invalid_argument("denoiser: tangent size mismatch");
  const MlpArchitecture& a = p.arch;
  prepare_scratch(a, ws, true, false);
  load_input(a, x, t, ws);
  // The step embedding does not depend on x, so its tangent block is zero.
  std::memcpy(ws.act_dot[0].data(), x_dot.data(), x_dot.size() * sizeof(double));
  std::fill(ws.act_dot[0].begin() + a.sample_dim, ws.act_dot[0].end(), 0.0);

  const double* w = p.weights.data();
  for (std::size_t l = 0; l < a.num_layers(); ++l) {
    const std::size_t in = a.layer_in(l), out_n = a.layer_out(l);
    const double* bias = w + out_n * in;
    const double* src = ws.act[l].data();
    const double* src_dot = ws.act_dot[l].data();
    const bool last = l + 1 == a.num_layers();
    for (std::size_t o = 0; o < out_n; ++o) {
      const double* row = w + o * in;
      double acc = bias[o];
      double acc_dot = 0.0;
      for (std::size_t i = 0; i < in; ++i) {
        acc += row[i] * src[i];
        acc_dot += row[i] * src_dot[i];
      }
      ws.pre[l][o] = acc;
      ws.pre_dot[l][o] = acc_dot;
      if (last) {
        ws.act[l + 1][o] = acc;
        ws.act_dot[l + 1][o] = acc_dot;
      } else {
        ws.act[l + 1][o] = silu(acc);
        ws.act_dot[l + 1][o] = silu_prime(acc) * acc_dot;
      }
    }
    w += out_n * (in + 1);
  }
  if (out.size() != a.sample_dim || out_dot.size() != a.sample_dim)
    throw std::invalid_argument("denoiser: output dimension mismatch");
  std::memcpy(out.data(), ws.act.back().data(), out.size() * sizeof(double));
  std::memcpy(out_dot.data(), ws.act_dot.back().data(), out_dot.size() * sizeof(double));
}

std::pair<Tensor, Tensor> predict_noise_dual(const DenoiserParams& p, const Tensor& x,
                                             const Tensor& x_dot, std::size_t t) {
  if (!x.same_shape(x_dot)) throw std::invalid_argument("denoiser: tangent shape mismatch");
  const auto xd = to_doubles(x);
  const auto vd = to_doubles(x_dot);
  std::vector<double> out(p.arch.sample_dim), out_dot(p.arch.sample_dim);
  MlpScratch ws;
  predict_noise_dual_into(p, xd, vd, t, out, out_dot, ws);
  return {tensor_from_doubles(x.shape(), out), tensor_from_doubles(x.shape(), out_dot)};
}

std::vector<double> input_vjp(const DenoiserParams& p, std::span<const double> x, std::size_t t,
                              std::span<const double> u) {
  check_params(p);
  if (u.size() != p.arch.sample_dim) throw std::invalid_argument("denoiser: cotangent mismatch");
  const MlpArchitecture& a = p.arch;
  MlpScratch ws;
  prepare_scratch(a, ws, false, true);
  load_input(a, x, t, ws);
  forward_pass(p, ws);

  const std::size_t layers = a.num_layers();
  std::copy(u.begin(), u.end(), ws.delta[layers].begin());
  std::size_t off = p.weights.size();
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t in = a.layer_in(l), out = a.layer_out(l);
    off -= out * (in + 1);
    const double* w = p.weights.data() + off;
    const auto& d = ws.delta[l + 1];
    auto& dprev = ws.delta[l];
    std::fill(dprev.begin(), dprev.end(), 0.0);
    for (std::size_t o = 0; o < out; ++o)
      for (std::size_t i = 0; i < in; ++i) dprev[i] += d[o] * w[o * in + i];
    if (l > 0)
      for (std::size_t i = 0; i < in; ++i) dprev[i] *= silu_prime(ws.pre[l - 1][i]);
  }
  return std::vector<double>(ws.delta[0].begin(), ws.delta[0].begin() + a.sample_dim);
}

// ---- checkpoint serialization -------------------------------------------

namespace {

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& s, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_f32(std::string& s, float f) {
  std::uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32(s, v);
}

struct Reader {
  const std::string& s;
  std::size_t pos = 0;
  std::uint32_t u32() {
    if (pos + 4 > s.size()) throw std::runtime_error("checkpoint: truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t lo = u32(), hi = u32();
    return lo | (hi << 32);
  }
  float f32() {
    std::uint32_t v = u32();
    float f;
    std::memcpy(&f, &v, 4);
    return f;
  }
};

}  // namespace

std::string checkpoint_bytes(const DenoiserParams& p) {
  check_params(p);
  std::string s;
  s.reserve(32 + 4 * p.weights.size());
  s += "ENSD";
  put_u32(s, 1);  // version
  put_u32(s, static_cast<std::uint32_t>(p.arch.sample_dim));
  put_u32(s, static_cast<std::uint32_t>(p.arch.time_embed_dim));
  put_u32(s, static_cast<std::uint32_t>(p.arch.hidden.size()));
  for (std::size_t h : p.arch.hidden) put_u32(s, static_cast<std::uint32_t>(h));
  put_u64(s, p.weights.size());
  for (double w : p.weights) put_f32(s, static_cast<float>(w));
  return s;
}

DenoiserParams params_from_checkpoint_bytes(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "ENSD") != 0)
    throw std::runtime_error("checkpoint: bad magic");
  Reader r{bytes, 4};
  if (r.u32() != 1) throw std::runtime_error("checkpoint: unsupported version");
  DenoiserParams p;
  p.arch.sample_dim = r.u32();
  p.arch.time_embed_dim = r.u32();
  const std::uint32_t hidden = r.u32();
  if (hidden > 64) throw std::runtime_error("checkpoint: implausible layer count");
  p.arch.hidden.resize(hidden);
  for (auto& h : p.arch.hidden) h = r.u32();
  check_arch(p.arch);
  const std::uint64_t count = r.u64();
  if (count != p.arch.param_count())
    throw std::runtime_error("checkpoint: weight count does not match architecture");
  p.weights.resize(count);
  for (auto& w : p.weights) w = static_cast<double>(r.f32());
  if (r.pos != bytes.size()) throw std::runtime_error("checkpoint: trailing bytes");
  return p;
}

void save_checkpoint(const std::string& path, const DenoiserParams& p) {
  detail::write_file_atomic(path, checkpoint_bytes(p));
}

DenoiserParams load_checkpoint(const std::string& path) {
  return params_from_checkpoint_bytes(detail::read_file(path));
}

}  // namespace attribens
