#include "attribens/ensemble.hpp"

#include <cmath>
#include <filesystem>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "attribens/digest.hpp"
#include "attribens/parallel.hpp"
#include "io_util.hpp"

namespace attribens {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string schedule_digest(const NoiseSchedule& s) {
  json doc{{"T", s.T}, {"beta_start", s.betas.at(1)}, {"beta_end", s.betas.at(s.T)}};
  return digest_string(doc.dump());
}

std::string ensemble_digest(const EnsembleDenoiser& ens) {
  std::string blob = codebook_to_json(ens.codebook);
  for (const auto& m : ens.members) blob += checkpoint_bytes(m);
  blob += schedule_digest(ens.schedule);
  return digest_string(blob);
}

EnsembleDenoiser train_ensemble(const std::vector<Tensor>& dataset, const Codebook& codebook,
                                const MlpArchitecture& arch, const TrainingConfig& config,
                                const NoiseSchedule& schedule) {
  const auto model_splits = splits(codebook, dataset.size());
  for (std::size_t i = 0; i < model_splits.size(); ++i)
    if (model_splits[i].empty())
      throw std::invalid_argument("train_ensemble: split " + std::to_string(i) +
                                  " is empty (no group code sets that position)");

  EnsembleDenoiser ens;
  ens.codebook = codebook;
  ens.schedule = schedule;
  ens.members.resize(model_splits.size());
  parallel_for(0, model_splits.size(), [&](std::size_t i) {
    TrainingConfig cfg = config;
    cfg.seed = mix_seed(config.seed, i);
    ens.members[i] = train_model(model_splits[i], dataset, arch, cfg, schedule);
  });
  return ens;
}

void weighted_denoise_into(const EnsembleDenoiser& ens, const WeightVector& v,
                           std::span<const double> x, std::size_t t, std::span<double> out,
                           EnsembleScratch& ws) {
  if (v.size() != ens.size())
    throw std::invalid_argument("ensemble: weight vector length must equal member count");
  for (double w : v.weights)
    if (!std::isfinite(w)) throw std::invalid_argument("ensemble: weights must be finite");
  std::fill(out.begin(), out.end(), 0.0);
  ws.member_out.resize(out.size());
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const double w = v[i];
    if (w == 0.0) continue;
    predict_noise_into(ens.members[i], x, t, ws.member_out, ws.mlp);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += w * ws.member_out[k];
  }
}

Tensor predict_noise_weighted(const EnsembleDenoiser& ens, const WeightVector& v, const Tensor& x,
                              std::size_t t) {
  const auto xd = to_doubles(x);
  std::vector<double> out(x.numel());
  EnsembleScratch ws;
  weighted_denoise_into(ens, v, xd, t, out, ws);
  return tensor_from_doubles(x.shape(), out);
}

std::vector<double> generate_raw(const EnsembleDenoiser& ens, const WeightVector& v,
                                 const NoiseRecord& record) {
  EnsembleScratch ws;
  const DenoiseFn fn = [&](std::span<const double> x, std::size_t t, std::span<double> eps_out) {
    weighted_denoise_into(ens, v, x, t, eps_out, ws);
  };
  return sample_raw(fn, record, ens.schedule);
}

SampleRecord generate(const EnsembleDenoiser& ens, const WeightVector& v,
                      const NoiseRecord& record) {
  SampleRecord rec;
  rec.record = record;
  rec.weights = v;
  rec.output = tensor_from_doubles(record.shape, generate_raw(ens, v, record));
  rec.ensemble_id = ensemble_digest(ens);
  rec.schedule_id = schedule_digest(ens.schedule);
  return rec;
}

SampleRecord counterfactual(const EnsembleDenoiser& ens, std::optional<std::size_t> item,
                            const NoiseRecord& record) {
  return generate(ens, weight_vector(ens.codebook, item), record);
}

std::vector<Tensor> nested_ensemble_outputs(const EnsembleDenoiser& ens,
                                            const NoiseRecord& record,
                                            std::uint64_t permutation_seed) {
  const std::size_t n = ens.size();
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  RngStream rng{permutation_seed, 0x9E12, 0};
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[next_below(rng, i)]);

  std::vector<Tensor> outputs;
  outputs.reserve(n);
  WeightVector v;
  v.weights.assign(n, 0.0);
  for (std::size_t k = 1; k <= n; ++k) {
    const double w = 1.0 / static_cast<double>(k);
    for (std::size_t i = 0; i < k; ++i) v.weights[perm[i]] = w;
    outputs.push_back(tensor_from_doubles(record.shape, generate_raw(ens, v, record)));
  }
  return outputs;
}

// ---- manifest / sample serialization ---------------------------------------

void save_ensemble(const std::string& manifest_path, const EnsembleDenoiser& ens) {
  const fs::path mpath(manifest_path);
  const fs::path dir = mpath.has_parent_path() ? mpath.parent_path() : fs::path(".");
  std::string stem = mpath.stem().string();
  if (stem.empty()) throw std::invalid_argument("save_ensemble: manifest path needs a stem");

  const std::string cb_name = stem + ".codebook.json";
  save_codebook((dir / cb_name).string(), ens.codebook);
  json digests = json::object();
  digests[cb_name] = digest_file((dir / cb_name).string());

  json members = json::array();
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const std::string name = stem + ".member" + std::to_string(i) + ".ensd";
    detail::write_file_atomic((dir / name).string(), checkpoint_bytes(ens.members[i]));
    digests[name] = digest_file((dir / name).string());
    members.push_back(name);
  }

  json doc{{"version", 1},
           {"schedule",
            {{"T", ens.schedule.T},
             {"beta_start", ens.schedule.betas.at(1)},
             {"beta_end", ens.schedule.betas.at(ens.schedule.T)}}},
           {"codebook", cb_name},
           {"members", members},
           {"digests", digests}};
  detail::write_file_atomic(manifest_path, doc.dump(2) + "\n");
}

EnsembleDenoiser load_ensemble(const std::string& manifest_path) {
  const fs::path mpath(manifest_path);
  const fs::path dir = mpath.has_parent_path() ? mpath.parent_path() : fs::path(".");
  json doc = json::parse(detail::read_file(manifest_path));
  if (doc.at("version").get<int>() != 1)
    throw std::runtime_error("ensemble manifest: unsupported version");

  const auto& digests = doc.at("digests");
  auto verified_path = [&](const std::string& name) {
    const std::string full = (dir / name).string();
    const std::string want = digests.at(name).get<std::string>();
    const std::string got = digest_file(full);
    if (want != got)
      throw std::runtime_error("ensemble manifest: digest mismatch for " + name + " (recorded " +
                               want + ", found " + got + ")");
    return full;
  };

  EnsembleDenoiser ens;
  const auto& sched = doc.at("schedule");
  ens.schedule = make_schedule(sched.at("T").get<std::size_t>(),
                               sched.at("beta_start").get<double>(),
                               sched.at("beta_end").get<double>());
  ens.codebook = load_codebook(verified_path(doc.at("codebook").get<std::string>()));
  for (const auto& m : doc.at("members"))
    ens.members.push_back(load_checkpoint(verified_path(m.get<std::string>())));
  if (ens.members.size() != ens.codebook.n)
    throw std::runtime_error("ensemble manifest: member count does not match codebook n");
  return ens;
}

std::string sample_record_to_json(const SampleRecord& rec) {
  // Floats pass through double, which nlohmann prints with round-trip
  // precision, so output tensors survive serialization bit-exactly.
  json data = json::array();
  for (float f : rec.output.data()) data.push_back(static_cast<double>(f));
  json doc{{"version", 1},
           {"record", json::parse(noise_record_to_json(rec.record))},
           {"weights", rec.weights.weights},
           {"shape", rec.output.shape()},
           {"data", data},
           {"provenance", {{"ensemble_id", rec.ensemble_id}, {"schedule_id", rec.schedule_id}}}};
  return doc.dump(2) + "\n";
}

SampleRecord sample_record_from_json(const std::string& text) {
  json doc = json::parse(text);
  if (doc.at("version").get<int>() != 1)
    throw std::runtime_error("sample record: unsupported version");
  SampleRecord rec;
  rec.record = noise_record_from_json(doc.at("record").dump());
  rec.weights.weights = doc.at("weights").get<std::vector<double>>();
  auto shape = doc.at("shape").get<std::vector<std::size_t>>();
  std::vector<float> data;
  for (const auto& v : doc.at("data")) data.push_back(static_cast<float>(v.get<double>()));
  rec.output = Tensor(std::move(shape), std::move(data));
  rec.ensemble_id = doc.at("provenance").at("ensemble_id").get<std::string>();
  rec.schedule_id = doc.at("provenance").at("schedule_id").get<std::string>();
  return rec;
}

void save_sample_record(const std::string& path, const SampleRecord& rec) {
  detail::write_file_atomic(path, sample_record_to_json(rec));
}

SampleRecord load_sample_record(const std::string& path) {
  return sample_record_from_json(detail::read_file(path));
}

}  // namespace attribens
