#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attribens/codebook.hpp"
#include "attribens/denoiser.hpp"
#include "attribens/diffusion.hpp"
#include "attribens/tensor.hpp"

namespace attribens {

// n member denoisers plus the codebook that defined their training splits.
// Member i trained exactly on split i; the weighted combination over members
// is the ensemble denoiser.
struct EnsembleDenoiser {
  std::vector<DenoiserParams> members;
  Codebook codebook;
  NoiseSchedule schedule;

  std::size_t size() const noexcept { return members.size(); }
};

// Content digest over codebook, member weights and schedule; used as the
// provenance id on samples.
std::string ensemble_digest(const EnsembleDenoiser& ens);
std::string schedule_digest(const NoiseSchedule& s);

// Trains one member per split. Deterministic; member i's run is seeded by
// (config.seed, i). Throws if any split is empty.
EnsembleDenoiser train_ensemble(const std::vector<Tensor>& dataset, const Codebook& codebook,
                                const MlpArchitecture& arch, const TrainingConfig& config,
                                const NoiseSchedule& schedule);

struct EnsembleScratch {
  MlpScratch mlp;
  std::vector<double> member_out;
};

// sum_i v_i f_i(x, t) accumulated in member order; members with weight
// exactly 0 are skipped (their finite contribution would be exactly zero).
// v need not lie on the simplex: linearization probes evaluate off it.
void weighted_denoise_into(const EnsembleDenoiser& ens, const WeightVector& v,
                           std::span<const double> x, std::size_t t, std::span<double> out,
                           EnsembleScratch& ws);
Tensor predict_noise_weighted(const EnsembleDenoiser& ens, const WeightVector& v, const Tensor& x,
                              std::size_t t);

// A generated sample with everything needed to reproduce or perturb it.
struct SampleRecord {
  NoiseRecord record;
  WeightVector weights;
  Tensor output;
  std::string ensemble_id;
  std::string schedule_id;
};

std::vector<double> generate_raw(const EnsembleDenoiser& ens, const WeightVector& v,
                                 const NoiseRecord& record);
SampleRecord generate(const EnsembleDenoiser& ens, const WeightVector& v,
                      const NoiseRecord& record);

// Regenerates the trajectory of `record` with the item's h models removed and
// survivor weights 1/(n-h); with nullopt it reproduces the uniform ensemble
// output exactly (same code path, same arithmetic).
SampleRecord counterfactual(const EnsembleDenoiser& ens, std::optional<std::size_t> item,
                            const NoiseRecord& record);

// Outputs of nested sub-ensembles {pi_1}, {pi_1, pi_2}, ... over a random
// permutation pi, all driven by the same record. Index k-1 holds the k-member
// output; the last entry equals the full-ensemble output bit-exactly.
std::vector<Tensor> nested_ensemble_outputs(const EnsembleDenoiser& ens,
                                            const NoiseRecord& record,
                                            std::uint64_t permutation_seed);

// Manifest I/O. save_ensemble writes <stem>.codebook.json and one
// <stem>.member<k>.ensd per member next to the manifest and records their
// digests; load_ensemble verifies digests before use. Linear schedules only
// (the manifest stores the beta endpoints).
void save_ensemble(const std::string& manifest_path, const EnsembleDenoiser& ens);
EnsembleDenoiser load_ensemble(const std::string& manifest_path);

// SampleRecord round-trips bit-exactly through JSON.
std::string sample_record_to_json(const SampleRecord& rec);
SampleRecord sample_record_from_json(const std::string& text);
void save_sample_record(const std::string& path, const SampleRecord& rec);
SampleRecord load_sample_record(const std::string& path);

}  // namespace attribens
