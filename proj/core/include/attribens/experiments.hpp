#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "attribens/ensemble.hpp"
#include "attribens/tensor.hpp"

namespace attribens {

// Generator parameters; a dataset is reproduced from its descriptor alone, so
// manifests store the descriptor instead of the tensors.
struct DatasetDescriptor {
  std::string family;         // "glyphs" | "gaussian_mixture"
  std::size_t class_count = 7;
  std::size_t per_class = 0;
  std::size_t dim = 2;        // gaussian_mixture only
  double jitter = 0.5;        // glyphs: jitter; gaussian_mixture: separation
  std::uint64_t seed = 0;

  bool operator==(const DatasetDescriptor&) const = default;
};

struct ToyDataset {
  std::vector<Tensor> items;
  std::vector<std::uint32_t> labels;
  DatasetDescriptor descriptor;

  std::size_t size() const noexcept { return items.size(); }
  std::size_t class_count() const noexcept { return descriptor.class_count; }
};

// 8x8 procedural shape classes (three horizontal bar positions, three
// vertical bar positions, and a solid field), foreground +1 on background
// -1. jitter
// controls integer positional offsets (up to round(2*jitter) pixels) plus
// additive Gaussian noise with sigma = 0.1*jitter. jitter = 0 makes every
// item of a class identical.
ToyDataset gen_glyphs(std::size_t class_count, std::size_t per_class, double jitter,
                      std::uint64_t seed);

// Isotropic unit-variance Gaussians with means spaced on a circle of radius
// `separation` in the first two coordinates (on a line for dim = 1).
ToyDataset gen_gaussian_mixture(std::size_t class_count, std::size_t per_class, std::size_t dim,
                                double separation, std::uint64_t seed);

ToyDataset generate_dataset(const DatasetDescriptor& d);

std::string dataset_descriptor_to_json(const DatasetDescriptor& d);
DatasetDescriptor dataset_descriptor_from_json(const std::string& text);

struct NearestCentroidClassifier {
  std::vector<std::vector<double>> centroids;  // [class][feature]

  std::size_t classify(std::span<const double> x) const;
  std::size_t classify(const Tensor& x) const;
};

// Per-class mean of the training items. Every class must be populated.
NearestCentroidClassifier fit_nearest_centroid(const ToyDataset& train);

// argmin over class centroids of Euclidean distance; ties go to the lower
// class index.
std::size_t nearest_centroid_classify(const ToyDataset& train, const Tensor& x);

// counts[(ablated class, classified class)]; every row sums to the number of
// generated samples.
struct ClassFrequencyMatrix {
  std::size_t classes = 0;
  std::vector<std::size_t> counts;

  std::size_t at(std::size_t ablated, std::size_t classified) const {
    return counts[ablated * classes + classified];
  }
  std::size_t& at(std::size_t ablated, std::size_t classified) {
    return counts[ablated * classes + classified];
  }
};

struct ClassAblationResult {
  ClassFrequencyMatrix matrix;                   // row = ablated class
  std::vector<std::size_t> unablated_counts;     // classified classes, no ablation
  double argmax_accuracy = 0.0;                  // most-changed ablation == predicted class
  std::vector<double> own_class_distances;       // ablated class == predicted class
  std::vector<double> other_class_distances;
  double own_median = 0.0;
  double other_median = 0.0;
  double own_class_change_rate = 0.0;            // counterfactual classified differently
  double other_class_change_rate = 0.0;
  std::size_t num_samples = 0;
};

// Generates num_samples records; for each one the full-ensemble sample plus
// one counterfactual per ablated class, all classified and measured. Requires
// the 7-member Walsh class design.
ClassAblationResult class_ablation_experiment(const EnsembleDenoiser& ens,
                                              const NearestCentroidClassifier& clf,
                                              std::size_t num_samples, std::uint64_t seed);

struct ConvergenceResult {
  std::vector<double> mean_distance;   // index k-1: mean ||y_k - y_n||; last entry 0
  std::vector<double> mean_increment;  // index k-1: mean ||y_{k+1} - y_k||, k = 1..n-1
  std::size_t num_records = 0;
};

// Nested sub-ensemble outputs over num_records shared records, aggregated
// into per-size distance-to-full and step-increment curves.
ConvergenceResult convergence_experiment(const EnsembleDenoiser& ens, std::size_t num_records,
                                         std::uint64_t seed);

struct FidelityResult {
  // Per-sample correlation of approximated vs true counterfactuals: Pearson
  // over pooled displacement entries, Spearman over per-ablation displacement
  // magnitudes.
  std::vector<double> pearson_jacobian, pearson_last_step, pearson_individual;
  std::vector<double> spearman_jacobian, spearman_last_step, spearman_individual;
  std::size_t num_samples = 0;
  std::size_t num_ablations = 0;
};

// For each sample: true group-ablation counterfactuals, the Jacobian
// linearization, and both baselines, compared per sample. Ablated groups are
// drawn without replacement per sample.
FidelityResult jacobian_fidelity_experiment(const EnsembleDenoiser& ens, std::size_t num_samples,
                                            std::size_t num_ablations, std::uint64_t seed);

struct CoherenceResult {
  double ensemble_value = 0.0;
  std::vector<double> member_values;  // one per member
  std::size_t num_samples = 0;
};

// Frechet-Gaussian distance from the training set to ensemble samples and to
// each member's solo samples, all driven by the same records.
CoherenceResult coherence_experiment(const EnsembleDenoiser& ens,
                                     const std::vector<Tensor>& train_items,
                                     std::size_t num_samples, std::uint64_t seed);

// CSV tables and human-readable summaries (with per-criterion pass/fail
// lines) for the experiment drivers.
std::string class_ablation_csv(const ClassAblationResult& r);
std::string class_ablation_summary(const ClassAblationResult& r);
std::string convergence_csv(const ConvergenceResult& r);
std::string convergence_summary(const ConvergenceResult& r);
std::string fidelity_csv(const FidelityResult& r);
std::string fidelity_summary(const FidelityResult& r);
std::string coherence_csv(const CoherenceResult& r);
std::string coherence_summary(const CoherenceResult& r);

}  // namespace attribens
