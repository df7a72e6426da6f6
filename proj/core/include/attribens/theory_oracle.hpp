#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace attribens::oracle {

// Abstract learner for the enumeration oracles: train maps (subset of item
// indices, noise value) to an opaque parameter token, evaluate maps (probe,
// token) to a vector with every coordinate in [-bound, bound]. The training
// noise distribution is collapsed to a small finite set supplied by callers.
struct AbstractTrainer {
  using Token = std::vector<double>;
  std::function<Token(std::span<const std::size_t> subset, double noise)> train;
  std::function<std::vector<double>(std::span<const double> probe, const Token&)> evaluate;
  double bound = 1.0;
};

// Subset-expectation target: the average of evaluate(probe, train(S, r)) over
// all 2^|X| subsets S (empty set included) and the given noise values.
// dataset_size = |X| <= 20 for tractability.
std::vector<double> exact_ensemble_mean(const AbstractTrainer& trainer, std::size_t dataset_size,
                                        std::span<const double> probe,
                                        std::span<const double> noise_values);

// Same average restricted to subsets that do not contain excluded_item.
std::vector<double> exact_ablated_mean(const AbstractTrainer& trainer, std::size_t dataset_size,
                                       std::size_t excluded_item, std::span<const double> probe,
                                       std::span<const double> noise_values);

struct BiasResult {
  double bias;   // max-norm gap between the encoded expectation and the target
  double bound;  // the closed-form guarantee for these parameters
};

// Exhaustively averages the n-model encoded ensemble over every ordered
// injective assignment of weight-h codes to the |X| items and compares with
// exact_ensemble_mean. Requires n = 2h, C(n,h) >= 2|X|, and a total assignment
// count <= ~5e6. Throws if the measured bias exceeds the bound (allowing a
// tiny float slack), since that would falsify the implementation.
BiasResult encoded_ensemble_bias(const AbstractTrainer& trainer, std::size_t dataset_size,
                                 unsigned n, unsigned h, std::span<const double> probe,
                                 std::span<const double> noise_values);

// Ablated variant: models trained on excluded_item are dropped and the
// survivor average is compared with exact_ablated_mean.
BiasResult ablated_ensemble_bias(const AbstractTrainer& trainer, std::size_t dataset_size,
                                 std::size_t excluded_item, unsigned n, unsigned h,
                                 std::span<const double> probe,
                                 std::span<const double> noise_values);

struct CollisionResult {
  double exact;  // P(any two of num_items draws from C(n,h) codes collide)
  double bound;  // ln(4) (num_items-1)^2 / C(n,h)
};

// Birthday collision probability for independent uniform code draws, computed
// in log space. Requires C(n,h) >= 2*num_items; asserts exact <= bound.
CollisionResult collision_probability(unsigned n, unsigned h, std::uint64_t num_items);

// Set system over a ground set {0..ground_size-1}; members are nonempty
// subsets encoded as bitmasks.
struct SetSystem {
  std::size_t ground_size = 0;
  std::vector<std::uint32_t> members;
};

// Enumerates every family of nonempty subsets with constant per-element count
// and constant per-pair count, and asserts each satisfies |M| <= 1 or
// |M| >= ground_size. ground_size <= 4 (the search is doubly exponential).
std::vector<SetSystem> enumerate_balanced_systems(std::size_t ground_size);

}  // namespace attribens::oracle
