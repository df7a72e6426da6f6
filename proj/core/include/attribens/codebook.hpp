#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace attribens {

// C(n, k) with saturation at uint64 max; returns 0 when k > n.
std::uint64_t binomial(unsigned n, unsigned k) noexcept;

// Fixed-length binary code. Position p (1-indexed, p <= 64) maps to mask bit
// p-1; strings are written position-1-first, so to_string()[0] is position 1.
struct Code {
  std::uint32_t length = 0;
  std::uint64_t mask = 0;

  bool test(unsigned pos1) const noexcept { return (mask >> (pos1 - 1)) & 1u; }
  unsigned weight() const noexcept { return static_cast<unsigned>(__builtin_popcountll(mask)); }
  std::string to_string() const;
  static Code from_string(const std::string& bits);

  friend bool operator==(const Code&, const Code&) = default;
};

// A constant-weight codebook: one weight-h length-n code per group, plus the
// item -> group map. An empty group_of means one item per group (identity).
struct Codebook {
  std::uint32_t n = 0;
  std::uint32_t h = 0;
  std::uint64_t seed = 0;
  std::vector<Code> codes;
  std::vector<std::uint32_t> group_of;

  std::size_t num_groups() const noexcept { return codes.size(); }
  std::size_t num_items() const noexcept {
    return group_of.empty() ? codes.size() : group_of.size();
  }
  std::uint32_t group_of_item(std::size_t item) const {
    return group_of.empty() ? static_cast<std::uint32_t>(item) : group_of[item];
  }
};

struct CodeParams {
  std::uint32_t n;
  std::uint32_t h;
};

// Smallest even n with C(n, n/2) >= num_groups (or >= 2*num_groups when
// doubled, the capacity margin the bias bounds assume).
CodeParams min_code_params(std::uint64_t num_groups, bool doubled = false);

// num_groups distinct weight-h codes drawn uniformly without replacement,
// assigned to groups 0..num_groups-1 in draw order. Deterministic in seed.
// Requires h <= n <= 64 and C(n, h) >= num_groups. group_of is left empty
// (per-item groups); callers with coarser groups bind labels afterwards.
Codebook assign_codes(std::size_t num_groups, unsigned n, unsigned h, std::uint64_t seed);

// The seven weight-3 length-7 class codes obtained from the order-8 Walsh
// matrix by dropping the all-ones row/column and mapping -1 -> 0.
std::vector<Code> walsh_class_codes();

// Codebook over class groups: group g's split sees exactly the items labelled
// g. Labels must cover 0..6 (Walsh codes are a fixed 7-class design).
Codebook walsh_class_codebook(std::span<const std::uint32_t> class_labels, std::uint64_t seed = 0);

// Replaces the item -> group map; labels[i] must be a valid group index.
void bind_groups(Codebook& cb, std::span<const std::uint32_t> labels);

// Split i = indices of items whose group code has a 1 at position i+1.
std::vector<std::vector<std::size_t>> splits(const Codebook& cb, std::size_t dataset_size);

// Model indices (0-based) that trained on the item, i.e. the set positions of
// its group's code. Size is always h.
std::vector<std::size_t> ablation_models(const Codebook& cb, std::size_t item);

struct CoverageResult {
  bool ok = false;
  // (ablated group, group whose models were all removed) when !ok.
  std::optional<std::pair<std::size_t, std::size_t>> violation;
};

// Exhaustive pairwise check of the retrieval-coverage guarantee: ablating any
// group leaves at least one model trained on every other group.
CoverageResult verify_coverage(const Codebook& cb);

struct WeightVector {
  std::vector<double> weights;

  std::size_t size() const noexcept { return weights.size(); }
  double operator[](std::size_t i) const noexcept { return weights[i]; }
};

// Uniform 1/n weights, or with `item` the ablated vector: 0 on the item's h
// models, 1/(n-h) elsewhere. Requires h < n in the ablated case.
WeightVector weight_vector(const Codebook& cb, std::optional<std::size_t> item = std::nullopt);

// Ablated weights addressed by group rather than item.
WeightVector group_weight_vector(const Codebook& cb, std::size_t group);

// JSON manifest (version, n, h, seed, groups with code bit strings and item
// indices). Round-trips exactly.
std::string codebook_to_json(const Codebook& cb);
Codebook codebook_from_json(const std::string& text);
void save_codebook(const std::string& path, const Codebook& cb);
Codebook load_codebook(const std::string& path);

}  // namespace attribens
