#include "attribens/theory_oracle.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "attribens/codebook.hpp"

namespace attribens::oracle {
namespace {

std::vector<std::size_t> subset_from_mask(std::uint32_t mask) {
  std::vector<std::size_t> s;
  for (unsigned i = 0; mask; ++i, mask >>= 1)
    if (mask & 1) s.push_back(i);
  return s;
}

void check_trainer(const AbstractTrainer& trainer) {
  if (!trainer.train || !trainer.evaluate)
    throw std::invalid_argument("oracle: trainer callbacks must be set");
  if (!(trainer.bound > 0)) throw std::invalid_argument("oracle: trainer bound must be positive");
}

// Mean over noise values of evaluate(probe, train(subset, r)); the basic cell
// every oracle below averages over.
std::vector<double> cell_value(const AbstractTrainer& trainer, std::uint32_t subset_mask,
                               std::span<const double> probe,
                               std::span<const double> noise_values) {
  const auto subset = subset_from_mask(subset_mask);
  std::vector<double> acc;
  for (double r : noise_values) {
    const auto token = trainer.train(subset, r);
    const auto val = trainer.evaluate(probe, token);
    if (acc.empty())
      acc.assign(val.size(), 0.0);
    else if (val.size() != acc.size())
      throw std::invalid_argument("oracle: evaluate output dimension varies");
    for (double c : val)
      if (!(std::abs(c) <= trainer.bound))
        throw std::invalid_argument("oracle: evaluate output exceeds the stated bound");
    for (std::size_t i = 0; i < val.size(); ++i) acc[i] += val[i];
  }
  for (double& a : acc) a /= static_cast<double>(noise_values.size());
  return acc;
}

struct EnumerationContext {
  std::vector<std::uint64_t> code_masks;       // all C(n,h) codes
  std::vector<std::vector<double>> cell;       // subset mask -> mean evaluate
  unsigned n = 0;
  std::size_t items = 0;
  std::size_t dim = 0;
};

EnumerationContext build_context(const AbstractTrainer& trainer, std::size_t dataset_size,
                                 unsigned n, unsigned h, std::span<const double> probe,
                                 std::span<const double> noise_values) {
  check_trainer(trainer);
  if (dataset_size == 0 || dataset_size > 20)
    throw std::invalid_argument("oracle: dataset size must be 1..20");
  if (noise_values.empty()) throw std::invalid_argument("oracle: need at least one noise value");
  if (n != 2 * h) throw std::invalid_argument("oracle: bias bounds assume n = 2h");
  const std::uint64_t capacity = binomial(n, h);
  if (capacity < 2 * static_cast<std::uint64_t>(dataset_size))
    throw std::invalid_argument("oracle: bias bounds assume C(n,h) >= 2|X|");

  double total = 1.0;
  for (std::size_t i = 0; i < dataset_size; ++i) total *= static_cast<double>(capacity - i);
  if (total > 5e6)
    throw std::invalid_argument("oracle: assignment enumeration too large (" +
                                std::to_string(total) + " > 5e6)");

  EnumerationContext ctx;
  ctx.n = n;
  ctx.items = dataset_size;
  // Codes in ascending mask order; the distribution is uniform over ordered
  // injective assignments, so the listing order is immaterial.
  for (std::uint64_t m = 0; m < (1ULL << n); ++m)
    if (static_cast<unsigned>(__builtin_popcountll(m)) == h) ctx.code_masks.push_back(m);

  ctx.cell.resize(1u << dataset_size);
  for (std::uint32_t s = 0; s < (1u << dataset_size); ++s)
    ctx.cell[s] = cell_value(trainer, s, probe, noise_values);
  ctx.dim = ctx.cell[0].size();
  return ctx;
}

// Walks every ordered injective assignment of codes to items, maintaining the
// per-position item masks incrementally, and calls leaf() at each complete
// assignment with the assigned code indices.
template <typename Leaf>
void enumerate_assignments(const EnumerationContext& ctx, Leaf&& leaf) {
  std::vector<std::uint32_t> position_mask(ctx.n, 0);
  std::vector<bool> used(ctx.code_masks.size(), false);
  std::vector<std::size_t> chosen(ctx.items, 0);

  auto recurse = [&](auto&& self, std::size_t item) -> void {
    if (item == ctx.items) {
      leaf(position_mask, chosen);
      return;
    }
    for (std::size_t c = 0; c < ctx.code_masks.size(); ++c) {
      if (used[c]) continue;
      used[c] = true;
      chosen[item] = c;
      std::uint64_t bits = ctx.code_masks[c];
      while (bits) {
        const unsigned p = static_cast<unsigned>(__builtin_ctzll(bits));
        position_mask[p] |= 1u << item;
        bits &= bits - 1;
      }
      self(self, item + 1);
      bits = ctx.code_masks[c];
      while (bits) {
        const unsigned p = static_cast<unsigned>(__builtin_ctzll(bits));
        position_mask[p] &= ~(1u << item);
        bits &= bits - 1;
      }
      used[c] = false;
    }
  };
  recurse(recurse, 0);
}

double linf_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Tolerance for the internal theorem assertion: the guarantee is exact in
// real arithmetic, the slack only absorbs accumulated rounding.
double float_slack(double bound) { return 1e-9 * (1.0 + std::abs(bound)); }

}  // namespace

std::vector<double> exact_ensemble_mean(const AbstractTrainer& trainer, std::size_t dataset_size,
                                        std::span<const double> probe,
                                        std::span<const double> noise_values) {
  check_trainer(trainer);
  if (dataset_size == 0 || dataset_size > 20)
    throw std::invalid_argument("oracle: dataset size must be 1..20");
  if (noise_values.empty()) throw std::invalid_argument("oracle: need at least one noise value");
  std::vector<double> acc;
  const std::uint32_t subsets = 1u << dataset_size;
  for (std::uint32_t s = 0; s < subsets; ++s) {
    const auto val = cell_value(trainer, s, probe, noise_values);
    if (acc.empty()) acc.assign(val.size(), 0.0);
    for (std::size_t i = 0; i < val.size(); ++i) acc[i] += val[i];
  }
  for (double& a : acc) a /= static_cast<double>(subsets);
  return acc;
}

std::vector<double> exact_ablated_mean(const AbstractTrainer& trainer, std::size_t dataset_size,
                                       std::size_t excluded_item, std::span<const double> probe,
                                       std::span<const double> noise_values) {
  check_trainer(trainer);
  if (dataset_size == 0 || dataset_size > 20)
    throw std::invalid_argument("oracle: dataset size must be 1..20");
  if (excluded_item >= dataset_size)
    throw std::invalid_argument("oracle: excluded item out of range");
  if (noise_values.empty()) throw std::invalid_argument("oracle: need at least one noise value");
  std::vector<double> acc;
  std::size_t count = 0;
  for (std::uint32_t s = 0; s < (1u << dataset_size); ++s) {
    if (s & (1u << excluded_item)) continue;
    const auto val = cell_value(trainer, s, probe, noise_values);
    if (acc.empty()) acc.assign(val.size(), 0.0);
    for (std::size_t i = 0; i < val.size(); ++i) acc[i] += val[i];
    ++count;
  }
  for (double& a : acc) a /= static_cast<double>(count);
  return acc;
}

BiasResult encoded_ensemble_bias(const AbstractTrainer& trainer, std::size_t dataset_size,
                                 unsigned n, unsigned h, std::span<const double> probe,
                                 std::span<const double> noise_values) {
  const auto ctx = build_context(trainer, dataset_size, n, h, probe, noise_values);

  std::vector<double> expectation(ctx.dim, 0.0);
  std::vector<double> ensemble(ctx.dim);
  std::size_t assignments = 0;
  enumerate_assignments(ctx, [&](const std::vector<std::uint32_t>& position_mask,
                                 const std::vector<std::size_t>&) {
    std::fill(ensemble.begin(), ensemble.end(), 0.0);
    for (unsigned p = 0; p < ctx.n; ++p) {
      const auto& c = ctx.cell[position_mask[p]];
      for (std::size_t i = 0; i < ctx.dim; ++i) ensemble[i] += c[i];
    }
    for (std::size_t i = 0; i < ctx.dim; ++i)
      expectation[i] += ensemble[i] / static_cast<double>(ctx.n);
    ++assignments;
  });
  for (double& e : expectation) e /= static_cast<double>(assignments);

  const auto target = exact_ensemble_mean(trainer, dataset_size, probe, noise_values);
  const double bias = linf_diff(expectation, target);
  const double bound = std::log(16.0) * static_cast<double>((dataset_size - 1) * (dataset_size - 1)) *
                       trainer.bound / static_cast<double>(binomial(n, h));
  if (bias > bound + float_slack(bound))
    throw std::logic_error("encoded_ensemble_bias: measured bias exceeds the guarantee");
  return BiasResult{bias, bound};
}

BiasResult ablated_ensemble_bias(const AbstractTrainer& trainer, std::size_t dataset_size,
                                 std::size_t excluded_item, unsigned n, unsigned h,
                                 std::span<const double> probe,
                                 std::span<const double> noise_values) {
  if (excluded_item >= dataset_size)
    throw std::invalid_argument("oracle: excluded item out of range");
  const auto ctx = build_context(trainer, dataset_size, n, h, probe, noise_values);

  std::vector<double> expectation(ctx.dim, 0.0);
  std::vector<double> ensemble(ctx.dim);
  std::size_t assignments = 0;
  const unsigned survivors = n - h;
  enumerate_assignments(ctx, [&](const std::vector<std::uint32_t>& position_mask,
                                 const std::vector<std::size_t>& chosen) {
    const std::uint64_t excluded_code = ctx.code_masks[chosen[excluded_item]];
    std::fill(ensemble.begin(), ensemble.end(), 0.0);
    for (unsigned p = 0; p < ctx.n; ++p) {
      if ((excluded_code >> p) & 1) continue;  // this model saw the item; drop it
      const auto& c = ctx.cell[position_mask[p]];
      for (std::size_t i = 0; i < ctx.dim; ++i) ensemble[i] += c[i];
    }
    for (std::size_t i = 0; i < ctx.dim; ++i)
      expectation[i] += ensemble[i] / static_cast<double>(survivors);
    ++assignments;
  });
  for (double& e : expectation) e /= static_cast<double>(assignments);

  const auto target =
      exact_ablated_mean(trainer, dataset_size, excluded_item, probe, noise_values);
  const double bias = linf_diff(expectation, target);
  const double bound = std::log(16.0) *
                       static_cast<double>(dataset_size) * static_cast<double>(dataset_size) *
                       trainer.bound / static_cast<double>(binomial(n, h));
  if (bias > bound + float_slack(bound))
    throw std::logic_error("ablated_ensemble_bias: measured bias exceeds the guarantee");
  return BiasResult{bias, bound};
}

CollisionResult collision_probability(unsigned n, unsigned h, std::uint64_t num_items) {
  const std::uint64_t capacity = binomial(n, h);
  if (num_items == 0) throw std::invalid_argument("collision_probability: need num_items >= 1");
  if (capacity < 2 * num_items)
    throw std::invalid_argument("collision_probability: requires C(n,h) >= 2*num_items");

  // Survival of the birthday draw, accumulated in log space so huge C(n,h)
  // and long products stay stable: P(all distinct) = prod_{i<k} (1 - i/C).
  double log_survival = 0.0;
  for (std::uint64_t i = 1; i < num_items; ++i)
    log_survival += std::log1p(-static_cast<double>(i) / static_cast<double>(capacity));
  const double exact = -std::expm1(log_survival);

  const double km1 = static_cast<double>(num_items - 1);
  const double bound = std::log(4.0) * km1 * km1 / static_cast<double>(capacity);
  if (exact > bound + float_slack(bound))
    throw std::logic_error("collision_probability: exact value exceeds the guarantee");
  return CollisionResult{exact, bound};
}

std::vector<SetSystem> enumerate_balanced_systems(std::size_t ground_size) {
  if (ground_size == 0 || ground_size > 4)
    throw std::invalid_argument("enumerate_balanced_systems: ground size must be 1..4");
  const std::uint32_t member_count = (1u << ground_size) - 1;  // nonempty subsets

  std::vector<SetSystem> found;
  for (std::uint32_t family = 0; family < (1u << member_count); ++family) {
    std::vector<std::uint32_t> members;
    for (std::uint32_t m = 1; m <= member_count; ++m)
      if (family & (1u << (m - 1))) members.push_back(m);

    bool balanced = true;
    // Constant element count z1 over all ground elements.
    int z1 = -1;
    for (std::size_t e = 0; e < ground_size && balanced; ++e) {
      int c = 0;
      for (std::uint32_t m : members) c += (m >> e) & 1;
      if (z1 < 0) z1 = c;
      balanced = (c == z1);
    }
    // Constant pair count z2 over all distinct pairs.
    int z2 = -1;
    for (std::size_t e1 = 0; e1 < ground_size && balanced; ++e1)
      for (std::size_t e2 = e1 + 1; e2 < ground_size && balanced; ++e2) {
        int c = 0;
        for (std::uint32_t m : members) c += ((m >> e1) & 1) & ((m >> e2) & 1);
        if (z2 < 0) z2 = c;
        balanced = (c == z2);
      }
    if (!balanced) continue;

    if (members.size() > 1 && members.size() < ground_size)
      throw std::logic_error("enumerate_balanced_systems: found a forbidden system size");
    found.push_back(SetSystem{ground_size, std::move(members)});
  }
  return found;
}

}  // namespace attribens::oracle
