#include "attribens/codebook.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "attribens/rng.hpp"
#include "io_util.hpp"

namespace attribens {
namespace {

using json = nlohmann::ordered_json;

constexpr std::uint64_t kU64Max = std::numeric_limits<std::uint64_t>::max();

// Pascal's triangle up to n = 64 (largest entry C(64,32) still fits uint64).
const std::array<std::array<std::uint64_t, 65>, 65>& pascal_table() {
  static const auto table = [] {
    std::array<std::array<std::uint64_t, 65>, 65> t{};
    for (unsigned n = 0; n <= 64; ++n) {
      t[n][0] = 1;
      for (unsigned k = 1; k <= n; ++k)
        t[n][k] = t[n - 1][k - 1] + (k <= n - 1 ? t[n - 1][k] : 0);
    }
    return t;
  }();
  return table;
}

// Lexicographic unranking: rank 0 is the code with the h lowest positions set.
std::uint64_t unrank_combination(std::uint64_t rank, unsigned n, unsigned h) {
  std::uint64_t mask = 0;
  unsigned k = h;
  for (unsigned pos = 1; pos <= n && k > 0; ++pos) {
    const std::uint64_t with_bit = binomial(n - pos, k - 1);
    if (rank < with_bit) {
      mask |= 1ULL << (pos - 1);
      --k;
    } else {
      rank -= with_bit;
    }
  }
  return mask;
}

}  // namespace

std::uint64_t binomial(unsigned n, unsigned k) noexcept {
  if (k > n) return 0;
  if (n <= 64) return pascal_table()[n][k];
  if (k > n - k) k = n - k;
  unsigned __int128 r = 1;
  for (unsigned i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;  // partial product is C(n-k+i, i), always integral
    if (r > kU64Max) return kU64Max;
  }
  return static_cast<std::uint64_t>(r);
}

std::string Code::to_string() const {
  std::string s(length, '0');
  for (unsigned p = 1; p <= length; ++p)
    if (test(p)) s[p - 1] = '1';
  return s;
}

Code Code::from_string(const std::string& bits) {
  if (bits.empty() || bits.size() > 64)
    throw std::invalid_argument("code string must have length 1..64");
  Code c{static_cast<std::uint32_t>(bits.size()), 0};
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == '1')
      c.mask |= 1ULL << i;
    else if (bits[i] != '0')
      throw std::invalid_argument("code string must be binary");
  }
  return c;
}

CodeParams min_code_params(std::uint64_t num_groups, bool doubled) {
  if (num_groups == 0) throw std::invalid_argument("min_code_params: need at least one group");
  const std::uint64_t need =
      doubled ? (num_groups > kU64Max / 2 ? kU64Max : 2 * num_groups) : num_groups;
  for (unsigned n = 2;; n += 2) {
    if (binomial(n, n / 2) >= need) return CodeParams{n, n / 2};
    if (n >= 128) throw std::invalid_argument("min_code_params: capacity out of range");
  }
}

Codebook assign_codes(std::size_t num_groups, unsigned n, unsigned h, std::uint64_t seed) {
  if (n == 0 || n > 64) throw std::invalid_argument("assign_codes: n must be in 1..64");
  if (h == 0 || h > n) throw std::invalid_argument("assign_codes: h must be in 1..n");
  const std::uint64_t capacity = binomial(n, h);
  if (capacity < num_groups)
    throw std::invalid_argument("assign_codes: C(n,h) smaller than group count");

  // Sequential sampling without replacement over combination ranks, done as a
  // lazy Fisher-Yates so memory is O(num_groups) even when C(n,h) is huge.
  RngStream rng{seed, /*stream_id=*/0, /*counter=*/0};
  std::unordered_map<std::uint64_t, std::uint64_t> moved;
  moved.reserve(num_groups * 2);
  auto slot = [&moved](std::uint64_t idx) {
    auto it = moved.find(idx);
    return it == moved.end() ? idx : it->second;
  };

  Codebook cb;
  cb.n = n;
  cb.h = h;
  cb.seed = seed;
  cb.codes.reserve(num_groups);
  for (std::uint64_t i = 0; i < num_groups; ++i) {
    const std::uint64_t j = i + next_below(rng, capacity - i);
    const std::uint64_t rank = slot(j);
    moved[j] = slot(i);
    cb.codes.push_back(Code{n, unrank_combination(rank, n, h)});
  }
  return cb;
}

std::vector<Code> walsh_class_codes() {
  // Row/column 1..7 of the order-8 Walsh (Sylvester) matrix, whose (i,j) entry
  // is +1 iff popcount(i & j) is even; the all-ones row/column 0 is dropped
  // and +1 maps to bit 1. Every code has weight 3 and any two share exactly
  // one common set position.
  std::vector<Code> codes;
  codes.reserve(7);
  for (unsigned i = 1; i <= 7; ++i) {
    Code c{7, 0};
    for (unsigned j = 1; j <= 7; ++j)
      if (std::popcount(i & j) % 2 == 0) c.mask |= 1ULL << (j - 1);
    codes.push_back(c);
  }
  return codes;
}

Codebook walsh_class_codebook(std::span<const std::uint32_t> class_labels, std::uint64_t seed) {
  Codebook cb;
  cb.n = 7;
  cb.h = 3;
  cb.seed = seed;
  cb.codes = walsh_class_codes();
  bind_groups(cb, class_labels);
  std::array<bool, 7> seen{};
  for (std::uint32_t l : class_labels) seen[l] = true;
  for (unsigned c = 0; c < 7; ++c)
    if (!seen[c])
      throw std::invalid_argument("walsh_class_codebook: class " + std::to_string(c) +
                                  " has no items");
  return cb;
}

void bind_groups(Codebook& cb, std::span<const std::uint32_t> labels) {
  for (std::uint32_t l : labels)
    if (l >= cb.num_groups())
      throw std::invalid_argument("bind_groups: label exceeds group count");
  cb.group_of.assign(labels.begin(), labels.end());
}

std::vector<std::vector<std::size_t>> splits(const Codebook& cb, std::size_t dataset_size) {
  if (dataset_size != cb.num_items())
    throw std::invalid_argument("splits: dataset size does not match codebook binding");
  std::vector<std::vector<std::size_t>> out(cb.n);
  for (std::size_t item = 0; item < dataset_size; ++item) {
    const Code& code = cb.codes.at(cb.group_of_item(item));
    for (unsigned p = 1; p <= cb.n; ++p)
      if (code.test(p)) out[p - 1].push_back(item);
  }
  return out;
}

std::vector<std::size_t> ablation_models(const Codebook& cb, std::size_t item) {
  if (item >= cb.num_items()) throw std::out_of_range("ablation_models: item out of range");
  const Code& code = cb.codes.at(cb.group_of_item(item));
  std::vector<std::size_t> models;
  models.reserve(code.weight());
  for (unsigned p = 1; p <= cb.n; ++p)
    if (code.test(p)) models.push_back(p - 1);
  return models;
}

CoverageResult verify_coverage(const Codebook& cb) {
  const std::size_t g = cb.num_groups();
  for (std::size_t ablated = 0; ablated < g; ++ablated) {
    const std::uint64_t not_removed = ~cb.codes[ablated].mask;
    for (std::size_t other = 0; other < g; ++other) {
      if (other == ablated) continue;
      // Every model of `other` removed <=> its support lies inside `ablated`'s.
      if ((cb.codes[other].mask & not_removed) == 0)
        return CoverageResult{false, std::make_pair(ablated, other)};
    }
  }
  return CoverageResult{true, std::nullopt};
}

WeightVector weight_vector(const Codebook& cb, std::optional<std::size_t> item) {
  if (cb.n == 0) throw std::invalid_argument("weight_vector: empty codebook");
  if (!item) {
    WeightVector v;
    v.weights.assign(cb.n, 1.0 / cb.n);
    return v;
  }
  if (*item >= cb.num_items()) throw std::out_of_range("weight_vector: item out of range");
  return group_weight_vector(cb, cb.group_of_item(*item));
}

WeightVector group_weight_vector(const Codebook& cb, std::size_t group) {
  if (group >= cb.num_groups()) throw std::out_of_range("group_weight_vector: group out of range");
  const Code& code = cb.codes[group];
  const unsigned removed = code.weight();
  if (removed >= cb.n)
    throw std::invalid_argument("group_weight_vector: ablation removes every model");
  WeightVector v;
  v.weights.assign(cb.n, 1.0 / static_cast<double>(cb.n - removed));
  for (unsigned p = 1; p <= cb.n; ++p)
    if (code.test(p)) v.weights[p - 1] = 0.0;
  return v;
}

std::string codebook_to_json(const Codebook& cb) {
  json groups = json::array();
  std::vector<std::vector<std::size_t>> items_of(cb.num_groups());
  for (std::size_t item = 0; item < cb.num_items(); ++item)
    items_of[cb.group_of_item(item)].push_back(item);
  for (std::size_t g = 0; g < cb.num_groups(); ++g) {
    groups.push_back(json{{"group_id", g},
                          {"code_bits", cb.codes[g].to_string()},
                          {"item_indices", items_of[g]}});
  }
  json doc{{"version", 1}, {"n", cb.n}, {"h", cb.h}, {"seed", cb.seed}, {"groups", groups}};
  return doc.dump(2) + "\n";
}

Codebook codebook_from_json(const std::string& text) {
  json doc = json::parse(text);
  if (doc.at("version").get<int>() != 1)
    throw std::runtime_error("codebook manifest: unsupported version");
  Codebook cb;
  cb.n = doc.at("n").get<std::uint32_t>();
  cb.h = doc.at("h").get<std::uint32_t>();
  cb.seed = doc.at("seed").get<std::uint64_t>();
  if (cb.n == 0 || cb.n > 64 || cb.h == 0 || cb.h > cb.n)
    throw std::runtime_error("codebook manifest: invalid (n, h)");

  std::vector<std::pair<std::size_t, std::size_t>> item_to_group;
  std::unordered_set<std::uint64_t> distinct;
  for (const auto& g : doc.at("groups")) {
    const auto gid = g.at("group_id").get<std::size_t>();
    if (gid != cb.codes.size())
      throw std::runtime_error("codebook manifest: group ids must be 0..G-1 in order");
    Code code = Code::from_string(g.at("code_bits").get<std::string>());
    if (code.length != cb.n || code.weight() != cb.h)
      throw std::runtime_error("codebook manifest: code does not match (n, h)");
    if (!distinct.insert(code.mask).second)
      throw std::runtime_error("codebook manifest: duplicate code");
    cb.codes.push_back(code);
    for (const auto& it : g.at("item_indices"))
      item_to_group.emplace_back(it.get<std::size_t>(), gid);
  }
  if (!item_to_group.empty()) {
    std::sort(item_to_group.begin(), item_to_group.end());
    cb.group_of.resize(item_to_group.size());
    for (std::size_t i = 0; i < item_to_group.size(); ++i) {
      if (item_to_group[i].first != i)
        throw std::runtime_error("codebook manifest: item indices must partition 0..N-1");
      cb.group_of[i] = static_cast<std::uint32_t>(item_to_group[i].second);
    }
  }
  return cb;
}

void save_codebook(const std::string& path, const Codebook& cb) {
  detail::write_file_atomic(path, codebook_to_json(cb));
}

Codebook load_codebook(const std::string& path) {
  return codebook_from_json(detail::read_file(path));
}

}  // namespace attribens
