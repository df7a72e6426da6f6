#include "doctest.h"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <vector>

#include "attribens/codebook.hpp"

using namespace attribens;

namespace {

bool same_codebook(const Codebook& a, const Codebook& b) {
  if (a.n != b.n || a.h != b.h || a.seed != b.seed) return false;
  if (a.codes != b.codes) return false;
  if (a.num_items() != b.num_items()) return false;
  for (std::size_t i = 0; i < a.num_items(); ++i)
    if (a.group_of_item(i) != b.group_of_item(i)) return false;
  return true;
}

}  // namespace

TEST_SUITE("codebook") {

TEST_CASE("binomial: exact values, zero above diagonal, saturation") {
  CHECK(binomial(0, 0) == 1);
  CHECK(binomial(3, 2) == 3);
  CHECK(binomial(6, 3) == 20);
  CHECK(binomial(16, 8) == 12870);
  CHECK(binomial(20, 10) == 184756);
  CHECK(binomial(64, 32) == 1832624140942590534ULL);
  CHECK(binomial(2, 3) == 0);
  // C(68,34) ~ 2.8e19 exceeds uint64; must clamp, not wrap.
  CHECK(binomial(68, 34) == ~std::uint64_t{0});
}

TEST_CASE("code string round trip and position semantics") {
  Code c = Code::from_string("0101010");
  CHECK(c.length == 7);
  CHECK(c.weight() == 3);
  CHECK(c.to_string() == "0101010");
  CHECK(!c.test(1));
  CHECK(c.test(2));
  CHECK(c.test(4));
  CHECK(c.test(6));
  CHECK(!c.test(7));

  Code d = Code::from_string("110");
  CHECK(d.test(1));
  CHECK(d.test(2));
  CHECK(!d.test(3));

  CHECK_THROWS_AS(Code::from_string("10x"), std::invalid_argument);
  CHECK_THROWS_AS(Code::from_string(std::string(65, '1')), std::invalid_argument);
}

TEST_CASE("min_code_params picks the smallest even length") {
  auto p = min_code_params(10000);
  CHECK(p.n == 16);
  CHECK(p.h == 8);
  p = min_code_params(60000);
  CHECK(p.n == 20);
  CHECK(p.h == 10);
  p = min_code_params(1);
  CHECK(p.n == 2);
  CHECK(p.h == 1);
  p = min_code_params(4, /*doubled=*/true);  // needs C(n,h) >= 8 -> (6,3)
  CHECK(p.n == 6);
  CHECK(p.h == 3);
  CHECK_THROWS_AS(min_code_params(0), std::invalid_argument);
}

TEST_CASE("assign_codes: distinct weight-h codes, deterministic, capacity-checked") {
  // Only three weight-2 codes of length 3 exist; all must be used.
  Codebook cb3 = assign_codes(3, 3, 2, 123);
  std::set<std::uint64_t> masks;
  for (const Code& c : cb3.codes) {
    CHECK(c.length == 3);
    CHECK(c.weight() == 2);
    masks.insert(c.mask);
  }
  CHECK(masks.size() == 3);
  CHECK(cb3.group_of.empty());
  CHECK(cb3.num_items() == 3);

  // Exhausting the full space C(16,8) uses every code exactly once.
  Codebook full = assign_codes(12870, 16, 8, 7);
  std::set<std::uint64_t> seen;
  for (const Code& c : full.codes) {
    CHECK(c.weight() == 8);
    seen.insert(c.mask);
  }
  CHECK(seen.size() == 12870);

  Codebook again = assign_codes(12870, 16, 8, 7);
  CHECK(same_codebook(full, again));
  Codebook other = assign_codes(200, 16, 8, 8);
  Codebook other2 = assign_codes(200, 16, 8, 9);
  CHECK(other.codes != other2.codes);

  CHECK_THROWS_AS(assign_codes(4, 3, 2, 0), std::invalid_argument);
  CHECK_THROWS_AS(assign_codes(2, 65, 4, 0), std::invalid_argument);
}

TEST_CASE("walsh_class_codes: the fixed 7-class design") {
  std::vector<Code> codes = walsh_class_codes();
  REQUIRE(codes.size() == 7);
  CHECK(codes[0].to_string() == "0101010");
  for (const Code& c : codes) {
    CHECK(c.length == 7);
    CHECK(c.weight() == 3);
  }
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = i + 1; j < 7; ++j) {
      Code a = codes[i], b = codes[j];
      CHECK(__builtin_popcountll(a.mask & b.mask) == 1);
    }
}

TEST_CASE("walsh_class_codebook binds labels and validates coverage of classes") {
  std::vector<std::uint32_t> labels;
  for (std::uint32_t c = 0; c < 7; ++c)
    for (int k = 0; k < 3; ++k) labels.push_back(c);
  Codebook cb = walsh_class_codebook(labels);
  CHECK(cb.num_groups() == 7);
  CHECK(cb.num_items() == labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) CHECK(cb.group_of_item(i) == labels[i]);

  std::vector<std::uint32_t> missing = {0, 1, 2, 3, 4, 5};  // class 6 absent
  CHECK_THROWS_AS(walsh_class_codebook(missing), std::invalid_argument);
}

TEST_CASE("splits read off code positions") {
  Codebook cb;
  cb.n = 3;
  cb.h = 2;
  cb.codes = {Code::from_string("110"), Code::from_string("101"), Code::from_string("011")};
  auto sp = splits(cb, 3);
  REQUIRE(sp.size() == 3);
  CHECK(sp[0] == std::vector<std::size_t>{0, 1});
  CHECK(sp[1] == std::vector<std::size_t>{0, 2});
  CHECK(sp[2] == std::vector<std::size_t>{1, 2});
}

TEST_CASE("every item lands in exactly h splits") {
  Codebook cb = assign_codes(40, 10, 5, 3);
  auto sp = splits(cb, 40);
  std::vector<int> appearances(40, 0);
  for (const auto& s : sp)
    for (std::size_t item : s) appearances[item]++;
  for (int a : appearances) CHECK(a == 5);
}

TEST_CASE("class-grouped split sizes sum to h * dataset_size") {
  std::vector<std::uint32_t> labels;
  for (std::uint32_t c = 0; c < 7; ++c)
    for (int k = 0; k < 5; ++k) labels.push_back(c);
  Codebook cb = walsh_class_codebook(labels);
  auto sp = splits(cb, labels.size());
  std::size_t total = 0;
  for (const auto& s : sp) total += s.size();
  CHECK(total == 3 * labels.size());
}

TEST_CASE("ablation_models returns the set bit positions") {
  Codebook cb;
  cb.n = 3;
  cb.h = 2;
  cb.codes = {Code::from_string("110")};
  CHECK(ablation_models(cb, 0) == std::vector<std::size_t>{0, 1});
  CHECK_THROWS_AS(ablation_models(cb, 5), std::out_of_range);

  Codebook rnd = assign_codes(30, 12, 6, 9);
  for (std::size_t i = 0; i < 30; ++i) CHECK(ablation_models(rnd, i).size() == 6);
}

TEST_CASE("verify_coverage accepts valid books and pinpoints violations") {
  CHECK(verify_coverage(assign_codes(100, 12, 6, 4)).ok);

  Codebook dup;
  dup.n = 4;
  dup.h = 2;
  dup.codes = {Code::from_string("1100"), Code::from_string("1100")};
  CoverageResult r = verify_coverage(dup);
  CHECK(!r.ok);
  REQUIRE(r.violation.has_value());

  // Unequal weights: ablating 1110 removes every model 1100 trained on.
  Codebook contained;
  contained.n = 4;
  contained.h = 2;  // nominal; codes deliberately violate the constant-weight invariant
  contained.codes = {Code::from_string("1100"), Code::from_string("1110")};
  r = verify_coverage(contained);
  CHECK(!r.ok);
  REQUIRE(r.violation.has_value());
  CHECK(r.violation->first == 1);   // ablated group
  CHECK(r.violation->second == 0);  // group left with no surviving model
}

TEST_CASE("weight vectors: uniform, ablated, and group addressing") {
  Codebook cb;
  cb.n = 3;
  cb.h = 2;
  cb.codes = {Code::from_string("110"), Code::from_string("101"), Code::from_string("011")};

  WeightVector u0 = weight_vector(cb);
  REQUIRE(u0.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(u0[i] == doctest::Approx(1.0 / 3.0));

  WeightVector abl = weight_vector(cb, 0);  // code 110 -> lone survivor is model 3
  CHECK(abl[0] == 0.0);
  CHECK(abl[1] == 0.0);
  CHECK(abl[2] == 1.0);

  double sum = 0.0;
  for (std::size_t i = 0; i < abl.size(); ++i) sum += abl[i];
  CHECK(sum == doctest::Approx(1.0));

  CHECK(group_weight_vector(cb, 0).weights == abl.weights);

  // Walsh ablation: three zeros, four entries of 1/4.
  std::vector<std::uint32_t> labels = {0, 1, 2, 3, 4, 5, 6};
  Codebook walsh = walsh_class_codebook(labels);
  WeightVector wa = weight_vector(walsh, 2);
  int zeros = 0;
  for (std::size_t i = 0; i < wa.size(); ++i) {
    if (wa[i] == 0.0)
      zeros++;
    else
      CHECK(wa[i] == doctest::Approx(0.25));
  }
  CHECK(zeros == 3);
  for (std::size_t m : ablation_models(walsh, 2)) CHECK(wa[m] == 0.0);

  // h == n leaves no survivors; must be rejected.
  Codebook all;
  all.n = 2;
  all.h = 2;
  all.codes = {Code::from_string("11")};
  CHECK_THROWS_AS(weight_vector(all, 0), std::invalid_argument);
}

TEST_CASE("json round trip preserves the codebook") {
  Codebook cb = assign_codes(10, 8, 4, 31);
  std::vector<std::uint32_t> groups;
  for (std::uint32_t i = 0; i < 25; ++i) groups.push_back(i % 10);
  bind_groups(cb, groups);

  Codebook back = codebook_from_json(codebook_to_json(cb));
  CHECK(same_codebook(cb, back));

  auto path = std::filesystem::temp_directory_path() / "attribens_cb_test.json";
  save_codebook(path.string(), cb);
  Codebook loaded = load_codebook(path.string());
  CHECK(same_codebook(cb, loaded));
  std::filesystem::remove(path);

  CHECK_THROWS(codebook_from_json("{ not json"));
  CHECK_THROWS(codebook_from_json("{\"version\": 1}"));
}

TEST_CASE("bind_groups validates label range") {
  Codebook cb = assign_codes(4, 6, 3, 1);
  std::vector<std::uint32_t> bad = {0, 1, 2, 9};
  CHECK_THROWS_AS(bind_groups(cb, bad), std::invalid_argument);
}

}  // TEST_SUITE
