#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "attribens/codebook.hpp"
#include "attribens/ensemble.hpp"
#include "attribens/tensor.hpp"

namespace attribens {

// d output / d weights at the uniform weight point, for one recorded
// trajectory. Row-major m x n (m = sample numel, n = members).
struct JacobianMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> entries;
  WeightVector base;
  NoiseRecord record;

  double at(std::size_t r, std::size_t c) const { return entries[r * cols + c]; }
};

// One forward-mode pass per column: the tangent is seeded on a single weight
// coordinate and carried through all T steps alongside the primal trajectory.
// Columns are independent and run under parallel_for.
JacobianMatrix compute_jacobian(const EnsembleDenoiser& ens, const NoiseRecord& record);

// First-order counterfactual y(v) ~ y(u0) + J (v - u0). At v = u0 this returns
// the original output bit-exactly.
Tensor approx_counterfactual(const SampleRecord& original, const JacobianMatrix& jac,
                             const WeightVector& v_target);

// || J (u_{-group} - u0) ||_2 : predicted output displacement when the group
// is ablated.
double influence_score(const JacobianMatrix& jac, const Codebook& cb, std::size_t group);

struct InfluenceReport {
  std::string sample_id;
  std::vector<double> scores;        // per group
  std::vector<std::size_t> ranking;  // all groups, descending score, ties by index
  std::size_t top_k = 0;             // how many entries reports/CSV expose
};

// Scores every group and ranks descending (ties broken by ascending group
// index). k only sets the exposed top-k; the full ranking is retained so
// dedup can refill.
InfluenceReport rank_all(const JacobianMatrix& jac, const Codebook& cb, std::size_t k,
                         std::string sample_id);

// Cross-sample dedup: iteratively bans every group that appears in >= 2 of
// the current top-k lists, refilling each list from its own ranking, until
// all lists are disjoint. Returns the reports with banned groups removed from
// their rankings. Throws if k * reports exceeds the group count, or if the
// rankings are so similar that some list cannot be refilled.
std::vector<InfluenceReport> dedup_top_lists(const std::vector<InfluenceReport>& reports,
                                             std::size_t k);

// Baseline: normal uniform-weight trajectory except that the very last step
// uses the ablated weights. With nullopt this is exactly the original sample.
Tensor baseline_last_step(const EnsembleDenoiser& ens, std::optional<std::size_t> item,
                          const NoiseRecord& record);

// Baseline: per-member solo generations y_i on the shared record; residuals
// y_i - original are negated for the ablated members, averaged over all n,
// and added back onto the original.
Tensor baseline_individual_models(const EnsembleDenoiser& ens, std::optional<std::size_t> item,
                                  const NoiseRecord& record, const Tensor& original);

std::string influence_report_to_json(const InfluenceReport& rep);
InfluenceReport influence_report_from_json(const std::string& text);
std::string influence_report_to_csv(const InfluenceReport& rep);
void save_influence_report(const std::string& json_path, const InfluenceReport& rep);
InfluenceReport load_influence_report(const std::string& json_path);

}  // namespace attribens
