#include "attribens/influence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "attribens/parallel.hpp"
#include "io_util.hpp"

namespace attribens {

using json = nlohmann::ordered_json;

JacobianMatrix compute_jacobian(const EnsembleDenoiser& ens, const NoiseRecord& record) {
  const std::size_t n = ens.size();
  const std::size_t m = shape_numel(record.shape);
  if (record.T != ens.schedule.T)
    throw std::invalid_argument("compute_jacobian: record and schedule disagree about T");

  JacobianMatrix jac;
  jac.rows = m;
  jac.cols = n;
  jac.entries.assign(m * n, 0.0);
  jac.base = weight_vector(ens.codebook);
  jac.record = record;
  const double u0 = jac.base[0];

  parallel_for(0, n, [&](std::size_t col) {
    // Primal trajectory plus the tangent of perturbing v along e_col at u0:
    //   d eps_hat = sum_i v_i (df_i/dx) xdot + f_col(x),
    //   xdot' = (xdot - c_t * d eps_hat) / sqrt(alpha_t),  xdot_T = 0.
    std::vector<double> x(m), xdot(m, 0.0), z(m);
    std::vector<double> eps_hat(m), eps_dot(m), val(m), tan(m), val_col(m);
    MlpScratch ws;
    record_initial_noise_into(record, x);
    const NoiseSchedule& s = ens.schedule;
    for (std::size_t t = s.T; t >= 1; --t) {
      std::fill(eps_hat.begin(), eps_hat.end(), 0.0);
      std::fill(eps_dot.begin(), eps_dot.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        predict_noise_dual_into(ens.members[i], x, xdot, t, val, tan, ws);
        for (std::size_t k = 0; k < m; ++k) {
          eps_hat[k] += u0 * val[k];
          eps_dot[k] += u0 * tan[k];
        }
        if (i == col) val_col = val;
      }
      for (std::size_t k = 0; k < m; ++k) eps_dot[k] += val_col[k];

      record_step_noise_into(record, t, z);
      const double inv_sqrt_alpha = 1.0 / std::sqrt(s.alphas[t]);
      const double noise_coef = s.betas[t] / std::sqrt(1.0 - s.alpha_bars[t]);
      const double sigma = s.sigmas[t];
      for (std::size_t k = 0; k < m; ++k) {
        x[k] = inv_sqrt_alpha * (x[k] - noise_coef * eps_hat[k]) + sigma * z[k];
        xdot[k] = inv_sqrt_alpha * (xdot[k] - noise_coef * eps_dot[k]);
      }
    }
    for (std::size_t k = 0; k < m; ++k) jac.entries[k * n + col] = xdot[k];
  });
  return jac;
}

Tensor approx_counterfactual(const SampleRecord& original, const JacobianMatrix& jac,
                             const WeightVector& v_target) {
  if (original.output.numel() != jac.rows)
    throw std::invalid_argument("approx_counterfactual: sample does not match jacobian rows");
  if (v_target.size() != jac.cols || jac.base.size() != jac.cols)
    throw std::invalid_argument("approx_counterfactual: weight length does not match columns");
  std::vector<double> out = to_doubles(original.output);
  for (std::size_t c = 0; c < jac.cols; ++c) {
    const double dv = v_target[c] - jac.base[c];
    if (dv == 0.0) continue;
    for (std::size_t r = 0; r < jac.rows; ++r) out[r] += jac.entries[r * jac.cols + c] * dv;
  }
  return tensor_from_doubles(original.output.shape(), out);
}

double influence_score(const JacobianMatrix& jac, const Codebook& cb, std::size_t group) {
  const WeightVector va = group_weight_vector(cb, group);
  if (va.size() != jac.cols)
    throw std::invalid_argument("influence_score: codebook does not match jacobian columns");
  double sum = 0.0;
  for (std::size_t r = 0; r < jac.rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < jac.cols; ++c)
      acc += jac.entries[r * jac.cols + c] * (va[c] - jac.base[c]);
    sum += acc * acc;
  }
  return std::sqrt(sum);
}

InfluenceReport rank_all(const JacobianMatrix& jac, const Codebook& cb, std::size_t k,
                         std::string sample_id) {
  const std::size_t groups = cb.num_groups();
  if (k == 0 || k > groups) throw std::invalid_argument("rank_all: k must be in 1..group count");
  InfluenceReport rep;
  rep.sample_id = std::move(sample_id);
  rep.top_k = k;
  rep.scores.resize(groups);
  for (std::size_t g = 0; g < groups; ++g) rep.scores[g] = influence_score(jac, cb, g);
  rep.ranking.resize(groups);
  std::iota(rep.ranking.begin(), rep.ranking.end(), 0);
  std::sort(rep.ranking.begin(), rep.ranking.end(), [&](std::size_t a, std::size_t b) {
    if (rep.scores[a] != rep.scores[b]) return rep.scores[a] > rep.scores[b];
    return a < b;  // ties broken by ascending group index
  });
  return rep;
}

std::vector<InfluenceReport> dedup_top_lists(const std::vector<InfluenceReport>& reports,
                                             std::size_t k) {
  if (reports.empty()) return {};
  if (k == 0) throw std::invalid_argument("dedup_top_lists: k must be positive");
  const std::size_t groups = reports.front().scores.size();
  for (const auto& r : reports)
    if (r.scores.size() != groups || r.ranking.size() != groups)
      throw std::invalid_argument("dedup_top_lists: reports rank different group sets");
  if (k * reports.size() > groups)
    throw std::invalid_argument("dedup_top_lists: fewer groups than k * report count");

  std::unordered_set<std::size_t> banned;
  for (std::size_t iteration = 0; iteration <= groups; ++iteration) {
    // Current top-k of each report, skipping banned groups.
    std::unordered_map<std::size_t, std::size_t> appearances;
    for (const auto& rep : reports) {
      std::size_t taken = 0;
      for (std::size_t g : rep.ranking) {
        if (banned.count(g)) continue;
        ++appearances[g];
        if (++taken == k) break;
      }
      if (taken < k)
        throw std::runtime_error(
            "dedup_top_lists: a ranking ran out of candidates (rankings too similar to "
            "produce disjoint top lists)");
    }
    bool any_dup = false;
    for (const auto& [g, count] : appearances)
      if (count >= 2) {
        banned.insert(g);
        any_dup = true;
      }
    if (!any_dup) {
      std::vector<InfluenceReport> out = reports;
      for (auto& rep : out) {
        rep.top_k = k;
        std::erase_if(rep.ranking, [&](std::size_t g) { return banned.count(g) > 0; });
      }
      return out;
    }
  }
  throw std::logic_error("dedup_top_lists: failed to converge");  // unreachable: bans grow
}

Tensor baseline_last_step(const EnsembleDenoiser& ens, std::optional<std::size_t> item,
                          const NoiseRecord& record) {
  const WeightVector uniform = weight_vector(ens.codebook);
  const WeightVector final_step = item ? weight_vector(ens.codebook, item) : uniform;
  EnsembleScratch ws;
  const DenoiseFn fn = [&](std::span<const double> x, std::size_t t, std::span<double> eps_out) {
    weighted_denoise_into(ens, t == 1 ? final_step : uniform, x, t, eps_out, ws);
  };
  return sample(fn, record, ens.schedule);
}

Tensor baseline_individual_models(const EnsembleDenoiser& ens, std::optional<std::size_t> item,
                                  const NoiseRecord& record, const Tensor& original) {
  const std::size_t n = ens.size();
  const std::size_t m = shape_numel(record.shape);
  if (original.numel() != m)
    throw std::invalid_argument("baseline_individual_models: original does not match record");

  std::vector<bool> negate(n, false);
  if (item)
    for (std::size_t mod : ablation_models(ens.codebook, *item)) negate[mod] = true;

  std::vector<std::vector<double>> solo(n);
  parallel_for(0, n, [&](std::size_t i) {
    MlpScratch ws;
    const DenoiseFn fn = [&](std::span<const double> x, std::size_t t, std::span<double> eps_out) {
      predict_noise_into(ens.members[i], x, t, eps_out, ws);
    };
    solo[i] = sample_raw(fn, record, ens.schedule);
  });

  std::vector<double> out = to_doubles(original);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double sign = negate[i] ? -1.0 : 1.0;
    for (std::size_t kk = 0; kk < m; ++kk)
      out[kk] += sign * inv_n * (solo[i][kk] - static_cast<double>(original[kk]));
  }
  return tensor_from_doubles(original.shape(), out);
}

// ---- report serialization --------------------------------------------------

std::string influence_report_to_json(const InfluenceReport& rep) {
  json doc{{"version", 1},
           {"sample_id", rep.sample_id},
           {"top_k", rep.top_k},
           {"scores", rep.scores},
           {"ranking", rep.ranking}};
  return doc.dump(2) + "\n";
}

InfluenceReport influence_report_from_json(const std::string& text) {
  json doc = json::parse(text);
  if (doc.at("version").get<int>() != 1)
    throw std::runtime_error("influence report: unsupported version");
  InfluenceReport rep;
  rep.sample_id = doc.at("sample_id").get<std::string>();
  rep.top_k = doc.at("top_k").get<std::size_t>();
  rep.scores = doc.at("scores").get<std::vector<double>>();
  rep.ranking = doc.at("ranking").get<std::vector<std::size_t>>();
  return rep;
}

std::string influence_report_to_csv(const InfluenceReport& rep) {
  std::ostringstream out;
  out << "sample_id,rank,group_id,score\n";
  const std::size_t rows = std::min(rep.top_k, rep.ranking.size());
  out.precision(17);
  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t g = rep.ranking[i];
    out << rep.sample_id << ',' << (i + 1) << ',' << g << ',' << rep.scores[g] << '\n';
  }
  return out.str();
}

void save_influence_report(const std::string& json_path, const InfluenceReport& rep) {
  detail::write_file_atomic(json_path, influence_report_to_json(rep));
}

InfluenceReport load_influence_report(const std::string& json_path) {
  return influence_report_from_json(detail::read_file(json_path));
}

}  // namespace attribens
