#include "attribens/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "attribens/influence.hpp"
#include "attribens/metrics.hpp"
#include "attribens/parallel.hpp"
#include "attribens/rng.hpp"

namespace attribens {

using json = nlohmann::ordered_json;

namespace {

constexpr std::size_t kGlyphSide = 8;

// Base pattern of one glyph class on the 8x8 grid; true = foreground. Six of
// the classes are translations/rotations of the same two-pixel-wide bar, so
// no bar mode is geometrically privileged; the seventh is a solid field,
// which no blend of bars resembles.
bool glyph_pixel(std::size_t cls, std::size_t r, std::size_t c) {
  switch (cls) {
    case 0: return r == 0 || r == 1;  // horizontal bar, top
    case 1: return r == 3 || r == 4;  // horizontal bar, middle
    case 2: return r == 6 || r == 7;  // horizontal bar, bottom
    case 3: return c == 0 || c == 1;  // vertical bar, left
    case 4: return c == 3 || c == 4;  // vertical bar, middle
    case 5: return c == 6 || c == 7;  // vertical bar, right
    case 6: return true;              // solid field
    default: return false;
  }
}

NoiseRecord make_record(const EnsembleDenoiser& ens, std::uint64_t seed, std::uint64_t stream) {
  NoiseRecord rec;
  rec.seed = seed;
  rec.stream_id = stream;
  rec.T = ens.schedule.T;
  rec.shape = {ens.members.front().arch.sample_dim};
  return rec;
}

std::string format_value(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

const char* verdict(bool ok) { return ok ? "PASS" : "FAIL"; }

}  // namespace

ToyDataset gen_glyphs(std::size_t class_count, std::size_t per_class, double jitter,
                      std::uint64_t seed) {
  if (class_count == 0 || class_count > 7)
    throw std::invalid_argument("gen_glyphs: class count must be 1..7");
  if (jitter < 0.0) throw std::invalid_argument("gen_glyphs: jitter must be non-negative");

  ToyDataset ds;
  ds.descriptor = {"glyphs", class_count, per_class, kGlyphSide * kGlyphSide, jitter, seed};
  ds.items.reserve(class_count * per_class);
  ds.labels.reserve(class_count * per_class);

  const long max_offset = std::lround(2.0 * jitter);
  const double sigma = 0.1 * jitter;
  RngStream rng{seed, 0, 0};
  std::vector<double> noise(kGlyphSide * kGlyphSide);
  for (std::size_t cls = 0; cls < class_count; ++cls) {
    for (std::size_t i = 0; i < per_class; ++i) {
      long dr = 0, dc = 0;
      if (max_offset > 0) {
        dr = static_cast<long>(next_below(rng, 2 * max_offset + 1)) - max_offset;
        dc = static_cast<long>(next_below(rng, 2 * max_offset + 1)) - max_offset;
      }
      if (jitter > 0.0) fill_gaussian(rng, noise.data(), noise.size());

      Tensor t({kGlyphSide, kGlyphSide});
      for (std::size_t r = 0; r < kGlyphSide; ++r) {
        for (std::size_t c = 0; c < kGlyphSide; ++c) {
          const long sr = static_cast<long>(r) - dr;
          const long sc = static_cast<long>(c) - dc;
          const bool fg = sr >= 0 && sc >= 0 && sr < static_cast<long>(kGlyphSide) &&
                          sc < static_cast<long>(kGlyphSide) &&
                          glyph_pixel(cls, static_cast<std::size_t>(sr),
                                      static_cast<std::size_t>(sc));
          double v = fg ? 1.0 : -1.0;
          if (jitter > 0.0) v += sigma * noise[r * kGlyphSide + c];
          t[r * kGlyphSide + c] = static_cast<float>(v);
        }
      }
      ds.items.push_back(std::move(t));
      ds.labels.push_back(static_cast<std::uint32_t>(cls));
    }
  }
  return ds;
}

ToyDataset gen_gaussian_mixture(std::size_t class_count, std::size_t per_class, std::size_t dim,
                                double separation, std::uint64_t seed) {
  if (class_count == 0) throw std::invalid_argument("gen_gaussian_mixture: need >= 1 class");
  if (dim == 0) throw std::invalid_argument("gen_gaussian_mixture: dim must be positive");

  ToyDataset ds;
  ds.descriptor = {"gaussian_mixture", class_count, per_class, dim, separation, seed};
  ds.items.reserve(class_count * per_class);
  ds.labels.reserve(class_count * per_class);

  RngStream rng{seed, 0, 0};
  std::vector<double> g(dim);
  for (std::size_t cls = 0; cls < class_count; ++cls) {
    std::vector<double> mean(dim, 0.0);
    if (dim == 1) {
      mean[0] = separation * static_cast<double>(cls);
    } else {
      const double theta =
          2.0 * std::numbers::pi * static_cast<double>(cls) / static_cast<double>(class_count);
      mean[0] = separation * std::cos(theta);
      mean[1] = separation * std::sin(theta);
    }
    for (std::size_t i = 0; i < per_class; ++i) {
      fill_gaussian(rng, g.data(), dim);
      Tensor t({dim});
      for (std::size_t d = 0; d < dim; ++d) t[d] = static_cast<float>(mean[d] + g[d]);
      ds.items.push_back(std::move(t));
      ds.labels.push_back(static_cast<std::uint32_t>(cls));
    }
  }
  return ds;
}

ToyDataset generate_dataset(const DatasetDescriptor& d) {
  if (d.family == "glyphs") return gen_glyphs(d.class_count, d.per_class, d.jitter, d.seed);
  if (d.family == "gaussian_mixture")
    return gen_gaussian_mixture(d.class_count, d.per_class, d.dim, d.jitter, d.seed);
  throw std::invalid_argument("generate_dataset: unknown family '" + d.family + "'");
}

std::string dataset_descriptor_to_json(const DatasetDescriptor& d) {
  json doc{{"family", d.family},     {"class_count", d.class_count}, {"per_class", d.per_class},
           {"dim", d.dim},           {"jitter", d.jitter},           {"seed", d.seed}};
  return doc.dump(2) + "\n";
}

DatasetDescriptor dataset_descriptor_from_json(const std::string& text) {
  json doc = json::parse(text);
  DatasetDescriptor d;
  d.family = doc.at("family").get<std::string>();
  d.class_count = doc.at("class_count").get<std::size_t>();
  d.per_class = doc.at("per_class").get<std::size_t>();
  d.dim = doc.at("dim").get<std::size_t>();
  d.jitter = doc.at("jitter").get<double>();
  d.seed = doc.at("seed").get<std::uint64_t>();
  return d;
}

std::size_t NearestCentroidClassifier::classify(std::span<const double> x) const {
  if (centroids.empty()) throw std::invalid_argument("classify: no centroids");
  std::size_t best = 0;
  double best_d2 = -1.0;
  for (std::size_t cls = 0; cls < centroids.size(); ++cls) {
    const auto& c = centroids[cls];
    if (c.size() != x.size()) throw std::invalid_argument("classify: dimension mismatch");
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - c[i];
      d2 += d * d;
    }
    if (best_d2 < 0.0 || d2 < best_d2) {  // strict <: ties keep the lower class
      best_d2 = d2;
      best = cls;
    }
  }
  return best;
}

std::size_t NearestCentroidClassifier::classify(const Tensor& x) const {
  return classify(std::span<const double>(to_doubles(x)));
}

NearestCentroidClassifier fit_nearest_centroid(const ToyDataset& train) {
  if (train.items.empty()) throw std::invalid_argument("fit_nearest_centroid: empty training set");
  const std::size_t classes = train.class_count();
  const std::size_t dim = train.items.front().numel();
  NearestCentroidClassifier clf;
  clf.centroids.assign(classes, std::vector<double>(dim, 0.0));
  std::vector<std::size_t> counts(classes, 0);
  for (std::size_t i = 0; i < train.items.size(); ++i) {
    const std::uint32_t cls = train.labels[i];
    if (cls >= classes) throw std::invalid_argument("fit_nearest_centroid: label out of range");
    if (train.items[i].numel() != dim)
      throw std::invalid_argument("fit_nearest_centroid: inconsistent item shapes");
    auto& cent = clf.centroids[cls];
    const auto data = train.items[i].data();
    for (std::size_t d = 0; d < dim; ++d) cent[d] += static_cast<double>(data[d]);
    ++counts[cls];
  }
  for (std::size_t cls = 0; cls < classes; ++cls) {
    if (counts[cls] == 0)
      throw std::invalid_argument("fit_nearest_centroid: class " + std::to_string(cls) +
                                  " has no items");
    for (double& v : clf.centroids[cls]) v /= static_cast<double>(counts[cls]);
  }
  return clf;
}

std::size_t nearest_centroid_classify(const ToyDataset& train, const Tensor& x) {
  return fit_nearest_centroid(train).classify(x);
}

ClassAblationResult class_ablation_experiment(const EnsembleDenoiser& ens,
                                              const NearestCentroidClassifier& clf,
                                              std::size_t num_samples, std::uint64_t seed) {
  const Codebook& cb = ens.codebook;
  if (ens.size() != 7 || cb.n != 7 || cb.h != 3 || cb.num_groups() != 7)
    throw std::invalid_argument(
        "class_ablation_experiment: expected the 7-member Walsh class design");
  if (num_samples == 0) throw std::invalid_argument("class_ablation_experiment: need samples");
  const std::size_t classes = 7;
  const std::size_t m = ens.members.front().arch.sample_dim;
  if (clf.centroids.size() != classes || clf.centroids.front().size() != m)
    throw std::invalid_argument("class_ablation_experiment: classifier does not fit the ensemble");

  const WeightVector u0 = weight_vector(cb);
  std::vector<WeightVector> ablated(classes);
  for (std::size_t c = 0; c < classes; ++c) ablated[c] = group_weight_vector(cb, c);

  std::vector<std::size_t> pred(num_samples);
  std::vector<std::array<std::size_t, 7>> cf_class(num_samples);
  std::vector<std::array<double, 7>> cf_dist(num_samples);
  parallel_for(0, num_samples, [&](std::size_t s) {
    const NoiseRecord rec = make_record(ens, seed, s);
    const std::vector<double> orig = generate_raw(ens, u0, rec);
    pred[s] = clf.classify(orig);
    for (std::size_t c = 0; c < classes; ++c) {
      const std::vector<double> cf = generate_raw(ens, ablated[c], rec);
      cf_class[s][c] = clf.classify(cf);
      cf_dist[s][c] = euclidean_distance(orig, cf);
    }
  });

  ClassAblationResult res;
  res.num_samples = num_samples;
  res.matrix.classes = classes;
  res.matrix.counts.assign(classes * classes, 0);
  res.unablated_counts.assign(classes, 0);
  std::size_t argmax_hits = 0, own_changes = 0, other_changes = 0;
  for (std::size_t s = 0; s < num_samples; ++s) {
    ++res.unablated_counts[pred[s]];
    std::size_t most_changed = 0;
    for (std::size_t c = 0; c < classes; ++c) {
      ++res.matrix.at(c, cf_class[s][c]);
      if (cf_dist[s][c] > cf_dist[s][most_changed]) most_changed = c;
      if (c == pred[s]) {
        res.own_class_distances.push_back(cf_dist[s][c]);
        if (cf_class[s][c] != pred[s]) ++own_changes;
      } else {
        res.other_class_distances.push_back(cf_dist[s][c]);
        if (cf_class[s][c] != pred[s]) ++other_changes;
      }
    }
    if (most_changed == pred[s]) ++argmax_hits;
  }
  const double ns = static_cast<double>(num_samples);
  res.argmax_accuracy = static_cast<double>(argmax_hits) / ns;
  res.own_median = median(res.own_class_distances);
  res.other_median = median(res.other_class_distances);
  res.own_class_change_rate = static_cast<double>(own_changes) / ns;
  res.other_class_change_rate =
      static_cast<double>(other_changes) / (ns * static_cast<double>(classes - 1));
  return res;
}

ConvergenceResult convergence_experiment(const EnsembleDenoiser& ens, std::size_t num_records,
                                         std::uint64_t seed) {
  if (num_records == 0) throw std::invalid_argument("convergence_experiment: need records");
  const std::size_t n = ens.size();
  std::vector<std::vector<double>> dist(num_records), inc(num_records);
  parallel_for(0, num_records, [&](std::size_t r) {
    const NoiseRecord rec = make_record(ens, seed, r);
    const std::vector<Tensor> outs = nested_ensemble_outputs(ens, rec, mix_seed(seed, r));
    dist[r].resize(n);
    inc[r].resize(n - 1);
    for (std::size_t k = 0; k < n; ++k) dist[r][k] = euclidean_distance(outs[k], outs[n - 1]);
    for (std::size_t k = 0; k + 1 < n; ++k) inc[r][k] = euclidean_distance(outs[k + 1], outs[k]);
  });

  ConvergenceResult res;
  res.num_records = num_records;
  res.mean_distance.assign(n, 0.0);
  res.mean_increment.assign(n - 1, 0.0);
  for (std::size_t r = 0; r < num_records; ++r) {
    for (std::size_t k = 0; k < n; ++k) res.mean_distance[k] += dist[r][k];
    for (std::size_t k = 0; k + 1 < n; ++k) res.mean_increment[k] += inc[r][k];
  }
  for (double& v : res.mean_distance) v /= static_cast<double>(num_records);
  for (double& v : res.mean_increment) v /= static_cast<double>(num_records);
  return res;
}

FidelityResult jacobian_fidelity_experiment(const EnsembleDenoiser& ens, std::size_t num_samples,
                                            std::size_t num_ablations, std::uint64_t seed) {
  const Codebook& cb = ens.codebook;
  const std::size_t groups = cb.num_groups();
  if (num_samples == 0) throw std::invalid_argument("jacobian_fidelity_experiment: need samples");
  if (num_ablations < 2 || num_ablations > groups)
    throw std::invalid_argument("jacobian_fidelity_experiment: ablations must be 2..group count");
  const std::size_t m = ens.members.front().arch.sample_dim;
  const std::size_t n = ens.size();

  // Representative item per group, for the item-addressed baselines.
  std::vector<std::size_t> item_of(groups, static_cast<std::size_t>(-1));
  for (std::size_t item = 0; item < cb.num_items(); ++item) {
    const std::uint32_t g = cb.group_of_item(item);
    if (item_of[g] == static_cast<std::size_t>(-1)) item_of[g] = item;
  }
  for (std::size_t g = 0; g < groups; ++g)
    if (item_of[g] == static_cast<std::size_t>(-1))
      throw std::invalid_argument("jacobian_fidelity_experiment: group " + std::to_string(g) +
                                  " has no items");

  const WeightVector u0 = weight_vector(cb);
  std::vector<WeightVector> ablated(groups);
  for (std::size_t g = 0; g < groups; ++g) ablated[g] = group_weight_vector(cb, g);

  FidelityResult res;
  res.num_samples = num_samples;
  res.num_ablations = num_ablations;

  std::vector<std::size_t> pool(groups);
  // Samples run serially; the Jacobian passes and baselines parallelize inside.
  for (std::size_t s = 0; s < num_samples; ++s) {
    const NoiseRecord rec = make_record(ens, seed, s);
    const std::vector<double> orig = generate_raw(ens, u0, rec);
    const Tensor orig_t = tensor_from_doubles({m}, orig);
    const JacobianMatrix jac = compute_jacobian(ens, rec);

    RngStream pick{mix_seed(seed, 0xAB1A), s, 0};
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t j = 0; j < num_ablations; ++j)
      std::swap(pool[j], pool[j + next_below(pick, groups - j)]);

    std::vector<double> true_all, jac_all, ls_all, im_all;
    true_all.reserve(num_ablations * m);
    jac_all.reserve(num_ablations * m);
    ls_all.reserve(num_ablations * m);
    im_all.reserve(num_ablations * m);
    std::vector<double> mag_true(num_ablations), mag_jac(num_ablations), mag_ls(num_ablations),
        mag_im(num_ablations);

    for (std::size_t a = 0; a < num_ablations; ++a) {
      const std::size_t g = pool[a];
      const WeightVector& v = ablated[g];

      const std::vector<double> true_cf = generate_raw(ens, v, rec);
      const Tensor ls = baseline_last_step(ens, item_of[g], rec);
      const Tensor im = baseline_individual_models(ens, item_of[g], rec, orig_t);

      double s_true = 0, s_jac = 0, s_ls = 0, s_im = 0;
      for (std::size_t k = 0; k < m; ++k) {
        const double dt = true_cf[k] - orig[k];
        double dj = 0.0;
        for (std::size_t c = 0; c < n; ++c) dj += jac.at(k, c) * (v[c] - u0[c]);
        const double dl = static_cast<double>(ls[k]) - orig[k];
        const double di = static_cast<double>(im[k]) - orig[k];
        true_all.push_back(dt);
        jac_all.push_back(dj);
        ls_all.push_back(dl);
        im_all.push_back(di);
        s_true += dt * dt;
        s_jac += dj * dj;
        s_ls += dl * dl;
        s_im += di * di;
      }
      mag_true[a] = std::sqrt(s_true);
      mag_jac[a] = std::sqrt(s_jac);
      mag_ls[a] = std::sqrt(s_ls);
      mag_im[a] = std::sqrt(s_im);
    }

    res.pearson_jacobian.push_back(pearson(jac_all, true_all));
    res.pearson_last_step.push_back(pearson(ls_all, true_all));
    res.pearson_individual.push_back(pearson(im_all, true_all));
    res.spearman_jacobian.push_back(spearman(mag_jac, mag_true));
    res.spearman_last_step.push_back(spearman(mag_ls, mag_true));
    res.spearman_individual.push_back(spearman(mag_im, mag_true));
  }
  return res;
}

CoherenceResult coherence_experiment(const EnsembleDenoiser& ens,
                                     const std::vector<Tensor>& train_items,
                                     std::size_t num_samples, std::uint64_t seed) {
  if (num_samples < 2) throw std::invalid_argument("coherence_experiment: need >= 2 samples");
  if (train_items.size() < 2)
    throw std::invalid_argument("coherence_experiment: need >= 2 training items");
  const std::size_t n = ens.size();
  const std::size_t m = ens.members.front().arch.sample_dim;
  for (const Tensor& t : train_items)
    if (t.numel() != m)
      throw std::invalid_argument("coherence_experiment: training item does not fit the model");

  std::vector<std::vector<double>> train_vecs(train_items.size());
  for (std::size_t i = 0; i < train_items.size(); ++i) train_vecs[i] = to_doubles(train_items[i]);

  const WeightVector u0 = weight_vector(ens.codebook);
  std::vector<std::vector<double>> ens_samples(num_samples);
  parallel_for(0, num_samples, [&](std::size_t s) {
    ens_samples[s] = generate_raw(ens, u0, make_record(ens, seed, s));
  });

  CoherenceResult res;
  res.num_samples = num_samples;
  res.ensemble_value = frechet_gaussian(train_vecs, ens_samples);
  res.member_values.resize(n);
  std::vector<std::vector<double>> solo(num_samples);
  for (std::size_t i = 0; i < n; ++i) {
    parallel_for(0, num_samples, [&](std::size_t s) {
      MlpScratch ws;
      const DenoiseFn fn = [&](std::span<const double> x, std::size_t t,
                               std::span<double> eps_out) {
        predict_noise_into(ens.members[i], x, t, eps_out, ws);
      };
      solo[s] = sample_raw(fn, make_record(ens, seed, s), ens.schedule);
    });
    res.member_values[i] = frechet_gaussian(train_vecs, solo);
  }
  return res;
}

// ---- tables and summaries ---------------------------------------------------

std::string class_ablation_csv(const ClassAblationResult& r) {
  std::ostringstream out;
  const std::size_t k = r.matrix.classes;
  out << "ablated";
  for (std::size_t c = 0; c < k; ++c) out << ",class_" << c;
  out << '\n';
  out << "none";
  for (std::size_t c = 0; c < k; ++c) out << ',' << r.unablated_counts[c];
  out << '\n';
  for (std::size_t a = 0; a < k; ++a) {
    out << a;
    for (std::size_t c = 0; c < k; ++c) out << ',' << r.matrix.at(a, c);
    out << '\n';
  }
  return out.str();
}

std::string class_ablation_summary(const ClassAblationResult& r) {
  const std::size_t k = r.matrix.classes;
  bool suppressed = true;
  for (std::size_t c = 0; c < k; ++c)
    if (2 * r.matrix.at(c, c) > r.unablated_counts[c]) suppressed = false;
  const double chance = 1.0 / static_cast<double>(k);
  const bool acc_ok = r.argmax_accuracy > chance;
  const bool median_ok = r.own_median > r.other_median;

  std::ostringstream out;
  out << "class ablation: samples=" << r.num_samples << '\n';
  out << "diagonal suppression (own-class output frequency <= 50% of unablated): "
      << verdict(suppressed) << '\n';
  out << "argmax accuracy " << format_value(r.argmax_accuracy) << " > chance "
      << format_value(chance) << ": " << verdict(acc_ok) << '\n';
  out << "own-class distance median " << format_value(r.own_median) << " > other-class median "
      << format_value(r.other_median) << ": " << verdict(median_ok) << '\n';
  out << "class change rate: own-class ablation " << format_value(r.own_class_change_rate)
      << ", other-class ablation " << format_value(r.other_class_change_rate) << '\n';
  return out.str();
}

std::string convergence_csv(const ConvergenceResult& r) {
  std::ostringstream out;
  out.precision(17);
  out << "k,mean_distance_to_full,mean_increment\n";
  for (std::size_t k = 0; k < r.mean_distance.size(); ++k) {
    out << (k + 1) << ',' << r.mean_distance[k] << ',';
    if (k < r.mean_increment.size()) out << r.mean_increment[k];
    out << '\n';
  }
  return out.str();
}

std::string convergence_summary(const ConvergenceResult& r) {
  bool non_increasing = true;
  for (std::size_t k = 0; k + 1 < r.mean_distance.size(); ++k)
    if (r.mean_distance[k + 1] > r.mean_distance[k]) non_increasing = false;
  const bool inc_ok = r.mean_increment.front() > r.mean_increment.back();

  std::ostringstream out;
  out << "convergence: records=" << r.num_records << '\n';
  out << "mean distance to full ensemble non-increasing in k: " << verdict(non_increasing)
      << '\n';
  out << "mean increment shrinks (k=1: " << format_value(r.mean_increment.front())
      << ", k=" << r.mean_increment.size() << ": " << format_value(r.mean_increment.back())
      << "): " << verdict(inc_ok) << '\n';
  return out.str();
}

std::string fidelity_csv(const FidelityResult& r) {
  std::ostringstream out;
  out.precision(17);
  out << "sample,pearson_jacobian,pearson_last_step,pearson_individual,"
         "spearman_jacobian,spearman_last_step,spearman_individual\n";
  for (std::size_t s = 0; s < r.num_samples; ++s)
    out << s << ',' << r.pearson_jacobian[s] << ',' << r.pearson_last_step[s] << ','
        << r.pearson_individual[s] << ',' << r.spearman_jacobian[s] << ','
        << r.spearman_last_step[s] << ',' << r.spearman_individual[s] << '\n';
  return out.str();
}

std::string fidelity_summary(const FidelityResult& r) {
  const double pj = median(r.pearson_jacobian);
  const double pl = median(r.pearson_last_step);
  const double pi = median(r.pearson_individual);
  const double sj = median(r.spearman_jacobian);

  std::ostringstream out;
  out << "jacobian fidelity: samples=" << r.num_samples << " ablations=" << r.num_ablations
      << '\n';
  out << "median pearson: jacobian " << format_value(pj) << ", last-step " << format_value(pl)
      << ", individual " << format_value(pi) << '\n';
  out << "jacobian beats last-step baseline: " << verdict(pj > pl) << '\n';
  out << "jacobian beats individual-models baseline: " << verdict(pj > pi) << '\n';
  out << "median spearman (jacobian) " << format_value(sj) << " > 0: " << verdict(sj > 0.0)
      << '\n';
  return out.str();
}

std::string coherence_csv(const CoherenceResult& r) {
  std::ostringstream out;
  out.precision(17);
  out << "model,frechet_gaussian_sq\n";
  out << "ensemble," << r.ensemble_value << '\n';
  for (std::size_t i = 0; i < r.member_values.size(); ++i)
    out << "member_" << i << ',' << r.member_values[i] << '\n';
  return out.str();
}

std::string coherence_summary(const CoherenceResult& r) {
  const double worst = *std::max_element(r.member_values.begin(), r.member_values.end());
  std::ostringstream out;
  out << "coherence: samples=" << r.num_samples << '\n';
  out << "ensemble " << format_value(r.ensemble_value) << " <= worst member "
      << format_value(worst) << ": " << verdict(r.ensemble_value <= worst) << '\n';
  return out.str();
}

}  // namespace attribens
