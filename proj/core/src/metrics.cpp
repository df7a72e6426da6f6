#include "attribens/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

namespace attribens {

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("euclidean_distance: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double euclidean_distance(const Tensor& a, const Tensor& b) {
  return euclidean_distance(std::span<const double>(to_doubles(a)),
                            std::span<const double>(to_doubles(b)));
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("pearson: size mismatch");
  if (a.size() < 2) throw std::invalid_argument("pearson: need at least two points");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa == 0.0 || sbb == 0.0)
    throw std::domain_error("pearson: zero-variance input, correlation undefined");
  return sab / std::sqrt(saa * sbb);
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty input");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  double hi = values[mid];
  if (values.size() % 2 == 1) return hi;
  double lo = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lo + hi);
}

double spearman(std::span<const double> a, std::span<const double> b) {
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  return pearson(ra, rb);
}

double frechet_gaussian(const std::vector<std::vector<double>>& set_a,
                        const std::vector<std::vector<double>>& set_b) {
  if (set_a.size() < 2 || set_b.size() < 2)
    throw std::invalid_argument("frechet_gaussian: need at least two points per set");
  const std::size_t dim = set_a.front().size();
  for (const auto& v : set_a)
    if (v.size() != dim) throw std::invalid_argument("frechet_gaussian: ragged input");
  for (const auto& v : set_b)
    if (v.size() != dim) throw std::invalid_argument("frechet_gaussian: dimension mismatch");

  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  auto moments = [dim](const std::vector<std::vector<double>>& set, VectorXd& mu, MatrixXd& cov) {
    const double n = static_cast<double>(set.size());
    mu = VectorXd::Zero(dim);
    for (const auto& v : set)
      for (std::size_t i = 0; i < dim; ++i) mu[static_cast<Eigen::Index>(i)] += v[i];
    mu /= n;
    cov = MatrixXd::Zero(dim, dim);
    VectorXd c(dim);
    for (const auto& v : set) {
      for (std::size_t i = 0; i < dim; ++i) c[static_cast<Eigen::Index>(i)] = v[i];
      c -= mu;
      cov.noalias() += c * c.transpose();
    }
    cov /= n;  // population convention
  };

  VectorXd mu_a, mu_b;
  MatrixXd cov_a, cov_b;
  moments(set_a, mu_a, cov_a);
  moments(set_b, mu_b, cov_b);

  // tr((S_A S_B)^{1/2}) via the symmetric form tr((S_B^{1/2} S_A S_B^{1/2})^{1/2});
  // eigenvalues are clamped at zero against rounding on near-singular fits.
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig_b(cov_b);
  if (eig_b.info() != Eigen::Success)
    throw std::runtime_error("frechet_gaussian: eigendecomposition failed");
  VectorXd lb = eig_b.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  MatrixXd sqrt_b = eig_b.eigenvectors() * lb.asDiagonal() * eig_b.eigenvectors().transpose();

  MatrixXd inner = sqrt_b * cov_a * sqrt_b;
  inner = 0.5 * (inner + inner.transpose());  // symmetrize against drift
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig_m(inner);
  if (eig_m.info() != Eigen::Success)
    throw std::runtime_error("frechet_gaussian: eigendecomposition failed");
  const double tr_sqrt = eig_m.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

  const double mean_term = (mu_a - mu_b).squaredNorm();
  return mean_term + cov_a.trace() + cov_b.trace() - 2.0 * tr_sqrt;
}

double frechet_gaussian(const std::vector<Tensor>& set_a, const std::vector<Tensor>& set_b) {
  std::vector<std::vector<double>> a, b;
  a.reserve(set_a.size());
  b.reserve(set_b.size());
  for (const auto& t : set_a) a.push_back(to_doubles(t));
  for (const auto& t : set_b) b.push_back(to_doubles(t));
  return frechet_gaussian(a, b);
}

}  // namespace attribens
