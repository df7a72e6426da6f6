#pragma once

#include <span>
#include <vector>

#include "attribens/tensor.hpp"

namespace attribens {

double euclidean_distance(std::span<const double> a, std::span<const double> b);
double euclidean_distance(const Tensor& a, const Tensor& b);

// Throws std::domain_error when either input has zero variance; degenerate
// correlations are reported, never silently zeroed.
double pearson(std::span<const double> a, std::span<const double> b);

// Rank correlation with average ranks on ties (inputs are values; ranking is
// internal).
double spearman(std::span<const double> a, std::span<const double> b);

// Average ranks (1-based, ties averaged); exposed for rank-based tests.
std::vector<double> average_ranks(std::span<const double> values);

// Sample median (mean of the two middle values for even sizes).
double median(std::vector<double> values);

// Squared Frechet distance between the Gaussian fits of two sample sets:
//   |mu_A - mu_B|^2 + tr(S_A + S_B - 2 (S_A S_B)^{1/2})
// with population covariances and a clamped symmetric PSD square root.
// Requires at least two points per set and matching dimensions.
double frechet_gaussian(const std::vector<Tensor>& set_a, const std::vector<Tensor>& set_b);
double frechet_gaussian(const std::vector<std::vector<double>>& set_a,
                        const std::vector<std::vector<double>>& set_b);

}  // namespace attribens
