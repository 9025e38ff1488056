#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace hfspill::stats {

double mean(const Eigen::Ref<const Eigen::VectorXd>& x);

/// Sample standard deviation with the n-1 denominator.
double sample_sd(const Eigen::Ref<const Eigen::VectorXd>& x);

/// Uncentered second moment x'x / n.
double second_moment(const Eigen::Ref<const Eigen::VectorXd>& x);

/// Pearson correlation; 0 when either series is constant.
double correlation(const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y);

/// Linear-interpolation percentile (p in [0,100]) of already-sorted data.
double percentile_sorted(std::span<const double> sorted, double p);

/// Percentiles of unsorted data; the input is copied and sorted.
std::vector<double> percentiles(std::vector<double> values, std::span<const double> pcts);

/// 2-norm condition number via singular values; +inf when singular.
double condition_number(const Eigen::Ref<const Eigen::MatrixXd>& x);

/// Spectral radius of a square matrix.
double spectral_radius(const Eigen::Ref<const Eigen::MatrixXd>& a);

/// Deterministic generator for the substream identified by (seed, a, b).
/// Substreams with different keys are statistically independent, so loops
/// keyed by draw index give the same numbers regardless of thread layout.
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// Matrix of iid standard normals.
Eigen::MatrixXd standard_normal(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols);

}  // namespace hfspill::stats
