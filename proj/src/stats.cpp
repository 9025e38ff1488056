#include "hfspill/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hfspill::stats {

double mean(const Eigen::Ref<const Eigen::VectorXd>& x) {
    return x.size() == 0 ? 0.0 : x.mean();
}

double sample_sd(const Eigen::Ref<const Eigen::VectorXd>& x) {
    const auto n = x.size();
    if (n < 2) return 0.0;
    const double mu = x.mean();
    return std::sqrt((x.array() - mu).square().sum() / static_cast<double>(n - 1));
}

double second_moment(const Eigen::Ref<const Eigen::VectorXd>& x) {
    return x.size() == 0 ? 0.0 : x.squaredNorm() / static_cast<double>(x.size());
}

double correlation(const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y) {
    const Eigen::ArrayXd xc = x.array() - x.mean();
    const Eigen::ArrayXd yc = y.array() - y.mean();
    const double denom = std::sqrt(xc.square().sum() * yc.square().sum());
    if (denom == 0.0) return 0.0;
    return (xc * yc).sum() / denom;
}

double percentile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double pos = p / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<double> percentiles(std::vector<double> values, std::span<const double> pcts) {
    std::sort(values.begin(), values.end());
    std::vector<double> out;
    out.reserve(pcts.size());
    for (double p : pcts) out.push_back(percentile_sorted(values, p));
    return out;
}

double condition_number(const Eigen::Ref<const Eigen::MatrixXd>& x) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(x);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) return 0.0;
    const double smallest = sv(sv.size() - 1);
    if (smallest == 0.0) return std::numeric_limits<double>::infinity();
    return sv(0) / smallest;
}

double spectral_radius(const Eigen::Ref<const Eigen::MatrixXd>& a) {
    if (a.size() == 0) return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
}

Eigen::MatrixXd standard_normal(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd z(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) z(i, j) = normal(rng);
    return z;
}

}  // namespace hfspill::stats
