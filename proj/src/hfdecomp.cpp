#include "hfspill/hfdecomp.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "hfspill/error.hpp"
#include "hfspill/stats.hpp"

namespace hfspill::hfdecomp {

namespace {

constexpr double kCollinearTol = 1e-12;
// Relative offset from the interval endpoints used to confirm the sign pattern.
constexpr double kEndpointProbe = 1e-6;

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m) { return m.allFinite(); }

}  // namespace

void SurprisePanel::validate() const {
    const auto t = contracts.rows();
    if (contracts.cols() < 1) throw ValidationError("surprise panel needs at least one contract column");
    if (t < 2) throw ValidationError("surprise panel needs at least 2 announcements, found " + std::to_string(t));
    if (equity.size() != t) throw ValidationError("equity surprises and contracts differ in length");
    if (static_cast<Eigen::Index>(dates.size()) != t)
        throw ValidationError("announcement dates and surprises differ in length");
    if (!all_finite(contracts) || !equity.allFinite())
        throw ValidationError("surprise panel contains non-finite values");
    for (std::size_t i = 1; i < dates.size(); ++i) {
        if (!(dates[i - 1] < dates[i]))
            throw ValidationError("announcement dates not strictly increasing at " + dates[i].to_string());
    }
}

void SurprisePair::validate() const {
    if (i_total.size() != s.size()) throw ValidationError("i_total and s differ in length");
    if (i_total.size() < 2) throw ValidationError("surprise pair needs at least 2 observations");
    if (!i_total.allFinite() || !s.allFinite()) throw ValidationError("surprise pair contains non-finite values");
    if (i_total.cwiseAbs().maxCoeff() == 0.0)
        throw DegenerateInputError("interest-rate surprise is identically zero; decomposition undefined");
}

Eigen::Matrix2d ShockDecomposition::loadings() const {
    Eigen::Matrix2d c;
    c << 1.0, c_mp, 1.0, c_id;
    return c;
}

Eigen::MatrixXd ShockDecomposition::shocks() const {
    Eigen::MatrixXd u(i_mp.size(), 2);
    u.col(0) = i_mp;
    u.col(1) = i_id;
    return u;
}

Eigen::VectorXd pca_composite(const SurprisePanel& panel) {
    panel.validate();
    const Eigen::RowVectorXd means = panel.contracts.colwise().mean();
    const Eigen::MatrixXd centered = panel.contracts.rowwise() - means;
    if (centered.cwiseAbs().maxCoeff() == 0.0)
        throw DegenerateInputError("contract matrix has zero variance in every column");
    if (panel.contracts.cols() == 1) return centered.col(0);

    const double first_sd = stats::sample_sd(panel.contracts.col(0));
    if (first_sd == 0.0)
        throw DegenerateInputError("first contract column is constant; composite scale undefined");

    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(centered.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition of surprise covariance failed");
    // eigenvalues ascend
    const Eigen::VectorXd loading = eig.eigenvectors().col(cov.cols() - 1);
    Eigen::VectorXd scores = centered * loading;
    if (stats::correlation(scores, panel.contracts.col(0)) < 0.0) scores = -scores;
    const double score_sd = stats::sample_sd(scores);
    if (score_sd == 0.0) throw DegenerateInputError("first principal component is constant");
    return scores * (first_sd / score_sd);
}

SurprisePair make_pair(const SurprisePanel& panel) {
    return SurprisePair{pca_composite(panel), panel.equity};
}

std::pair<Eigen::MatrixXd, Eigen::Matrix2d> normalized_qr(const SurprisePair& pair) {
    pair.validate();
    const auto t = pair.size();
    Eigen::MatrixXd m(t, 2);
    m.col(0) = pair.i_total;
    m.col(1) = pair.s;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(t, 2);
    Eigen::Matrix2d r = qr.matrixQR().topRows(2).triangularView<Eigen::Upper>();
    for (int k = 0; k < 2; ++k) {
        if (r(k, k) < 0.0) {
            q.col(k) = -q.col(k);
            r.row(k) = -r.row(k);
        }
    }
    if (std::abs(r(1, 1)) < kCollinearTol * std::abs(r(0, 0))) {
        throw CollinearSurprisesError("interest-rate and equity surprises are collinear (r22/r11 below 1e-12)");
    }
    return {std::move(q), r};
}

std::pair<double, double> loadings_at(const Eigen::Matrix2d& r, double alpha) {
    const double c = std::cos(alpha);
    const double s = std::sin(alpha);
    const double c_mp = (r(0, 1) * c - r(1, 1) * s) / (r(0, 0) * c);
    const double c_id = (r(0, 1) * s + r(1, 1) * c) / (r(0, 0) * s);
    return {c_mp, c_id};
}

namespace {

AngleInterval interval_from_r(const Eigen::Matrix2d& r) {
    const double r12 = r(0, 1);
    const double r22 = r(1, 1);
    AngleInterval iv;
    if (r12 > 0.0) {
        iv.lo = std::atan2(r12, r22);
        iv.hi = std::numbers::pi / 2.0;
    } else {
        // arctan(-r22 / r12), which tends to pi/2 as r12 -> 0-
        iv.lo = 0.0;
        iv.hi = std::atan2(r22, -r12);
    }
    if (!(iv.hi > iv.lo)) throw IdentificationError("admissible rotation interval is empty");
    const double eps = kEndpointProbe * (iv.hi - iv.lo);
    for (double probe : {iv.lo + eps, iv.hi - eps}) {
        const auto [c_mp, c_id] = loadings_at(r, probe);
        if (!(c_mp < 0.0 && c_id > 0.0)) {
            throw IdentificationError("sign restrictions fail inside the admissible interval at alpha = " +
                                      std::to_string(probe));
        }
    }
    return iv;
}

ShockDecomposition build(const Eigen::MatrixXd& q, const Eigen::Matrix2d& r, double alpha, double w) {
    const double c = std::cos(alpha);
    const double s = std::sin(alpha);
    ShockDecomposition out;
    out.alpha = alpha;
    out.w = w;
    out.factors.q = q;
    out.factors.r = r;
    out.factors.p << c, s, -s, c;
    out.factors.d << r(0, 0) * c, 0.0, 0.0, r(0, 0) * s;

    const Eigen::MatrixXd u = q * (out.factors.p * out.factors.d);
    out.i_mp = u.col(0);
    out.i_id = u.col(1);
    std::tie(out.c_mp, out.c_id) = loadings_at(r, alpha);
    if (!(out.c_mp < 0.0 && out.c_id > 0.0)) {
        throw IdentificationError("sign restrictions violated at alpha = " + std::to_string(alpha));
    }
    return out;
}

}  // namespace

AngleInterval admissible_angle_interval(const SurprisePair& pair) {
    const auto [q, r] = normalized_qr(pair);
    return interval_from_r(r);
}

ShockDecomposition decompose_at(const SurprisePair& pair, double w) {
    if (!(w > 0.0 && w < 1.0)) throw ValidationError("rotation weight w must lie in (0,1), got " + std::to_string(w));
    const auto [q, r] = normalized_qr(pair);
    const auto iv = interval_from_r(r);
    return build(q, r, iv.at(w), w);
}

ShockDecomposition decompose_at_angle(const SurprisePair& pair, double alpha) {
    const auto [q, r] = normalized_qr(pair);
    const auto iv = interval_from_r(r);
    if (!iv.contains(alpha)) {
        throw IdentificationError("angle " + std::to_string(alpha) + " lies outside the admissible interval (" +
                                  std::to_string(iv.lo) + ", " + std::to_string(iv.hi) + ")");
    }
    return build(q, r, alpha, (alpha - iv.lo) / (iv.hi - iv.lo));
}

PoorMansShocks poor_mans_decompose(const SurprisePair& pair) {
    if (pair.i_total.size() != pair.s.size()) throw ValidationError("i_total and s differ in length");
    if (!pair.i_total.allFinite() || !pair.s.allFinite())
        throw ValidationError("surprise pair contains non-finite values");
    const auto t = pair.size();
    PoorMansShocks out{Eigen::VectorXd::Zero(t), Eigen::VectorXd::Zero(t)};
    for (Eigen::Index k = 0; k < t; ++k) {
        if (pair.i_total(k) * pair.s(k) <= 0.0) {
            out.i_mp(k) = pair.i_total(k);
        } else {
            out.i_id(k) = pair.i_total(k);
        }
    }
    return out;
}

double angle_from_variance_ratio(double ratio) {
    if (!(ratio > 0.0 && ratio <= 1.0))
        throw ValidationError("variance ratio must lie in (0,1], got " + std::to_string(ratio));
    return std::acos(std::sqrt(ratio));
}

double poor_mans_variance_ratio(const SurprisePair& pair) {
    pair.validate();
    const auto pm = poor_mans_decompose(pair);
    return stats::second_moment(pm.i_mp) / stats::second_moment(pair.i_total);
}

std::vector<ShockDecomposition> rotation_grid(const SurprisePair& pair, int n) {
    if (n < 1) throw ValidationError("rotation grid size must be at least 1");
    const auto [q, r] = normalized_qr(pair);
    const auto iv = interval_from_r(r);
    std::vector<ShockDecomposition> grid;
    grid.reserve(static_cast<std::size_t>(n));
    for (int k = 1; k <= n; ++k) {
        const double w = static_cast<double>(k) / static_cast<double>(n + 1);
        grid.push_back(build(q, r, iv.at(w), w));
    }
    return grid;
}

}  // namespace hfspill::hfdecomp
