#include "hfspill/localproj.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "hfspill/error.hpp"
#include "hfspill/parallel.hpp"
#include "hfspill/stats.hpp"

namespace hfspill::localproj {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

LpSpec parse_spec(const std::string& text) {
    if (text == "pooled") return LpSpec::pooled;
    if (text == "fixed_effects" || text == "fe") return LpSpec::fixed_effects;
    if (text == "fe_trend") return LpSpec::fe_trend;
    throw ValidationError("unknown local projection spec '" + text + "' (pooled, fixed_effects, fe_trend)");
}

std::string to_string(LpSpec spec) {
    switch (spec) {
        case LpSpec::pooled: return "pooled";
        case LpSpec::fixed_effects: return "fixed_effects";
        case LpSpec::fe_trend: return "fe_trend";
    }
    return "pooled";
}

void LpConfig::validate() const {
    if (horizons < 0) throw ValidationError("horizons must be non-negative");
    if (j_y < 0 || j_x < 0 || j_i < 0) throw ValidationError("lag counts must be non-negative");
    if (auto_lags && max_lag < 1) throw ValidationError("max_lag must be at least 1");
}

namespace {

MatrixXd cluster_meat(const MatrixXd& x, const VectorXd& resid, std::span<const int> ids, std::size_t& groups) {
    std::map<int, VectorXd> scores;
    for (Index r = 0; r < x.rows(); ++r) {
        auto [it, inserted] = scores.try_emplace(ids[static_cast<std::size_t>(r)], VectorXd::Zero(x.cols()));
        it->second.noalias() += x.row(r).transpose() * resid(r);
    }
    groups = scores.size();
    MatrixXd meat = MatrixXd::Zero(x.cols(), x.cols());
    for (const auto& [id, s] : scores) meat.noalias() += s * s.transpose();
    return meat;
}

MatrixXd bread(const MatrixXd& x) {
    const MatrixXd xtx = x.transpose() * x;
    return xtx.ldlt().solve(MatrixXd::Identity(x.cols(), x.cols()));
}

MatrixXd sandwich(const MatrixXd& x, const VectorXd& resid, std::span<const int> ids, const MatrixXd& b) {
    std::size_t groups = 0;
    const MatrixXd meat = cluster_meat(x, resid, ids, groups);
    if (groups < 2) throw ValidationError("clustered covariance needs at least 2 clusters in each dimension");
    const auto n = static_cast<double>(x.rows());
    const auto k = static_cast<double>(x.cols());
    const auto g = static_cast<double>(groups);
    const double factor = g / (g - 1.0) * (n - 1.0) / std::max(1.0, n - k);
    return factor * b * meat * b;
}

}  // namespace

MatrixXd oneway_cluster_cov(const MatrixXd& x, const VectorXd& resid, std::span<const int> ids) {
    if (static_cast<Index>(ids.size()) != x.rows()) throw ValidationError("cluster labels and rows differ in length");
    return sandwich(x, resid, ids, bread(x));
}

ClusteredCov twoway_cluster_cov(const MatrixXd& x, const VectorXd& resid, std::span<const int> first,
                                std::span<const int> second) {
    if (static_cast<Index>(first.size()) != x.rows() || static_cast<Index>(second.size()) != x.rows())
        throw ValidationError("cluster labels and rows differ in length");
    std::map<std::pair<int, int>, int> cells;
    std::vector<int> both(first.size());
    for (std::size_t r = 0; r < first.size(); ++r) {
        auto [it, inserted] = cells.try_emplace({first[r], second[r]}, static_cast<int>(cells.size()));
        both[r] = it->second;
    }
    const MatrixXd b = bread(x);
    ClusteredCov out;
    out.cov = sandwich(x, resid, first, b) + sandwich(x, resid, second, b) - sandwich(x, resid, both, b);
    out.cov = 0.5 * (out.cov + out.cov.transpose());
    if ((out.cov.diagonal().array() < 0.0).any()) {
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(out.cov);
        const VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
        out.cov = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
        out.cov = 0.5 * (out.cov + out.cov.transpose());
        out.repaired = true;
    }
    return out;
}

LpFit lp_regress(const LpDesign& design) {
    const MatrixXd& x = design.x;
    LpFit fit;
    Eigen::ColPivHouseholderQR<MatrixXd> qr(x);
    if (qr.rank() == x.cols()) {
        fit.kept.resize(static_cast<std::size_t>(x.cols()));
        for (std::size_t c = 0; c < fit.kept.size(); ++c) fit.kept[c] = c;
    } else {
        // Keep columns in order unless they are spanned by the ones already kept.
        MatrixXd basis(x.rows(), 0);
        for (Index c = 0; c < x.cols(); ++c) {
            VectorXd v = x.col(c);
            const double norm = v.norm();
            for (Index b = 0; b < basis.cols(); ++b) v -= basis.col(b).dot(v) * basis.col(b);
            for (Index b = 0; b < basis.cols(); ++b) v -= basis.col(b).dot(v) * basis.col(b);
            if (norm > 0.0 && v.norm() > 1e-9 * norm) {
                basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
                basis.col(basis.cols() - 1) = v / v.norm();
                fit.kept.push_back(static_cast<std::size_t>(c));
            } else {
                if (c < design.n_shocks)
                    throw RankDeficientError("shock regressor '" + design.columns[static_cast<std::size_t>(c)] +
                                             "' is collinear with the controls");
                fit.dropped.push_back(design.columns[static_cast<std::size_t>(c)]);
            }
        }
    }
    MatrixXd xk(x.rows(), static_cast<Index>(fit.kept.size()));
    for (std::size_t c = 0; c < fit.kept.size(); ++c) xk.col(static_cast<Index>(c)) = x.col(static_cast<Index>(fit.kept[c]));
    if (xk.rows() <= xk.cols()) throw ValidationError("insufficient sample for the local projection regression");
    fit.beta = xk.colPivHouseholderQr().solve(design.y);
    const VectorXd resid = design.y - xk * fit.beta;
    auto cov = twoway_cluster_cov(xk, resid, design.country, design.time);
    fit.cov = std::move(cov.cov);
    fit.repaired = cov.repaired;
    return fit;
}

VectorXd shock_scales(const paneldata::PanelDataset& dataset) {
    VectorXd scale(static_cast<Index>(dataset.n_shocks()));
    for (Index s = 0; s < scale.size(); ++s) {
        scale(s) = stats::sample_sd(dataset.shocks().col(s));
        if (!(scale(s) > 0.0))
            throw DegenerateInputError("shock '" + dataset.shock_names()[static_cast<std::size_t>(s)] +
                                       "' has zero variance");
    }
    return scale;
}

LpDesign build_lp_design(const paneldata::PanelDataset& dataset, std::size_t outcome, const LpConfig& config, int h,
                         const VectorXd& scale, const std::vector<int>& lags) {
    const auto n_c = dataset.n_countries();
    const auto n_t = static_cast<int>(dataset.n_months());
    const auto n_v = dataset.n_variables();
    const auto m = static_cast<int>(dataset.n_shocks());
    if (m == 0) throw ValidationError("panel has no shock series; align shocks first");
    std::vector<int> own(n_c, config.j_y);
    std::vector<int> other(n_c, config.j_x);
    if (!lags.empty()) {
        own = lags;
        other = lags;
    }
    int max_lag = config.j_i;
    for (std::size_t i = 0; i < n_c; ++i) max_lag = std::max({max_lag, own[i], other[i]});
    const int t_first = max_lag;
    const int t_last = n_t - 1 - h;
    if (t_last - t_first + 1 < 10)
        throw ValidationError("insufficient sample: " + std::to_string(std::max(0, t_last - t_first + 1)) +
                              " usable months per country at horizon " + std::to_string(h) + " (need 10)");

    LpDesign d;
    d.n_shocks = m;
    const auto& countries = dataset.countries();
    const auto var_names = dataset.variable_names();
    for (int s = 0; s < m; ++s) d.columns.push_back(dataset.shock_names()[static_cast<std::size_t>(s)]);
    // column layout: shocks | per-country controls | deterministic terms
    std::vector<std::size_t> country_offset(n_c);
    for (std::size_t i = 0; i < n_c; ++i) {
        country_offset[i] = d.columns.size();
        for (int j = 1; j <= own[i]; ++j)
            d.columns.push_back(countries[i] + ":" + var_names[outcome] + ".L" + std::to_string(j));
        for (std::size_t v = 0; v < n_v; ++v) {
            if (v == outcome) continue;
            for (int j = 1; j <= other[i]; ++j)
                d.columns.push_back(countries[i] + ":" + var_names[v] + ".L" + std::to_string(j));
        }
        for (int s = 0; s < m; ++s)
            for (int j = 1; j <= config.j_i; ++j)
                d.columns.push_back(countries[i] + ":" + dataset.shock_names()[static_cast<std::size_t>(s)] + ".L" +
                                    std::to_string(j));
    }
    const std::size_t det_offset = d.columns.size();
    if (config.spec == LpSpec::pooled) {
        d.columns.push_back("const");
    } else {
        for (std::size_t i = 0; i < n_c; ++i) d.columns.push_back(countries[i] + ":fe");
        if (config.spec == LpSpec::fe_trend)
            for (std::size_t i = 0; i < n_c; ++i) d.columns.push_back(countries[i] + ":trend");
    }

    const Index rows = static_cast<Index>(n_c) * (t_last - t_first + 1);
    d.x = MatrixXd::Zero(rows, static_cast<Index>(d.columns.size()));
    d.y.resize(rows);
    const MatrixXd& shocks = dataset.shocks();
    Index r = 0;
    for (std::size_t i = 0; i < n_c; ++i) {
        for (int t = t_first; t <= t_last; ++t, ++r) {
            d.y(r) = dataset.value(i, static_cast<std::size_t>(t + h), outcome);
            d.country.push_back(static_cast<int>(i));
            d.time.push_back(t);
            for (int s = 0; s < m; ++s) d.x(r, s) = shocks(t, s) / scale(s);
            auto col = static_cast<Index>(country_offset[i]);
            for (int j = 1; j <= own[i]; ++j) d.x(r, col++) = dataset.value(i, static_cast<std::size_t>(t - j), outcome);
            for (std::size_t v = 0; v < n_v; ++v) {
                if (v == outcome) continue;
                for (int j = 1; j <= other[i]; ++j) d.x(r, col++) = dataset.value(i, static_cast<std::size_t>(t - j), v);
            }
            for (int s = 0; s < m; ++s)
                for (int j = 1; j <= config.j_i; ++j) d.x(r, col++) = shocks(t - j, s) / scale(s);
            if (config.spec == LpSpec::pooled) {
                d.x(r, static_cast<Index>(det_offset)) = 1.0;
            } else {
                d.x(r, static_cast<Index>(det_offset + i)) = 1.0;
                if (config.spec == LpSpec::fe_trend)
                    d.x(r, static_cast<Index>(det_offset + n_c + i)) = static_cast<double>(t) / 12.0;
            }
        }
    }
    return d;
}

LpResult lp_estimate(const paneldata::PanelDataset& dataset, const std::string& outcome, const LpConfig& config,
                     int threads) {
    config.validate();
    const std::size_t k = dataset.variable_index(outcome);
    const VectorXd scale = shock_scales(dataset);
    std::vector<int> lags;
    if (config.auto_lags) {
        for (const auto& c : dataset.countries()) lags.push_back(sbic_lag_select(dataset, c, config.max_lag));
    }
    const auto m = static_cast<Index>(dataset.n_shocks());
    LpResult out;
    out.outcome = outcome;
    out.spec = config.spec;
    out.shock_names = dataset.shock_names();
    out.scale = scale;
    out.lags = lags.empty() ? std::vector<int>(dataset.n_countries(), config.j_y) : lags;
    out.beta.resize(config.horizons + 1, m);
    out.se.resize(config.horizons + 1, m);
    out.dropped.resize(static_cast<std::size_t>(config.horizons + 1));
    out.repaired.resize(static_cast<std::size_t>(config.horizons + 1));
    // the shortest sample is at the last horizon; fail before any work
    build_lp_design(dataset, k, config, config.horizons, scale, lags);
    std::vector<char> repaired(static_cast<std::size_t>(config.horizons + 1), 0);
    parallel_for(static_cast<std::size_t>(config.horizons + 1), threads, [&](std::size_t h) {
        const auto design = build_lp_design(dataset, k, config, static_cast<int>(h), scale, lags);
        const auto fit = lp_regress(design);
        for (Index s = 0; s < m; ++s) {
            out.beta(static_cast<Index>(h), s) = fit.beta(s);
            out.se(static_cast<Index>(h), s) = std::sqrt(std::max(0.0, fit.cov(s, s)));
        }
        out.dropped[h] = fit.dropped;
        repaired[h] = fit.repaired ? 1 : 0;
    });
    for (std::size_t h = 0; h < repaired.size(); ++h) out.repaired[h] = repaired[h] != 0;
    return out;
}

std::vector<double> sbic_values(const paneldata::PanelDataset& dataset, const std::string& country, int max_lag) {
    if (max_lag < 1) throw ValidationError("max_lag must be at least 1");
    const MatrixXd block = dataset.country_block(dataset.country_index(country));
    const Index n = block.cols();
    const Index t_eff = block.rows() - max_lag;
    if (t_eff <= n * max_lag + 1)
        throw ValidationError("insufficient observations for SBIC at max_lag " + std::to_string(max_lag));
    const MatrixXd y = block.bottomRows(t_eff);
    std::vector<double> out;
    for (int p = 1; p <= max_lag; ++p) {
        MatrixXd x(t_eff, n * p + 1);
        for (Index r = 0; r < t_eff; ++r) {
            for (int l = 1; l <= p; ++l) x.block(r, (l - 1) * n, 1, n) = block.row(r + max_lag - l);
            x(r, n * p) = 1.0;
        }
        const MatrixXd b = x.colPivHouseholderQr().solve(y);
        const MatrixXd e = y - x * b;
        const MatrixXd sigma = e.transpose() * e / static_cast<double>(t_eff);
        const double logdet = sigma.ldlt().vectorD().array().log().sum();
        const auto k_p = static_cast<double>(n * (n * p + 1));
        out.push_back(logdet + k_p / static_cast<double>(t_eff) * std::log(static_cast<double>(t_eff)));
    }
    return out;
}

int sbic_lag_select(const paneldata::PanelDataset& dataset, const std::string& country, int max_lag) {
    const auto values = sbic_values(dataset, country, max_lag);
    int best = 0;
    for (int p = 1; p < static_cast<int>(values.size()); ++p)
        if (values[static_cast<std::size_t>(p)] < values[static_cast<std::size_t>(best)]) best = p;
    return best + 1;
}

}  // namespace hfspill::localproj
