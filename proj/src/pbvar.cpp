#include "hfspill/pbvar.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "hfspill/error.hpp"
#include "hfspill/parallel.hpp"
#include "hfspill/stats.hpp"

namespace hfspill::pbvar {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void BvarConfig::validate() const {
    if (lags < 1) throw ValidationError("lags must be at least 1, got " + std::to_string(lags));
    if (burn < 0) throw ValidationError("burn must be non-negative, got " + std::to_string(burn));
    if (draws <= burn)
        throw ValidationError("draws (" + std::to_string(draws) + ") must exceed burn (" + std::to_string(burn) + ")");
    if (horizon < 0) throw ValidationError("horizon must be non-negative");
    if (percentiles.empty()) throw ValidationError("at least one percentile is required");
    for (std::size_t i = 0; i < percentiles.size(); ++i) {
        if (!(percentiles[i] > 0.0 && percentiles[i] < 100.0))
            throw ValidationError("percentiles must lie strictly inside (0,100)");
        if (i > 0 && !(percentiles[i] > percentiles[i - 1]))
            throw ValidationError("percentiles must be strictly increasing");
    }
    if (!(prior.overall_tightness > 0.0) || !(prior.lag_decay >= 0.0) || !(prior.intercept_looseness > 0.0))
        throw ValidationError("prior hyperparameters must be positive");
    if (threads < 1) throw ValidationError("threads must be at least 1");
}

Design build_var_design(const MatrixXd& z, int lags, std::vector<std::string> names, int n_shocks) {
    if (lags < 1) throw ValidationError("lags must be at least 1");
    const Index t = z.rows();
    const Index k = z.cols();
    if (t <= lags + 1)
        throw ValidationError("insufficient observations: " + std::to_string(t) + " periods for " +
                              std::to_string(lags) + " lags");
    Design d;
    d.lags = lags;
    d.n_shocks = n_shocks;
    d.names = std::move(names);
    const Index rows = t - lags;
    d.y = z.bottomRows(rows);
    d.x.resize(rows, k * lags + 1);
    for (Index r = 0; r < rows; ++r) {
        for (int l = 1; l <= lags; ++l) d.x.block(r, (l - 1) * k, 1, k) = z.row(r + lags - l);
        d.x(r, k * lags) = 1.0;
    }
    return d;
}

Design build_design(const paneldata::PanelDataset& dataset, const BvarConfig& config) {
    config.validate();
    const auto m = static_cast<Index>(dataset.n_shocks());
    const auto n = static_cast<Index>(dataset.n_variables());
    const auto t = static_cast<Index>(dataset.n_months());
    if (dataset.n_countries() == 0) throw ValidationError("panel has no countries");
    if (t <= config.lags + 1)
        throw ValidationError("insufficient observations: " + std::to_string(t) + " months for " +
                              std::to_string(config.lags) + " lags");
    std::vector<std::string> names = dataset.shock_names();
    for (const auto& v : dataset.variable_names()) names.push_back(v);

    const Index rows_per = t - config.lags;
    Design out;
    out.lags = config.lags;
    out.n_shocks = static_cast<int>(m);
    out.names = names;
    out.y.resize(rows_per * static_cast<Index>(dataset.n_countries()), m + n);
    out.x.resize(out.y.rows(), (m + n) * config.lags + 1);
    MatrixXd z(t, m + n);
    z.leftCols(m) = dataset.shocks();
    for (std::size_t i = 0; i < dataset.n_countries(); ++i) {
        z.rightCols(n) = dataset.country_block(i);
        const Design unit = build_var_design(z, config.lags, names, static_cast<int>(m));
        out.y.middleRows(static_cast<Index>(i) * rows_per, rows_per) = unit.y;
        out.x.middleRows(static_cast<Index>(i) * rows_per, rows_per) = unit.x;
    }
    return out;
}

namespace {

// Regressor roles used to build Minnesota prior variances.
struct Regressor {
    enum Kind { lag, contemporaneous, intercept } kind;
    int var = -1;
    int lag_order = 0;
};

struct PriorBlock {
    MatrixXd b0;             // regressors x equations
    VectorXd precision0;     // diagonal of Omega0^{-1}
    MatrixXd s0;
    double nu0 = 0.0;
    bool diffuse = false;
};

struct Niw {
    MatrixXd b_bar;
    MatrixXd precision_chol;  // lower factor of Omega_bar^{-1}
    MatrixXd s_bar_inv_chol;  // lower factor of S_bar^{-1}
    double nu = 0.0;
};

// Residual variance of a univariate AR(p) with intercept for each variable.
VectorXd ar_residual_variances(const Design& d) {
    const int k = d.n_vars();
    VectorXd out(k);
    const Index rows = d.y.rows();
    for (int j = 0; j < k; ++j) {
        MatrixXd x(rows, d.lags + 1);
        for (int l = 1; l <= d.lags; ++l) x.col(l - 1) = d.x.col((l - 1) * k + j);
        x.col(d.lags).setOnes();
        const VectorXd beta = x.colPivHouseholderQr().solve(d.y.col(j));
        const VectorXd e = d.y.col(j) - x * beta;
        const double dof = std::max<double>(1.0, static_cast<double>(rows - d.lags - 1));
        out(j) = e.squaredNorm() / dof;
    }
    const double floor = std::max(out.maxCoeff(), 1.0) * 1e-10;
    for (int j = 0; j < k; ++j)
        if (!(out(j) > floor)) out(j) = floor;
    return out;
}

PriorBlock minnesota(const std::vector<Regressor>& regs, const std::vector<int>& equations, int n_shocks,
                     const VectorXd& sigma2, const PriorConfig& cfg) {
    PriorBlock p;
    const auto k = static_cast<Index>(regs.size());
    const auto n_eq = static_cast<Index>(equations.size());
    p.diffuse = cfg.diffuse;
    p.b0 = MatrixXd::Zero(k, n_eq);
    p.precision0 = VectorXd::Zero(k);
    p.s0 = MatrixXd::Zero(n_eq, n_eq);
    if (cfg.diffuse) return p;
    const double l1 = cfg.overall_tightness;
    for (Index r = 0; r < k; ++r) {
        const auto& reg = regs[static_cast<std::size_t>(r)];
        double variance = 0.0;
        switch (reg.kind) {
            case Regressor::lag:
                variance = std::pow(l1 / (std::sqrt(sigma2(reg.var)) * std::pow(reg.lag_order, cfg.lag_decay)), 2);
                break;
            case Regressor::contemporaneous:
                variance = std::pow(l1 * cfg.intercept_looseness / std::sqrt(sigma2(reg.var)), 2);
                break;
            case Regressor::intercept:
                variance = std::pow(l1 * cfg.intercept_looseness, 2);
                break;
        }
        p.precision0(r) = 1.0 / variance;
        if (reg.kind == Regressor::lag && reg.lag_order == 1 && reg.var >= n_shocks) {
            for (Index e = 0; e < n_eq; ++e)
                if (equations[static_cast<std::size_t>(e)] == reg.var) p.b0(r, e) = cfg.own_lag_mean;
        }
    }
    p.nu0 = static_cast<double>(n_eq) + 2.0;
    for (Index e = 0; e < n_eq; ++e)
        p.s0(e, e) = (p.nu0 - static_cast<double>(n_eq) - 1.0) * sigma2(equations[static_cast<std::size_t>(e)]);
    return p;
}

Niw niw_posterior(const MatrixXd& y, const MatrixXd& x, const PriorBlock& prior) {
    const Index t = x.rows();
    const Index k = x.cols();
    const Index n_eq = y.cols();
    MatrixXd precision = x.transpose() * x;
    precision.diagonal() += prior.precision0;
    Eigen::LLT<MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success) throw RankDeficientError("posterior precision of the coefficients is singular");
    MatrixXd rhs = x.transpose() * y;
    if (!prior.diffuse) rhs += prior.precision0.asDiagonal() * prior.b0;

    Niw out;
    out.b_bar = llt.solve(rhs);
    out.precision_chol = llt.matrixL();
    const MatrixXd resid = y - x * out.b_bar;
    MatrixXd s_bar = resid.transpose() * resid;
    if (prior.diffuse) {
        out.nu = static_cast<double>(t - k);
    } else {
        const MatrixXd dev = out.b_bar - prior.b0;
        s_bar += prior.s0 + dev.transpose() * prior.precision0.asDiagonal() * dev;
        out.nu = prior.nu0 + static_cast<double>(t);
    }
    if (!(out.nu > static_cast<double>(n_eq - 1)))
        throw NumericalError("too few observations for the inverse-Wishart posterior (dof " + std::to_string(out.nu) +
                             ")");
    s_bar = 0.5 * (s_bar + s_bar.transpose());
    Eigen::LLT<MatrixXd> s_llt(s_bar);
    if (s_llt.info() != Eigen::Success) throw NumericalError("posterior scale matrix is not positive definite");
    const MatrixXd s_inv = s_llt.solve(MatrixXd::Identity(n_eq, n_eq));
    Eigen::LLT<MatrixXd> inv_llt(0.5 * (s_inv + s_inv.transpose()));
    if (inv_llt.info() != Eigen::Success) throw NumericalError("posterior scale matrix is not positive definite");
    out.s_bar_inv_chol = inv_llt.matrixL();
    return out;
}

// Sigma ~ IW(S_bar, nu) through a Bartlett draw of Sigma^{-1} ~ W(S_bar^{-1}, nu).
MatrixXd draw_inverse_wishart(const Niw& post, std::mt19937_64& rng) {
    const Index n = post.s_bar_inv_chol.rows();
    MatrixXd a = MatrixXd::Zero(n, n);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index i = 0; i < n; ++i) {
        std::chi_squared_distribution<double> chi2(post.nu - static_cast<double>(i));
        a(i, i) = std::sqrt(chi2(rng));
        for (Index j = 0; j < i; ++j) a(i, j) = normal(rng);
    }
    const MatrixXd g = post.s_bar_inv_chol * a;  // lower triangular, W = g g'
    const MatrixXd g_inv = g.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(n, n));
    const MatrixXd sigma = g_inv.transpose() * g_inv;
    return 0.5 * (sigma + sigma.transpose());
}

// vec(B) ~ N(vec(B_bar), Sigma kron Omega_bar).
MatrixXd draw_coefficients(const Niw& post, const Eigen::LLT<MatrixXd>& sigma_llt, std::mt19937_64& rng) {
    const MatrixXd z = stats::standard_normal(rng, post.b_bar.rows(), post.b_bar.cols());
    const MatrixXd left = post.precision_chol.transpose().triangularView<Eigen::Upper>().solve(z);
    return post.b_bar + left * MatrixXd(sigma_llt.matrixL()).transpose();
}

std::vector<Regressor> lag_regressors(int k, int lags) {
    std::vector<Regressor> regs;
    for (int l = 1; l <= lags; ++l)
        for (int v = 0; v < k; ++v) regs.push_back({Regressor::lag, v, l});
    regs.push_back({Regressor::intercept, -1, 0});
    return regs;
}

void check_rank(const MatrixXd& x, double& cond) {
    cond = stats::condition_number(x);
    if (!std::isfinite(cond) || cond > 1e12) {
        throw RankDeficientError("regressor matrix is rank deficient (condition number " + std::to_string(cond) + ")");
    }
}

}  // namespace

PosteriorFit fit_posterior(const Design& design, const BvarConfig& config, std::uint64_t seed) {
    config.validate();
    const int k = design.n_vars();
    const int m = design.n_shocks;
    const int p = design.lags;
    const Index n_reg = static_cast<Index>(k) * p + 1;
    if (design.x.cols() != n_reg || design.y.rows() != design.x.rows())
        throw ValidationError("design matrices have inconsistent shapes");

    PosteriorFit fit;
    fit.lags = p;
    fit.n_shocks = m;
    fit.names = design.names;
    const VectorXd sigma2 = ar_residual_variances(design);
    const int retained = config.retained();
    const int budget = retained / 100;
    std::atomic<int> resampled{0};
    fit.samples.resize(static_cast<std::size_t>(retained));

    std::vector<int> all_eq(static_cast<std::size_t>(k));
    std::iota(all_eq.begin(), all_eq.end(), 0);

    if (!config.block_exogenous || m == 0 || m == k) {
        check_rank(design.x, fit.condition_number);
        const PriorBlock prior = minnesota(lag_regressors(k, p), all_eq, m, sigma2, config.prior);
        const Niw post = niw_posterior(design.y, design.x, prior);
        parallel_for(static_cast<std::size_t>(retained), config.threads, [&](std::size_t i) {
            const auto draw_index = static_cast<std::uint64_t>(config.burn) + i;
            for (int attempt = 0;; ++attempt) {
                auto rng = stats::substream(seed, draw_index, static_cast<std::uint64_t>(attempt));
                MatrixXd sigma = draw_inverse_wishart(post, rng);
                Eigen::LLT<MatrixXd> llt(sigma);
                if (llt.info() != Eigen::Success) {
                    if (++resampled > budget)
                        throw NumericalError("more than 1% of covariance draws were not positive definite");
                    continue;
                }
                fit.samples[i].coeffs = draw_coefficients(post, llt, rng).transpose();
                fit.samples[i].sigma = std::move(sigma);
                break;
            }
        });
        fit.resampled = resampled.load();
        return fit;
    }

    // Block exogeneity: the shock block is a VAR in its own lags; the country
    // block is a regression on current shocks and all lags. The reduced form
    // is recovered from the two conditional blocks.
    const int n = k - m;
    std::vector<Index> shock_cols;
    std::vector<Regressor> regs1;
    for (int l = 1; l <= p; ++l)
        for (int v = 0; v < m; ++v) {
            shock_cols.push_back(static_cast<Index>((l - 1) * k + v));
            regs1.push_back({Regressor::lag, v, l});
        }
    shock_cols.push_back(n_reg - 1);
    regs1.push_back({Regressor::intercept, -1, 0});
    MatrixXd x1(design.x.rows(), static_cast<Index>(shock_cols.size()));
    for (std::size_t c = 0; c < shock_cols.size(); ++c) x1.col(static_cast<Index>(c)) = design.x.col(shock_cols[c]);
    const MatrixXd y1 = design.y.leftCols(m);

    MatrixXd x2(design.x.rows(), m + n_reg);
    x2.leftCols(m) = design.y.leftCols(m);
    x2.rightCols(n_reg) = design.x;
    const MatrixXd y2 = design.y.rightCols(n);
    std::vector<Regressor> regs2;
    for (int v = 0; v < m; ++v) regs2.push_back({Regressor::contemporaneous, v, 0});
    for (const auto& r : lag_regressors(k, p)) regs2.push_back(r);

    double cond1 = 0.0;
    check_rank(x1, cond1);
    check_rank(x2, fit.condition_number);
    fit.condition_number = std::max(fit.condition_number, cond1);

    std::vector<int> eq1(static_cast<std::size_t>(m));
    std::iota(eq1.begin(), eq1.end(), 0);
    std::vector<int> eq2(static_cast<std::size_t>(n));
    std::iota(eq2.begin(), eq2.end(), m);
    const Niw post1 = niw_posterior(y1, x1, minnesota(regs1, eq1, m, sigma2, config.prior));
    const Niw post2 = niw_posterior(y2, x2, minnesota(regs2, eq2, m, sigma2, config.prior));

    parallel_for(static_cast<std::size_t>(retained), config.threads, [&](std::size_t i) {
        const auto draw_index = static_cast<std::uint64_t>(config.burn) + i;
        for (int attempt = 0;; ++attempt) {
            auto rng = stats::substream(seed, draw_index, static_cast<std::uint64_t>(attempt));
            const MatrixXd sigma_mm = draw_inverse_wishart(post1, rng);
            const MatrixXd sigma_cond = draw_inverse_wishart(post2, rng);
            Eigen::LLT<MatrixXd> llt1(sigma_mm);
            Eigen::LLT<MatrixXd> llt2(sigma_cond);
            if (llt1.info() != Eigen::Success || llt2.info() != Eigen::Success) {
                if (++resampled > budget)
                    throw NumericalError("more than 1% of covariance draws were not positive definite");
                continue;
            }
            const MatrixXd b1 = draw_coefficients(post1, llt1, rng);
            const MatrixXd b2 = draw_coefficients(post2, llt2, rng);

            MatrixXd b1_full = MatrixXd::Zero(n_reg, m);
            for (std::size_t c = 0; c < shock_cols.size(); ++c) b1_full.row(shock_cols[c]) = b1.row(static_cast<Index>(c));
            const MatrixXd gamma = b2.topRows(m);  // m x n impact of current shocks
            MatrixXd b = MatrixXd::Zero(n_reg, k);
            b.leftCols(m) = b1_full;
            b.rightCols(n) = b1_full * gamma + b2.bottomRows(n_reg);

            MatrixXd sigma(k, k);
            sigma.topLeftCorner(m, m) = sigma_mm;
            sigma.topRightCorner(m, n) = sigma_mm * gamma;
            sigma.bottomLeftCorner(n, m) = gamma.transpose() * sigma_mm;
            sigma.bottomRightCorner(n, n) = gamma.transpose() * sigma_mm * gamma + sigma_cond;
            sigma = 0.5 * (sigma + sigma.transpose());
            if (Eigen::LLT<MatrixXd>(sigma).info() != Eigen::Success) {
                if (++resampled > budget)
                    throw NumericalError("more than 1% of covariance draws were not positive definite");
                continue;
            }
            fit.samples[i].coeffs = b.transpose();
            fit.samples[i].sigma = std::move(sigma);
            break;
        }
    });
    fit.resampled = resampled.load();
    return fit;
}

double IrfResult::at(int s, int v, int h, int p) const {
    const auto n_v = variable_names.size();
    const auto n_p = percentiles.size();
    const auto idx = ((static_cast<std::size_t>(s) * n_v + static_cast<std::size_t>(v)) *
                          static_cast<std::size_t>(horizon + 1) +
                      static_cast<std::size_t>(h)) *
                         n_p +
                     static_cast<std::size_t>(p);
    return responses[idx];
}

std::size_t IrfResult::percentile_index(double pct) const {
    for (std::size_t i = 0; i < percentiles.size(); ++i)
        if (std::abs(percentiles[i] - pct) < 1e-9) return i;
    throw ValidationError("percentile " + std::to_string(pct) + " was not computed");
}

IrfPath IrfResult::slice(double pct) const {
    const auto p = static_cast<int>(percentile_index(pct));
    IrfPath out(static_cast<int>(shock_names.size()), static_cast<int>(variable_names.size()), horizon);
    for (int s = 0; s < out.n_shocks; ++s)
        for (int v = 0; v < out.n_vars; ++v)
            for (int h = 0; h <= horizon; ++h) out.at(s, v, h) = at(s, v, h, p);
    return out;
}

bool cholesky_irf(const PosteriorSample& sample, int lags, int horizon, int n_shocks, IrfPath& out) {
    const Index k = sample.sigma.rows();
    if (n_shocks < 0) n_shocks = static_cast<int>(k);
    Eigen::LLT<MatrixXd> llt(sample.sigma);
    if (llt.info() != Eigen::Success) return false;
    const MatrixXd l = llt.matrixL();
    out = IrfPath(n_shocks, static_cast<int>(k), horizon);
    std::vector<MatrixXd> theta;
    theta.reserve(static_cast<std::size_t>(horizon + 1));
    theta.push_back(l.leftCols(n_shocks));
    for (int h = 1; h <= horizon; ++h) {
        MatrixXd next = MatrixXd::Zero(k, n_shocks);
        for (int j = 1; j <= std::min(h, lags); ++j)
            next.noalias() += sample.coeffs.block(0, (j - 1) * k, k, k) * theta[static_cast<std::size_t>(h - j)];
        theta.push_back(std::move(next));
    }
    for (int s = 0; s < n_shocks; ++s)
        for (Index v = 0; v < k; ++v)
            for (int h = 0; h <= horizon; ++h)
                out.at(s, static_cast<int>(v), h) = theta[static_cast<std::size_t>(h)](v, s);
    return true;
}

IrfDraws irf_draws(const std::vector<PosteriorSample>& samples, int lags, int horizon, int n_shocks, int threads) {
    std::vector<IrfPath> paths(samples.size());
    std::vector<char> ok(samples.size(), 0);
    parallel_for(samples.size(), threads,
                 [&](std::size_t i) { ok[i] = cholesky_irf(samples[i], lags, horizon, n_shocks, paths[i]) ? 1 : 0; });
    IrfDraws out;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (ok[i]) {
            out.paths.push_back(std::move(paths[i]));
        } else {
            ++out.rejected;
        }
    }
    return out;
}

IrfResult summarize(const std::vector<IrfPath>& paths, const std::vector<double>& percentiles,
                    std::vector<std::string> shock_names, std::vector<std::string> variable_names) {
    if (paths.empty()) throw NumericalError("no impulse-response draws to summarize");
    const auto& first = paths.front();
    IrfResult out;
    out.shock_names = std::move(shock_names);
    out.variable_names = std::move(variable_names);
    out.shock_names.resize(static_cast<std::size_t>(first.n_shocks));
    out.percentiles = percentiles;
    out.horizon = first.horizon;
    out.draws_used = static_cast<int>(paths.size());
    out.responses.resize(first.values.size() * percentiles.size());
    std::vector<double> cell(paths.size());
    for (std::size_t c = 0; c < first.values.size(); ++c) {
        for (std::size_t d = 0; d < paths.size(); ++d) cell[d] = paths[d].values[c];
        std::sort(cell.begin(), cell.end());
        for (std::size_t p = 0; p < percentiles.size(); ++p)
            out.responses[c * percentiles.size() + p] = stats::percentile_sorted(cell, percentiles[p]);
    }
    return out;
}

IrfResult structural_irf(const PosteriorFit& fit, const BvarConfig& config) {
    if (fit.samples.empty()) throw ValidationError("no posterior samples");
    auto draws = irf_draws(fit.samples, fit.lags, config.horizon, -1, config.threads);
    if (draws.rejected * 100 > static_cast<int>(fit.samples.size()))
        throw NumericalError("Cholesky factorization failed on more than 1% of posterior draws");
    auto result = summarize(draws.paths, config.percentiles, fit.names, fit.names);
    result.rejected = draws.rejected;
    return result;
}

MeanGroupResult mean_group(const paneldata::PanelDataset& dataset, const BvarConfig& config) {
    BvarConfig cfg = config;
    cfg.lags = 1;
    cfg.validate();
    const auto m = static_cast<Index>(dataset.n_shocks());
    const auto n = static_cast<Index>(dataset.n_variables());
    const Index k = m + n;
    const auto t = static_cast<Index>(dataset.n_months());
    if (t <= 2 * k + 1)
        throw ValidationError("mean group needs more than " + std::to_string(2 * k + 1) + " months per country");
    std::vector<std::string> names = dataset.shock_names();
    for (const auto& v : dataset.variable_names()) names.push_back(v);

    MeanGroupResult out;
    std::vector<IrfPath> paths;
    MatrixXd z(t, k);
    z.leftCols(m) = dataset.shocks();
    for (std::size_t i = 0; i < dataset.n_countries(); ++i) {
        z.rightCols(n) = dataset.country_block(i);
        const Design d = build_var_design(z, 1, names, static_cast<int>(m));
        Eigen::ColPivHouseholderQR<MatrixXd> qr(d.x);
        if (qr.rank() < d.x.cols()) {
            out.dropped.push_back(dataset.countries()[i]);
            continue;
        }
        const MatrixXd b = qr.solve(d.y);
        const MatrixXd e = d.y - d.x * b;
        PosteriorSample est{b.transpose(), e.transpose() * e / static_cast<double>(d.x.rows() - d.x.cols())};
        IrfPath path;
        if (!cholesky_irf(est, 1, cfg.horizon, -1, path)) {
            out.dropped.push_back(dataset.countries()[i]);
            continue;
        }
        out.countries.push_back(dataset.countries()[i]);
        out.per_country.push_back(std::move(est));
        paths.push_back(std::move(path));
    }
    const std::size_t needed = std::min<std::size_t>(2, dataset.n_countries());
    if (out.per_country.size() < std::max<std::size_t>(needed, 1)) {
        throw RankDeficientError("mean group: only " + std::to_string(out.per_country.size()) +
                                 " countries survive after dropping rank-deficient ones");
    }
    out.average.coeffs = MatrixXd::Zero(k, k + 1);
    out.average.sigma = MatrixXd::Zero(k, k);
    for (const auto& est : out.per_country) {
        out.average.coeffs += est.coeffs;
        out.average.sigma += est.sigma;
    }
    const auto count = static_cast<double>(out.per_country.size());
    out.average.coeffs /= count;
    out.average.sigma /= count;
    if (!cholesky_irf(out.average, 1, cfg.horizon, -1, out.point))
        throw NumericalError("averaged covariance is not positive definite");
    out.bands = summarize(paths, cfg.percentiles, names, names);
    return out;
}

RotationBandResult rotation_band_irf(const paneldata::PanelDataset& dataset, const std::vector<Date>& event_dates,
                                     const std::vector<hfdecomp::ShockDecomposition>& grid, const BvarConfig& config,
                                     std::uint64_t seed, int pooled_draws) {
    config.validate();
    if (grid.empty()) throw ValidationError("rotation grid is empty");
    if (pooled_draws < 1) throw ValidationError("pooled draw count must be positive");
    const std::vector<std::string> shock_names{"i_mp", "i_id"};
    const auto per_grid = static_cast<std::size_t>(config.retained());
    const std::size_t pool = per_grid * grid.size();

    // Choose which (grid point, draw) pairs enter the pooled sample up front.
    std::vector<std::vector<std::size_t>> chosen(grid.size());
    if (pool <= static_cast<std::size_t>(pooled_draws)) {
        for (auto& c : chosen) {
            c.resize(per_grid);
            std::iota(c.begin(), c.end(), 0);
        }
    } else {
        std::vector<std::size_t> idx(pool);
        std::iota(idx.begin(), idx.end(), 0);
        auto rng = stats::substream(seed, 0x706f6f6cULL);
        for (std::size_t i = 0; i < static_cast<std::size_t>(pooled_draws); ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, pool - 1);
            std::swap(idx[i], idx[pick(rng)]);
        }
        idx.resize(static_cast<std::size_t>(pooled_draws));
        std::sort(idx.begin(), idx.end());
        for (auto v : idx) chosen[v / per_grid].push_back(v % per_grid);
    }

    RotationBandResult out;
    std::vector<IrfPath> pooled;
    std::vector<std::string> var_names;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const paneldata::DatedSeries events{event_dates, shock_names, grid[g].shocks()};
        const auto aligned = paneldata::align_shocks(dataset, events, shock_names);
        const auto design = build_design(aligned, config);
        const auto fit = fit_posterior(design, config, seed);
        auto draws = irf_draws(fit.samples, fit.lags, config.horizon, 2, config.threads);
        if (draws.rejected * 100 > static_cast<int>(fit.samples.size()))
            throw NumericalError("Cholesky factorization failed on more than 1% of posterior draws");
        var_names = fit.names;
        out.per_rotation.push_back(summarize(draws.paths, config.percentiles, shock_names, fit.names));
        out.per_rotation.back().rejected = draws.rejected;
        out.weights.push_back(grid[g].w);
        for (auto d : chosen[g])
            if (d < draws.paths.size()) pooled.push_back(draws.paths[d]);
    }
    out.pooled = summarize(pooled, config.percentiles, shock_names, var_names);
    return out;
}

}  // namespace hfspill::pbvar
