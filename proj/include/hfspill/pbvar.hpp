#pragma once

// Pooled Bayesian panel SVAR.
//
// Every country contributes rows z_{i,t} = [m_t; y_{i,t}] to one stacked
// regression with common dynamic coefficients and a common innovation
// covariance; the shock block m_t is ordered first and repeated across
// countries. The conjugate Normal-inverse-Wishart posterior is sampled
// directly and structural responses come from the lower Cholesky factor of
// each covariance draw.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hfspill/dates.hpp"
#include "hfspill/hfdecomp.hpp"
#include "hfspill/paneldata.hpp"

namespace hfspill::pbvar {

/// Minnesota-style hyperparameters for the Normal-Wishart prior.
struct PriorConfig {
    double overall_tightness = 0.1;
    double lag_decay = 1.0;
    double intercept_looseness = 100.0;
    /// Prior mean of each country variable's own first lag. Shock-block
    /// variables are serially uncorrelated surprises and are centred on zero.
    double own_lag_mean = 0.8;
    /// Flat prior on B and Jeffreys prior on Sigma; the posterior mean is OLS.
    bool diffuse = false;
};

struct BvarConfig {
    int lags = 6;
    int draws = 5000;
    int burn = 500;
    int horizon = 36;
    std::vector<double> percentiles{5, 16, 50, 84, 95};
    /// Shock-block equations use only lagged shocks and the intercept.
    bool block_exogenous = false;
    PriorConfig prior;
    int threads = 1;

    int retained() const { return draws - burn; }
    void validate() const;
};

/// Stacked regression Y = X B + E. Columns of X are [z_{t-1}', ..., z_{t-p}', 1].
struct Design {
    Eigen::MatrixXd y;
    Eigen::MatrixXd x;
    int lags = 1;
    int n_shocks = 0;
    std::vector<std::string> names;  // shock block first

    int n_vars() const { return static_cast<int>(y.cols()); }
};

/// Single-unit VAR design from a T x K data matrix.
Design build_var_design(const Eigen::MatrixXd& z, int lags, std::vector<std::string> names, int n_shocks = 0);

/// Pooled design, countries stacked in dataset order.
Design build_design(const paneldata::PanelDataset& dataset, const BvarConfig& config);

/// One posterior draw. `coeffs` is K x (K p + 1): row j holds equation j's
/// coefficients on [z_{t-1}', ..., z_{t-p}', 1].
struct PosteriorSample {
    Eigen::MatrixXd coeffs;
    Eigen::MatrixXd sigma;
};

struct PosteriorFit {
    std::vector<PosteriorSample> samples;
    double condition_number = 0.0;
    int resampled = 0;  // covariance draws rejected as not positive definite and redrawn
    int lags = 1;
    int n_shocks = 0;
    std::vector<std::string> names;
};

/// Draws config.draws - config.burn posterior samples; draw d uses the
/// random substream (seed, d), so results do not depend on config.threads.
PosteriorFit fit_posterior(const Design& design, const BvarConfig& config, std::uint64_t seed);

/// Point responses, shock x variable x horizon.
struct IrfPath {
    int n_shocks = 0;
    int n_vars = 0;
    int horizon = 0;
    std::vector<double> values;

    IrfPath() = default;
    IrfPath(int shocks, int vars, int h)
        : n_shocks(shocks), n_vars(vars), horizon(h),
          values(static_cast<std::size_t>(shocks * vars * (h + 1)), 0.0) {}
    double& at(int s, int v, int h) { return values[index(s, v, h)]; }
    double at(int s, int v, int h) const { return values[index(s, v, h)]; }

private:
    std::size_t index(int s, int v, int h) const {
        return (static_cast<std::size_t>(s) * static_cast<std::size_t>(n_vars) + static_cast<std::size_t>(v)) *
                   static_cast<std::size_t>(horizon + 1) +
               static_cast<std::size_t>(h);
    }
};

/// Percentile bands of structural responses to one-standard-deviation shocks.
struct IrfResult {
    std::vector<std::string> shock_names;
    std::vector<std::string> variable_names;
    std::vector<double> percentiles;
    int horizon = 0;
    std::vector<double> responses;  // [shock][variable][horizon][percentile]
    int draws_used = 0;
    int rejected = 0;

    double at(int s, int v, int h, int p) const;
    std::size_t percentile_index(double pct) const;
    /// Point path at one percentile.
    IrfPath slice(double pct) const;
};

/// Responses for h = 0..horizon to the first `n_shocks` Cholesky shocks
/// (all variables when n_shocks < 0) for a single coefficient/covariance pair.
/// Returns false when sigma is not positive definite.
bool cholesky_irf(const PosteriorSample& sample, int lags, int horizon, int n_shocks, IrfPath& out);

/// Per-draw response paths; draws whose covariance fails Cholesky are skipped and counted.
struct IrfDraws {
    std::vector<IrfPath> paths;
    int rejected = 0;
};
IrfDraws irf_draws(const std::vector<PosteriorSample>& samples, int lags, int horizon, int n_shocks, int threads);

/// Aggregates draws into percentile bands.
IrfResult summarize(const std::vector<IrfPath>& paths, const std::vector<double>& percentiles,
                    std::vector<std::string> shock_names, std::vector<std::string> variable_names);

/// Cholesky IRFs of every shock with the configured percentile bands.
IrfResult structural_irf(const PosteriorFit& fit, const BvarConfig& config);

/// Country-by-country least squares VAR(1) averaged across countries.
struct MeanGroupResult {
    IrfPath point;                             // IRFs of the averaged system
    IrfResult bands;                           // cross-country percentiles of per-country IRFs
    PosteriorSample average;                   // averaged coefficients and covariance
    std::vector<PosteriorSample> per_country;  // surviving countries, dataset order
    std::vector<std::string> countries;
    std::vector<std::string> dropped;
};

/// The lag order is fixed at 1; config.lags is ignored.
MeanGroupResult mean_group(const paneldata::PanelDataset& dataset, const BvarConfig& config);

struct RotationBandResult {
    IrfResult pooled;                   // identified shocks only
    std::vector<IrfResult> per_rotation;  // one per grid point, identified shocks only
    std::vector<double> weights;          // w of each grid point
};

/// Re-estimates the model at every rotation (shocks aligned from the event
/// dates) with common random numbers: every grid point uses `seed`, so draw d
/// of each rotation comes from the same substream. Pools the retained IRF draws with equal weight and, when the pool
/// exceeds `pooled_draws`, keeps a uniform random subset of that size.
RotationBandResult rotation_band_irf(const paneldata::PanelDataset& dataset, const std::vector<Date>& event_dates,
                                     const std::vector<hfdecomp::ShockDecomposition>& grid, const BvarConfig& config,
                                     std::uint64_t seed, int pooled_draws = 10000);

}  // namespace hfspill::pbvar
