#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hfspill/paneldata.hpp"

namespace hfspill::localproj {

enum class LpSpec { pooled, fixed_effects, fe_trend };

LpSpec parse_spec(const std::string& text);
std::string to_string(LpSpec spec);

struct LpConfig {
    int horizons = 24;
    int j_y = 1;  // outcome lags
    int j_x = 1;  // lags of the other country variables
    int j_i = 2;  // shock lags
    LpSpec spec = LpSpec::pooled;
    /// Pick j_y = j_x per country by SBIC over 1..max_lag.
    bool auto_lags = false;
    int max_lag = 4;

    void validate() const;
};

/// One horizon's regression. Rows are (country, month) pairs; the first
/// `n_shocks` columns are the standardized contemporaneous shocks.
struct LpDesign {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    std::vector<std::string> columns;
    std::vector<int> country;
    std::vector<int> time;
    int n_shocks = 0;
};

struct ClusteredCov {
    Eigen::MatrixXd cov;
    bool repaired = false;  // negative eigenvalues were truncated at zero
};

/// One-way cluster-robust covariance with the G/(G-1) (N-1)/(N-K) correction.
/// With one observation per cluster this is HC1.
Eigen::MatrixXd oneway_cluster_cov(const Eigen::MatrixXd& x, const Eigen::VectorXd& resid, std::span<const int> ids);

/// Two-way clustered covariance V_1 + V_2 - V_12, where V_12 clusters on
/// the intersection of the two labelings.
ClusteredCov twoway_cluster_cov(const Eigen::MatrixXd& x, const Eigen::VectorXd& resid, std::span<const int> first,
                                std::span<const int> second);

struct LpFit {
    Eigen::VectorXd beta;  // kept columns only
    Eigen::MatrixXd cov;
    std::vector<std::size_t> kept;
    std::vector<std::string> dropped;
    bool repaired = false;
};

/// OLS with collinear columns removed in column order, two-way clustered on
/// (country, time). Throws if a shock column has to be dropped.
LpFit lp_regress(const LpDesign& design);

/// Per-shock standard deviations used to standardize the shock regressors.
Eigen::VectorXd shock_scales(const paneldata::PanelDataset& dataset);

/// Design for horizon h. `lags` holds each country's j_y = j_x; empty means config values.
LpDesign build_lp_design(const paneldata::PanelDataset& dataset, std::size_t outcome, const LpConfig& config, int h,
                         const Eigen::VectorXd& scale, const std::vector<int>& lags = {});

struct LpResult {
    std::string outcome;
    LpSpec spec = LpSpec::pooled;
    std::vector<std::string> shock_names;
    Eigen::MatrixXd beta;  // (H+1) x shocks, per one-standard-deviation shock
    Eigen::MatrixXd se;
    Eigen::VectorXd scale;
    std::vector<int> lags;                        // j_y = j_x per country
    std::vector<std::vector<std::string>> dropped;  // per horizon
    std::vector<bool> repaired;                     // per horizon

    Eigen::VectorXd beta_of(std::size_t shock) const { return beta.col(static_cast<Eigen::Index>(shock)); }
    Eigen::VectorXd se_of(std::size_t shock) const { return se.col(static_cast<Eigen::Index>(shock)); }
};

LpResult lp_estimate(const paneldata::PanelDataset& dataset, const std::string& outcome, const LpConfig& config,
                     int threads = 1);

/// SBIC of the country's VAR(p), p = 1..max_lag, on the common sample that
/// drops the first max_lag months.
std::vector<double> sbic_values(const paneldata::PanelDataset& dataset, const std::string& country, int max_lag);

/// argmin of sbic_values + 1, ties toward the smaller lag.
int sbic_lag_select(const paneldata::PanelDataset& dataset, const std::string& country, int max_lag);

}  // namespace hfspill::localproj
