#pragma once

// Synthetic surprises and country panels from a known structural model.
//
// The state is z_t = [i_mp, i_id, y_1, ..., y_n] with
//
//     z_t = A z_{t-1} + B e_t,
//
// where the shock rows of A are zero, the top rows of B are [I 0] and
// e_t = [i_mp, i_id, u_t]. The surprises are observed on announcement months
// only, through i_total = i_mp + i_id and s = c_mp i_mp + c_id i_id.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hfspill/config.hpp"
#include "hfspill/dates.hpp"
#include "hfspill/hfdecomp.hpp"
#include "hfspill/paneldata.hpp"

namespace hfspill::dgpsim {

inline constexpr int kShocks = 2;

struct DgpSpec {
    int n_countries = 9;
    int n_months = 156;
    Month start{2004, 1};
    int burn_in = 120;
    std::vector<std::string> variables{"ner", "ip", "cpi", "lending_rate", "equity"};
    std::vector<std::string> countries;  // empty: C01, C02, ...
    Eigen::MatrixXd var_coeffs;          // (2+n) x (2+n)
    Eigen::MatrixXd impact;              // (2+n) x (2+n), lower triangular
    double c_mp = -1.0;
    double c_id = 1.0;
    double sd_mp = 1.0;
    double sd_id = 0.6;
    double shock_prob = 8.0 / 12.0;
    std::uint64_t seed = 20240101;

    int dim() const { return static_cast<int>(var_coeffs.rows()); }
    std::vector<std::string> country_names() const;
    void validate() const;
};

/// Calibration in which the MP shock raises the exchange rate and lowers
/// industrial production and the ID shock does the opposite.
DgpSpec default_spec();

/// Keys under [dgp] override default_spec(); var_coeffs and impact replace
/// the matrices as a whole.
DgpSpec spec_from_config(const Config& config);

/// Angle of the generating decomposition, atan(sd_id / sd_mp).
double generating_angle(const DgpSpec& spec);

/// var(i_mp) / var(i_total) in population.
double population_variance_ratio(const DgpSpec& spec);

struct Simulation {
    hfdecomp::SurprisePanel surprises;   // one contract column (i_total) and the equity surprise
    hfdecomp::SurprisePair pair;
    paneldata::DatedSeries true_shocks;  // date, i_mp, i_id
    paneldata::PanelDataset panel;       // country variables, true shocks aligned
};

Simulation simulate(const DgpSpec& spec);

/// var_coeffs^h * impact for h = 0..horizon, responses to unit shocks.
std::vector<Eigen::MatrixXd> true_irf(const DgpSpec& spec, int horizon);

}  // namespace hfspill::dgpsim
