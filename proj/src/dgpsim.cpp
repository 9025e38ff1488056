#include "hfspill/dgpsim.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "hfspill/error.hpp"
#include "hfspill/stats.hpp"

namespace hfspill::dgpsim {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::vector<std::string> DgpSpec::country_names() const {
    if (!countries.empty()) return countries;
    std::vector<std::string> out;
    for (int i = 1; i <= n_countries; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "C%02d", i);
        out.emplace_back(buf);
    }
    return out;
}

void DgpSpec::validate() const {
    if (n_countries < 1) throw ValidationError("n_countries must be at least 1");
    if (n_months < 2) throw ValidationError("n_months must be at least 2");
    if (burn_in < 0) throw ValidationError("burn_in must be non-negative");
    if (!countries.empty() && static_cast<int>(countries.size()) != n_countries)
        throw ValidationError("countries lists " + std::to_string(countries.size()) + " names for n_countries = " +
                              std::to_string(n_countries));
    const auto k = static_cast<Eigen::Index>(kShocks + variables.size());
    if (var_coeffs.rows() != k || var_coeffs.cols() != k)
        throw ValidationError("var_coeffs must be " + std::to_string(k) + " x " + std::to_string(k));
    if (impact.rows() != k || impact.cols() != k)
        throw ValidationError("impact must be " + std::to_string(k) + " x " + std::to_string(k));
    if (!var_coeffs.allFinite() || !impact.allFinite()) throw ValidationError("DGP matrices must be finite");
    if (!var_coeffs.topRows(kShocks).isZero(0.0)) throw ValidationError("shock rows of var_coeffs must be zero");
    MatrixXd top = MatrixXd::Zero(kShocks, k);
    top.leftCols(kShocks).setIdentity();
    if (impact.topRows(kShocks) != top) throw ValidationError("shock rows of impact must be [I 0]");
    if (!impact.isLowerTriangular(0.0)) throw ValidationError("impact must be lower triangular");
    if (!(c_mp < 0.0) || !(c_id > 0.0)) throw ValidationError("loadings need c_mp < 0 < c_id");
    if (!(sd_mp > 0.0) || !(sd_id > 0.0)) throw ValidationError("shock standard deviations must be positive");
    if (!(shock_prob > 0.0 && shock_prob <= 1.0)) throw ValidationError("shock_prob must lie in (0, 1]");
    const double rho = stats::spectral_radius(var_coeffs);
    if (!(rho < 1.0)) throw ValidationError("var_coeffs is not stable (spectral radius " + std::to_string(rho) + ")");
}

DgpSpec default_spec() {
    DgpSpec spec;
    const int k = kShocks + 5;
    spec.var_coeffs = MatrixXd::Zero(k, k);
    spec.var_coeffs.diagonal().tail(5) << 0.8, 0.8, 0.9, 0.85, 0.3;
    spec.var_coeffs(4, 2) = 0.05;   // cpi <- ner
    spec.var_coeffs(5, 4) = 0.10;   // lending_rate <- cpi
    spec.var_coeffs(3, 5) = -0.05;  // ip <- lending_rate

    spec.impact = MatrixXd::Zero(k, k);
    spec.impact.topLeftCorner(kShocks, kShocks).setIdentity();
    // per-unit responses; the ID column is -1.5 times the MP column
    spec.impact.block(kShocks, 0, 5, 1) << 0.8, -0.6, -0.3, 0.5, -1.0;
    spec.impact.block(kShocks, 1, 5, 1) << -1.2, 0.9, 0.45, -0.75, 1.5;
    MatrixXd chol = MatrixXd::Identity(5, 5);
    chol(1, 0) = -0.2;
    chol(2, 0) = 0.2;
    chol(3, 2) = 0.3;
    chol(4, 0) = -0.3;
    chol(4, 1) = 0.2;
    spec.impact.bottomRightCorner(5, 5) = chol;
    return spec;
}

DgpSpec spec_from_config(const Config& config) {
    DgpSpec spec = default_spec();
    if (auto v = config.get_int("dgp.n_countries")) spec.n_countries = static_cast<int>(*v);
    if (auto v = config.get_int("dgp.n_months")) spec.n_months = static_cast<int>(*v);
    if (auto v = config.get_int("dgp.burn_in")) spec.burn_in = static_cast<int>(*v);
    if (auto v = config.get_string("dgp.start")) spec.start = Month::parse(*v);
    if (auto v = config.get_strings("dgp.variables")) spec.variables = *v;
    if (auto v = config.get_strings("dgp.countries")) {
        spec.countries = *v;
        if (!config.contains("dgp.n_countries")) spec.n_countries = static_cast<int>(v->size());
    }
    if (auto v = config.get_matrix("dgp.var_coeffs")) spec.var_coeffs = *v;
    if (auto v = config.get_matrix("dgp.impact")) spec.impact = *v;
    if (auto v = config.get_double("dgp.c_mp")) spec.c_mp = *v;
    if (auto v = config.get_double("dgp.c_id")) spec.c_id = *v;
    if (auto v = config.get_double("dgp.sd_mp")) spec.sd_mp = *v;
    if (auto v = config.get_double("dgp.sd_id")) spec.sd_id = *v;
    if (auto v = config.get_double("dgp.shock_prob")) spec.shock_prob = *v;
    if (auto v = config.get_int("dgp.seed")) {
        if (*v < 0) throw ValidationError("dgp.seed must be non-negative");
        spec.seed = static_cast<std::uint64_t>(*v);
    }
    spec.validate();
    return spec;
}

double generating_angle(const DgpSpec& spec) { return std::atan2(spec.sd_id, spec.sd_mp); }

double population_variance_ratio(const DgpSpec& spec) {
    const double a = spec.sd_mp * spec.sd_mp;
    return a / (a + spec.sd_id * spec.sd_id);
}

Simulation simulate(const DgpSpec& spec) {
    spec.validate();
    const int k = spec.dim();
    const int n = k - kShocks;
    const int total = spec.burn_in + spec.n_months;

    // common announcement calendar and shocks
    std::mt19937_64 rng = stats::substream(spec.seed, 0);
    std::bernoulli_distribution announce(spec.shock_prob);
    std::normal_distribution<double> normal;
    MatrixXd shocks = MatrixXd::Zero(total, kShocks);
    std::vector<Date> dates;
    std::vector<int> rows;
    for (int t = 0; t < total; ++t) {
        if (!announce(rng)) continue;
        const Month m = Month::from_index(spec.start.index() - spec.burn_in + t);
        std::uniform_int_distribution<int> day(1, days_in_month(m.year, m.month));
        const int d = day(rng);
        shocks(t, 0) = spec.sd_mp * normal(rng);
        shocks(t, 1) = spec.sd_id * normal(rng);
        if (t >= spec.burn_in) {
            dates.push_back(Date{m.year, m.month, d});
            rows.push_back(t);
        }
    }

    Simulation sim;
    const auto events = static_cast<Eigen::Index>(rows.size());
    sim.true_shocks.dates = dates;
    sim.true_shocks.names = {"i_mp", "i_id"};
    sim.true_shocks.values.resize(events, kShocks);
    for (Eigen::Index e = 0; e < events; ++e) sim.true_shocks.values.row(e) = shocks.row(rows[static_cast<std::size_t>(e)]);
    sim.pair.i_total = sim.true_shocks.values.col(0) + sim.true_shocks.values.col(1);
    sim.pair.s = spec.c_mp * sim.true_shocks.values.col(0) + spec.c_id * sim.true_shocks.values.col(1);
    sim.surprises.dates = dates;
    sim.surprises.contracts = sim.pair.i_total;
    sim.surprises.equity = sim.pair.s;

    const auto names = spec.country_names();
    std::vector<MatrixXd> blocks;
    for (int i = 0; i < spec.n_countries; ++i) {
        std::mt19937_64 crng = stats::substream(spec.seed, 1, static_cast<std::uint64_t>(i));
        const MatrixXd u = stats::standard_normal(crng, total, n);
        VectorXd z = VectorXd::Zero(k);
        VectorXd e(k);
        MatrixXd block(spec.n_months, n);
        for (int t = 0; t < total; ++t) {
            e.head(kShocks) = shocks.row(t).transpose();
            e.tail(n) = u.row(t).transpose();
            z = spec.var_coeffs * z + spec.impact * e;
            if (t >= spec.burn_in) block.row(t - spec.burn_in) = z.tail(n).transpose();
        }
        blocks.push_back(std::move(block));
    }
    std::vector<Month> months;
    for (int t = 0; t < spec.n_months; ++t) months.push_back(Month::from_index(spec.start.index() + t));
    auto panel = paneldata::PanelDataset::from_blocks(names, months, spec.variables, blocks);
    sim.panel = paneldata::align_shocks(panel, sim.true_shocks);
    return sim;
}

std::vector<MatrixXd> true_irf(const DgpSpec& spec, int horizon) {
    spec.validate();
    if (horizon < 0) throw ValidationError("horizon must be non-negative");
    std::vector<MatrixXd> out;
    out.reserve(static_cast<std::size_t>(horizon + 1));
    out.push_back(spec.impact);
    for (int h = 1; h <= horizon; ++h) out.push_back(spec.var_coeffs * out.back());
    return out;
}

}  // namespace hfspill::dgpsim
