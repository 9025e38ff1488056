#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hfspill/config.hpp"
#include "hfspill/dgpsim.hpp"
#include "hfspill/error.hpp"
#include "hfspill/stats.hpp"

using namespace hfspill;
using namespace hfspill::dgpsim;
using Eigen::MatrixXd;

namespace {

DgpSpec scalar_spec(double a) {
    DgpSpec s;
    s.variables = {"y"};
    s.var_coeffs = MatrixXd::Zero(3, 3);
    s.var_coeffs(2, 2) = a;
    s.impact = MatrixXd::Identity(3, 3);
    s.n_countries = 2;
    s.n_months = 60;
    return s;
}

}  // namespace

TEST(DgpSpec, DefaultIsValid) {
    const auto s = default_spec();
    EXPECT_NO_THROW(s.validate());
    EXPECT_EQ(s.dim(), 7);
    EXPECT_EQ(s.country_names().front(), "C01");
    EXPECT_EQ(s.country_names().size(), 9u);
    EXPECT_LT(stats::spectral_radius(s.var_coeffs), 1.0);
    // MP raises the exchange rate and lowers production; ID does the opposite
    EXPECT_GT(s.impact(2, 0), 0.0);
    EXPECT_LT(s.impact(3, 0), 0.0);
    EXPECT_LT(s.impact(2, 1), 0.0);
    EXPECT_GT(s.impact(3, 1), 0.0);
}

TEST(DgpSpec, ValidationErrors) {
    auto bad = [](auto mutate) {
        auto s = default_spec();
        mutate(s);
        return s;
    };
    EXPECT_THROW(bad([](DgpSpec& s) { s.var_coeffs(0, 3) = 0.1; }).validate(), ValidationError);
    EXPECT_THROW(bad([](DgpSpec& s) { s.impact(0, 1) = 0.5; }).validate(), ValidationError);
    EXPECT_THROW(bad([](DgpSpec& s) { s.impact(3, 5) = 0.5; }).validate(), ValidationError);
    EXPECT_THROW(bad([](DgpSpec& s) { s.var_coeffs(3, 3) = 1.2; }).validate(), ValidationError);
    EXPECT_THROW(bad([](DgpSpec& s) { s.c_mp = 0.5; }).validate(), ValidationError);
    EXPECT_THROW(bad([](DgpSpec& s) { s.sd_id = 0.0; }).validate(), ValidationError);
    EXPECT_THROW(bad([](DgpSpec& s) { s.shock_prob = 0.0; }).validate(), ValidationError);
    EXPECT_THROW(bad([](DgpSpec& s) { s.countries = {"A", "B"}; }).validate(), ValidationError);
    EXPECT_THROW(bad([](DgpSpec& s) { s.variables.pop_back(); }).validate(), ValidationError);
    EXPECT_THROW(bad([](DgpSpec& s) { s.n_months = 1; }).validate(), ValidationError);
}

TEST(DgpSpec, FromConfig) {
    const auto cfg = Config::parse(
        "[dgp]\n"
        "n_months = 48\n"
        "start = \"2010-06\"\n"
        "countries = [\"X\", \"Y\"]\n"
        "sd_id = 0.9\n"
        "seed = 5\n");
    const auto s = spec_from_config(cfg);
    EXPECT_EQ(s.n_countries, 2);
    EXPECT_EQ(s.n_months, 48);
    EXPECT_EQ(s.start, (Month{2010, 6}));
    EXPECT_EQ(s.sd_id, 0.9);
    EXPECT_EQ(s.seed, 5u);
    EXPECT_TRUE(s.var_coeffs == default_spec().var_coeffs);
    EXPECT_THROW(spec_from_config(Config::parse("[dgp]\nseed = -1\n")), ValidationError);
    EXPECT_THROW(spec_from_config(Config::parse("[dgp]\nc_id = -1\n")), ValidationError);
}

TEST(DgpSpec, DefaultConfigFileMatchesBuiltIn) {
    const auto cfg = Config::load(std::string(HFSPILL_DATA_DIR) + "/default.toml");
    const auto s = spec_from_config(cfg);
    const auto d = default_spec();
    EXPECT_TRUE(s.var_coeffs == d.var_coeffs);
    EXPECT_TRUE(s.impact == d.impact);
    EXPECT_EQ(s.sd_id, d.sd_id);
    EXPECT_EQ(s.seed, d.seed);
}

TEST(Simulate, IdentityImpactPassesInnovationsThrough) {
    auto s = scalar_spec(0.0);
    const auto sim = simulate(s);
    for (int i = 0; i < 2; ++i) {
        auto rng = stats::substream(s.seed, 1, static_cast<std::uint64_t>(i));
        const MatrixXd u = stats::standard_normal(rng, s.burn_in + s.n_months, 1);
        for (int t = 0; t < s.n_months; ++t) EXPECT_EQ(sim.panel.value(i, t, 0), u(s.burn_in + t, 0));
    }
}

TEST(Simulate, ShapesAndObservationEquations) {
    const auto s = default_spec();
    const auto sim = simulate(s);
    EXPECT_EQ(sim.panel.n_countries(), 9u);
    EXPECT_EQ(sim.panel.n_months(), 156u);
    EXPECT_EQ(sim.panel.months().front(), s.start);
    EXPECT_EQ(sim.panel.shock_names(), (std::vector<std::string>{"i_mp", "i_id"}));
    const auto& v = sim.true_shocks.values;
    EXPECT_EQ(v.rows(), sim.pair.size());
    EXPECT_EQ(sim.surprises.contracts.cols(), 1);
    for (Eigen::Index e = 0; e < v.rows(); ++e) {
        EXPECT_EQ(sim.pair.i_total(e), v(e, 0) + v(e, 1));
        EXPECT_EQ(sim.pair.s(e), s.c_mp * v(e, 0) + s.c_id * v(e, 1));
        EXPECT_EQ(sim.true_shocks.dates[e].month_of() >= s.start, true);
    }
    // roughly two thirds of months carry an announcement
    const double share = static_cast<double>(v.rows()) / s.n_months;
    EXPECT_GT(share, 0.5);
    EXPECT_LT(share, 0.8);
    double monthly = 0.0;
    for (Eigen::Index t = 0; t < sim.panel.shocks().rows(); ++t) monthly += sim.panel.shocks()(t, 0);
    EXPECT_NEAR(monthly, v.col(0).sum(), 1e-9);
}

TEST(Simulate, Deterministic) {
    auto s = default_spec();
    s.n_countries = 3;
    const auto a = simulate(s);
    const auto b = simulate(s);
    EXPECT_TRUE(a.true_shocks.values == b.true_shocks.values);
    EXPECT_EQ(a.true_shocks.dates, b.true_shocks.dates);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_TRUE(a.panel.country_block(i) == b.panel.country_block(i));
    s.seed += 1;
    EXPECT_FALSE(simulate(s).true_shocks.values == a.true_shocks.values);
}

TEST(Simulate, CountryStreamsIndependentOfPanelSize) {
    auto s = default_spec();
    s.n_countries = 2;
    const auto a = simulate(s);
    s.n_countries = 5;
    const auto b = simulate(s);
    EXPECT_TRUE(a.panel.country_block(1) == b.panel.country_block(1));
}

TEST(Simulate, LongSampleShocksUncorrelated) {
    auto s = scalar_spec(0.5);
    s.n_countries = 1;
    s.n_months = 100000;
    const auto sim = simulate(s);
    const auto& v = sim.true_shocks.values;
    EXPECT_LT(std::abs(stats::correlation(v.col(0), v.col(1))), 0.02);
    EXPECT_NEAR(stats::sample_sd(v.col(0)), s.sd_mp, 0.02);
    EXPECT_NEAR(stats::sample_sd(v.col(1)), s.sd_id, 0.02);
    const double ratio = stats::second_moment(v.col(0)) / stats::second_moment(sim.pair.i_total);
    EXPECT_NEAR(ratio, population_variance_ratio(s), 0.01);
}

TEST(Simulate, EqualVariancesGiveUncorrelatedSurprises) {
    auto s = scalar_spec(0.5);
    s.n_countries = 1;
    s.n_months = 60000;
    s.sd_id = s.sd_mp;
    const auto sim = simulate(s);
    EXPECT_LT(std::abs(stats::correlation(sim.pair.i_total, sim.pair.s)), 0.02);
}

TEST(TrueIrf, ScalarPowers) {
    const auto irf = true_irf(scalar_spec(0.9), 24);
    ASSERT_EQ(irf.size(), 25u);
    for (int h = 0; h <= 24; ++h) EXPECT_NEAR(irf[static_cast<std::size_t>(h)](2, 2), std::pow(0.9, h), 1e-14);
    EXPECT_THROW(true_irf(scalar_spec(0.9), -1), ValidationError);
}

TEST(TrueIrf, Recursion) {
    const auto s = default_spec();
    const auto irf = true_irf(s, 12);
    EXPECT_TRUE(irf[0] == s.impact);
    for (std::size_t h = 1; h < irf.size(); ++h)
        EXPECT_LT((irf[h] - s.var_coeffs * irf[h - 1]).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(GeneratingAngle, VarianceRatioRoundTrip) {
    const auto s = default_spec();
    const double angle = generating_angle(s);
    EXPECT_NEAR(angle, std::atan(0.6), 1e-15);
    EXPECT_NEAR(hfdecomp::angle_from_variance_ratio(population_variance_ratio(s)), angle, 1e-12);
    auto eq = s;
    eq.sd_id = eq.sd_mp;
    EXPECT_NEAR(generating_angle(eq), std::numbers::pi / 4.0, 1e-15);
}
