#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "hfspill/dgpsim.hpp"
#include "hfspill/error.hpp"
#include "hfspill/hfdecomp.hpp"
#include "hfspill/pbvar.hpp"
#include "hfspill/stats.hpp"

using namespace hfspill;
using namespace hfspill::pbvar;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd simulate_var1(const MatrixXd& a, const MatrixXd& chol, int t, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto k = a.rows();
    MatrixXd z = MatrixXd::Zero(t, k);
    VectorXd prev = VectorXd::Zero(k);
    for (int burn = 0; burn < 200 + t; ++burn) {
        const VectorXd e = stats::standard_normal(rng, k, 1);
        prev = a * prev + chol * e;
        if (burn >= 200) z.row(burn - 200) = prev.transpose();
    }
    return z;
}

paneldata::PanelDataset small_panel(int countries, int months, std::uint64_t seed) {
    auto spec = dgpsim::default_spec();
    spec.n_countries = countries;
    spec.n_months = months;
    spec.seed = seed;
    return dgpsim::simulate(spec).panel;
}

BvarConfig quick_config(int lags = 2) {
    BvarConfig c;
    c.lags = lags;
    c.draws = 300;
    c.burn = 50;
    c.horizon = 12;
    return c;
}

}  // namespace

TEST(Design, ShapesAndCells) {
    MatrixXd z(7, 2);
    for (int t = 0; t < 7; ++t) z.row(t) << t + 1.0, 10.0 * (t + 1);
    const auto d1 = build_var_design(z, 1, {"a", "b"});
    EXPECT_EQ(d1.y.rows(), 6);
    EXPECT_EQ(d1.y.cols(), 2);
    EXPECT_EQ(d1.x.rows(), 6);
    EXPECT_EQ(d1.x.cols(), 3);
    EXPECT_EQ(d1.y(0, 0), 2.0);
    EXPECT_EQ(d1.x(0, 0), 1.0);
    EXPECT_EQ(d1.x(0, 1), 10.0);
    EXPECT_EQ(d1.x(0, 2), 1.0);

    const auto d2 = build_var_design(z, 2, {"a", "b"});
    EXPECT_EQ(d2.y.rows(), 5);
    EXPECT_EQ(d2.x.cols(), 5);
    // row for t = 3 (1-based): lag 1 is z_2, lag 2 is z_1
    EXPECT_EQ(d2.y(0, 1), 30.0);
    EXPECT_EQ(d2.x(0, 0), 2.0);
    EXPECT_EQ(d2.x(0, 2), 1.0);
    EXPECT_EQ(d2.x(0, 3), 10.0);
    EXPECT_EQ(d2.x(0, 4), 1.0);

    EXPECT_THROW(build_var_design(z, 0, {"a", "b"}), ValidationError);
    EXPECT_THROW(build_var_design(z.topRows(3), 2, {"a", "b"}), ValidationError);
}

TEST(Design, PooledStacksCountries) {
    const auto panel = small_panel(3, 40, 1);
    const auto cfg = quick_config(2);
    const auto d = build_design(panel, cfg);
    const int k = 2 + 5;
    EXPECT_EQ(d.n_shocks, 2);
    EXPECT_EQ(d.y.rows(), 3 * 38);
    EXPECT_EQ(d.x.cols(), k * 2 + 1);
    EXPECT_EQ(d.names.front(), "i_mp");
    EXPECT_EQ(d.names[2], "ner");
    // second country's first row, ip column
    EXPECT_EQ(d.y(38, 3), panel.value(1, 2, 1));
    // shock block is common across countries
    EXPECT_EQ(d.y(38, 0), d.y(0, 0));
}

TEST(BvarConfig, Validation) {
    BvarConfig c;
    EXPECT_NO_THROW(c.validate());
    c.lags = 0;
    EXPECT_THROW(c.validate(), ValidationError);
    c = BvarConfig{};
    c.draws = 100;
    c.burn = 100;
    EXPECT_THROW(c.validate(), ValidationError);
    c = BvarConfig{};
    c.percentiles = {50, 16};
    EXPECT_THROW(c.validate(), ValidationError);
    c = BvarConfig{};
    c.percentiles = {0, 50};
    EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Posterior, SeedDeterministicAndThreadIndependent) {
    const auto panel = small_panel(2, 60, 2);
    auto cfg = quick_config(1);
    const auto d = build_design(panel, cfg);
    const auto a = fit_posterior(d, cfg, 99);
    cfg.threads = 4;
    const auto b = fit_posterior(d, cfg, 99);
    ASSERT_EQ(a.samples.size(), 250u);
    ASSERT_EQ(b.samples.size(), 250u);
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        EXPECT_TRUE(a.samples[i].coeffs == b.samples[i].coeffs);
        EXPECT_TRUE(a.samples[i].sigma == b.samples[i].sigma);
    }
    const auto c = fit_posterior(d, cfg, 100);
    EXPECT_FALSE(a.samples[0].sigma == c.samples[0].sigma);
}

TEST(Posterior, CovarianceMedianNearTruth) {
    MatrixXd a(2, 2);
    a << 0.5, 0.1, 0.0, 0.3;
    MatrixXd chol(2, 2);
    chol << 1.0, 0.0, 0.4, 0.8;
    const MatrixXd sigma = chol * chol.transpose();
    const auto z = simulate_var1(a, chol, 5000, 3);
    auto d = build_var_design(z, 1, {"a", "b"});
    BvarConfig cfg = quick_config(1);
    cfg.draws = 600;
    cfg.burn = 100;
    const auto fit = fit_posterior(d, cfg, 5);
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
            std::vector<double> cell;
            for (const auto& s : fit.samples) cell.push_back(s.sigma(r, c));
            const double med = stats::percentiles(cell, std::vector<double>{50.0})[0];
            EXPECT_NEAR(med, sigma(r, c), 0.05 * std::abs(sigma(r, c))) << r << "," << c;
        }
    }
}

TEST(CholeskyIrf, IdentityCovarianceZeroCoefficients) {
    PosteriorSample s{MatrixXd::Zero(3, 3 * 2 + 1), MatrixXd::Identity(3, 3)};
    IrfPath path;
    ASSERT_TRUE(cholesky_irf(s, 2, 5, -1, path));
    for (int i = 0; i < 3; ++i)
        for (int v = 0; v < 3; ++v) {
            EXPECT_EQ(path.at(i, v, 0), i == v ? 1.0 : 0.0);
            for (int h = 1; h <= 5; ++h) EXPECT_EQ(path.at(i, v, h), 0.0);
        }
    s.sigma(2, 2) = -1.0;
    EXPECT_FALSE(cholesky_irf(s, 2, 5, -1, path));
}

TEST(CholeskyIrf, ImpactIsCholeskyFactorAndRecursion) {
    MatrixXd sigma(2, 2);
    sigma << 2.0, 0.6, 0.6, 1.0;
    MatrixXd coeffs(2, 3);
    coeffs << 0.5, 0.2, 0.0, -0.1, 0.7, 0.0;
    IrfPath path;
    ASSERT_TRUE(cholesky_irf({coeffs, sigma}, 1, 8, -1, path));
    MatrixXd l(2, 2);
    for (int s = 0; s < 2; ++s)
        for (int v = 0; v < 2; ++v) l(v, s) = path.at(s, v, 0);
    EXPECT_LT((l * l.transpose() - sigma).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(l(0, 1), 0.0);
    const MatrixXd a = coeffs.leftCols(2);
    MatrixXd theta = l;
    for (int h = 1; h <= 8; ++h) {
        theta = a * theta;
        for (int s = 0; s < 2; ++s)
            for (int v = 0; v < 2; ++v) EXPECT_NEAR(path.at(s, v, h), theta(v, s), 1e-12);
    }
}

TEST(StructuralIrf, PercentilesOrderedAndDecaying) {
    const auto panel = small_panel(3, 100, 4);
    auto cfg = quick_config(2);
    cfg.horizon = 36;
    const auto fit = fit_posterior(build_design(panel, cfg), cfg, 6);
    const auto irf = structural_irf(fit, cfg);
    EXPECT_EQ(irf.shock_names.size(), 7u);
    EXPECT_EQ(irf.draws_used, 250);
    for (int s = 0; s < 7; ++s)
        for (int v = 0; v < 7; ++v)
            for (int h = 0; h <= 36; ++h)
                for (std::size_t p = 1; p < irf.percentiles.size(); ++p)
                    EXPECT_LE(irf.at(s, v, h, static_cast<int>(p - 1)), irf.at(s, v, h, static_cast<int>(p)));
    const auto med = irf.slice(50);
    double impact = 0.0, tail = 0.0;
    for (int s = 0; s < 7; ++s)
        for (int v = 0; v < 7; ++v) {
            impact = std::max(impact, std::abs(med.at(s, v, 0)));
            tail = std::max(tail, std::abs(med.at(s, v, 36)));
        }
    EXPECT_LT(tail, 0.25 * impact);
    EXPECT_THROW(irf.slice(42), ValidationError);
}

TEST(Posterior, CountryOrderInvariant) {
    const auto panel = small_panel(3, 60, 7);
    const auto reversed = paneldata::PanelDataset::from_blocks(
        {panel.countries()[2], panel.countries()[1], panel.countries()[0]}, panel.months(), panel.variable_names(),
        {panel.country_block(2), panel.country_block(1), panel.country_block(0)})
                              .with_shocks(panel.shock_names(), panel.shocks());
    auto cfg = quick_config(2);
    const auto a = fit_posterior(build_design(panel, cfg), cfg, 8);
    const auto b = fit_posterior(build_design(reversed, cfg), cfg, 8);
    for (std::size_t i = 0; i < a.samples.size(); i += 25) {
        EXPECT_LT((a.samples[i].coeffs - b.samples[i].coeffs).cwiseAbs().maxCoeff(), 1e-8);
        EXPECT_LT((a.samples[i].sigma - b.samples[i].sigma).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(Posterior, BlockExogenousZeros) {
    const auto panel = small_panel(2, 80, 9);
    auto cfg = quick_config(2);
    cfg.block_exogenous = true;
    const auto fit = fit_posterior(build_design(panel, cfg), cfg, 10);
    const int k = 7;
    for (const auto& s : fit.samples)
        for (int eq = 0; eq < 2; ++eq)
            for (int lag = 0; lag < 2; ++lag)
                for (int v = 2; v < k; ++v) EXPECT_EQ(s.coeffs(eq, lag * k + v), 0.0);
}

TEST(MeanGroup, SingleCountryIsLeastSquares) {
    const auto panel = paneldata::subset(small_panel(2, 90, 11), {"C01"});
    auto cfg = quick_config(4);
    const auto mg = mean_group(panel, cfg);
    ASSERT_EQ(mg.per_country.size(), 1u);
    MatrixXd z(90, 7);
    z.leftCols(2) = panel.shocks();
    z.rightCols(5) = panel.country_block(0);
    const auto d = build_var_design(z, 1, mg.bands.variable_names);
    const MatrixXd b = (d.x.transpose() * d.x).ldlt().solve(d.x.transpose() * d.y);
    EXPECT_LT((mg.average.coeffs - b.transpose()).cwiseAbs().maxCoeff(), 1e-9);
    IrfPath ols;
    ASSERT_TRUE(cholesky_irf(mg.average, 1, cfg.horizon, -1, ols));
    EXPECT_EQ(ols.values, mg.point.values);
}

TEST(MeanGroup, OppositeCoefficientsAverageOut) {
    const int t = 400;
    MatrixXd a(1, 1), chol(1, 1);
    a << 0.6;
    chol << 1.0;
    const MatrixXd up = simulate_var1(a, chol, t, 12);
    a << -0.6;
    const MatrixXd down = simulate_var1(a, chol, t, 13);
    std::vector<Month> months;
    for (int i = 0; i < t; ++i) months.push_back(Month::from_index(Month{1990, 1}.index() + i));
    const auto panel = paneldata::PanelDataset::from_blocks({"U", "D"}, months, {"y"}, {up, down})
                           .with_shocks({}, MatrixXd::Zero(t, 0));
    const auto mg = mean_group(panel, quick_config(1));
    EXPECT_NEAR(mg.average.coeffs(0, 0), 0.0, 0.1);
    EXPECT_NEAR(mg.per_country[0].coeffs(0, 0), 0.6, 0.1);
    EXPECT_NEAR(mg.per_country[1].coeffs(0, 0), -0.6, 0.1);
}

TEST(RotationBand, SingleGridPointMatchesDirectFit) {
    auto spec = dgpsim::default_spec();
    spec.n_countries = 2;
    spec.n_months = 80;
    spec.seed = 14;
    const auto sim = dgpsim::simulate(spec);
    const auto grid = hfdecomp::rotation_grid(sim.pair, 1);
    auto cfg = quick_config(1);
    const auto band = rotation_band_irf(sim.panel, sim.surprises.dates, grid, cfg, 15, 10000);
    ASSERT_EQ(band.per_rotation.size(), 1u);
    EXPECT_EQ(band.weights[0], 0.5);

    const paneldata::DatedSeries events{sim.surprises.dates, {"i_mp", "i_id"}, grid[0].shocks()};
    const auto aligned = paneldata::align_shocks(sim.panel, events);
    const auto fit = fit_posterior(build_design(aligned, cfg), cfg, 15);
    const auto direct = structural_irf(fit, cfg);
    const auto& rot = band.per_rotation[0];
    ASSERT_EQ(rot.shock_names.size(), 2u);
    for (int s = 0; s < 2; ++s)
        for (int v = 0; v < 7; ++v)
            for (int h = 0; h <= cfg.horizon; ++h)
                for (int p = 0; p < 5; ++p) EXPECT_EQ(rot.at(s, v, h, p), direct.at(s, v, h, p));
    EXPECT_EQ(band.pooled.responses, rot.responses);
}

TEST(RotationBand, PooledSubsampleSize) {
    auto spec = dgpsim::default_spec();
    spec.n_countries = 2;
    spec.n_months = 80;
    spec.seed = 16;
    const auto sim = dgpsim::simulate(spec);
    const auto grid = hfdecomp::rotation_grid(sim.pair, 3);
    const auto band = rotation_band_irf(sim.panel, sim.surprises.dates, grid, quick_config(1), 17, 400);
    EXPECT_EQ(band.pooled.draws_used, 400);
    EXPECT_EQ(band.per_rotation.size(), 3u);
    EXPECT_THROW(rotation_band_irf(sim.panel, sim.surprises.dates, {}, quick_config(1), 17), ValidationError);
}
