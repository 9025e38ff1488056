#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "hfspill/error.hpp"
#include "hfspill/paneldata.hpp"

using namespace hfspill;
using namespace hfspill::paneldata;

namespace {

const std::vector<VariableSpec> kTwoVars{{"ip", Transform::log100, VariableRole::endogenous},
                                         {"rate", Transform::level, VariableRole::endogenous}};

std::string small_panel() {
    return "country,date,variable,value\n"
           "AA,2010-01,ip,100\n"
           "AA,2010-01,rate,1.5\n"
           "AA,2010-02,ip,101\n"
           "AA,2010-02,rate,1.25\n"
           "AA,2010-03,ip,102\n"
           "AA,2010-03,rate,1\n"
           "BB,2010-01,ip,50\n"
           "BB,2010-01,rate,3\n"
           "BB,2010-02,ip,51\n"
           "BB,2010-02,rate,2.75\n"
           "BB,2010-03,ip,52\n"
           "BB,2010-03,rate,2.5\n"
           "BB,2010-03,ignored,7\n";
}

PanelDataset parse(const std::string& text, const std::vector<VariableSpec>& specs = kTwoVars) {
    std::istringstream in(text);
    return read_panel(in, specs);
}

std::string error_of(const std::string& text, const std::vector<VariableSpec>& specs = kTwoVars) {
    try {
        parse(text, specs);
    } catch (const ValidationError& e) {
        return e.what();
    }
    return "";
}

DatedSeries events(std::vector<std::string> dates, std::vector<double> a, std::vector<double> b) {
    DatedSeries s;
    s.names = {"i_mp", "i_id"};
    s.values.resize(static_cast<Eigen::Index>(dates.size()), 2);
    for (std::size_t k = 0; k < dates.size(); ++k) {
        s.dates.push_back(Date::parse(dates[k]));
        s.values(static_cast<Eigen::Index>(k), 0) = a[k];
        s.values(static_cast<Eigen::Index>(k), 1) = b[k];
    }
    return s;
}

PanelDataset random_panel(const std::vector<std::string>& countries, int months, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    std::vector<Month> ms;
    for (int t = 0; t < months; ++t) ms.push_back(Month::from_index(Month{2004, 1}.index() + t));
    std::vector<Eigen::MatrixXd> blocks;
    for (std::size_t i = 0; i < countries.size(); ++i) {
        Eigen::MatrixXd b(months, 3);
        for (int t = 0; t < months; ++t)
            for (int k = 0; k < 3; ++k) b(t, k) = n(rng) * std::pow(10.0, k - 1);
        blocks.push_back(b);
    }
    return PanelDataset::from_blocks(countries, ms, {"x", "y", "z"}, blocks);
}

}  // namespace

TEST(ReadPanel, ShapeAndTransforms) {
    const auto d = parse(small_panel());
    EXPECT_EQ(d.n_countries(), 2u);
    EXPECT_EQ(d.n_months(), 3u);
    EXPECT_EQ(d.n_variables(), 2u);
    EXPECT_EQ(d.countries(), (std::vector<std::string>{"AA", "BB"}));
    EXPECT_EQ(d.months().front(), (Month{2010, 1}));
    EXPECT_NEAR(d.value(0, 0, 0), 460.517018598809, 1e-9);
    EXPECT_EQ(d.raw(0, 0, 0), 100.0);
    EXPECT_EQ(d.value(1, 2, 1), 2.5);
    const auto block = d.country_block(1);
    EXPECT_EQ(block.rows(), 3);
    EXPECT_EQ(block.cols(), 2);
    EXPECT_NEAR(block(1, 0), 100.0 * std::log(51.0), 1e-12);
    EXPECT_EQ(d.variable_index("rate"), 1u);
    EXPECT_EQ(d.country_index("BB"), 1u);
    EXPECT_THROW(d.country_index("CC"), ValidationError);
    EXPECT_THROW(d.variable_index("cpi"), ValidationError);
}

TEST(ReadPanel, MissingCellNamedExactly) {
    std::string text = small_panel();
    const std::string row = "BB,2010-02,rate,2.75\n";
    text.erase(text.find(row), row.size());
    const auto msg = error_of(text);
    EXPECT_NE(msg.find("missing cell (BB, 2010-02, rate)"), std::string::npos) << msg;
    EXPECT_EQ(msg.find("missing cell (AA"), std::string::npos) << msg;
}

TEST(ReadPanel, DuplicateCellRejected) {
    const auto msg = error_of(small_panel() + "AA,2010-02,ip,5\n");
    EXPECT_NE(msg.find("duplicate cell (AA, 2010-02, ip)"), std::string::npos) << msg;
}

TEST(ReadPanel, NonPositiveUnderLogRejected) {
    std::string text = small_panel();
    text.replace(text.find("AA,2010-03,ip,102"), 17, "AA,2010-03,ip,-2");
    const auto msg = error_of(text);
    EXPECT_NE(msg.find("non-positive value"), std::string::npos) << msg;
    EXPECT_NE(msg.find("(AA, 2010-03, ip)"), std::string::npos) << msg;
}

TEST(ReadPanel, MonthGapReportedAsMissing) {
    const std::string text =
        "country,date,variable,value\n"
        "AA,2010-01,ip,1\n"
        "AA,2010-03,ip,2\n";
    const auto msg = error_of(text, {{"ip", Transform::level, VariableRole::endogenous}});
    EXPECT_NE(msg.find("missing cell (AA, 2010-02, ip)"), std::string::npos) << msg;
}

TEST(ReadPanel, SchemaErrors) {
    EXPECT_NE(error_of("country,date,value\nAA,2010-01,1\n").find("variable"), std::string::npos);
    EXPECT_THROW(parse("country,date,variable,value\nAA,2010-13,ip,1\n"), ValidationError);
    EXPECT_THROW(parse("country,date,variable,value\nAA,2010-01,ip,abc\n"), ValidationError);
    EXPECT_THROW(parse(small_panel(), {}), ValidationError);
    EXPECT_THROW(parse(small_panel(), {{"gdp", Transform::level, VariableRole::endogenous}}), ValidationError);
    EXPECT_THROW(parse_transform("sqrt"), ValidationError);
    EXPECT_EQ(parse_transform("log100"), Transform::log100);
}

TEST(AlignShocks, SumsWithinMonth) {
    const auto d = parse(small_panel());
    const auto e = events({"2010-01-05", "2010-01-20", "2010-03-15"}, {0.1, -0.04, 0.2}, {0.0, 0.5, -0.1});
    const auto a = align_shocks(d, e);
    ASSERT_EQ(a.shocks().rows(), 3);
    ASSERT_EQ(a.shocks().cols(), 2);
    EXPECT_NEAR(a.shocks()(0, 0), 0.06, 1e-15);
    EXPECT_EQ(a.shocks()(1, 0), 0.0);
    EXPECT_EQ(a.shocks()(1, 1), 0.0);
    EXPECT_EQ(a.shocks()(2, 1), -0.1);
    EXPECT_EQ(a.shock_names(), (std::vector<std::string>{"i_mp", "i_id"}));
}

TEST(AlignShocks, ColumnSubsetAndEarlyEventsDropped) {
    const auto d = parse(small_panel());
    const auto e = events({"2009-12-10", "2010-02-01"}, {9.0, 0.3}, {1.0, 2.0});
    const auto a = align_shocks(d, e, {"i_id"});
    ASSERT_EQ(a.shocks().cols(), 1);
    EXPECT_EQ(a.shocks()(0, 0), 0.0);
    EXPECT_EQ(a.shocks()(1, 0), 2.0);
    EXPECT_THROW(align_shocks(d, e, {"i_unknown"}), ValidationError);
}

TEST(AlignShocks, OrderIndependent) {
    const auto d = parse(small_panel());
    const auto e1 = events({"2010-01-05", "2010-01-20", "2010-01-25"}, {0.1, 0.2, 0.3}, {1e-17, 1.0, -1.0});
    const auto e2 = events({"2010-01-25", "2010-01-05", "2010-01-20"}, {0.3, 0.1, 0.2}, {-1.0, 1e-17, 1.0});
    EXPECT_TRUE(align_shocks(d, e1).shocks() == align_shocks(d, e2).shocks());
}

TEST(AlignShocks, EventAfterPanelEndRejected) {
    const auto d = parse(small_panel());
    const auto e = events({"2010-04-01"}, {0.1}, {0.2});
    EXPECT_THROW(align_shocks(d, e), ValidationError);
}

TEST(Subset, IdentityAndComposition) {
    std::vector<std::string> all = emerging_markets();
    all.insert(all.end(), advanced_economies().begin(), advanced_economies().end());
    ASSERT_EQ(all.size(), 18u);
    const auto d = random_panel(all, 24, 3);
    const auto same = subset(d, all);
    EXPECT_EQ(same.countries(), d.countries());
    for (std::size_t i = 0; i < d.n_countries(); ++i) EXPECT_TRUE(same.country_block(i) == d.country_block(i));

    const auto em = subset(d, emerging_markets());
    EXPECT_EQ(em.n_countries(), 9u);
    EXPECT_EQ(em.countries(), emerging_markets());
    EXPECT_TRUE(em.country_block(3) == d.country_block(3));

    // order follows the dataset, not the request
    const auto pair = subset(d, {"Peru", "Brazil"});
    EXPECT_EQ(pair.countries(), (std::vector<std::string>{"Brazil", "Peru"}));
    const auto nested = subset(subset(d, {"Brazil", "Peru", "Japan"}), {"Peru"});
    EXPECT_TRUE(nested.country_block(0) == d.country_block(d.country_index("Peru")));
    EXPECT_THROW(subset(d, {"Atlantis"}), ValidationError);
}

TEST(Subset, KeepsShocks) {
    const auto d = parse(small_panel());
    const auto a = align_shocks(d, events({"2010-02-10"}, {0.5}, {0.25}));
    const auto s = subset(a, {"BB"});
    EXPECT_TRUE(s.shocks() == a.shocks());
    EXPECT_EQ(s.shock_names(), a.shock_names());
}

TEST(DemoPanel, EmergingMarketSubsetShape) {
    const std::string dir = HFSPILL_DATA_DIR;
    std::vector<VariableSpec> specs;
    for (const char* v : {"ner", "ip", "cpi", "lending_rate", "equity"}) specs.push_back({v});
    const auto d = load_panel(dir + "/demo/panel.csv", specs);
    EXPECT_EQ(d.n_countries(), 18u);
    const auto em = subset(d, emerging_markets());
    EXPECT_EQ(em.n_countries(), 9u);
    EXPECT_EQ(em.n_months(), 156u);
    EXPECT_EQ(em.n_variables(), 5u);
}

TEST(WritePanel, ExactRoundTrip) {
    const auto d = random_panel({"A", "B", "C"}, 30, 4);
    std::ostringstream out;
    write_panel(out, d);
    std::istringstream in(out.str());
    const auto back = read_panel(in, {{"x"}, {"y"}, {"z"}});
    ASSERT_EQ(back.countries(), d.countries());
    ASSERT_EQ(back.months(), d.months());
    for (std::size_t i = 0; i < d.n_countries(); ++i) EXPECT_TRUE(back.country_block(i) == d.country_block(i));
    std::ostringstream again;
    write_panel(again, back);
    EXPECT_EQ(again.str(), out.str());
}

TEST(DatedSeries, ReadAndSelect) {
    std::istringstream in("date,a,b\n2010-01-05,1,2\n2010-02-06,3,4\n");
    const auto s = read_dated_series(in);
    EXPECT_EQ(s.dates.size(), 2u);
    EXPECT_EQ(s.column("b")(1), 4.0);
    EXPECT_EQ(s.select({"b", "a"}).values(0, 1), 1.0);
    EXPECT_THROW(s.column("c"), ValidationError);
    std::istringstream bad("date,a\n2010-02-30,1\n");
    EXPECT_THROW(read_dated_series(bad), ValidationError);
}
