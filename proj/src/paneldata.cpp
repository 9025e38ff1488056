#include "hfspill/paneldata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include "hfspill/csv.hpp"
#include "hfspill/error.hpp"

namespace hfspill::paneldata {

Transform parse_transform(const std::string& text) {
    if (text == "log100") return Transform::log100;
    if (text == "level") return Transform::level;
    throw ValidationError("unknown transform '" + text + "' (expected log100 or level)");
}

std::string to_string(Transform t) { return t == Transform::log100 ? "log100" : "level"; }

Eigen::VectorXd DatedSeries::column(const std::string& name) const {
    for (std::size_t j = 0; j < names.size(); ++j)
        if (names[j] == name) return values.col(static_cast<Eigen::Index>(j));
    throw ValidationError("shock series has no column '" + name + "'");
}

DatedSeries DatedSeries::select(const std::vector<std::string>& wanted) const {
    DatedSeries out{dates, wanted, Eigen::MatrixXd(values.rows(), static_cast<Eigen::Index>(wanted.size()))};
    for (std::size_t j = 0; j < wanted.size(); ++j) out.values.col(static_cast<Eigen::Index>(j)) = column(wanted[j]);
    return out;
}

PanelDataset::PanelDataset(std::vector<std::string> countries, std::vector<Month> months,
                           std::vector<VariableSpec> variables, std::vector<double> raw_values)
    : countries_(std::move(countries)),
      months_(std::move(months)),
      variables_(std::move(variables)),
      raw_(std::move(raw_values)),
      shocks_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(months_.size()), 0)) {
    if (raw_.size() != countries_.size() * months_.size() * variables_.size())
        throw ValidationError("panel value count does not match its dimensions");
    for (std::size_t t = 1; t < months_.size(); ++t) {
        if (months_[t].index() != months_[t - 1].index() + 1)
            throw ValidationError("panel months are not contiguous at " + months_[t].to_string());
    }
    values_.resize(raw_.size());
    for (std::size_t i = 0; i < countries_.size(); ++i)
        for (std::size_t t = 0; t < months_.size(); ++t)
            for (std::size_t k = 0; k < variables_.size(); ++k) {
                const auto o = offset(i, t, k);
                values_[o] = variables_[k].transform == Transform::log100 ? 100.0 * std::log(raw_[o]) : raw_[o];
            }
}

PanelDataset PanelDataset::from_blocks(std::vector<std::string> countries, std::vector<Month> months,
                                       std::vector<std::string> variables, const std::vector<Eigen::MatrixXd>& blocks) {
    if (blocks.size() != countries.size()) throw ValidationError("one block per country required");
    std::vector<VariableSpec> specs;
    for (auto& v : variables) specs.push_back(VariableSpec{std::move(v), Transform::level, VariableRole::endogenous});
    const auto t_len = months.size();
    std::vector<double> raw(countries.size() * t_len * specs.size());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (static_cast<std::size_t>(blocks[i].rows()) != t_len ||
            static_cast<std::size_t>(blocks[i].cols()) != specs.size())
            throw ValidationError("country block has the wrong shape");
        for (std::size_t t = 0; t < t_len; ++t)
            for (std::size_t k = 0; k < specs.size(); ++k)
                raw[(i * t_len + t) * specs.size() + k] =
                    blocks[i](static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k));
    }
    return PanelDataset(std::move(countries), std::move(months), std::move(specs), std::move(raw));
}

std::vector<std::string> PanelDataset::variable_names() const {
    std::vector<std::string> out;
    for (const auto& v : variables_) out.push_back(v.name);
    return out;
}

Eigen::MatrixXd PanelDataset::country_block(std::size_t i) const {
    Eigen::MatrixXd block(static_cast<Eigen::Index>(n_months()), static_cast<Eigen::Index>(n_variables()));
    for (std::size_t t = 0; t < n_months(); ++t)
        for (std::size_t k = 0; k < n_variables(); ++k)
            block(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = value(i, t, k);
    return block;
}

std::size_t PanelDataset::country_index(const std::string& id) const {
    auto it = std::find(countries_.begin(), countries_.end(), id);
    if (it == countries_.end()) throw ValidationError("unknown country '" + id + "'");
    return static_cast<std::size_t>(it - countries_.begin());
}

std::size_t PanelDataset::variable_index(const std::string& name) const {
    for (std::size_t k = 0; k < variables_.size(); ++k)
        if (variables_[k].name == name) return k;
    throw ValidationError("unknown variable '" + name + "'");
}

PanelDataset PanelDataset::with_shocks(std::vector<std::string> names, Eigen::MatrixXd shocks) const {
    if (static_cast<std::size_t>(shocks.rows()) != n_months() || static_cast<std::size_t>(shocks.cols()) != names.size())
        throw ValidationError("shock block shape does not match the panel");
    PanelDataset out = *this;
    out.shock_names_ = std::move(names);
    out.shocks_ = std::move(shocks);
    return out;
}

PanelDataset PanelDataset::with_values(const std::vector<Eigen::MatrixXd>& blocks) const {
    PanelDataset out = from_blocks(countries_, months_, variable_names(), blocks);
    out.shock_names_ = shock_names_;
    out.shocks_ = shocks_;
    return out;
}

PanelDataset read_panel(std::istream& in, const std::vector<VariableSpec>& specs, std::string source) {
    const auto table = csv::read(in, std::move(source));
    const auto c_country = table.column("country");
    const auto c_date = table.column("date");
    const auto c_var = table.column("variable");
    const auto c_value = table.column("value");

    std::vector<VariableSpec> endo;
    std::map<std::string, std::size_t> var_pos;
    for (const auto& s : specs) {
        if (s.role != VariableRole::endogenous) continue;
        if (var_pos.count(s.name)) throw ValidationError("variable '" + s.name + "' specified twice");
        var_pos[s.name] = endo.size();
        endo.push_back(s);
    }
    if (endo.empty()) throw ValidationError("no endogenous variables specified");

    std::vector<std::string> countries;
    std::map<std::string, std::size_t> country_pos;
    struct Cell {
        std::size_t country;
        Month month;
        std::size_t var;
        double value;
        std::size_t line;
    };
    std::vector<Cell> cells;
    int min_month = 0;
    int max_month = 0;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        auto vp = var_pos.find(row[c_var]);
        if (vp == var_pos.end()) continue;
        const std::string where = table.source + " row " + std::to_string(r + 2);
        const Month month = Month::parse(row[c_date]);
        const double value = csv::parse_double(row[c_value], where);
        auto [cp, inserted] = country_pos.emplace(row[c_country], countries.size());
        if (inserted) countries.push_back(row[c_country]);
        if (cells.empty()) {
            min_month = max_month = month.index();
        } else {
            min_month = std::min(min_month, month.index());
            max_month = std::max(max_month, month.index());
        }
        cells.push_back(Cell{cp->second, month, vp->second, value, r + 2});
    }
    if (cells.empty()) throw ValidationError(table.source + ": no rows for the specified variables");

    std::vector<Month> months;
    for (int m = min_month; m <= max_month; ++m) months.push_back(Month::from_index(m));
    const std::size_t n_t = months.size();
    const std::size_t n_k = endo.size();
    std::vector<double> raw(countries.size() * n_t * n_k, 0.0);
    std::vector<char> seen(raw.size(), 0);
    std::vector<std::string> problems;
    for (const auto& c : cells) {
        const auto t = static_cast<std::size_t>(c.month.index() - min_month);
        const auto o = (c.country * n_t + t) * n_k + c.var;
        if (seen[o]) {
            problems.push_back("duplicate cell (" + countries[c.country] + ", " + c.month.to_string() + ", " +
                               endo[c.var].name + ") at row " + std::to_string(c.line));
            continue;
        }
        if (endo[c.var].transform == Transform::log100 && !(c.value > 0.0)) {
            problems.push_back("non-positive value " + csv::format_number(c.value) + " under log100 for (" +
                               countries[c.country] + ", " + c.month.to_string() + ", " + endo[c.var].name + ")");
        }
        seen[o] = 1;
        raw[o] = c.value;
    }
    for (std::size_t i = 0; i < countries.size(); ++i)
        for (std::size_t t = 0; t < n_t; ++t)
            for (std::size_t k = 0; k < n_k; ++k)
                if (!seen[(i * n_t + t) * n_k + k])
                    problems.push_back("missing cell (" + countries[i] + ", " + months[t].to_string() + ", " +
                                       endo[k].name + ")");
    if (!problems.empty()) {
        std::string msg = table.source + ": unbalanced or invalid panel:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ValidationError(msg);
    }
    return PanelDataset(std::move(countries), std::move(months), std::move(endo), std::move(raw));
}

PanelDataset load_panel(const std::filesystem::path& path, const std::vector<VariableSpec>& specs) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open panel '" + path.string() + "'");
    return read_panel(in, specs, path.string());
}

void write_panel(std::ostream& out, const PanelDataset& d) {
    out << "country,date,variable,value\n";
    for (std::size_t i = 0; i < d.n_countries(); ++i)
        for (std::size_t t = 0; t < d.n_months(); ++t)
            for (std::size_t k = 0; k < d.n_variables(); ++k)
                out << d.countries()[i] << ',' << d.months()[t].to_string() << ',' << d.variables()[k].name << ','
                    << csv::format_exact(d.raw(i, t, k)) << '\n';
}

PanelDataset align_shocks(const PanelDataset& dataset, const DatedSeries& events,
                          const std::vector<std::string>& columns) {
    if (events.values.rows() != static_cast<Eigen::Index>(events.dates.size()))
        throw ValidationError("shock series dates and values differ in length");
    std::vector<std::string> wanted = columns;
    if (wanted.empty()) {
        for (const auto& v : dataset.variables())
            if (v.role == VariableRole::shock) wanted.push_back(v.name);
    }
    const DatedSeries chosen = wanted.empty() ? events : events.select(wanted);
    if (dataset.n_months() == 0) throw ValidationError("panel has no months");
    const int first = dataset.months().front().index();
    const int last = dataset.months().back().index();

    // Sum in a canonical order so the result does not depend on row order.
    std::vector<std::size_t> order(chosen.dates.size());
    std::iota(order.begin(), order.end(), 0);
    const auto& v = chosen.values;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (chosen.dates[a] != chosen.dates[b]) return chosen.dates[a] < chosen.dates[b];
        for (Eigen::Index j = 0; j < v.cols(); ++j) {
            const auto ia = static_cast<Eigen::Index>(a);
            const auto ib = static_cast<Eigen::Index>(b);
            if (v(ia, j) != v(ib, j)) return v(ia, j) < v(ib, j);
        }
        return false;
    });

    Eigen::MatrixXd monthly = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dataset.n_months()), v.cols());
    for (auto e : order) {
        const int m = chosen.dates[e].month_of().index();
        if (m > last) {
            throw ValidationError("shock dated " + chosen.dates[e].to_string() + " is after the panel end " +
                                  dataset.months().back().to_string());
        }
        if (m < first) continue;
        monthly.row(m - first) += v.row(static_cast<Eigen::Index>(e));
    }
    return dataset.with_shocks(chosen.names, std::move(monthly));
}

PanelDataset subset(const PanelDataset& d, const std::vector<std::string>& countries) {
    std::set<std::size_t> keep;
    for (const auto& c : countries) keep.insert(d.country_index(c));
    std::vector<std::string> names;
    std::vector<double> raw;
    const auto per_country = d.n_months() * d.n_variables();
    for (auto i : keep) {
        names.push_back(d.countries_[i]);
        raw.insert(raw.end(), d.raw_.begin() + static_cast<std::ptrdiff_t>(i * per_country),
                   d.raw_.begin() + static_cast<std::ptrdiff_t>((i + 1) * per_country));
    }
    PanelDataset out(std::move(names), d.months_, d.variables_, std::move(raw));
    out.shock_names_ = d.shock_names_;
    out.shocks_ = d.shocks_;
    return out;
}

DatedSeries read_dated_series(std::istream& in, std::string source) {
    const auto table = csv::read(in, std::move(source));
    const auto c_date = table.column("date");
    DatedSeries out;
    for (std::size_t j = 0; j < table.header.size(); ++j)
        if (j != c_date) out.names.push_back(table.header[j]);
    out.values.resize(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(out.names.size()));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        out.dates.push_back(Date::parse(row[c_date]));
        Eigen::Index col = 0;
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j == c_date) continue;
            out.values(static_cast<Eigen::Index>(r), col++) =
                csv::parse_double(row[j], table.source + " row " + std::to_string(r + 2));
        }
    }
    return out;
}

DatedSeries load_dated_series(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    return read_dated_series(in, path.string());
}

const std::vector<std::string>& emerging_markets() {
    static const std::vector<std::string> list{"Brazil",    "Chile", "Colombia",    "Hungary",     "Indonesia",
                                               "Mexico",    "Peru",  "Philippines", "South Africa"};
    return list;
}

const std::vector<std::string>& advanced_economies() {
    static const std::vector<std::string> list{"Australia", "Canada",      "France",          "Iceland", "Italy",
                                               "Japan",     "South Korea", "The Netherlands", "Sweden"};
    return list;
}

}  // namespace hfspill::paneldata
