#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hfspill/dates.hpp"

namespace hfspill::paneldata {

enum class Transform { log100, level };
enum class VariableRole { endogenous, shock };

struct VariableSpec {
    std::string name;
    Transform transform = Transform::level;
    VariableRole role = VariableRole::endogenous;
};

Transform parse_transform(const std::string& text);
std::string to_string(Transform t);

/// Event-dated series, one row per announcement.
struct DatedSeries {
    std::vector<Date> dates;
    std::vector<std::string> names;
    Eigen::MatrixXd values;  // events x names

    /// Column by name; throws ValidationError when absent.
    Eigen::VectorXd column(const std::string& name) const;
    DatedSeries select(const std::vector<std::string>& names) const;
};

/// Balanced monthly country panel with the aligned common shock block.
class PanelDataset {
public:
    PanelDataset() = default;
    PanelDataset(std::vector<std::string> countries, std::vector<Month> months, std::vector<VariableSpec> variables,
                 std::vector<double> raw_values);

    /// Builds a dataset whose stored values are already transformed: one
    /// T x n block per country, all variables tagged `level`.
    static PanelDataset from_blocks(std::vector<std::string> countries, std::vector<Month> months,
                                    std::vector<std::string> variables, const std::vector<Eigen::MatrixXd>& blocks);

    std::size_t n_countries() const { return countries_.size(); }
    std::size_t n_months() const { return months_.size(); }
    std::size_t n_variables() const { return variables_.size(); }
    std::size_t n_shocks() const { return shock_names_.size(); }

    const std::vector<std::string>& countries() const { return countries_; }
    const std::vector<Month>& months() const { return months_; }
    const std::vector<VariableSpec>& variables() const { return variables_; }
    std::vector<std::string> variable_names() const;
    const std::vector<std::string>& shock_names() const { return shock_names_; }

    /// Transformed value of variable k for country i at month t.
    double value(std::size_t i, std::size_t t, std::size_t k) const { return values_[offset(i, t, k)]; }
    /// Value as read from file, before transformation.
    double raw(std::size_t i, std::size_t t, std::size_t k) const { return raw_[offset(i, t, k)]; }

    /// T x n block of transformed observations for one country.
    Eigen::MatrixXd country_block(std::size_t i) const;

    /// T x m matrix of monthly shocks (zero in months without an announcement).
    const Eigen::MatrixXd& shocks() const { return shocks_; }

    std::size_t country_index(const std::string& id) const;
    std::size_t variable_index(const std::string& name) const;

    /// Copy with the shock block replaced (rows must equal n_months()).
    PanelDataset with_shocks(std::vector<std::string> names, Eigen::MatrixXd shocks) const;

    /// Copy with the transformed values of (country, month, variable) overwritten.
    /// Raw values are set to the same numbers and the transform becomes `level`.
    PanelDataset with_values(const std::vector<Eigen::MatrixXd>& blocks) const;

    friend PanelDataset subset(const PanelDataset&, const std::vector<std::string>&);

private:
    std::size_t offset(std::size_t i, std::size_t t, std::size_t k) const {
        return (i * months_.size() + t) * variables_.size() + k;
    }

    std::vector<std::string> countries_;
    std::vector<Month> months_;
    std::vector<VariableSpec> variables_;
    std::vector<double> raw_;
    std::vector<double> values_;
    std::vector<std::string> shock_names_;
    Eigen::MatrixXd shocks_;
};

/// Parses a long-format panel `country,date,variable,value` (date YYYY-MM).
/// Variables not named in `specs` are ignored; specs with role `shock` are
/// not read from the panel (they select columns in align_shocks).
PanelDataset read_panel(std::istream& in, const std::vector<VariableSpec>& specs, std::string source = "<panel>");
PanelDataset load_panel(const std::filesystem::path& path, const std::vector<VariableSpec>& specs);

/// Writes raw values in long format with exact round-trip formatting.
void write_panel(std::ostream& out, const PanelDataset& dataset);

/// Sums event shocks within calendar month and aligns them to the panel
/// months; months without events are zero. Events before the first panel
/// month are dropped; events after the last one are an error. When `columns`
/// is empty all columns of `events` are used.
PanelDataset align_shocks(const PanelDataset& dataset, const DatedSeries& events,
                          const std::vector<std::string>& columns = {});

/// Restricts the panel to the listed countries, keeping the dataset's order.
PanelDataset subset(const PanelDataset& dataset, const std::vector<std::string>& countries);

/// Reads `date,<col>,...` with YYYY-MM-DD dates.
DatedSeries read_dated_series(std::istream& in, std::string source = "<series>");
DatedSeries load_dated_series(const std::filesystem::path& path);

/// Country groups used in the benchmark sample.
const std::vector<std::string>& emerging_markets();
const std::vector<std::string>& advanced_economies();

}  // namespace hfspill::paneldata
