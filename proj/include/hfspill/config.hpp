#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace hfspill {

/// Flat key/value configuration in a small TOML subset:
///
///   # comment
///   [section]
///   key = 1.5
///   name = "text"
///   flag = true
///   list = [1, 2, 3]
///   names = ["a", "b"]
///   matrix = [[0.5, 0], [0.1, 0.4]]
///
/// Keys inside a section are addressed as "section.key".
class Config {
public:
    Config() = default;

    static Config parse(std::string_view text, std::string source = "<config>");
    static Config load(const std::filesystem::path& path);

    bool contains(const std::string& key) const { return values_.count(key) != 0; }
    std::vector<std::string> keys() const;

    std::optional<std::string> get_string(const std::string& key) const;
    std::optional<double> get_double(const std::string& key) const;
    std::optional<long long> get_int(const std::string& key) const;
    std::optional<bool> get_bool(const std::string& key) const;
    std::optional<std::vector<double>> get_doubles(const std::string& key) const;
    std::optional<std::vector<std::string>> get_strings(const std::string& key) const;
    std::optional<Eigen::MatrixXd> get_matrix(const std::string& key) const;

    /// Raw right-hand side text, used to echo the configuration.
    const std::map<std::string, std::string>& raw() const { return values_; }

    void set(const std::string& key, std::string raw_value) { values_[key] = std::move(raw_value); }

private:
    std::string source_;
    std::map<std::string, std::string> values_;

    [[noreturn]] void fail(const std::string& key, const std::string& what) const;
};

}  // namespace hfspill
