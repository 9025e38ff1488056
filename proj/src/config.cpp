#include "hfspill/config.hpp"

#include <fstream>
#include <sstream>

#include "hfspill/csv.hpp"
#include "hfspill/error.hpp"

namespace hfspill {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::string strip_comment(std::string_view line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return std::string(line.substr(0, i));
    }
    return std::string(line);
}

// Splits the interior of a bracketed list at top-level commas.
std::vector<std::string_view> split_list(std::string_view body) {
    std::vector<std::string_view> items;
    int depth = 0;
    bool quoted = false;
    std::size_t start = 0;
    for (std::size_t i = 0; i < body.size(); ++i) {
        const char c = body[i];
        if (c == '"') quoted = !quoted;
        if (quoted) continue;
        if (c == '[') ++depth;
        if (c == ']') --depth;
        if (c == ',' && depth == 0) {
            items.push_back(trim(body.substr(start, i - start)));
            start = i + 1;
        }
    }
    auto last = trim(body.substr(start));
    if (!last.empty()) items.push_back(last);
    return items;
}

bool is_list(std::string_view v) { return v.size() >= 2 && v.front() == '[' && v.back() == ']'; }

std::string unquote(std::string_view v) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return std::string(v.substr(1, v.size() - 2));
    return std::string(v);
}

}  // namespace

Config Config::parse(std::string_view text, std::string source) {
    Config cfg;
    cfg.source_ = source;
    std::istringstream in{std::string(text)};
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    std::string pending_key;
    std::string pending_value;
    int pending_depth = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string content = strip_comment(line);
        const auto body = trim(content);
        if (!pending_key.empty()) {
            // continuation of a multi-line list
            pending_value += ' ';
            pending_value += body;
            for (char c : body) pending_depth += (c == '[') - (c == ']');
            if (pending_depth == 0) {
                cfg.values_[pending_key] = pending_value;
                pending_key.clear();
            }
            continue;
        }
        if (body.empty()) continue;
        if (body.front() == '[' && body.back() == ']' && body.find('=') == std::string_view::npos) {
            section = std::string(trim(body.substr(1, body.size() - 2)));
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) {
            throw ValidationError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key_part(trim(body.substr(0, eq)));
        const std::string key = section.empty() ? key_part : section + "." + key_part;
        const auto value = trim(body.substr(eq + 1));
        int depth = 0;
        for (char c : value) depth += (c == '[') - (c == ']');
        if (depth > 0) {
            pending_key = key;
            pending_value = std::string(value);
            pending_depth = depth;
            continue;
        }
        cfg.values_[key] = std::string(value);
    }
    if (!pending_key.empty()) throw ValidationError(source + ": unterminated list for '" + pending_key + "'");
    return cfg;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

std::vector<std::string> Config::keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_) out.push_back(k);
    return out;
}

void Config::fail(const std::string& key, const std::string& what) const {
    throw ValidationError(source_ + ": key '" + key + "' " + what);
}

std::optional<std::string> Config::get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return unquote(it->second);
}

std::optional<double> Config::get_double(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return csv::parse_double(it->second, source_ + " key '" + key + "'");
}

std::optional<long long> Config::get_int(const std::string& key) const {
    auto v = get_double(key);
    if (!v) return std::nullopt;
    const auto i = static_cast<long long>(*v);
    if (static_cast<double>(i) != *v) fail(key, "must be an integer");
    return i;
}

std::optional<bool> Config::get_bool(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    if (it->second == "true") return true;
    if (it->second == "false") return false;
    fail(key, "must be true or false");
}

std::optional<std::vector<double>> Config::get_doubles(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    const std::string_view v = it->second;
    if (!is_list(v)) fail(key, "must be a list");
    std::vector<double> out;
    for (auto item : split_list(v.substr(1, v.size() - 2)))
        out.push_back(csv::parse_double(item, source_ + " key '" + key + "'"));
    return out;
}

std::optional<std::vector<std::string>> Config::get_strings(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    const std::string_view v = it->second;
    if (!is_list(v)) fail(key, "must be a list");
    std::vector<std::string> out;
    for (auto item : split_list(v.substr(1, v.size() - 2))) out.push_back(unquote(item));
    return out;
}

std::optional<Eigen::MatrixXd> Config::get_matrix(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    const std::string_view v = it->second;
    if (!is_list(v)) fail(key, "must be a list of rows");
    const auto rows = split_list(v.substr(1, v.size() - 2));
    Eigen::MatrixXd m;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (!is_list(rows[r])) fail(key, "must be a list of rows");
        const auto cells = split_list(rows[r].substr(1, rows[r].size() - 2));
        if (r == 0) m.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cells.size()));
        if (static_cast<Eigen::Index>(cells.size()) != m.cols()) fail(key, "has ragged rows");
        for (std::size_t c = 0; c < cells.size(); ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                csv::parse_double(cells[c], source_ + " key '" + key + "'");
    }
    return m;
}

}  // namespace hfspill
