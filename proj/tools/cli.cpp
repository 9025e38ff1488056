#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "hfspill/config.hpp"
#include "hfspill/csv.hpp"
#include "hfspill/dgpsim.hpp"
#include "hfspill/error.hpp"
#include "hfspill/hfdecomp.hpp"
#include "hfspill/localproj.hpp"
#include "hfspill/paneldata.hpp"
#include "hfspill/pbvar.hpp"
#include "hfspill/stats.hpp"

namespace hfspill::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr const char* kThreadsEnv = "HFSPILL_THREADS";

struct OptDef {
    std::string flag;
    std::string key;
    std::string def;
    std::string help;
    bool is_flag = false;
};

struct Resolved {
    std::string value;
    std::string source;
    std::string flag;
};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

std::string default_threads() {
    if (const char* env = std::getenv(kThreadsEnv)) return env;
    return "1";
}

// ---------------------------------------------------------------------------
// Option tables

std::vector<OptDef> common_opts() {
    return {
        {"--seed", "run.seed", "1", "random seed"},
        {"--threads", "run.threads", "1", std::string("worker threads; env ") + kThreadsEnv + " sets the default"},
    };
}

std::vector<OptDef> data_opts(bool with_shocks) {
    std::vector<OptDef> out{
        {"--panel", "data.panel", "", "long-format panel CSV country,date,variable,value"},
        {"--variables", "data.variables", "", "comma-separated variables, shock block excluded (empty: all in the panel)"},
        {"--transforms", "data.transforms", "", "log100 or level, one per variable or one for all (empty: level)"},
        {"--countries", "data.countries", "", "comma-separated country subset (empty: all)"},
    };
    if (with_shocks) {
        out.push_back({"--shocks", "data.shocks", "", "dated shock CSV date,<col>,..."});
        out.push_back({"--shock-columns", "data.shock_columns", "i_mp,i_id", "shock columns, in ordering"});
    }
    return out;
}

std::vector<OptDef> bvar_opts(const std::string& lags, const std::string& draws, const std::string& burn) {
    return {
        {"--lags", "bvar.lags", lags, "VAR lag order"},
        {"--draws", "bvar.draws", draws, "posterior draws including burn-in"},
        {"--burn", "bvar.burn", burn, "discarded draws"},
        {"--block-exogenous", "bvar.block_exogenous", "false", "shock block depends only on its own lags", true},
        {"--tightness", "bvar.overall_tightness", "0.1", "prior overall tightness"},
        {"--lag-decay", "bvar.lag_decay", "1", "prior lag decay"},
        {"--intercept-looseness", "bvar.intercept_looseness", "100", "prior intercept looseness"},
        {"--own-lag-mean", "bvar.own_lag_mean", "0.8", "prior mean of own first lags of country variables"},
        {"--diffuse", "bvar.diffuse", "false", "flat prior; posterior mean equals OLS", true},
    };
}

std::vector<OptDef> irf_opts() {
    return {
        {"--horizon", "irf.horizon", "36", "IRF horizon in months"},
        {"--percentiles", "irf.percentiles", "5,16,50,84,95", "reported percentiles"},
    };
}

void append(std::vector<OptDef>& a, const std::vector<OptDef>& b) { a.insert(a.end(), b.begin(), b.end()); }

std::map<std::string, std::vector<OptDef>> command_tables() {
    std::map<std::string, std::vector<OptDef>> t;

    auto& dec = t["decompose"];
    dec = {
        {"--surprises", "data.surprises", "", "surprise CSV date,contract_1,...,contract_K,<equity>"},
        {"--equity-column", "data.equity_column", "sp500", "equity surprise column"},
        {"--method", "decompose.method", "rotation", "rotation or poor_mans"},
        {"--w", "decompose.w", "0.5", "position inside the admissible angle interval, in (0,1)"},
        {"--alpha", "decompose.alpha", "", "rotation angle in radians; overrides --w"},
        {"--out", "decompose.out", "", "output shocks CSV date,i_total,i_mp,i_id"},
    };
    append(dec, common_opts());

    auto& est = t["estimate"];
    est = data_opts(true);
    append(est, bvar_opts("6", "5000", "500"));
    est.push_back({"--out", "estimate.out", "", "posterior draws file"});
    append(est, common_opts());

    auto& irf = t["irf"];
    irf = {{"--posterior", "irf.posterior", "", "posterior draws file written by estimate"}};
    append(irf, irf_opts());
    irf.push_back({"--out", "irf.out", "", "IRF CSV shock,variable,horizon,pctl,value"});
    append(irf, common_opts());

    auto& lp = t["localproj"];
    lp = data_opts(true);
    append(lp, {
                   {"--outcomes", "lp.outcomes", "", "outcome variables (empty: all)"},
                   {"--spec", "lp.spec", "all", "pooled, fixed_effects, fe_trend or all"},
                   {"--horizons", "lp.horizons", "24", "maximum horizon"},
                   {"--jy", "lp.j_y", "1", "outcome lags"},
                   {"--jx", "lp.j_x", "1", "lags of the other country variables"},
                   {"--ji", "lp.j_i", "2", "shock lags"},
                   {"--auto-lags", "lp.auto_lags", "false", "choose jy = jx per country by SBIC", true},
                   {"--max-lag", "lp.max_lag", "4", "largest lag considered by SBIC"},
                   {"--bands", "lp.bands", "", "standard-error multiples for band columns, e.g. 1,1.65"},
                   {"--out", "lp.out", "", "LP CSV spec,outcome,shock,horizon,beta,se"},
               });
    append(lp, common_opts());

    auto& mg = t["meangroup"];
    mg = data_opts(true);
    append(mg, irf_opts());
    mg.push_back({"--out", "meangroup.out", "", "IRF CSV shock,variable,horizon,pctl,value (pctl 'point' for the averaged system)"});
    append(mg, common_opts());

    auto& rot = t["rotations"];
    rot = data_opts(false);
    append(rot, {
                    {"--surprises", "data.surprises", "", "surprise CSV date,contract_1,...,contract_K,<equity>"},
                    {"--equity-column", "data.equity_column", "sp500", "equity surprise column"},
                    {"--grid", "rotations.grid", "99", "number of rotation grid points"},
                    {"--pooled-draws", "rotations.pooled_draws", "10000", "size of the pooled draw sample"},
                });
    append(rot, bvar_opts("6", "500", "50"));
    append(rot, irf_opts());
    append(rot, {
                    {"--out", "rotations.out", "", "pooled IRF CSV shock,variable,horizon,pctl,value"},
                    {"--per-rotation-out", "rotations.per_rotation_out", "",
                     "optional CSV w,shock,variable,horizon,pctl,value of each grid point"},
                });
    append(rot, common_opts());

    auto& sim = t["simulate"];
    sim = {
        {"--horizon", "dgp.irf_horizon", "36", "horizon of the true IRF file"},
        {"--out", "simulate.out", "", "output directory"},
        {"--seed", "dgp.seed", std::to_string(dgpsim::default_spec().seed), "random seed"},
        {"--threads", "run.threads", "1", std::string("worker threads; env ") + kThreadsEnv + " sets the default"},
    };
    return t;
}

const std::map<std::string, std::string>& command_help() {
    static const std::map<std::string, std::string> h{
        {"decompose", "split surprises into MP and ID shocks"},
        {"estimate", "sample the pooled BVAR posterior"},
        {"irf", "structural impulse responses from posterior draws"},
        {"localproj", "panel local projections"},
        {"meangroup", "country-by-country VAR(1) averaged across countries"},
        {"rotations", "pool IRFs over the grid of admissible rotations"},
        {"simulate", "synthetic surprises and panel from a known DGP"},
    };
    return h;
}

// ---------------------------------------------------------------------------
// Settings resolution: flag > config file > environment > default

class Settings {
public:
    void resolve(const std::vector<OptDef>& defs, const std::map<std::string, CLI::Option*>& opts,
                 const std::map<std::string, std::string>& strings, const std::map<std::string, bool>& flags,
                 const Config& cfg) {
        for (const auto& d : defs) {
            Resolved r{d.def, "default", d.flag};
            if (d.key == "run.threads" && std::getenv(kThreadsEnv)) r = {default_threads(), "env", d.flag};
            if (cfg.contains(d.key)) {
                const auto& raw = cfg.raw().at(d.key);
                if (!raw.empty() && raw.front() == '[') {
                    r.value = csv::join(*cfg.get_strings(d.key));
                } else {
                    r.value = *cfg.get_string(d.key);
                }
                r.source = "config";
            }
            if (opts.at(d.flag)->count() > 0) {
                r.value = d.is_flag ? (flags.at(d.flag) ? "true" : "false") : strings.at(d.flag);
                r.source = "flag";
            }
            values_[d.key] = r;
        }
    }

    const Resolved& get(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw std::logic_error("unregistered setting " + key);
        return it->second;
    }

    std::string str(const std::string& key) const { return get(key).value; }

    std::string required(const std::string& key) const {
        const auto& r = get(key);
        if (r.value.empty()) throw ValidationError(r.flag + " is required (or set " + key + " in the config file)");
        return r.value;
    }

    long long integer(const std::string& key, long long min) const {
        const auto& r = get(key);
        long long v = 0;
        const auto text = trim(r.value);
        auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc() || p != text.data() + text.size() || text.empty())
            throw ValidationError("invalid value for " + r.flag + ": '" + r.value + "' is not an integer");
        if (v < min)
            throw ValidationError("invalid value for " + r.flag + ": " + r.value + " (must be at least " +
                                  std::to_string(min) + ")");
        return v;
    }

    std::uint64_t seed(const std::string& key) const {
        const auto& r = get(key);
        std::uint64_t v = 0;
        const auto text = trim(r.value);
        auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc() || p != text.data() + text.size() || text.empty())
            throw ValidationError("invalid value for " + r.flag + ": '" + r.value + "' is not a non-negative integer");
        return v;
    }

    double number(const std::string& key) const {
        const auto& r = get(key);
        try {
            return csv::parse_double(trim(r.value), r.flag);
        } catch (const ValidationError&) {
            throw ValidationError("invalid value for " + r.flag + ": '" + r.value + "' is not a number");
        }
    }

    bool boolean(const std::string& key) const {
        const auto& r = get(key);
        const auto v = trim(r.value);
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw ValidationError("invalid value for " + r.flag + ": '" + r.value + "' (expected true or false)");
    }

    std::vector<std::string> list(const std::string& key) const {
        std::vector<std::string> out;
        const auto v = trim(get(key).value);
        if (v.empty()) return out;
        for (const auto& item : csv::split(v)) out.push_back(trim(item));
        return out;
    }

    std::vector<double> numbers(const std::string& key) const {
        const auto& r = get(key);
        std::vector<double> out;
        for (const auto& item : list(key)) {
            try {
                out.push_back(csv::parse_double(item, r.flag));
            } catch (const ValidationError&) {
                throw ValidationError("invalid value for " + r.flag + ": '" + item + "' is not a number");
            }
        }
        return out;
    }

    json to_json() const {
        json j = json::object();
        for (const auto& [k, r] : values_) j[k] = {{"value", r.value}, {"source", r.source}};
        return j;
    }

private:
    std::map<std::string, Resolved> values_;
};

// ---------------------------------------------------------------------------
// Files and hashing

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xF];
    }
    return out;
}

void require_file(const fs::path& path, const std::string& what) {
    if (!fs::exists(path)) throw ValidationError(what + " '" + path.string() + "' does not exist");
}

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    auto out = open_output(path);
    out << text;
}

struct RunContext {
    std::string command;
    std::vector<std::string> argv;
    std::optional<fs::path> config_file;
    Settings settings;
    std::vector<fs::path> inputs;
    std::vector<fs::path> outputs;
    json summary = json::object();
    fs::path summary_path;
    fs::path manifest_path;
};

void set_report_paths(RunContext& ctx, const fs::path& out, bool directory) {
    if (directory) {
        ctx.summary_path = out / "summary.json";
        ctx.manifest_path = out / "manifest.json";
    } else {
        ctx.summary_path = fs::path(out.string() + ".summary.json");
        ctx.manifest_path = fs::path(out.string() + ".manifest.json");
    }
}

std::string versions_compiler() {
#ifdef __VERSION__
    return __VERSION__;
#else
    return "unknown";
#endif
}

void write_reports(RunContext& ctx, double seconds) {
    write_text(ctx.summary_path, ctx.summary.dump(2) + "\n");
    ctx.outputs.push_back(ctx.summary_path);
    json m;
    m["command"] = ctx.command;
    m["argv"] = ctx.argv;
    if (ctx.config_file) {
        m["config_file"] = ctx.config_file->string();
        m["config_sha256"] = sha256_file(*ctx.config_file);
    } else {
        m["config_file"] = nullptr;
        m["config_sha256"] = nullptr;
    }
    m["settings"] = ctx.settings.to_json();
    json inputs = json::object();
    for (const auto& p : ctx.inputs) inputs[p.string()] = sha256_file(p);
    m["inputs"] = inputs;
    json outputs = json::object();
    for (const auto& p : ctx.outputs) outputs[p.string()] = sha256_file(p);
    m["outputs"] = outputs;
    m["versions"] = {{"hfspill", kVersion},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"cli11", CLI11_VERSION},
                     {"compiler", versions_compiler()}};
    m["wall_time_seconds"] = seconds;
    write_text(ctx.manifest_path, m.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Loading

hfdecomp::SurprisePanel load_surprises(RunContext& ctx) {
    const fs::path path = ctx.settings.required("data.surprises");
    require_file(path, "surprise file");
    ctx.inputs.push_back(path);
    const auto series = paneldata::load_dated_series(path);
    const auto equity = ctx.settings.str("data.equity_column");
    std::vector<std::string> contracts;
    bool found = false;
    for (const auto& n : series.names) {
        if (n == equity) {
            found = true;
        } else {
            contracts.push_back(n);
        }
    }
    if (!found) throw ValidationError(path.string() + ": missing equity column '" + equity + "'");
    if (contracts.empty()) throw ValidationError(path.string() + ": no interest-rate contract columns");
    hfdecomp::SurprisePanel panel;
    panel.dates = series.dates;
    panel.contracts = series.select(contracts).values;
    panel.equity = series.column(equity);
    panel.validate();
    return panel;
}

std::vector<std::string> panel_variables(const fs::path& path) {
    const auto table = csv::read_file(path);
    const auto c = table.column("variable");
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& row : table.rows)
        if (seen.insert(row[c]).second) out.push_back(row[c]);
    return out;
}

paneldata::PanelDataset load_data(RunContext& ctx, bool with_shocks) {
    const auto& s = ctx.settings;
    const fs::path path = s.required("data.panel");
    require_file(path, "panel file");
    ctx.inputs.push_back(path);
    auto names = s.list("data.variables");
    if (names.empty()) names = panel_variables(path);
    const auto transforms = s.list("data.transforms");
    if (!transforms.empty() && transforms.size() != 1 && transforms.size() != names.size())
        throw ValidationError("--transforms lists " + std::to_string(transforms.size()) + " entries for " +
                              std::to_string(names.size()) + " variables");
    std::vector<paneldata::VariableSpec> specs;
    for (std::size_t k = 0; k < names.size(); ++k) {
        paneldata::VariableSpec v;
        v.name = names[k];
        if (!transforms.empty()) v.transform = paneldata::parse_transform(transforms.size() == 1 ? transforms[0] : transforms[k]);
        specs.push_back(v);
    }
    auto ds = paneldata::load_panel(path, specs);
    const auto countries = s.list("data.countries");
    if (!countries.empty()) ds = paneldata::subset(ds, countries);
    if (with_shocks) {
        const fs::path shocks = s.required("data.shocks");
        require_file(shocks, "shock file");
        ctx.inputs.push_back(shocks);
        const auto columns = s.list("data.shock_columns");
        if (columns.empty()) throw ValidationError("--shock-columns must name at least one column");
        ds = paneldata::align_shocks(ds, paneldata::load_dated_series(shocks), columns);
    }
    return ds;
}

pbvar::BvarConfig bvar_config(const Settings& s, bool with_irf) {
    pbvar::BvarConfig c;
    c.lags = static_cast<int>(s.integer("bvar.lags", 1));
    c.draws = static_cast<int>(s.integer("bvar.draws", 1));
    c.burn = static_cast<int>(s.integer("bvar.burn", 0));
    if (c.draws <= c.burn)
        throw ValidationError("invalid value for --draws: " + std::to_string(c.draws) + " (must exceed --burn " +
                              std::to_string(c.burn) + ")");
    c.block_exogenous = s.boolean("bvar.block_exogenous");
    c.prior.overall_tightness = s.number("bvar.overall_tightness");
    c.prior.lag_decay = s.number("bvar.lag_decay");
    c.prior.intercept_looseness = s.number("bvar.intercept_looseness");
    c.prior.own_lag_mean = s.number("bvar.own_lag_mean");
    c.prior.diffuse = s.boolean("bvar.diffuse");
    c.threads = static_cast<int>(s.integer("run.threads", 1));
    if (with_irf) {
        c.horizon = static_cast<int>(s.integer("irf.horizon", 0));
        c.percentiles = s.numbers("irf.percentiles");
    }
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// Posterior draws file

constexpr char kPosteriorMagic[8] = {'H', 'F', 'S', 'P', 'P', 'O', 'S', '1'};

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T take(std::istream& in, const std::string& source) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw ValidationError(source + ": truncated posterior file");
    return v;
}

void save_posterior(const fs::path& path, const pbvar::PosteriorFit& fit) {
    auto out = open_output(path);
    out.write(kPosteriorMagic, sizeof kPosteriorMagic);
    const auto k = static_cast<std::int64_t>(fit.names.size());
    put<std::int64_t>(out, fit.lags);
    put<std::int64_t>(out, fit.n_shocks);
    put<std::int64_t>(out, k);
    put<std::int64_t>(out, static_cast<std::int64_t>(fit.samples.size()));
    put<std::int64_t>(out, fit.resampled);
    put<double>(out, fit.condition_number);
    for (const auto& n : fit.names) {
        put<std::int64_t>(out, static_cast<std::int64_t>(n.size()));
        out.write(n.data(), static_cast<std::streamsize>(n.size()));
    }
    for (const auto& s : fit.samples) {
        out.write(reinterpret_cast<const char*>(s.coeffs.data()),
                  static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(s.coeffs.size())));
        out.write(reinterpret_cast<const char*>(s.sigma.data()),
                  static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(s.sigma.size())));
    }
    if (!out) throw ValidationError("failed writing '" + path.string() + "'");
}

pbvar::PosteriorFit load_posterior(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open posterior file '" + path.string() + "'");
    const std::string src = path.string();
    char magic[sizeof kPosteriorMagic];
    in.read(magic, sizeof magic);
    if (!in || !std::equal(magic, magic + sizeof magic, kPosteriorMagic))
        throw ValidationError(src + ": not a posterior file written by 'estimate'");
    pbvar::PosteriorFit fit;
    fit.lags = static_cast<int>(take<std::int64_t>(in, src));
    fit.n_shocks = static_cast<int>(take<std::int64_t>(in, src));
    const auto k = take<std::int64_t>(in, src);
    const auto n = take<std::int64_t>(in, src);
    fit.resampled = static_cast<int>(take<std::int64_t>(in, src));
    fit.condition_number = take<double>(in, src);
    if (fit.lags < 1 || k < 1 || n < 1 || fit.n_shocks < 0 || fit.n_shocks > k || k > 10000 || n > 100000000)
        throw ValidationError(src + ": corrupt posterior header");
    for (std::int64_t i = 0; i < k; ++i) {
        const auto len = take<std::int64_t>(in, src);
        if (len < 0 || len > 4096) throw ValidationError(src + ": corrupt variable name");
        std::string name(static_cast<std::size_t>(len), '\0');
        in.read(name.data(), len);
        fit.names.push_back(name);
    }
    const Eigen::Index kk = k;
    fit.samples.resize(static_cast<std::size_t>(n));
    for (auto& s : fit.samples) {
        s.coeffs.resize(kk, kk * fit.lags + 1);
        s.sigma.resize(kk, kk);
        in.read(reinterpret_cast<char*>(s.coeffs.data()),
                static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(s.coeffs.size())));
        in.read(reinterpret_cast<char*>(s.sigma.data()),
                static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(s.sigma.size())));
        if (!in) throw ValidationError(src + ": truncated posterior file");
    }
    return fit;
}

// ---------------------------------------------------------------------------
// Writers

void write_irf(std::ostream& out, const pbvar::IrfResult& r, int n_shocks) {
    out << "shock,variable,horizon,pctl,value\n";
    const int shocks = n_shocks > 0 ? n_shocks : static_cast<int>(r.shock_names.size());
    for (int s = 0; s < shocks; ++s)
        for (std::size_t v = 0; v < r.variable_names.size(); ++v)
            for (int h = 0; h <= r.horizon; ++h)
                for (std::size_t p = 0; p < r.percentiles.size(); ++p)
                    out << r.shock_names[static_cast<std::size_t>(s)] << ',' << r.variable_names[v] << ',' << h << ','
                        << csv::format_number(r.percentiles[p]) << ','
                        << csv::format_number(r.at(s, static_cast<int>(v), h, static_cast<int>(p))) << '\n';
}

json interval_json(const hfdecomp::AngleInterval& in) { return {{"lo", in.lo}, {"hi", in.hi}}; }

// ---------------------------------------------------------------------------
// Subcommands

void cmd_decompose(RunContext& ctx) {
    const auto& s = ctx.settings;
    const fs::path out = s.required("decompose.out");
    set_report_paths(ctx, out, false);
    const auto panel = load_surprises(ctx);
    const auto pair = hfdecomp::make_pair(panel);
    const auto method = s.str("decompose.method");
    Eigen::VectorXd i_mp;
    Eigen::VectorXd i_id;
    json& sum = ctx.summary;
    sum["announcements"] = pair.size();
    sum["contracts"] = panel.contracts.cols();
    sum["method"] = method;
    if (method == "rotation") {
        const auto interval = hfdecomp::admissible_angle_interval(pair);
        hfdecomp::ShockDecomposition d;
        if (!trim(s.str("decompose.alpha")).empty()) {
            d = hfdecomp::decompose_at_angle(pair, s.number("decompose.alpha"));
        } else {
            const double w = s.number("decompose.w");
            if (!(w > 0.0 && w < 1.0))
                throw ValidationError("invalid value for --w: " + s.str("decompose.w") + " (must lie in (0,1))");
            d = hfdecomp::decompose_at(pair, w);
        }
        i_mp = d.i_mp;
        i_id = d.i_id;
        sum["interval"] = interval_json(interval);
        sum["alpha"] = d.alpha;
        sum["w"] = d.w;
        sum["c_mp"] = d.c_mp;
        sum["c_id"] = d.c_id;
        sum["variance_ratio"] = stats::second_moment(d.i_mp) / stats::second_moment(pair.i_total);
    } else if (method == "poor_mans") {
        const auto p = hfdecomp::poor_mans_decompose(pair);
        i_mp = p.i_mp;
        i_id = p.i_id;
        const double ratio = hfdecomp::poor_mans_variance_ratio(pair);
        sum["variance_ratio"] = ratio;
        if (ratio > 0.0) sum["implied_alpha"] = hfdecomp::angle_from_variance_ratio(ratio);
    } else {
        throw ValidationError("invalid value for --method: '" + method + "' (rotation or poor_mans)");
    }
    auto f = open_output(out);
    f << "date,i_total,i_mp,i_id\n";
    for (Eigen::Index t = 0; t < pair.size(); ++t)
        f << panel.dates[static_cast<std::size_t>(t)].to_string() << ',' << csv::format_number(pair.i_total(t)) << ','
          << csv::format_number(i_mp(t)) << ',' << csv::format_number(i_id(t)) << '\n';
    f.close();
    ctx.outputs.push_back(out);
}

json dataset_json(const paneldata::PanelDataset& ds) {
    return {{"countries", ds.countries()},
            {"variables", ds.variable_names()},
            {"shocks", ds.shock_names()},
            {"months", ds.n_months()},
            {"first_month", ds.months().front().to_string()}};
}

void cmd_estimate(RunContext& ctx) {
    const auto& s = ctx.settings;
    const fs::path out = s.required("estimate.out");
    set_report_paths(ctx, out, false);
    const auto cfg = bvar_config(s, false);
    const auto seed = s.seed("run.seed");
    const auto ds = load_data(ctx, true);
    const auto design = pbvar::build_design(ds, cfg);
    const auto fit = pbvar::fit_posterior(design, cfg, seed);
    save_posterior(out, fit);
    ctx.outputs.push_back(out);
    ctx.summary["data"] = dataset_json(ds);
    ctx.summary["observations"] = design.y.rows();
    ctx.summary["lags"] = cfg.lags;
    ctx.summary["retained_draws"] = fit.samples.size();
    ctx.summary["condition_number"] = fit.condition_number;
    ctx.summary["resampled_covariance_draws"] = fit.resampled;
}

void cmd_irf(RunContext& ctx) {
    const auto& s = ctx.settings;
    const fs::path out = s.required("irf.out");
    set_report_paths(ctx, out, false);
    const fs::path post = s.required("irf.posterior");
    require_file(post, "posterior file");
    ctx.inputs.push_back(post);
    pbvar::BvarConfig cfg;
    cfg.horizon = static_cast<int>(s.integer("irf.horizon", 0));
    cfg.percentiles = s.numbers("irf.percentiles");
    cfg.threads = static_cast<int>(s.integer("run.threads", 1));
    cfg.draws = 2;
    cfg.burn = 0;
    cfg.validate();
    const auto fit = load_posterior(post);
    const auto result = pbvar::structural_irf(fit, cfg);
    auto f = open_output(out);
    write_irf(f, result, fit.n_shocks);
    f.close();
    ctx.outputs.push_back(out);
    ctx.summary["draws_used"] = result.draws_used;
    ctx.summary["rejected"] = result.rejected;
    ctx.summary["horizon"] = cfg.horizon;
    ctx.summary["shocks"] = std::vector<std::string>(
        fit.names.begin(), fit.names.begin() + (fit.n_shocks > 0 ? fit.n_shocks : static_cast<int>(fit.names.size())));
}

void cmd_localproj(RunContext& ctx) {
    const auto& s = ctx.settings;
    const fs::path out = s.required("lp.out");
    set_report_paths(ctx, out, false);
    localproj::LpConfig cfg;
    cfg.horizons = static_cast<int>(s.integer("lp.horizons", 0));
    cfg.j_y = static_cast<int>(s.integer("lp.j_y", 0));
    cfg.j_x = static_cast<int>(s.integer("lp.j_x", 0));
    cfg.j_i = static_cast<int>(s.integer("lp.j_i", 0));
    cfg.auto_lags = s.boolean("lp.auto_lags");
    cfg.max_lag = static_cast<int>(s.integer("lp.max_lag", 1));
    const int threads = static_cast<int>(s.integer("run.threads", 1));
    std::vector<localproj::LpSpec> specs;
    const auto spec_text = s.str("lp.spec");
    if (spec_text == "all") {
        specs = {localproj::LpSpec::pooled, localproj::LpSpec::fixed_effects, localproj::LpSpec::fe_trend};
    } else {
        for (const auto& item : s.list("lp.spec")) {
            try {
                specs.push_back(localproj::parse_spec(item));
            } catch (const ValidationError&) {
                throw ValidationError("invalid value for --spec: '" + item + "' (pooled, fixed_effects, fe_trend, all)");
            }
        }
    }
    if (specs.empty()) throw ValidationError("--spec must name at least one specification");
    const auto bands = s.numbers("lp.bands");
    for (double b : bands)
        if (!(b > 0.0)) throw ValidationError("invalid value for --bands: multiples must be positive");
    const auto ds = load_data(ctx, true);
    auto outcomes = s.list("lp.outcomes");
    if (outcomes.empty()) outcomes = ds.variable_names();

    auto f = open_output(out);
    f << "spec,outcome,shock,horizon,beta,se";
    for (double b : bands) f << ",lo_" << csv::format_number(b) << ",hi_" << csv::format_number(b);
    f << '\n';
    json runs = json::array();
    for (auto spec : specs) {
        cfg.spec = spec;
        for (const auto& y : outcomes) {
            const auto r = localproj::lp_estimate(ds, y, cfg, threads);
            for (std::size_t k = 0; k < r.shock_names.size(); ++k) {
                for (int h = 0; h <= cfg.horizons; ++h) {
                    const double beta = r.beta(h, static_cast<Eigen::Index>(k));
                    const double se = r.se(h, static_cast<Eigen::Index>(k));
                    f << localproj::to_string(spec) << ',' << y << ',' << r.shock_names[k] << ',' << h << ','
                      << csv::format_number(beta) << ',' << csv::format_number(se);
                    for (double b : bands)
                        f << ',' << csv::format_number(beta - b * se) << ',' << csv::format_number(beta + b * se);
                    f << '\n';
                }
            }
            int repaired = 0;
            std::set<std::string> dropped;
            for (std::size_t h = 0; h < r.repaired.size(); ++h) {
                repaired += r.repaired[h] ? 1 : 0;
                dropped.insert(r.dropped[h].begin(), r.dropped[h].end());
            }
            runs.push_back({{"spec", localproj::to_string(spec)},
                            {"outcome", y},
                            {"lags", r.lags},
                            {"shock_scale", std::vector<double>(r.scale.data(), r.scale.data() + r.scale.size())},
                            {"repaired_horizons", repaired},
                            {"dropped_columns", dropped}});
        }
    }
    f.close();
    ctx.outputs.push_back(out);
    ctx.summary["data"] = dataset_json(ds);
    ctx.summary["runs"] = runs;
}

void cmd_meangroup(RunContext& ctx) {
    const auto& s = ctx.settings;
    const fs::path out = s.required("meangroup.out");
    set_report_paths(ctx, out, false);
    pbvar::BvarConfig cfg;
    cfg.horizon = static_cast<int>(s.integer("irf.horizon", 0));
    cfg.percentiles = s.numbers("irf.percentiles");
    cfg.threads = static_cast<int>(s.integer("run.threads", 1));
    cfg.draws = 2;
    cfg.burn = 0;
    cfg.validate();
    const auto ds = load_data(ctx, true);
    const auto mg = pbvar::mean_group(ds, cfg);
    auto f = open_output(out);
    write_irf(f, mg.bands, static_cast<int>(ds.n_shocks()));
    const int shocks = static_cast<int>(ds.n_shocks());
    for (int sh = 0; sh < shocks; ++sh)
        for (int v = 0; v < mg.point.n_vars; ++v)
            for (int h = 0; h <= mg.point.horizon; ++h)
                f << mg.bands.shock_names[static_cast<std::size_t>(sh)] << ','
                  << mg.bands.variable_names[static_cast<std::size_t>(v)] << ',' << h << ",point,"
                  << csv::format_number(mg.point.at(sh, v, h)) << '\n';
    f.close();
    ctx.outputs.push_back(out);
    ctx.summary["data"] = dataset_json(ds);
    ctx.summary["countries_used"] = mg.countries;
    ctx.summary["countries_dropped"] = mg.dropped;
}

void cmd_rotations(RunContext& ctx) {
    const auto& s = ctx.settings;
    const fs::path out = s.required("rotations.out");
    set_report_paths(ctx, out, false);
    const auto cfg = bvar_config(s, true);
    const auto seed = s.seed("run.seed");
    const int n_grid = static_cast<int>(s.integer("rotations.grid", 1));
    const int pooled_draws = static_cast<int>(s.integer("rotations.pooled_draws", 1));
    const auto surprises = load_surprises(ctx);
    const auto pair = hfdecomp::make_pair(surprises);
    const auto ds = load_data(ctx, false);
    const auto grid = hfdecomp::rotation_grid(pair, n_grid);
    const auto r = pbvar::rotation_band_irf(ds, surprises.dates, grid, cfg, seed, pooled_draws);
    auto f = open_output(out);
    write_irf(f, r.pooled, 0);
    f.close();
    ctx.outputs.push_back(out);
    const auto per = s.str("rotations.per_rotation_out");
    if (!per.empty()) {
        auto g = open_output(per);
        g << "w,shock,variable,horizon,pctl,value\n";
        for (std::size_t k = 0; k < r.per_rotation.size(); ++k) {
            const auto& res = r.per_rotation[k];
            for (std::size_t sh = 0; sh < res.shock_names.size(); ++sh)
                for (std::size_t v = 0; v < res.variable_names.size(); ++v)
                    for (int h = 0; h <= res.horizon; ++h)
                        for (std::size_t p = 0; p < res.percentiles.size(); ++p)
                            g << csv::format_number(r.weights[k]) << ',' << res.shock_names[sh] << ','
                              << res.variable_names[v] << ',' << h << ',' << csv::format_number(res.percentiles[p])
                              << ','
                              << csv::format_number(res.at(static_cast<int>(sh), static_cast<int>(v), h,
                                                           static_cast<int>(p)))
                              << '\n';
        }
        g.close();
        ctx.outputs.push_back(per);
    }
    ctx.summary["data"] = dataset_json(ds);
    ctx.summary["interval"] = interval_json(hfdecomp::admissible_angle_interval(pair));
    ctx.summary["grid_points"] = grid.size();
    ctx.summary["pooled_draws"] = r.pooled.draws_used;
}

void cmd_simulate(RunContext& ctx, const Config& cfg) {
    const auto& s = ctx.settings;
    const fs::path out = s.required("simulate.out");
    set_report_paths(ctx, out, true);
    const int horizon = static_cast<int>(s.integer("dgp.irf_horizon", 0));
    Config merged = cfg;
    merged.set("dgp.seed", std::to_string(s.seed("dgp.seed")));
    const auto spec = dgpsim::spec_from_config(merged);
    const auto sim = dgpsim::simulate(spec);
    fs::create_directories(out);

    {
        auto f = open_output(out / "surprises.csv");
        f << "date,contract_1,sp500\n";
        for (Eigen::Index t = 0; t < sim.pair.size(); ++t)
            f << sim.surprises.dates[static_cast<std::size_t>(t)].to_string() << ','
              << csv::format_number(sim.pair.i_total(t)) << ',' << csv::format_number(sim.pair.s(t)) << '\n';
    }
    {
        auto f = open_output(out / "true_shocks.csv");
        f << "date,i_mp,i_id\n";
        for (Eigen::Index t = 0; t < sim.true_shocks.values.rows(); ++t)
            f << sim.true_shocks.dates[static_cast<std::size_t>(t)].to_string() << ','
              << csv::format_number(sim.true_shocks.values(t, 0)) << ','
              << csv::format_number(sim.true_shocks.values(t, 1)) << '\n';
    }
    {
        auto f = open_output(out / "panel.csv");
        paneldata::write_panel(f, sim.panel);
    }
    {
        auto f = open_output(out / "true_irf.csv");
        f << "shock,variable,horizon,value\n";
        const auto irf = dgpsim::true_irf(spec, horizon);
        for (int sh = 0; sh < dgpsim::kShocks; ++sh)
            for (std::size_t v = 0; v < spec.variables.size(); ++v)
                for (int h = 0; h <= horizon; ++h)
                    f << sim.true_shocks.names[static_cast<std::size_t>(sh)] << ',' << spec.variables[v] << ',' << h
                      << ','
                      << csv::format_number(irf[static_cast<std::size_t>(h)](
                             static_cast<Eigen::Index>(dgpsim::kShocks + v), sh))
                      << '\n';
    }
    for (const char* name : {"surprises.csv", "true_shocks.csv", "panel.csv", "true_irf.csv"})
        ctx.outputs.push_back(out / name);
    ctx.summary["countries"] = spec.country_names();
    ctx.summary["variables"] = spec.variables;
    ctx.summary["months"] = spec.n_months;
    ctx.summary["announcements"] = sim.pair.size();
    ctx.summary["generating_angle"] = dgpsim::generating_angle(spec);
    ctx.summary["spectral_radius"] = stats::spectral_radius(spec.var_coeffs);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    const auto start = std::chrono::steady_clock::now();
    CLI::App app{"hfspill: FOMC surprise decomposition and international spillover estimation", "hfspill"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    const auto tables = command_tables();
    std::map<std::string, std::string> config_paths;
    std::map<std::string, std::map<std::string, std::string>> strings;
    std::map<std::string, std::map<std::string, bool>> flags;
    std::map<std::string, std::map<std::string, CLI::Option*>> options;
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, defs] : tables) {
        auto* sub = app.add_subcommand(name, command_help().at(name));
        subs[name] = sub;
        auto& strs = strings[name];
        auto& fls = flags[name];
        auto& opts = options[name];
        const std::string cfg_flag = name == "simulate" ? "--spec,--config" : "--config";
        sub->add_option(cfg_flag, config_paths[name], "TOML configuration file; flags override its keys")
            ->type_name("FILE");
        for (const auto& d : defs) {
            std::string def = d.def;
            if (d.key == "run.threads") def = default_threads();
            const std::string help = d.help + " [" + d.key + "] (default: " + (def.empty() ? "none" : def) + ")";
            if (d.is_flag) {
                opts[d.flag] = sub->add_flag(d.flag, fls[d.flag], help);
            } else {
                opts[d.flag] = sub->add_option(d.flag, strs[d.flag], help);
            }
        }
    }

    std::vector<std::string> argv{"hfspill"};
    argv.insert(argv.end(), args.begin(), args.end());
    std::vector<char*> cargv;
    for (auto& a : argv) cargv.push_back(a.data());
    try {
        app.parse(static_cast<int>(cargv.size()), cargv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    std::string name;
    for (const auto& [n, sub] : subs)
        if (sub->parsed()) name = n;

    try {
        RunContext ctx;
        ctx.command = name;
        ctx.argv = args;
        Config cfg;
        if (!config_paths[name].empty()) {
            ctx.config_file = config_paths[name];
            require_file(*ctx.config_file, "config file");
            cfg = Config::load(*ctx.config_file);
        }
        ctx.settings.resolve(tables.at(name), options[name], strings[name], flags[name], cfg);
        if (name == "decompose") cmd_decompose(ctx);
        else if (name == "estimate") cmd_estimate(ctx);
        else if (name == "irf") cmd_irf(ctx);
        else if (name == "localproj") cmd_localproj(ctx);
        else if (name == "meangroup") cmd_meangroup(ctx);
        else if (name == "rotations") cmd_rotations(ctx);
        else if (name == "simulate") cmd_simulate(ctx, cfg);
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_reports(ctx, seconds);
        out << name << ": wrote " << ctx.outputs.size() << " files\n";
        return 0;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace hfspill::cli
