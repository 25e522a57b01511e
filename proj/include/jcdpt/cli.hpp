// cli.hpp: command-line front end (config ingestion, orchestration, CSV/SVG/manifest output)
//
// Needs CLI11.hpp and json.hpp on the include path. Only the executable and
// the CLI tests include this header.

#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "jcdpt/blocks.hpp"
#include "jcdpt/errors.hpp"
#include "jcdpt/hilbert.hpp"
#include "jcdpt/spectrum.hpp"
#include "jcdpt/steadystate.hpp"
#include "jcdpt/sweeps.hpp"

namespace jcdpt::cli {

inline constexpr const char* tool_name = "jcdpt";
inline constexpr const char* tool_version = "1.0.0";
inline constexpr int schema_version = 1;

enum exit_code : int { ok = 0, config_error = 2, numerical_failure = 3 };

using json = nlohmann::json;

// %.12g, the float format of every CSV cell.
inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

class Csv {
public:
    explicit Csv(std::initializer_list<std::string> header) { row_strings(std::vector<std::string>(header)); }

    template <class... Ts>
    void row(const Ts&... cells) {
        std::vector<std::string> s;
        (s.push_back(cell(cells)), ...);
        row_strings(s);
    }

    std::string str() const { return os_.str(); }

private:
    static std::string cell(double v) { return fmt(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(std::size_t v) { return std::to_string(v); }
    static std::string cell(const std::string& v) { return v; }
    static std::string cell(const char* v) { return v; }

    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
        os_ << '\n';
    }

    std::ostringstream os_;
};

// ---------------------------------------------------------------- config

struct RunConfig {
    SystemParams params{};
    std::optional<int> nmax;  // adaptive when empty
    TruncationPolicy truncation{};
    GridSpec grid{};
    double prominence_floor{1e-3};
    DetuningRange detuning{};
    GammaSweepOptions gamma{};
    std::vector<int> ep_rungs{1, 2, 3, 4, 5};
    double ep_scan_max_over_g{6.0};
    BlockModel ep_model{BlockModel::derived};
    int threads{1};
};

namespace detail {

inline void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed) known = known || it.key() == k;
        if (!known) throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
}

template <class T>
void read(const json& obj, const char* key, T& dst, const std::string& where) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if constexpr (std::is_same_v<T, int>) {
        if (!v.is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
    } else if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
    }
    dst = v.get<T>();
}

inline std::optional<int> parse_nmax(const std::string& s) {
    if (s == "auto") return std::nullopt;
    std::size_t pos = 0;
    int v = 0;
    try {
        v = std::stoi(s, &pos);
    } catch (const std::exception&) {
        throw ConfigError("nmax: expected a positive integer or 'auto', got '" + s + "'");
    }
    if (pos != s.size() || v < 1) throw ConfigError("nmax: expected a positive integer or 'auto', got '" + s + "'");
    return v;
}

} // namespace detail

// Accepts a plain config or a run manifest (whose "config" member is used).
inline RunConfig parse_config(const json& root_in) {
    using detail::read;
    const json* rootp = &root_in;
    if (root_in.is_object() && root_in.contains("manifest")) {
        detail::reject_unknown(root_in, {"manifest", "tool", "version", "command", "config", "wall_time_s",
                                         "truncation", "warnings", "outputs"},
                               "manifest");
        rootp = &root_in.at("config");
    }
    const json& root = *rootp;
    detail::reject_unknown(root, {"schema_version", "params", "nmax", "truncation", "spectrum", "sweep_detuning",
                                  "sweep_gamma", "ep", "threads"},
                           "config");
    RunConfig c;

    int sv = schema_version;
    read(root, "schema_version", sv, "config");
    if (sv != schema_version) throw ConfigError("config: unsupported schema_version " + std::to_string(sv));

    if (root.contains("params")) {
        const json& p = root.at("params");
        detail::reject_unknown(p, {"omega_c", "omega_x", "delta", "g", "kappa", "gamma_x", "P_x", "gamma_theta"},
                               "params");
        if (p.contains("omega_x") && p.contains("delta")) {
            throw ConfigError("params: give either omega_x or delta, not both");
        }
        read(p, "omega_c", c.params.omega_c, "params");
        c.params.omega_x = c.params.omega_c;
        read(p, "omega_x", c.params.omega_x, "params");
        if (p.contains("delta")) {
            double d = 0.0;
            read(p, "delta", d, "params");
            c.params = c.params.with_delta(d);
        }
        read(p, "g", c.params.g, "params");
        read(p, "kappa", c.params.kappa, "params");
        read(p, "gamma_x", c.params.gamma_x, "params");
        read(p, "P_x", c.params.pump, "params");
        read(p, "gamma_theta", c.params.gamma_theta, "params");
    }
    c.params.validate();
    if (!(c.params.omega_c > 0.0) || !(c.params.omega_x > 0.0)) {
        throw ConfigError("params: omega_c and omega_x must be positive");
    }

    if (root.contains("nmax")) {
        const json& v = root.at("nmax");
        if (v.is_string()) c.nmax = detail::parse_nmax(v.get<std::string>());
        else if (v.is_number_integer()) c.nmax = detail::parse_nmax(std::to_string(v.get<long long>()));
        else throw ConfigError("config.nmax: expected a positive integer or \"auto\"");
    }

    if (root.contains("truncation")) {
        const json& t = root.at("truncation");
        detail::reject_unknown(t, {"start", "max", "tolerance"}, "truncation");
        read(t, "start", c.truncation.start, "truncation");
        read(t, "max", c.truncation.max, "truncation");
        read(t, "tolerance", c.truncation.tolerance, "truncation");
    }
    if (c.truncation.start < 1 || c.truncation.max < c.truncation.start || !(c.truncation.tolerance > 0.0)) {
        throw ConfigError("truncation: need 1 <= start <= max and tolerance > 0");
    }

    if (root.contains("spectrum")) {
        const json& s = root.at("spectrum");
        detail::reject_unknown(s, {"half_width", "points", "prominence_floor"}, "spectrum");
        read(s, "half_width", c.grid.half_width, "spectrum");
        read(s, "points", c.grid.points, "spectrum");
        read(s, "prominence_floor", c.prominence_floor, "spectrum");
    }
    if (c.grid.points < 3) throw ConfigError("spectrum.points must be >= 3");
    if (!(c.grid.half_width >= 4.0 * c.params.g)) throw ConfigError("spectrum.half_width must be >= 4g");
    if (!(c.prominence_floor >= 0.0 && c.prominence_floor < 1.0)) {
        throw ConfigError("spectrum.prominence_floor must lie in [0, 1)");
    }

    if (root.contains("sweep_detuning")) {
        const json& s = root.at("sweep_detuning");
        detail::reject_unknown(s, {"delta_min", "delta_max", "count"}, "sweep_detuning");
        read(s, "delta_min", c.detuning.delta_min, "sweep_detuning");
        read(s, "delta_max", c.detuning.delta_max, "sweep_detuning");
        read(s, "count", c.detuning.count, "sweep_detuning");
    }
    if (c.detuning.count < 1 || !(c.detuning.delta_max >= c.detuning.delta_min)) {
        throw ConfigError("sweep_detuning: need count >= 1 and delta_max >= delta_min");
    }
    if (c.params.omega_c + c.detuning.delta_min <= 0.0) {
        throw ConfigError("sweep_detuning: delta_min drives omega_x to a non-positive energy");
    }

    if (root.contains("sweep_gamma")) {
        const json& s = root.at("sweep_gamma");
        detail::reject_unknown(s, {"gamma_min", "gamma_max_over_g", "points", "n_rungs", "ep_rungs",
                                   "ep_scan_max_over_g", "tilde_gamma_over_g"},
                               "sweep_gamma");
        read(s, "gamma_min", c.gamma.gamma_min, "sweep_gamma");
        read(s, "gamma_max_over_g", c.gamma.gamma_max_over_g, "sweep_gamma");
        read(s, "points", c.gamma.points, "sweep_gamma");
        read(s, "n_rungs", c.gamma.n_rungs, "sweep_gamma");
        read(s, "ep_rungs", c.gamma.ep_rungs, "sweep_gamma");
        read(s, "ep_scan_max_over_g", c.gamma.ep_scan_max_over_g, "sweep_gamma");
        read(s, "tilde_gamma_over_g", c.gamma.tilde_gamma_over_g, "sweep_gamma");
    }
    if (c.gamma.gamma_min != 0.0 || c.gamma.gamma_max_over_g < 4.5) {
        throw ConfigError("sweep_gamma: the range must cover [0, >= 4.5 g]");
    }
    if (c.gamma.points < 2 || c.gamma.n_rungs < 3 || c.gamma.ep_rungs < 3 || c.gamma.ep_rungs > c.gamma.n_rungs) {
        throw ConfigError("sweep_gamma: need points >= 2 and 3 <= ep_rungs <= n_rungs");
    }
    if (!(c.gamma.ep_scan_max_over_g > 0.0) || !(c.gamma.tilde_gamma_over_g >= 0.0)) {
        throw ConfigError("sweep_gamma: ep_scan_max_over_g must be > 0 and tilde_gamma_over_g >= 0");
    }

    if (root.contains("ep")) {
        const json& e = root.at("ep");
        detail::reject_unknown(e, {"rungs", "scan_max_over_g", "model"}, "ep");
        if (e.contains("rungs")) {
            if (!e.at("rungs").is_array()) throw ConfigError("ep.rungs: expected an array of integers");
            c.ep_rungs.clear();
            for (const auto& v : e.at("rungs")) {
                if (!v.is_number_integer() || v.get<long long>() < 1) {
                    throw ConfigError("ep.rungs: entries must be integers >= 1");
                }
                c.ep_rungs.push_back(v.get<int>());
            }
        }
        read(e, "scan_max_over_g", c.ep_scan_max_over_g, "ep");
        std::string model = to_string(c.ep_model);
        read(e, "model", model, "ep");
        if (model == "derived") c.ep_model = BlockModel::derived;
        else if (model == "printed") c.ep_model = BlockModel::printed;
        else throw ConfigError("ep.model: expected \"derived\" or \"printed\"");
    }
    if (!(c.ep_scan_max_over_g > 0.0)) throw ConfigError("ep.scan_max_over_g must be > 0");

    read(root, "threads", c.threads, "config");
    if (c.threads < 1) throw ConfigError("config.threads must be >= 1");
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json root;
    try {
        root = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return parse_config(root);
}

// Fully resolved config; parse_config(to_json(c)) reproduces c.
inline json to_json(const RunConfig& c) {
    json j;
    j["schema_version"] = schema_version;
    j["params"] = {{"omega_c", c.params.omega_c}, {"omega_x", c.params.omega_x}, {"g", c.params.g},
                   {"kappa", c.params.kappa},     {"gamma_x", c.params.gamma_x}, {"P_x", c.params.pump},
                   {"gamma_theta", c.params.gamma_theta}};
    j["nmax"] = c.nmax ? json(*c.nmax) : json("auto");
    j["truncation"] = {{"start", c.truncation.start}, {"max", c.truncation.max},
                       {"tolerance", c.truncation.tolerance}};
    j["spectrum"] = {{"half_width", c.grid.half_width}, {"points", c.grid.points},
                     {"prominence_floor", c.prominence_floor}};
    j["sweep_detuning"] = {{"delta_min", c.detuning.delta_min}, {"delta_max", c.detuning.delta_max},
                           {"count", c.detuning.count}};
    j["sweep_gamma"] = {{"gamma_min", c.gamma.gamma_min},
                        {"gamma_max_over_g", c.gamma.gamma_max_over_g},
                        {"points", c.gamma.points},
                        {"n_rungs", c.gamma.n_rungs},
                        {"ep_rungs", c.gamma.ep_rungs},
                        {"ep_scan_max_over_g", c.gamma.ep_scan_max_over_g},
                        {"tilde_gamma_over_g", c.gamma.tilde_gamma_over_g}};
    j["ep"] = {{"rungs", c.ep_rungs}, {"scan_max_over_g", c.ep_scan_max_over_g}, {"model", to_string(c.ep_model)}};
    j["threads"] = c.threads;
    return j;
}

// ---------------------------------------------------------------- svg

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    bool points{false};  // markers instead of a polyline
};

inline std::string svg_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                            const std::vector<Series>& series) {
    static constexpr const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    const double W = 640, H = 420, ml = 70, mr = 20, mt = 36, mb = 50;
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    if (!(x1 > x0)) { x0 -= 1; x1 += 1; }
    if (!(y1 > y0)) { y0 -= 1; y1 += 1; }
    auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (W - ml - mr); };
    auto py = [&](double y) { return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb); };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n"
      << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr << "\" height=\"" << H - mt - mb
      << "\" fill=\"none\" stroke=\"black\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel
      << "</text>\n"
      << "<text x=\"16\" y=\"" << H / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
      << H / 2 << ")\">" << ylabel << "</text>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
        o << "<text x=\"" << px(xv) << "\" y=\"" << H - mb + 16 << "\" text-anchor=\"middle\" font-size=\"10\">"
          << fmt(xv) << "</text>\n"
          << "<text x=\"" << ml - 4 << "\" y=\"" << py(yv) + 3 << "\" text-anchor=\"end\" font-size=\"10\">"
          << fmt(yv) << "</text>\n";
    }
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* col = colors[k % 6];
        if (s.points) {
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                o << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"2\" fill=\"" << col
                  << "\"/>\n";
            }
        } else {
            o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.2\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                o << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
            }
            o << "\"/>\n";
        }
        o << "<text x=\"" << W - mr - 6 << "\" y=\"" << mt + 14 + 14 * double(k)
          << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << col << "\">" << s.name << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

// ---------------------------------------------------------------- commands

// Everything a command produces. Nothing touches the disk until the whole
// computation has succeeded.
struct RunOutput {
    std::vector<std::pair<std::string, std::string>> files;  // name, contents
    std::string stdout_text;
    json truncation = json::object();
    std::vector<std::string> warnings;
};

inline SpectrumOptions spectrum_options(const RunConfig& c) {
    SpectrumOptions o;
    o.n_max = c.nmax;
    o.policy = c.truncation;
    return o;
}

inline Csv spectrum_csv(const Spectrum& s) {
    Csv csv({"omega_meV", "intensity"});
    for (std::size_t i = 0; i < s.omega.size(); ++i) csv.row(s.omega[i], s.values[i]);
    return csv;
}

inline RunOutput cmd_spectrum(const RunConfig& c, bool plots) {
    RunOutput out;
    const Spectrum s = emission_spectrum(c.params, c.grid, spectrum_options(c));
    const PeakList peaks = extract_peaks(s, c.prominence_floor);
    out.files.emplace_back("spectrum.csv", spectrum_csv(s).str());
    Csv pk({"position_meV", "height", "fwhm_meV", "prominence"});
    for (const auto& p : peaks) pk.row(p.position, p.height, p.fwhm, p.prominence);
    out.files.emplace_back("peaks.csv", pk.str());
    out.truncation = {{"n_max", s.trunc.n_max}, {"photon_number", s.photon_number},
                      {"sum_rule_ratio", s.sum_rule_ratio()},
                      {"method", s.method == SpectrumMethod::modal ? "modal" : "resolvent"}};
    if (plots) {
        std::vector<double> x;
        for (double w : s.omega) x.push_back(w - c.params.omega_c);
        out.files.emplace_back("spectrum.svg", svg_plot("Emission spectrum", "omega - omega_c (meV)", "S(omega)",
                                                        {{"S", x, s.values, false}}));
    }
    std::ostringstream so;
    so << "n_max " << s.trunc.n_max << ", <a+a> " << fmt(s.photon_number) << ", " << peaks.size() << " peaks\n";
    out.stdout_text = so.str();
    return out;
}

inline RunOutput cmd_sweep_detuning(const RunConfig& c, bool plots) {
    RunOutput out;
    SweepOptions so;
    so.grid = c.grid;
    so.spectrum = spectrum_options(c);
    so.prominence_floor = c.prominence_floor;
    so.threads = c.threads;
    const auto pts = detuning_sweep(c.params, c.detuning, so);

    Csv csv({"delta_meV", "delta_lambda_nm", "peak_position_meV", "height", "fwhm_meV", "branch_tag"});
    json nmax = json::array();
    std::size_t failed = 0;
    std::map<BranchTag, Series> scatter;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto& pt = pts[i];
        if (!pt.error.empty()) {
            ++failed;
            out.warnings.push_back(pt.error);
            nmax.push_back(nullptr);
            continue;
        }
        nmax.push_back(pt.spectrum.trunc.n_max);
        for (const auto& tp : pt.peaks) {
            csv.row(pt.delta_meV, pt.delta_lambda_nm, tp.peak.position, tp.peak.height, tp.peak.fwhm,
                    std::string(to_string(tp.tag)));
            auto& s = scatter[tp.tag];
            s.name = to_string(tp.tag);
            s.points = true;
            s.x.push_back(pt.delta_lambda_nm);
            s.y.push_back(tp.peak.position - c.params.omega_c);
        }
    }
    if (failed == pts.size()) throw NumericalError("sweep-detuning", "every sweep point failed");
    out.files.emplace_back("detuning_peaks.csv", csv.str());
    out.truncation = {{"n_max_per_point", nmax}};
    if (plots) {
        std::vector<Series> series;
        for (auto& [tag, s] : scatter) series.push_back(s);
        out.files.emplace_back("detuning_peaks.svg",
                               svg_plot("Peak positions across the anticrossing", "lambda_x - lambda_c (nm)",
                                        "peak - omega_c (meV)", series));
    }
    std::ostringstream o;
    o << pts.size() << " detuning points, " << failed << " failed\n";
    out.stdout_text = o.str();
    return out;
}

inline RunOutput cmd_sweep_gamma(const RunConfig& c, bool plots) {
    RunOutput out;
    GammaSweepOptions go = c.gamma;
    go.spectra.grid = c.grid;
    go.spectra.spectrum = spectrum_options(c);
    go.spectra.prominence_floor = c.prominence_floor;
    go.spectra.threads = c.threads;
    const GammaSweepResult r = gamma_sweep(c.params, go);
    const auto& d = r.diag;
    const double g = c.params.g;
    const std::size_t m = d.gamma_grid.size();
    const auto nr = static_cast<std::size_t>(d.n_rungs);

    Csv freq({"gamma_theta_over_g", "n", "omega_mm_over_g", "omega_mp_over_g"});
    Csv energy({"gamma_theta_over_g", "n", "linewidth_mm_meV", "E_n"});
    Csv coeff({"gamma_theta_over_g", "n", "C00_sq", "C11_sq"});
    Csv ratio({"gamma_theta_over_g", "n", "ratio"});
    for (std::size_t k = 0; k < nr; ++k) {
        const int n = int(k) + 1;
        for (std::size_t j = 0; j < m; ++j) {
            const double x = d.gamma_grid[j] / g;
            freq.row(x, n, d.omega_mm[k][j] / g, d.omega_mp[k][j] / g);
            energy.row(x, n, d.linewidth_mm[k][j], d.E_n[k][j]);
            coeff.row(x, n, d.C00_sq[k][j], d.C11_sq[k][j]);
            if (n >= 3) ratio.row(x, n, d.linewidth_ratio[k][j]);
        }
    }
    Csv gsum({"gamma_theta_over_g", "G", "dG_dgamma_theta"});
    for (std::size_t j = 0; j < m; ++j) gsum.row(d.gamma_grid[j] / g, d.G_values[j], d.dG_values[j]);

    Csv ep({"n", "numeric_over_g", "formula_over_g", "relative_deviation", "coalescence_gap_meV"});
    for (const auto& e : r.ep_table) {
        const double num = e.gamma_theta_critical_numeric, form = e.gamma_theta_critical_formula;
        ep.row(e.n, num / g, form / g, (form - num) / num, e.coalescence_gap);
    }
    Csv sp({"tag", "gamma_theta_over_g", "omega_meV", "intensity"});
    Csv spk({"tag", "gamma_theta_over_g", "position_meV", "height", "fwhm_meV", "prominence"});
    json nmax = json::object();
    for (const auto& s : r.showcase) {
        for (std::size_t i = 0; i < s.spectrum.omega.size(); ++i) {
            sp.row(s.tag, s.gamma_theta / g, s.spectrum.omega[i], s.spectrum.values[i]);
        }
        for (const auto& p : s.peaks) spk.row(s.tag, s.gamma_theta / g, p.position, p.height, p.fwhm, p.prominence);
        nmax[s.tag] = s.spectrum.trunc.n_max;
    }

    out.files.emplace_back("gamma_frequencies.csv", freq.str());
    out.files.emplace_back("gamma_energy.csv", energy.str());
    out.files.emplace_back("gamma_G.csv", gsum.str());
    out.files.emplace_back("gamma_coefficients.csv", coeff.str());
    out.files.emplace_back("ep_table.csv", ep.str());
    out.files.emplace_back("linewidth_ratio.csv", ratio.str());
    out.files.emplace_back("showcase_spectra.csv", sp.str());
    out.files.emplace_back("showcase_peaks.csv", spk.str());
    out.truncation = {{"showcase_n_max", nmax}};
    out.warnings = d.warnings;

    if (plots) {
        std::vector<double> x(m);
        for (std::size_t j = 0; j < m; ++j) x[j] = d.gamma_grid[j] / g;
        std::vector<Series> fs, es, cs;
        for (std::size_t k = 0; k < std::min<std::size_t>(nr, 5); ++k) {
            std::vector<double> ym(m), yp(m), e(m);
            for (std::size_t j = 0; j < m; ++j) {
                ym[j] = d.omega_mm[k][j] / g;
                yp[j] = d.omega_mp[k][j] / g;
            }
            fs.push_back({"n=" + std::to_string(k + 1) + " (-,-)", x, ym, false});
            fs.push_back({"n=" + std::to_string(k + 1) + " (-,+)", x, yp, false});
        }
        es.push_back({"G", x, d.G_values, false});
        cs.push_back({"|C00|^2 n=1", x, d.C00_sq[0], false});
        cs.push_back({"|C11|^2 n=2", x, d.C11_sq[1], false});
        std::vector<Series> ss;
        for (const auto& s : r.showcase) {
            std::vector<double> w;
            for (double v : s.spectrum.omega) w.push_back((v - c.params.omega_c) / g);
            ss.push_back({s.tag, w, s.spectrum.values, false});
        }
        out.files.emplace_back("gamma_frequencies.svg",
                               svg_plot("Block frequencies", "gamma_theta / g", "omega / g", fs));
        out.files.emplace_back("gamma_G.svg", svg_plot("Width redistribution", "gamma_theta / g", "G", es));
        out.files.emplace_back("gamma_coefficients.svg",
                               svg_plot("Eigenvector weights", "gamma_theta / g", "|C|^2", cs));
        out.files.emplace_back("showcase_spectra.svg",
                               svg_plot("Showcase spectra", "(omega - omega_c) / g", "S(omega)", ss));
    }
    std::ostringstream o;
    o << "n  EP/g (numeric)  EP/g (formula)\n";
    for (const auto& e : r.ep_table) {
        o << e.n << "  " << fmt(e.gamma_theta_critical_numeric / g) << "  " << fmt(e.gamma_theta_critical_formula / g)
          << '\n';
    }
    out.stdout_text = o.str();
    return out;
}

inline RunOutput cmd_ep(const RunConfig& c) {
    if (c.ep_rungs.empty()) throw ConfigError("ep: the rung list is empty");
    RunOutput out;
    const double g = c.params.g;
    Csv csv({"n", "numeric_over_g", "formula_over_g", "relative_deviation", "status"});
    std::ostringstream o;
    char line[160];
    std::snprintf(line, sizeof line, "%4s %16s %16s %12s  %s\n", "n", "numeric/g", "formula/g", "deviation", "status");
    o << line;
    for (int n : c.ep_rungs) {
        double num = std::numeric_limits<double>::quiet_NaN();
        double form = num;
        std::string status = "ok";
        try {
            form = ep_formula(n, c.params) / g;
        } catch (const NegativeRadicand& e) {
            out.warnings.push_back(e.what());
        }
        try {
            num = ep_locate_numeric(n, c.params, 0.0, c.ep_scan_max_over_g * g, c.ep_model)
                      .gamma_theta_critical_numeric / g;
        } catch (const NoCoalescenceInRange& e) {
            status = "no-coalescence";
            out.warnings.push_back(e.what());
        }
        const double dev = (form - num) / num;
        if (status == "ok" && std::abs(dev) > 0.05) status = "formula-deviates";
        csv.row(n, num, form, dev, status);
        std::snprintf(line, sizeof line, "%4d %16s %16s %12s  %s\n", n, fmt(num).c_str(), fmt(form).c_str(),
                      fmt(dev).c_str(), status.c_str());
        o << line;
    }
    out.files.emplace_back("ep_table.csv", csv.str());
    out.stdout_text = o.str();
    return out;
}

inline RunOutput cmd_steady_state(const RunConfig& c) {
    RunOutput out;
    FockTruncation t;
    double top = 0.0;
    if (c.nmax) {
        t = FockTruncation(*c.nmax);
    } else {
        t = choose_truncation(c.params, c.truncation).trunc;
    }
    const SteadyStateResult ss = solve_steady_state(full_liouvillian(c.params, t));
    const auto pops = photon_distribution(ss.rho, t);
    top = pops.back();

    Csv sum({"quantity", "value"});
    sum.row("n_max", t.n_max);
    sum.row("photon_number", ss.photon_number);
    sum.row("exciton_population", ss.exciton_population);
    sum.row("trace", ss.trace);
    sum.row("residual", ss.residual);
    sum.row("min_eigenvalue", ss.min_eigenvalue);
    sum.row("top_level_population", top);
    Csv dist({"n", "population"});
    for (std::size_t n = 0; n < pops.size(); ++n) dist.row(n, pops[n]);
    Csv rho({"row", "col", "re", "im"});
    for (Eigen::Index i = 0; i < ss.rho.rows(); ++i)
        for (Eigen::Index j = 0; j < ss.rho.cols(); ++j)
            rho.row(int(i), int(j), ss.rho(i, j).real(), ss.rho(i, j).imag());
    out.files.emplace_back("steady_state.csv", sum.str());
    out.files.emplace_back("photon_distribution.csv", dist.str());
    out.files.emplace_back("density_matrix.csv", rho.str());
    out.truncation = {{"n_max", t.n_max}, {"top_level_population", top}};
    if (top > c.truncation.tolerance) {
        out.warnings.push_back("top photon level population " + fmt(top) + " exceeds the truncation tolerance");
    }
    std::ostringstream o;
    o << "n_max " << t.n_max << "\n<a+a> " << fmt(ss.photon_number) << "\n<s+s> " << fmt(ss.exciton_population)
      << "\nresidual " << fmt(ss.residual) << '\n';
    out.stdout_text = o.str();
    return out;
}

inline void write_file(const std::filesystem::path& p, const std::string& contents) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << contents;
}

// ---------------------------------------------------------------- entry point

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Emission spectra and exceptional points of a phonon-assisted cavity-emitter system", tool_name};
    app.set_version_flag("--version", tool_version);
    app.require_subcommand(1, 1);
    app.fallthrough();

    std::string config_path, out_dir = "out", nmax_flag;
    bool plots = false;
    int threads = 0;
    app.add_option("--config", config_path, "JSON config or run manifest")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory");
    app.add_flag("--plots", plots, "also write SVG plots");
    app.add_option("--threads", threads, "worker threads for sweeps")->check(CLI::PositiveNumber);
    app.add_option("--nmax", nmax_flag, "Fock truncation (integer or 'auto')");

    const std::vector<std::pair<const char*, const char*>> commands{
        {"spectrum", "emission spectrum and its peaks"},
        {"sweep-detuning", "peak positions across the emitter-cavity anticrossing"},
        {"sweep-gamma", "block diagnostics and showcase spectra versus phonon coupling"},
        {"ep", "exceptional points per rung"},
        {"steady-state", "stationary density matrix"}};
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForVersion& e) {
        out << tool_version << '\n';
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error [usage]: " << e.what() << '\n';
        return config_error;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    const auto t0 = std::chrono::steady_clock::now();
    RunConfig cfg;
    RunOutput result;
    try {
        cfg = config_path.empty() ? parse_config(json::object()) : load_config(config_path);
        if (!nmax_flag.empty()) cfg.nmax = detail::parse_nmax(nmax_flag);
        if (threads > 0) cfg.threads = threads;

        if (command == "spectrum") result = cmd_spectrum(cfg, plots);
        else if (command == "sweep-detuning") result = cmd_sweep_detuning(cfg, plots);
        else if (command == "sweep-gamma") result = cmd_sweep_gamma(cfg, plots);
        else if (command == "ep") result = cmd_ep(cfg);
        else result = cmd_steady_state(cfg);
    } catch (const ConfigError& e) {
        err << "error [config]: " << e.what() << '\n';
        return config_error;
    } catch (const NumericalError& e) {
        err << "error [" << e.stage() << "]: " << e.what() << '\n';
        return numerical_failure;
    } catch (const std::exception& e) {
        err << "error [" << command << "]: " << e.what() << '\n';
        return numerical_failure;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json manifest;
    manifest["manifest"] = 1;
    manifest["tool"] = tool_name;
    manifest["version"] = tool_version;
    manifest["command"] = command;
    manifest["config"] = to_json(cfg);
    manifest["wall_time_s"] = wall;
    manifest["truncation"] = result.truncation;
    manifest["warnings"] = result.warnings;
    json names = json::array();
    for (const auto& [name, body] : result.files) names.push_back(name);
    manifest["outputs"] = names;

    try {
        const std::filesystem::path dir(out_dir);
        std::filesystem::create_directories(dir);
        for (const auto& [name, body] : result.files) write_file(dir / name, body);
        write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    } catch (const std::exception& e) {
        err << "error [output]: " << e.what() << '\n';
        return config_error;
    }
    for (const auto& w : result.warnings) err << "warning: " << w << '\n';
    out << result.stdout_text;
    return ok;
}

} // namespace jcdpt::cli
