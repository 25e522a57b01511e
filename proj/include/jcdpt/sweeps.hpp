// sweeps.hpp: detuning and phonon-coupling scans, unit conversion, parallel map

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "jcdpt/blocks.hpp"
#include "jcdpt/errors.hpp"
#include "jcdpt/hilbert.hpp"
#include "jcdpt/spectrum.hpp"

namespace jcdpt {

inline constexpr double hc_meV_nm = 1239841.984;

inline double wavelength_nm(double energy_meV) {
    if (!(energy_meV > 0.0)) {
        std::ostringstream msg;
        msg << "wavelength_nm: energy must be positive, got " << energy_meV << " meV";
        throw NonpositiveEnergy(msg.str());
    }
    return hc_meV_nm / energy_meV;
}

// Runs fn(i) for i in [0, count) on up to `threads` workers. Each index is
// processed exactly once; callers write results into pre-sized slots.
inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
    const auto workers = static_cast<std::size_t>(std::max(1, threads));
    if (workers == 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < std::min(workers, count); ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < count; i = next++) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

enum class BranchTag { lower, central, upper, other };

inline const char* to_string(BranchTag t) {
    switch (t) {
    case BranchTag::lower: return "lower";
    case BranchTag::central: return "central";
    case BranchTag::upper: return "upper";
    default: return "other";
    }
}

struct TaggedPeak {
    Peak peak;
    BranchTag tag{BranchTag::other};
};

// Half-splitting of the bare anticrossing, √(g² + Δ²/4).
inline double anticrossing_half_splitting(double g, double delta) {
    return std::sqrt(g * g + 0.25 * delta * delta);
}

// Assigns up to three peaks to the lower/upper polariton and the central
// (cavity-frequency) branch by minimal total distance to the bare predictions.
// Extra peaks, beyond the three most prominent, are tagged `other`.
inline std::vector<TaggedPeak> tag_branches(const PeakList& peaks, const SystemParams& p) {
    std::vector<TaggedPeak> out;
    for (const auto& pk : peaks) out.push_back({pk, BranchTag::other});
    if (out.empty()) return out;

    std::vector<std::size_t> chosen(out.size());
    for (std::size_t i = 0; i < chosen.size(); ++i) chosen[i] = i;
    std::stable_sort(chosen.begin(), chosen.end(),
                     [&](std::size_t a, std::size_t b) { return out[a].peak.prominence > out[b].peak.prominence; });
    if (chosen.size() > 3) chosen.resize(3);

    const double mean = 0.5 * (p.omega_c + p.omega_x);
    const double r = anticrossing_half_splitting(p.g, p.delta());
    const std::array<double, 3> pred{mean - r, p.omega_c, mean + r};
    const std::array<BranchTag, 3> tags{BranchTag::lower, BranchTag::central, BranchTag::upper};

    std::array<int, 3> slots{0, 1, 2};
    std::vector<int> best;
    double best_cost = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        for (std::size_t k = 0; k < chosen.size(); ++k) cost += std::abs(out[chosen[k]].peak.position - pred[slots[k]]);
        if (cost < best_cost - 1e-15) {
            best_cost = cost;
            best.assign(slots.begin(), slots.begin() + static_cast<long>(chosen.size()));
        }
    } while (std::next_permutation(slots.begin(), slots.end()));
    for (std::size_t k = 0; k < chosen.size(); ++k) out[chosen[k]].tag = tags[best[k]];
    return out;
}

struct DetuningRange {
    double delta_min{-0.5};  // meV
    double delta_max{0.5};
    int count{81};

    std::vector<double> values() const {
        std::vector<double> v;
        if (count == 1) return {delta_min};
        for (int i = 0; i < count; ++i) v.push_back(delta_min + (delta_max - delta_min) * double(i) / double(count - 1));
        return v;
    }
};

struct SweepOptions {
    GridSpec grid{};
    SpectrumOptions spectrum{};
    double prominence_floor{1e-3};
    int threads{1};
};

struct DetuningPoint {
    double delta_meV{0.0};
    double delta_lambda_nm{0.0};  // λ_x − λ_c
    Spectrum spectrum;
    std::vector<TaggedPeak> peaks;
    std::string error;  // non-empty when this point failed
};

// The emitter line is scanned at fixed cavity frequency.
inline std::vector<DetuningPoint> detuning_sweep(const SystemParams& p, const DetuningRange& range,
                                                 const SweepOptions& opt = {}) {
    p.validate();
    if (range.count < 1) throw ConfigError("detuning_sweep: count must be >= 1");
    if (!(p.pump > 0.0)) throw ConfigError("detuning_sweep: emission requires P_x > 0");
    const auto deltas = range.values();
    std::vector<DetuningPoint> pts(deltas.size());
    parallel_for(deltas.size(), opt.threads, [&](std::size_t i) {
        DetuningPoint& pt = pts[i];
        const SystemParams q = p.with_delta(deltas[i]);
        pt.delta_meV = deltas[i];
        try {
            pt.delta_lambda_nm = wavelength_nm(q.omega_x) - wavelength_nm(q.omega_c);
            pt.spectrum = emission_spectrum(q, opt.grid, opt.spectrum);
            pt.peaks = tag_branches(extract_peaks(pt.spectrum, opt.prominence_floor), q);
        } catch (const std::exception& e) {
            std::ostringstream msg;
            msg << "point " << i << " (delta = " << deltas[i] << " meV): " << e.what();
            pt.error = msg.str();
        }
    });
    return pts;
}

struct GammaSweepOptions {
    double gamma_min{0.0};      // meV
    double gamma_max_over_g{5.0};
    int points{1001};
    int n_rungs{50};
    int ep_rungs{5};
    double ep_scan_max_over_g{6.0};
    double tilde_gamma_over_g{1.57};
    SweepOptions spectra{};
};

struct Showcase {
    std::string tag;
    double gamma_theta{0.0};
    Spectrum spectrum;
    PeakList peaks;
};

struct GammaSweepResult {
    DptDiagnostics diag;
    std::vector<EpResult> ep_table;
    std::vector<Showcase> showcase;  // γθ^(3), γθ^(2), γ̃θ, γθ^(1)
};

inline std::vector<double> gamma_grid(const SystemParams& p, const GammaSweepOptions& opt) {
    if (opt.points < 2) throw ConfigError("gamma_sweep: need at least 2 grid points");
    const double hi = opt.gamma_max_over_g * p.g;
    if (!(hi > opt.gamma_min) || opt.gamma_min < 0.0) throw ConfigError("gamma_sweep: invalid gamma range");
    std::vector<double> v(static_cast<std::size_t>(opt.points));
    for (int i = 0; i < opt.points; ++i) v[i] = opt.gamma_min + (hi - opt.gamma_min) * double(i) / double(opt.points - 1);
    return v;
}

inline GammaSweepResult gamma_sweep(const SystemParams& p, const GammaSweepOptions& opt = {}) {
    p.validate();
    if (opt.ep_rungs < 3) throw ConfigError("gamma_sweep: ep_rungs must be >= 3 to define the showcase points");
    const SystemParams res_p = p.with_delta(0.0);
    GammaSweepResult res;
    res.diag = dpt_diagnostics(res_p, gamma_grid(res_p, opt), opt.n_rungs);

    res.ep_table.resize(static_cast<std::size_t>(opt.ep_rungs));
    parallel_for(res.ep_table.size(), opt.spectra.threads, [&](std::size_t i) {
        res.ep_table[i] = ep_locate_numeric(int(i) + 1, res_p, 0.0, opt.ep_scan_max_over_g * p.g);
    });

    res.showcase = {
        {"gt3", res.ep_table[2].gamma_theta_critical_numeric, {}, {}},
        {"gt2", res.ep_table[1].gamma_theta_critical_numeric, {}, {}},
        {"gt_tilde", opt.tilde_gamma_over_g * p.g, {}, {}},
        {"gt1", res.ep_table[0].gamma_theta_critical_numeric, {}, {}},
    };
    parallel_for(res.showcase.size(), opt.spectra.threads, [&](std::size_t i) {
        auto& s = res.showcase[i];
        s.spectrum = emission_spectrum(res_p.with_gamma_theta(s.gamma_theta), opt.spectra.grid, opt.spectra.spectrum);
        s.peaks = extract_peaks(s.spectrum, opt.spectra.prominence_floor);
    });
    return res;
}

} // namespace jcdpt
