// spectrum.hpp: emission spectrum from the quantum regression formula, and peak extraction
//
// ⟨a†(τ)a(0)⟩ = Tr[a† e^{ℒτ}(aρ_ss)] is expanded over the eigenmodes of ℒ
// restricted to the coherence sector that aρ_ss lives in (ket excitation one
// below bra excitation). With ⟨a†(τ)a(0)⟩ = Σ_k w_k e^{λ_k τ},
//     S(ω) = 2 Re Σ_k w_k / (i(ω − ω_frame) − λ_k),
// normalized so that ∫ S dω / 2π = ⟨a†a⟩_ss.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "jcdpt/errors.hpp"
#include "jcdpt/hilbert.hpp"
#include "jcdpt/liouvillian.hpp"
#include "jcdpt/steadystate.hpp"

namespace jcdpt {

struct CorrelationModes {
    Eigen::VectorXcd rates;    // λ_k, in the rotating frame
    Eigen::VectorXcd weights;  // w_k
    double frame{0.0};
    double reconstruction_error{0.0};  // ‖V c − x₀‖ / ‖x₀‖ of the modal expansion

    cplx correlation(double tau) const {
        cplx acc{0.0, 0.0};
        for (Eigen::Index k = 0; k < rates.size(); ++k) acc += weights(k) * std::exp(rates(k) * tau);
        return acc;
    }

    cplx equal_time() const { return weights.sum(); }

    double spectrum_at(double omega) const {
        const cplx z = I * (omega - frame);
        cplx acc{0.0, 0.0};
        for (Eigen::Index k = 0; k < rates.size(); ++k) acc += weights(k) / (z - rates(k));
        return 2.0 * acc.real();
    }
};

namespace detail {

// Row vector r with r · vec(X) = Tr[op X], restricted to the given indices.
inline Eigen::RowVectorXcd trace_functional(const Operator& op, const std::vector<Eigen::Index>& idx,
                                            Eigen::Index dim) {
    Eigen::RowVectorXcd r(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const Eigen::Index i = idx[k] % dim;
        const Eigen::Index j = idx[k] / dim;
        r(static_cast<Eigen::Index>(k)) = op(j, i);
    }
    return r;
}

inline Eigen::VectorXcd gather(const Eigen::VectorXcd& v, const std::vector<Eigen::Index>& idx) {
    Eigen::VectorXcd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Eigen::Index>(k)) = v(idx[k]);
    return out;
}

} // namespace detail

inline CorrelationModes correlation_transfer(const Liouvillian& l, const DensityMatrix& rho_ss) {
    if (l.flavor != Flavor::full) {
        throw ConfigError("correlation_transfer: needs the full Liouvillian");
    }
    const Eigen::Index d = l.dim();
    const Operator a = annihilation(l.trunc);
    const auto idx = coherence_sector(l.trunc, -1);

    const Eigen::MatrixXcd sub = restrict_to(l.matrix, idx);
    const Eigen::VectorXcd x0 = detail::gather(vectorize(a * rho_ss), idx);
    const Eigen::RowVectorXcd obs = detail::trace_functional(a.adjoint(), idx, d);

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(sub, true);
    if (es.info() != Eigen::Success) {
        throw NumericalError("correlation", "eigendecomposition of the Liouvillian sector failed");
    }
    const Eigen::MatrixXcd& v = es.eigenvectors();
    const Eigen::VectorXcd c = v.partialPivLu().solve(x0);

    CorrelationModes m;
    m.frame = l.frame;
    m.rates = es.eigenvalues();
    m.weights = (obs * v).transpose().cwiseProduct(c);
    const double x0n = x0.norm();
    m.reconstruction_error = x0n > 0.0 ? (v * c - x0).norm() / x0n : 0.0;

    // Round-off weights on (near-)stationary modes would otherwise dominate w/λ.
    const double total = m.weights.cwiseAbs().sum();
    for (Eigen::Index k = 0; k < m.rates.size(); ++k) {
        if (std::abs(m.weights(k)) <= 1e-13 * total) m.weights(k) = 0.0;
    }
    for (Eigen::Index k = 0; k < m.rates.size(); ++k) {
        if (m.weights(k) != 0.0 && m.rates(k).real() >= 0.0) {
            std::ostringstream msg;
            msg << "mode with weight " << std::abs(m.weights(k)) << " has non-negative rate "
                << m.rates(k).real();
            throw UnstableMode(msg.str());
        }
    }
    return m;
}

// Same quantity via one linear solve per frequency: S(ω) = 2 Re Tr[a† (iω − ℒ)⁻¹ aρ_ss].
inline std::vector<double> resolvent_spectrum(const Liouvillian& l, const DensityMatrix& rho_ss,
                                              const std::vector<double>& omega) {
    const Eigen::Index d = l.dim();
    const Operator a = annihilation(l.trunc);
    const auto idx = coherence_sector(l.trunc, -1);
    const Eigen::MatrixXcd sub = restrict_to(l.matrix, idx);
    const Eigen::VectorXcd x0 = detail::gather(vectorize(a * rho_ss), idx);
    const Eigen::RowVectorXcd obs = detail::trace_functional(a.adjoint(), idx, d);
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(sub.rows(), sub.cols());

    std::vector<double> out;
    out.reserve(omega.size());
    for (double w : omega) {
        const Eigen::MatrixXcd shifted = I * (w - l.frame) * id - sub;
        const cplx val = obs * shifted.partialPivLu().solve(x0);
        out.push_back(2.0 * val.real());
    }
    return out;
}

struct GridSpec {
    double half_width{0.6};  // meV, about ω_c
    int points{4001};

    std::vector<double> make(double center) const {
        std::vector<double> w(static_cast<std::size_t>(points));
        for (int i = 0; i < points; ++i) {
            w[i] = center - half_width + 2.0 * half_width * double(i) / double(points - 1);
        }
        return w;
    }
};

enum class SpectrumMethod { modal, resolvent };

struct Spectrum {
    std::vector<double> omega;   // meV, absolute
    std::vector<double> values;  // arbitrary units; ∫ S dω/2π = ⟨a†a⟩
    SystemParams params;
    FockTruncation trunc;
    double photon_number{0.0};
    SpectrumMethod method{SpectrumMethod::modal};

    double integral_over_2pi() const {
        double acc = 0.0;
        for (std::size_t i = 1; i < omega.size(); ++i) {
            acc += 0.5 * (values[i] + values[i - 1]) * (omega[i] - omega[i - 1]);
        }
        return acc / (2.0 * M_PI);
    }

    double sum_rule_ratio() const { return integral_over_2pi() / photon_number; }

    double max_value() const { return *std::max_element(values.begin(), values.end()); }

    // Linear interpolation of S at an absolute frequency inside the grid.
    double value_at(double w) const {
        if (w <= omega.front()) return values.front();
        if (w >= omega.back()) return values.back();
        const auto it = std::upper_bound(omega.begin(), omega.end(), w);
        const auto i = static_cast<std::size_t>(it - omega.begin());
        const double t = (w - omega[i - 1]) / (omega[i] - omega[i - 1]);
        return (1.0 - t) * values[i - 1] + t * values[i];
    }
};

struct SpectrumOptions {
    std::optional<int> n_max;  // fixed truncation; adaptive when empty
    TruncationPolicy policy{};
    // Modal expansion is replaced by resolvent solves when its reconstruction
    // error exceeds this (near-defective Liouvillian).
    double modal_tolerance{1e-8};
};

inline Spectrum emission_spectrum(const SystemParams& p, const GridSpec& grid = {},
                                  const SpectrumOptions& opt = {}) {
    p.validate();
    if (grid.points < 3) throw ConfigError("emission_spectrum: grid needs at least 3 points");
    if (grid.half_width < 4.0 * p.g) {
        throw ConfigError("emission_spectrum: grid half-width must be at least 4g");
    }

    SteadyStateResult ss;
    FockTruncation t;
    if (opt.n_max) {
        t = FockTruncation(*opt.n_max);
        SteadyStateOptions so;
        so.check_uniqueness = false;
        ss = solve_steady_state(full_liouvillian(p, t), so);
    } else {
        auto ad = choose_truncation(p, opt.policy);
        t = ad.trunc;
        ss = std::move(ad.state);
    }
    const Liouvillian l = full_liouvillian(p, t);

    Spectrum s;
    s.params = p;
    s.trunc = t;
    s.photon_number = ss.photon_number;
    s.omega = grid.make(p.omega_c);

    const CorrelationModes modes = correlation_transfer(l, ss.rho);
    if (modes.reconstruction_error <= opt.modal_tolerance) {
        s.method = SpectrumMethod::modal;
        s.values.reserve(s.omega.size());
        for (double w : s.omega) s.values.push_back(modes.spectrum_at(w));
    } else {
        s.method = SpectrumMethod::resolvent;
        s.values = resolvent_spectrum(l, ss.rho, s.omega);
    }
    return s;
}

struct Peak {
    double position{0.0};    // meV, refined by a parabola through three samples
    double height{0.0};
    double fwhm{0.0};        // full width at half prominence, clipped at the adjacent valleys
    double prominence{0.0};
};

using PeakList = std::vector<Peak>;

// Strict local maxima whose topographic prominence is at least
// `relative_floor` times the largest sample.
inline PeakList extract_peaks(const std::vector<double>& x, const std::vector<double>& y,
                              double relative_floor = 1e-3) {
    if (x.size() != y.size()) throw ConfigError("extract_peaks: x and y lengths differ");
    PeakList out;
    const std::size_t n = y.size();
    if (n < 3) return out;
    const double ymax = *std::max_element(y.begin(), y.end());
    const double floor = relative_floor * ymax;

    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(y[i] > y[i - 1] && y[i] > y[i + 1])) continue;

        // Samples equal to y[i] up to rounding count as higher ground, so twin
        // peaks get the same prominence.
        const double ceiling = y[i] - 1e-12 * std::max(std::abs(y[i]), std::abs(ymax));
        std::size_t lo = i;
        double left_min = y[i];
        while (lo > 0 && y[lo - 1] <= ceiling) {
            --lo;
            left_min = std::min(left_min, y[lo]);
        }
        std::size_t hi = i;
        double right_min = y[i];
        while (hi + 1 < n && y[hi + 1] <= ceiling) {
            ++hi;
            right_min = std::min(right_min, y[hi]);
        }
        const double prominence = y[i] - std::max(left_min, right_min);
        if (prominence < floor || prominence <= 0.0) continue;

        Peak pk;
        const double ym = y[i - 1], y0 = y[i], yp = y[i + 1];
        const double denom = ym - 2.0 * y0 + yp;
        const double delta = denom != 0.0 ? 0.5 * (ym - yp) / denom : 0.0;
        const double step = 0.5 * (x[i + 1] - x[i - 1]);
        pk.position = x[i] + delta * step;
        pk.height = y0 - 0.25 * (ym - yp) * delta;
        pk.prominence = prominence;

        // Width at half prominence, searched no further than the adjacent valleys.
        std::size_t vl = i;
        while (vl > 0 && y[vl - 1] < y[vl]) --vl;
        std::size_t vr = i;
        while (vr + 1 < n && y[vr + 1] < y[vr]) ++vr;
        const double level = y[i] - 0.5 * prominence;
        std::size_t l = i;
        while (l > vl && y[l] > level) --l;
        double xl = x[l];
        if (y[l] <= level && y[l + 1] != y[l]) {
            xl = x[l] + (level - y[l]) * (x[l + 1] - x[l]) / (y[l + 1] - y[l]);
        }
        std::size_t r = i;
        while (r < vr && y[r] > level) ++r;
        double xr = x[r];
        if (y[r] <= level && y[r - 1] != y[r]) {
            xr = x[r] - (level - y[r]) * (x[r] - x[r - 1]) / (y[r - 1] - y[r]);
        }
        pk.fwhm = xr - xl;
        out.push_back(pk);
    }
    return out;
}

inline PeakList extract_peaks(const Spectrum& s, double relative_floor = 1e-3) {
    return extract_peaks(s.omega, s.values, relative_floor);
}

} // namespace jcdpt
