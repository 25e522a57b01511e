// hilbert.hpp: truncated Fock space ⊗ two-level emitter: parameters, basis and operators
//
// Basis convention: the bare state |n, α⟩ (n photons, emitter in α ∈ {0,1})
// sits at index 2·n + α. States of fixed excitation number N = n + α are
// therefore |N, 0⟩ at 2N and |N-1, 1⟩ at 2N - 1.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <string>

#include "jcdpt/errors.hpp"

namespace jcdpt {

using cplx = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using DensityMatrix = Eigen::MatrixXcd;

inline constexpr cplx I{0.0, 1.0};

struct FockTruncation {
    int n_max{1};

    FockTruncation() = default;
    explicit FockTruncation(int n) : n_max(n) {
        if (n < 1) {
            throw ConfigError("FockTruncation: n_max must be >= 1, got " + std::to_string(n));
        }
    }

    int dim() const noexcept { return 2 * (n_max + 1); }

    static constexpr int index(int photons, int qubit) noexcept { return 2 * photons + qubit; }
    static constexpr int photons_of(int index) noexcept { return index / 2; }
    static constexpr int qubit_of(int index) noexcept { return index % 2; }
    static constexpr int excitations_of(int index) noexcept { return index / 2 + index % 2; }

    friend bool operator==(const FockTruncation&, const FockTruncation&) = default;
};

// Energies and rates in meV (ħ = 1).
struct SystemParams {
    double omega_c{1309.78};
    double omega_x{1309.78};
    double g{0.12};
    double kappa{0.032};
    double gamma_x{0.0112};
    double pump{0.004};        // incoherent emitter pumping P_x
    double gamma_theta{0.17};  // phonon-mediated cavity -> emitter transfer

    double delta() const noexcept { return omega_x - omega_c; }

    // Parameter set of the off-resonant cavity-emission experiment, on resonance.
    static SystemParams reference() { return SystemParams{}; }

    SystemParams with_gamma_theta(double v) const { auto p = *this; p.gamma_theta = v; return p; }
    SystemParams with_delta(double d) const { auto p = *this; p.omega_x = omega_c + d; return p; }
    SystemParams with_pump(double v) const { auto p = *this; p.pump = v; return p; }

    void validate() const {
        auto finite = [](double v) { return std::isfinite(v); };
        if (!finite(omega_c) || !finite(omega_x) || !finite(g) || !finite(kappa) ||
            !finite(gamma_x) || !finite(pump) || !finite(gamma_theta)) {
            throw ConfigError("SystemParams: all parameters must be finite");
        }
        if (!(g > 0.0)) throw ConfigError("SystemParams: g must be > 0");
        if (kappa < 0.0) throw ConfigError("SystemParams: kappa must be >= 0");
        if (gamma_x < 0.0) throw ConfigError("SystemParams: gamma_x must be >= 0");
        if (pump < 0.0) throw ConfigError("SystemParams: P_x must be >= 0");
        if (gamma_theta < 0.0) throw ConfigError("SystemParams: gamma_theta must be >= 0");
    }
};

inline Operator identity(const FockTruncation& t) {
    return Operator::Identity(t.dim(), t.dim());
}

// a|n,α⟩ = √n |n-1,α⟩; the top level n_max is only annihilated downward.
inline Operator annihilation(const FockTruncation& t) {
    Operator a = Operator::Zero(t.dim(), t.dim());
    for (int n = 1; n <= t.n_max; ++n) {
        for (int alpha = 0; alpha < 2; ++alpha) {
            a(FockTruncation::index(n - 1, alpha), FockTruncation::index(n, alpha)) = std::sqrt(double(n));
        }
    }
    return a;
}

// σ = |0⟩⟨1| on the emitter factor.
inline Operator lowering(const FockTruncation& t) {
    Operator s = Operator::Zero(t.dim(), t.dim());
    for (int n = 0; n <= t.n_max; ++n) {
        s(FockTruncation::index(n, 0), FockTruncation::index(n, 1)) = 1.0;
    }
    return s;
}

inline Operator excitation_number(const FockTruncation& t) {
    Operator nexc = Operator::Zero(t.dim(), t.dim());
    for (int i = 0; i < t.dim(); ++i) {
        nexc(i, i) = FockTruncation::excitations_of(i);
    }
    return nexc;
}

// H = ω_x σ†σ + ω_c a†a + g(a†σ + aσ†), written in a frame rotating at `frame`
// (i.e. H - frame·N_exc). frame = 0 gives the lab-frame Hamiltonian.
inline Operator hamiltonian(const SystemParams& p, const FockTruncation& t, double frame = 0.0) {
    const Operator a = annihilation(t);
    const Operator s = lowering(t);
    const Operator ad = a.adjoint();
    const Operator sd = s.adjoint();
    Operator h = (p.omega_x - frame) * (sd * s) + (p.omega_c - frame) * (ad * a)
               + p.g * (ad * s + a * sd);
    return h;
}

// K = H - i(γ_x/2)σ†σ - i(κ/2)a†a.
inline Operator effective_k(const SystemParams& p, const FockTruncation& t, double frame = 0.0) {
    const Operator a = annihilation(t);
    const Operator s = lowering(t);
    return hamiltonian(p, t, frame) - I * (0.5 * p.gamma_x) * (s.adjoint() * s)
         - I * (0.5 * p.kappa) * (a.adjoint() * a);
}

inline Operator commutator(const Operator& x, const Operator& y) {
    return x * y - y * x;
}

} // namespace jcdpt
