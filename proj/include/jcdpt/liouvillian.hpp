// liouvillian.hpp: superoperator assembly for the Lindblad generator and its gain-free variant
//
// Vectorization is column stacking: vec(ρ)[i + j·dim] = ρ(i, j), so that
// vec(AρB) = (Bᵀ ⊗ A) vec(ρ).

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <vector>

#include "jcdpt/errors.hpp"
#include "jcdpt/hilbert.hpp"

namespace jcdpt {

using SuperOperator = Eigen::MatrixXcd;

inline Eigen::VectorXcd vectorize(const Eigen::MatrixXcd& rho) {
    return Eigen::Map<const Eigen::VectorXcd>(rho.data(), rho.size());
}

inline Eigen::MatrixXcd unvectorize(const Eigen::VectorXcd& v, Eigen::Index dim) {
    if (v.size() != dim * dim) {
        throw ConfigError("unvectorize: vector length is not dim^2");
    }
    return Eigen::Map<const Eigen::MatrixXcd>(v.data(), dim, dim);
}

// ρ ↦ Aρ
inline SuperOperator spre(const Operator& a) {
    const auto d = a.rows();
    return Eigen::kroneckerProduct(Operator::Identity(d, d), a);
}

// ρ ↦ ρB
inline SuperOperator spost(const Operator& b) {
    const auto d = b.rows();
    return Eigen::kroneckerProduct(b.transpose(), Operator::Identity(d, d));
}

// ℒ_X(ρ) = 2XρX† − X†Xρ − ρX†X
inline SuperOperator dissipator(const Operator& x) {
    if (x.rows() != x.cols()) {
        throw ConfigError("dissipator: operator must be square");
    }
    const Operator xdx = x.adjoint() * x;
    return 2.0 * Eigen::kroneckerProduct(x.conjugate(), x).eval() - spre(xdx) - spost(xdx);
}

enum class Flavor { full, gain_free };

// Coefficient in front of ℒ_{σ†a}. The full master equation carries γθ/2;
// the gain-free equation is also quoted with a bare γθ. Both are selectable.
enum class PhononPrefactor { half_rate, full_rate };

inline double phonon_coefficient(double gamma_theta, PhononPrefactor c) noexcept {
    return c == PhononPrefactor::half_rate ? 0.5 * gamma_theta : gamma_theta;
}

struct Liouvillian {
    SuperOperator matrix;
    Flavor flavor{Flavor::full};
    FockTruncation trunc;
    double frame{0.0};  // generator is written in a frame rotating at this frequency

    Eigen::Index dim() const noexcept { return trunc.dim(); }
    Eigen::Index dim_super() const noexcept { return matrix.rows(); }

    DensityMatrix apply(const DensityMatrix& rho) const {
        return unvectorize(matrix * vectorize(rho), dim());
    }
};

// dρ/dt = −i[H,ρ] + (κ/2)ℒ_a + (γ_x/2)ℒ_σ + (P_x/2)ℒ_{σ†} + c·ℒ_{σ†a}
// in the frame rotating at ω_c.
inline Liouvillian full_liouvillian(const SystemParams& p, const FockTruncation& t,
                                    PhononPrefactor phonon = PhononPrefactor::half_rate) {
    p.validate();
    const Operator a = annihilation(t);
    const Operator s = lowering(t);
    const Operator h = hamiltonian(p, t, p.omega_c);

    Liouvillian l;
    l.flavor = Flavor::full;
    l.trunc = t;
    l.frame = p.omega_c;
    l.matrix = -I * (spre(h) - spost(h));
    l.matrix += (0.5 * p.kappa) * dissipator(a);
    l.matrix += (0.5 * p.gamma_x) * dissipator(s);
    l.matrix += (0.5 * p.pump) * dissipator(s.adjoint());
    l.matrix += phonon_coefficient(p.gamma_theta, phonon) * dissipator(s.adjoint() * a);
    return l;
}

// dρ/dt = −i(Kρ − ρK†) + c·ℒ_{σ†a}(ρ); the pump is dropped.
inline Liouvillian gain_free_liouvillian(const SystemParams& p, const FockTruncation& t,
                                         PhononPrefactor phonon = PhononPrefactor::half_rate) {
    p.validate();
    const Operator a = annihilation(t);
    const Operator s = lowering(t);
    const Operator k = effective_k(p, t, p.omega_c);

    Liouvillian l;
    l.flavor = Flavor::gain_free;
    l.trunc = t;
    l.frame = p.omega_c;
    l.matrix = -I * (spre(k) - spost(k.adjoint()));
    l.matrix += phonon_coefficient(p.gamma_theta, phonon) * dissipator(s.adjoint() * a);
    return l;
}

// Superoperator indices i + j·dim whose ket/bra excitation numbers differ by k.
// Every term of both generators maps such a sector onto itself.
inline std::vector<Eigen::Index> coherence_sector(const FockTruncation& t, int k) {
    std::vector<Eigen::Index> idx;
    const int d = t.dim();
    for (int j = 0; j < d; ++j) {
        for (int i = 0; i < d; ++i) {
            if (FockTruncation::excitations_of(i) - FockTruncation::excitations_of(j) == k) {
                idx.push_back(i + Eigen::Index(j) * d);
            }
        }
    }
    return idx;
}

// Superoperator indices spanning the excitation block (n, m) = span{|N=n⟩⟨N=m|}.
inline std::vector<Eigen::Index> excitation_block(const FockTruncation& t, int n, int m) {
    std::vector<Eigen::Index> idx;
    const int d = t.dim();
    for (int j = 0; j < d; ++j) {
        for (int i = 0; i < d; ++i) {
            if (FockTruncation::excitations_of(i) == n && FockTruncation::excitations_of(j) == m) {
                idx.push_back(i + Eigen::Index(j) * d);
            }
        }
    }
    return idx;
}

inline Eigen::MatrixXcd restrict_to(const SuperOperator& l, const std::vector<Eigen::Index>& idx) {
    const auto m = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXcd out(m, m);
    for (Eigen::Index c = 0; c < m; ++c) {
        for (Eigen::Index r = 0; r < m; ++r) {
            out(r, c) = l(idx[r], idx[c]);
        }
    }
    return out;
}

} // namespace jcdpt
