// steadystate.hpp: stationary state of the full Liouvillian and adaptive Fock truncation

#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "jcdpt/errors.hpp"
#include "jcdpt/hilbert.hpp"
#include "jcdpt/liouvillian.hpp"

namespace jcdpt {

struct SteadyStateResult {
    DensityMatrix rho;
    double residual{0.0};            // ‖ℒ vec(ρ)‖₂
    double generator_norm{0.0};      // ‖ℒ‖₂ (largest singular value) or Frobenius norm if unchecked
    double photon_number{0.0};       // ⟨a†a⟩
    double exciton_population{0.0};  // ⟨σ†σ⟩
    double trace{0.0};
    double min_eigenvalue{0.0};      // of the stored (unclamped) matrix
    FockTruncation trunc;
};

struct SteadyStateOptions {
    bool check_uniqueness{true};
    double uniqueness_ratio{1e-6};  // second-smallest / largest singular value must exceed this
};

// Population of each photon-number level, summed over the emitter state.
inline std::vector<double> photon_distribution(const DensityMatrix& rho, const FockTruncation& t) {
    std::vector<double> pops(static_cast<std::size_t>(t.n_max + 1), 0.0);
    for (int n = 0; n <= t.n_max; ++n) {
        pops[n] = rho(FockTruncation::index(n, 0), FockTruncation::index(n, 0)).real()
                + rho(FockTruncation::index(n, 1), FockTruncation::index(n, 1)).real();
    }
    return pops;
}

inline double expectation(const Operator& op, const DensityMatrix& rho) {
    return (op * rho).trace().real();
}

// One row of ℒρ = 0 is redundant because ℒ preserves the trace; it is
// replaced by Tr ρ = 1 and the dense system solved by LU.
inline SteadyStateResult solve_steady_state(const Liouvillian& l, const SteadyStateOptions& opt = {}) {
    if (l.flavor != Flavor::full) {
        throw ConfigError("solve_steady_state: needs the trace-preserving (full) Liouvillian");
    }
    const Eigen::Index d = l.dim();
    const Eigen::Index ds = l.dim_super();

    SteadyStateResult out;
    out.trunc = l.trunc;

    if (opt.check_uniqueness) {
        Eigen::BDCSVD<Eigen::MatrixXcd> svd(l.matrix);
        const auto& sv = svd.singularValues();  // descending
        out.generator_norm = sv(0);
        const double second_smallest = sv(ds - 2);
        if (!(second_smallest > opt.uniqueness_ratio * sv(0))) {
            std::ostringstream msg;
            msg << "null space of the Liouvillian is degenerate (second-smallest singular value "
                << second_smallest << " vs largest " << sv(0) << ")";
            throw NonUniqueSteadyState(msg.str());
        }
    } else {
        out.generator_norm = l.matrix.norm();
    }

    Eigen::MatrixXcd a = l.matrix;
    a.row(0).setZero();
    for (Eigen::Index i = 0; i < d; ++i) a(0, i + i * d) = 1.0;
    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(ds);
    b(0) = 1.0;

    const Eigen::VectorXcd x = a.partialPivLu().solve(b);
    if (!x.allFinite()) {
        throw NoConvergence("linear solve for the stationary state produced non-finite values");
    }

    DensityMatrix rho = unvectorize(x, d);
    rho = (0.5 * (rho + rho.adjoint())).eval();

    out.residual = (l.matrix * vectorize(rho)).norm();
    out.trace = rho.trace().real();
    const Operator an = annihilation(l.trunc);
    const Operator sg = lowering(l.trunc);
    out.photon_number = expectation(an.adjoint() * an, rho);
    out.exciton_population = expectation(sg.adjoint() * sg, rho);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
    out.min_eigenvalue = es.eigenvalues().minCoeff();
    out.rho = std::move(rho);
    return out;
}

struct TruncationPolicy {
    int start{3};
    int max{40};
    double tolerance{1e-8};  // population allowed in the top photon level
};

struct AdaptiveSteadyState {
    FockTruncation trunc;
    SteadyStateResult state;
    double top_population{0.0};
};

// Grows n_max until the stationary population of the highest retained
// photon level falls below the tolerance.
inline AdaptiveSteadyState choose_truncation(const SystemParams& p, const TruncationPolicy& policy = {},
                                             PhononPrefactor phonon = PhononPrefactor::half_rate) {
    p.validate();
    for (int n = std::max(1, policy.start); n <= policy.max; ++n) {
        const FockTruncation t(n);
        SteadyStateOptions opt;
        opt.check_uniqueness = false;
        auto ss = solve_steady_state(full_liouvillian(p, t, phonon), opt);
        const double top = photon_distribution(ss.rho, t).back();
        if (std::abs(top) < policy.tolerance) {
            return {t, std::move(ss), top};
        }
    }
    std::ostringstream msg;
    msg << "top photon-level population did not fall below " << policy.tolerance
        << " for n_max <= " << policy.max;
    throw NoConvergence(msg.str());
}

} // namespace jcdpt
