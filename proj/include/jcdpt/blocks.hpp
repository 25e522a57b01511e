// blocks.hpp: 4×4 excitation blocks ℒ^{n,n−1} of the gain-free Liouvillian
//
// The block acting on coefficients of
//     a†_{n,0} = |n,0⟩⟨n−1,0|,   a†_{n,1} = |n−1,1⟩⟨n−2,1|,
//     σ†_n     = |n−1,1⟩⟨n−1,0|, ζ†_n     = |n,0⟩⟨n−2,1|
// (bare states written |photons, emitter⟩) is stored with the overall sign
// flipped, so eigenvalues read λ = Γ + iω with linewidth Γ = Re λ ≥ 0 and
// frequency ω = Im λ measured from the cavity line.
//
// Two models are available:
//   - printed: the widely used closed form, with a κ/2 cavity diagonal and the
//     phonon term coupling a†_{n,0} to ζ†_n, entered entry by entry.
//   - derived: the same block obtained by projecting −ℒ of the gain-free master
//     equation onto the basis above (phonon term with coefficient γθ/2). This is
//     the model used for the phase-transition analysis; the two differ in the
//     diagonal and in the placement of the phonon transfer term.
//
// For n = 1 the operators a†_{1,1} and ζ†_1 reference Fock level −1 and do not
// exist; the derived block then reduces to the 2×2 problem on {a†_{1,0}, σ†_1}.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "jcdpt/errors.hpp"
#include "jcdpt/hilbert.hpp"
#include "jcdpt/liouvillian.hpp"

namespace jcdpt {

enum class BlockModel { printed, derived };

inline const char* to_string(BlockModel m) {
    return m == BlockModel::printed ? "printed" : "derived";
}

struct BlockBasis {
    int n{1};

    static constexpr std::array<const char*, 4> labels{"a+_{n,0}", "a+_{n,1}", "sigma+_n", "zeta+_n"};

    explicit BlockBasis(int rung) : n(rung) {
        if (rung < 1) throw ConfigError("BlockBasis: rung index must be >= 1");
    }

    // (ket index, bra index) of element k in the bare basis; empty when the
    // element references Fock level −1.
    std::optional<std::pair<int, int>> element(int k) const {
        using T = FockTruncation;
        switch (k) {
        case 0: return std::pair{T::index(n, 0), T::index(n - 1, 0)};
        case 1: if (n < 2) return std::nullopt; return std::pair{T::index(n - 1, 1), T::index(n - 2, 1)};
        case 2: return std::pair{T::index(n - 1, 1), T::index(n - 1, 0)};
        case 3: if (n < 2) return std::nullopt; return std::pair{T::index(n, 0), T::index(n - 2, 1)};
        default: throw ConfigError("BlockBasis: element index out of range");
        }
    }

    std::vector<int> active() const {
        return n == 1 ? std::vector<int>{0, 2} : std::vector<int>{0, 1, 2, 3};
    }
};

struct BlockMatrix {
    int n{1};
    SystemParams params;
    BlockModel model{BlockModel::derived};
    Eigen::Matrix4cd entries{Eigen::Matrix4cd::Zero()};
    std::vector<int> active{0, 1, 2, 3};

    double rabi_n() const { return params.g * std::sqrt(double(n)); }
    double rabi_n_minus_1() const { return params.g * std::sqrt(double(n - 1)); }

    Eigen::MatrixXcd active_matrix() const {
        const auto m = static_cast<Eigen::Index>(active.size());
        Eigen::MatrixXcd out(m, m);
        for (Eigen::Index r = 0; r < m; ++r)
            for (Eigen::Index c = 0; c < m; ++c) out(r, c) = entries(active[r], active[c]);
        return out;
    }
};

namespace detail {

inline void require_resonance(const SystemParams& p, const char* who) {
    if (std::abs(p.delta()) > 1e-9) {
        std::ostringstream msg;
        msg << who << ": block analysis is defined only at zero detuning (delta = " << p.delta() << " meV)";
        throw NonzeroDetuning(msg.str());
    }
}

} // namespace detail

// The closed-form block entered entry by entry, Ω_n = g√n.
inline BlockMatrix build_block(int n, const SystemParams& p) {
    if (n < 1) throw ConfigError("build_block: n must be >= 1");
    p.validate();
    detail::require_resonance(p, "build_block");
    const double on = p.g * std::sqrt(double(n));
    const double om = p.g * std::sqrt(double(n - 1));
    const double gt = p.gamma_theta;
    const double k = p.kappa;
    const double gx = p.gamma_x;

    BlockMatrix b;
    b.n = n;
    b.params = p;
    b.model = BlockModel::printed;
    auto& m = b.entries;
    m << k / 2, -I * om, I * on, std::sqrt(double(n) * double(n - 1)) * gt,
         -I * om, (gx - (n - 1) * gt) / 2, 0.0, I * on,
         I * on, 0.0, (2 * k - gx - n * gt) / 2, -I * om,
         0.0, I * on, -I * om, (k - (2 * n - 1) * gt) / 2;
    b.active = {0, 1, 2, 3};
    return b;
}

// −ℒ^{n,n−1} of dρ/dt = −i(Kρ − ρK†) + c·ℒ_{σ†a}(ρ) in closed form, with
// c = γθ/2 (half_rate) or γθ (full_rate).
inline BlockMatrix derived_block(int n, const SystemParams& p,
                                 PhononPrefactor phonon = PhononPrefactor::half_rate) {
    if (n < 1) throw ConfigError("derived_block: n must be >= 1");
    p.validate();
    detail::require_resonance(p, "derived_block");
    const double on = p.g * std::sqrt(double(n));
    const double om = p.g * std::sqrt(double(n - 1));
    const double c = phonon_coefficient(p.gamma_theta, phonon);
    const double k = p.kappa;
    const double gx = p.gamma_x;
    const double nn = n;

    BlockMatrix b;
    b.n = n;
    b.params = p;
    b.model = BlockModel::derived;
    auto& m = b.entries;
    m.setZero();
    m(0, 0) = (2 * nn - 1) * (k / 2 + c);
    m(1, 1) = (2 * nn - 3) * k / 2 + gx;
    m(2, 2) = ((2 * nn - 2) * k + gx + 2 * c * (nn - 1)) / 2;
    m(3, 3) = ((2 * nn - 2) * k + gx + 2 * c * nn) / 2;
    m(1, 0) = -2 * c * std::sqrt(nn * (nn - 1));
    m(2, 0) = I * on;
    m(3, 0) = -I * om;
    m(3, 1) = I * on;
    m(2, 1) = -I * om;
    m(0, 2) = I * on;
    m(1, 2) = -I * om;
    m(1, 3) = I * on;
    m(0, 3) = -I * om;
    if (n == 1) {
        for (int r : {1, 3}) {
            m.row(r).setZero();
            m.col(r).setZero();
        }
    }
    b.active = BlockBasis(n).active();
    return b;
}

inline BlockMatrix make_block(int n, const SystemParams& p, BlockModel model) {
    return model == BlockModel::printed ? build_block(n, p) : derived_block(n, p);
}

enum class BlockSign { generator, negated };

// Projects the gain-free Liouvillian (assembled on a Fock space with
// n_max = n + 1) onto the four block basis operators:
//     M(r, c) = ⟨basis_r, ℒ(basis_c)⟩.
// With BlockSign::negated the result is −M, the convention of build_block.
inline Eigen::Matrix4cd block_projection_oracle(int n, const SystemParams& p,
                                                PhononPrefactor phonon = PhononPrefactor::half_rate,
                                                BlockSign sign = BlockSign::negated) {
    if (n < 1) throw ConfigError("block_projection_oracle: n must be >= 1");
    const FockTruncation t(n + 1);
    const Liouvillian l = gain_free_liouvillian(p, t, phonon);
    const BlockBasis basis(n);
    const Eigen::Index d = t.dim();

    Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
    for (int c = 0; c < 4; ++c) {
        const auto ec = basis.element(c);
        if (!ec) continue;
        DensityMatrix e = DensityMatrix::Zero(d, d);
        e(ec->first, ec->second) = 1.0;
        const DensityMatrix image = l.apply(e);
        for (int r = 0; r < 4; ++r) {
            const auto er = basis.element(r);
            if (!er) continue;
            m(r, c) = image(er->first, er->second);
        }
    }
    return sign == BlockSign::negated ? Eigen::Matrix4cd(-m) : m;
}

// Branch labels in storage order.
enum Branch : int { minus_minus = 0, minus_plus = 1, plus_minus = 2, plus_plus = 3 };

struct BlockEigenSystem {
    int n{1};
    double gamma_theta{0.0};
    int size{4};  // 2 for the reduced n = 1 derived block
    std::array<cplx, 4> eigenvalues{};       // indexed by Branch
    Eigen::Vector4cd coefficients{Eigen::Vector4cd::Zero()};  // (−,−) eigenvector, unit norm
    bool degenerate{false};                  // two eigenvalues within the coalescence tolerance

    double frequency(Branch b) const { return eigenvalues[b].imag(); }
    double linewidth(Branch b) const { return eigenvalues[b].real(); }

    // C^{α,β}_{n,n−1}: coefficient of |n−α,α⟩⟨n−1−β,β|
    cplx c00() const { return coefficients(0); }
    cplx c11() const { return coefficients(1); }
    cplx c10() const { return coefficients(2); }
    cplx c01() const { return coefficients(3); }
};

namespace detail {

struct RawEigen {
    std::vector<cplx> values;
    Eigen::MatrixXcd vectors;  // columns, in active-basis coordinates
};

inline RawEigen raw_eigen(const Eigen::MatrixXcd& m) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m, true);
    if (es.info() != Eigen::Success) {
        throw NumericalError("block-eigen", "eigendecomposition of a 4x4 block failed");
    }
    RawEigen r;
    r.values.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    r.vectors = es.eigenvectors();
    return r;
}

// Permutation p minimizing Σ |next[p[k]] − prev[k]|.
inline std::vector<int> best_matching(const std::vector<cplx>& prev, const std::vector<cplx>& next) {
    std::vector<int> perm(next.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best = perm;
    double best_cost = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        for (std::size_t k = 0; k < prev.size(); ++k) cost += std::abs(next[perm[k]] - prev[k]);
        if (cost < best_cost) {
            best_cost = cost;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

} // namespace detail

// Follows the four eigenvalues of one block as γθ increases, keeping branch
// identity by nearest-neighbour matching on a fine grid.
//
// At γθ = 0 the pair with the smaller |ω| is labelled (−,±) and the other
// (+,±). Within a pair, (−,−)/(+,−) is the narrower member (smaller Γ); when
// the widths agree (conjugate pair, before the exceptional point) it is the
// member with ω < 0.
class BranchTracker {
public:
    BranchTracker(int n, const SystemParams& p, BlockModel model = BlockModel::derived,
                  double max_step = 0.0)
        : n_(n), params_(p), model_(model),
          max_step_(max_step > 0.0 ? max_step : p.g / 200.0) {
        detail::require_resonance(p, "BranchTracker");
        const BlockMatrix b = make_block(n_, params_.with_gamma_theta(0.0), model_);
        const auto raw = detail::raw_eigen(b.active_matrix());
        const double scale = p.g;
        std::vector<int> order(raw.values.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int c) {
            const double fa = std::abs(raw.values[a].imag());
            const double fc = std::abs(raw.values[c].imag());
            if (std::abs(fa - fc) > 1e-9 * scale) return fa < fc;
            return raw.values[a].real() < raw.values[c].real();
        });
        labels_.clear();
        for (int k : order) labels_.push_back(raw.values[k]);
        gamma_ = 0.0;
        finalize(raw, order);
    }

    int n() const noexcept { return n_; }
    double gamma_theta() const noexcept { return gamma_; }
    const BlockEigenSystem& current() const noexcept { return state_; }

    const BlockEigenSystem& advance_to(double gamma_theta) {
        if (gamma_theta < gamma_) {
            throw ConfigError("BranchTracker: gamma_theta must be non-decreasing");
        }
        const double span = gamma_theta - gamma_;
        if (span == 0.0) return state_;
        const int steps = std::max(1, static_cast<int>(std::ceil(span / max_step_)));
        const double h = span / steps;
        const double start = gamma_;
        for (int s = 1; s <= steps; ++s) {
            step_to(s == steps ? gamma_theta : start + s * h, 0);
        }
        return state_;
    }

    // Labelled eigenvalues (storage order = Branch) at the current point.
    const std::vector<cplx>& labelled() const noexcept { return labels_; }

private:
    void step_to(double target, int depth) {
        const BlockMatrix b = make_block(n_, params_.with_gamma_theta(target), model_);
        const auto raw = detail::raw_eigen(b.active_matrix());
        auto perm = detail::best_matching(labels_, raw.values);

        if (!consistent(raw.values, perm)) {
            if (depth < 12) {
                const double mid = 0.5 * (gamma_ + target);
                step_to(mid, depth + 1);
                step_to(target, depth + 1);
                return;
            }
            std::ostringstream msg;
            msg << "rung " << n_ << ": ambiguous eigenvalue matching near gamma_theta = " << target;
            throw BranchTrackingLost(msg.str());
        }
        labels_.assign(labels_.size(), cplx{});
        for (std::size_t k = 0; k < perm.size(); ++k) labels_[k] = raw.values[perm[k]];
        gamma_ = target;
        finalize(raw, perm);
    }

    // Each matched eigenvalue must stay closer to its predecessor than half the
    // distance to any eigenvalue of the other pair. Members of the same pair may
    // coalesce.
    bool consistent(const std::vector<cplx>& next, const std::vector<int>& perm) const {
        const std::size_t m = labels_.size();
        if (m <= 2) return true;
        for (std::size_t k = 0; k < m; ++k) {
            const double moved = std::abs(next[perm[k]] - labels_[k]);
            double nearest_other = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < m; ++j) {
                if (j / 2 == k / 2) continue;
                nearest_other = std::min(nearest_other, std::abs(labels_[j] - labels_[k]));
            }
            if (moved > 0.5 * nearest_other) return false;
        }
        return true;
    }

    void finalize(const detail::RawEigen& raw, std::vector<int> perm) {
        const double tie = 1e-9 * params_.g;
        for (std::size_t p0 = 0; p0 + 1 < labels_.size(); p0 += 2) {
            const cplx a = labels_[p0], b = labels_[p0 + 1];
            bool swap = false;
            if (std::abs(a.real() - b.real()) > tie) swap = b.real() < a.real();
            else swap = b.imag() < a.imag();
            if (swap) {
                std::swap(labels_[p0], labels_[p0 + 1]);
                std::swap(perm[p0], perm[p0 + 1]);
            }
        }

        BlockEigenSystem es;
        es.n = n_;
        es.gamma_theta = gamma_;
        es.size = static_cast<int>(labels_.size());
        for (std::size_t k = 0; k < labels_.size(); ++k) es.eigenvalues[k] = labels_[k];
        for (std::size_t k = labels_.size(); k < 4; ++k) {
            es.eigenvalues[k] = cplx{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
        }

        const auto active = BlockBasis(n_).active();
        const std::vector<int> idx = model_ == BlockModel::printed ? std::vector<int>{0, 1, 2, 3} : active;
        const Eigen::VectorXcd v = raw.vectors.col(perm[minus_minus]);
        Eigen::Vector4cd c = Eigen::Vector4cd::Zero();
        for (std::size_t k = 0; k < idx.size(); ++k) c(idx[k]) = v(static_cast<Eigen::Index>(k));
        const double nrm = c.norm();
        if (nrm > 0.0) c /= nrm;
        Eigen::Index big = 0;
        c.cwiseAbs().maxCoeff(&big);
        if (std::abs(c(big)) > 0.0) c *= std::conj(c(big)) / std::abs(c(big));
        es.coefficients = c;

        const double tol = 1e-6 * params_.g;
        for (std::size_t i = 0; i < labels_.size(); ++i)
            for (std::size_t j = i + 1; j < labels_.size(); ++j)
                if (std::abs(labels_[i] - labels_[j]) < tol) es.degenerate = true;
        state_ = es;
    }

    int n_;
    SystemParams params_;
    BlockModel model_;
    double max_step_;
    double gamma_{0.0};
    std::vector<cplx> labels_;
    BlockEigenSystem state_;
};

// Eigen-analysis of a block with branch labels carried by continuity from γθ = 0.
inline BlockEigenSystem block_eigensystem(const BlockMatrix& b) {
    BranchTracker tr(b.n, b.params, b.model);
    return tr.advance_to(b.params.gamma_theta);
}

// Closed-form approximation to the n-th exceptional point. The n = 1 value
// reads the unsubscripted γ as γ_x.
inline double ep_formula(int n, const SystemParams& p) {
    if (n < 1) throw ConfigError("ep_formula: n must be >= 1");
    if (n == 1) return 4.0 * p.g - (p.kappa - p.gamma_x);
    const double nn = n;
    const double n1 = nn * (nn - 1.0);
    const double num = std::sqrt(4 * n1 * n1 * n1 + 16 * n1 * n1 + 10 * n1 + 6)
                     - (2 * nn * nn * nn - 3 * nn * nn + nn)
                     - (p.kappa - p.gamma_x) / (nn * (nn + 1.0));
    const double den = 15 * n1 * n1 + 10 * n1 + 6;
    const double radicand = num / den;
    if (radicand < 0.0) {
        std::ostringstream msg;
        msg << "rung " << n << ": radicand " << radicand << " is negative";
        throw NegativeRadicand(msg.str());
    }
    return 4.0 * p.g * std::sqrt(radicand);
}

struct EpResult {
    int n{1};
    double gamma_theta_critical_numeric{0.0};
    double gamma_theta_critical_formula{std::numeric_limits<double>::quiet_NaN()};
    double coalescence_gap{0.0};
    bool coalesced{false};  // gap below 1e-6·g
    double bracket_lo{0.0};
    double bracket_hi{0.0};
};

namespace detail {

// Shrinks [before, after] around the point where `is_before` flips.
template <class Pred>
double bisect_transition(Pred&& is_before, double before, double after, int max_iter = 200) {
    for (int it = 0; it < max_iter; ++it) {
        const double mid = 0.5 * (before + after);
        if (mid <= before || mid >= after) break;
        if (is_before(mid)) before = mid;
        else after = mid;
        if (after - before <= 1e-15 * std::max(std::abs(after), 1e-300)) break;
    }
    return 0.5 * (before + after);
}

inline bool pair_split_in_frequency(cplx a, cplx b) {
    return std::abs(a.imag() - b.imag()) > std::abs(a.real() - b.real());
}

} // namespace detail

// Exceptional point of a one-parameter matrix family: the pair of closest
// eigenvalues turns from a conjugate pair (split in frequency) into two real
// eigenvalues (split in width) somewhere in [lo, hi].
template <class Family>
double locate_coalescence(Family&& family, double lo, double hi, int scan_points = 400) {
    auto closest_pair = [&](double x) {
        const auto raw = detail::raw_eigen(family(x));
        std::pair<cplx, cplx> best{raw.values[0], raw.values[1]};
        double dmin = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < raw.values.size(); ++i)
            for (std::size_t j = i + 1; j < raw.values.size(); ++j)
                if (std::abs(raw.values[i] - raw.values[j]) < dmin) {
                    dmin = std::abs(raw.values[i] - raw.values[j]);
                    best = {raw.values[i], raw.values[j]};
                }
        return best;
    };
    auto before = [&](double x) {
        const auto [a, b] = closest_pair(x);
        return detail::pair_split_in_frequency(a, b);
    };
    double prev = lo;
    bool prev_before = before(lo);
    for (int i = 1; i <= scan_points; ++i) {
        const double x = lo + (hi - lo) * double(i) / scan_points;
        const bool b = before(x);
        if (prev_before && !b) return detail::bisect_transition(before, prev, x);
        prev = x;
        prev_before = b;
    }
    throw NoCoalescenceInRange("no coalescence of eigenvalues found in the scanned range");
}

// Locates the exceptional point of the tracked (−,±) pair of rung n in [lo, hi].
inline EpResult ep_locate_numeric(int n, const SystemParams& p, double lo, double hi,
                                  BlockModel model = BlockModel::derived) {
    if (!(hi > lo) || lo < 0.0) throw ConfigError("ep_locate_numeric: need 0 <= lo < hi");
    BranchTracker tr(n, p, model);
    const double step = p.g / 200.0;

    auto before_at = [&](const BranchTracker& t) {
        const auto& l = t.labelled();
        return detail::pair_split_in_frequency(l[minus_minus], l[minus_plus]);
    };

    double x_prev = 0.0;
    bool prev_before = before_at(tr);
    std::vector<cplx> prev_labels = tr.labelled();
    double x = 0.0;
    bool found = false;
    while (x < hi) {
        x = std::min(hi, x + step);
        tr.advance_to(x);
        const bool b = before_at(tr);
        if (prev_before && !b && x >= lo) {
            found = true;
            break;
        }
        x_prev = x;
        prev_before = b;
        prev_labels = tr.labelled();
    }
    if (!found) {
        std::ostringstream msg;
        msg << "rung " << n << ": no coalescence of the (-,+-) pair in [" << lo << ", " << hi << "] meV";
        throw NoCoalescenceInRange(msg.str());
    }

    // Pair members at x are identified by matching to the labelled eigenvalues at x_prev.
    auto pair_at = [&](double gt) {
        const BlockMatrix b = make_block(n, p.with_gamma_theta(gt), model);
        const auto raw = detail::raw_eigen(b.active_matrix());
        const auto perm = detail::best_matching(prev_labels, raw.values);
        return std::pair{raw.values[perm[minus_minus]], raw.values[perm[minus_plus]]};
    };
    auto is_before = [&](double gt) {
        const auto [a, b] = pair_at(gt);
        return detail::pair_split_in_frequency(a, b);
    };

    EpResult r;
    r.n = n;
    r.bracket_lo = x_prev;
    r.bracket_hi = x;
    r.gamma_theta_critical_numeric = detail::bisect_transition(is_before, x_prev, x);
    const auto [a, b] = pair_at(r.gamma_theta_critical_numeric);
    r.coalescence_gap = std::abs(a - b);
    r.coalesced = r.coalescence_gap < 1e-6 * p.g;
    try {
        r.gamma_theta_critical_formula = ep_formula(n, p);
    } catch (const NegativeRadicand&) {
    }
    return r;
}

// (Γ^{n} + Γ^{n−2}) / Γ^{n−1} of the (−,−) branches at one γθ.
inline double linewidth_ratio(int n, double gamma_theta, const SystemParams& p,
                              BlockModel model = BlockModel::derived) {
    if (n < 3) throw ConfigError("linewidth_ratio: n must be >= 3");
    std::array<double, 3> w{};
    for (int k = 0; k < 3; ++k) {
        BranchTracker tr(n - k, p, model);
        w[k] = tr.advance_to(gamma_theta).linewidth(minus_minus);
    }
    if (std::abs(w[1]) <= 1e-14) {
        throw NumericalError("linewidth-ratio", "denominator linewidth vanishes");
    }
    return (w[0] + w[2]) / w[1];
}

struct DptDiagnostics {
    std::vector<double> gamma_grid;
    int n_rungs{50};
    BlockModel model{BlockModel::derived};
    std::vector<double> G_values;
    std::vector<double> dG_values;
    // Indexed [rung − 1][grid point]. Undefined entries are NaN.
    std::vector<std::vector<double>> omega_mm;
    std::vector<std::vector<double>> omega_mp;
    std::vector<std::vector<double>> linewidth_mm;
    std::vector<std::vector<double>> E_n;      // ln(Γ^{n}/Γ^{2}); NaN for n = 2
    std::vector<std::vector<double>> C00_sq;
    std::vector<std::vector<double>> C11_sq;   // NaN for n = 1
    std::vector<std::vector<double>> linewidth_ratio;  // NaN for n < 3
    std::vector<std::string> warnings;
};

// Central differences on a possibly non-uniform grid, one-sided at the ends.
inline std::vector<double> finite_difference(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t m = x.size();
    std::vector<double> d(m, std::numeric_limits<double>::quiet_NaN());
    if (m < 2) return d;
    d[0] = (y[1] - y[0]) / (x[1] - x[0]);
    d[m - 1] = (y[m - 1] - y[m - 2]) / (x[m - 1] - x[m - 2]);
    for (std::size_t i = 1; i + 1 < m; ++i) {
        const double h0 = x[i] - x[i - 1];
        const double h1 = x[i + 1] - x[i];
        d[i] = (h0 * h0 * y[i + 1] - h1 * h1 * y[i - 1] + (h1 * h1 - h0 * h0) * y[i]) / (h0 * h1 * (h0 + h1));
    }
    return d;
}

inline DptDiagnostics dpt_diagnostics(const SystemParams& p, const std::vector<double>& gamma_grid,
                                      int n_rungs = 50, BlockModel model = BlockModel::derived) {
    p.validate();
    detail::require_resonance(p, "dpt_diagnostics");
    if (n_rungs < 2) throw ConfigError("dpt_diagnostics: n_rungs must be >= 2");
    if (gamma_grid.empty()) throw ConfigError("dpt_diagnostics: empty gamma grid");
    for (std::size_t i = 0; i < gamma_grid.size(); ++i) {
        if (gamma_grid[i] < 0.0 || (i > 0 && !(gamma_grid[i] > gamma_grid[i - 1]))) {
            throw ConfigError("dpt_diagnostics: gamma grid must be non-negative and strictly increasing");
        }
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    const std::size_t m = gamma_grid.size();
    const auto nr = static_cast<std::size_t>(n_rungs);

    DptDiagnostics d;
    d.gamma_grid = gamma_grid;
    d.n_rungs = n_rungs;
    d.model = model;
    auto table = [&] { return std::vector<std::vector<double>>(nr, std::vector<double>(m, nan)); };
    d.omega_mm = table();
    d.omega_mp = table();
    d.linewidth_mm = table();
    d.E_n = table();
    d.C00_sq = table();
    d.C11_sq = table();
    d.linewidth_ratio = table();

    for (int n = 1; n <= n_rungs; ++n) {
        BranchTracker tr(n, p, model);
        const auto r = static_cast<std::size_t>(n - 1);
        for (std::size_t j = 0; j < m; ++j) {
            try {
                const auto& es = tr.advance_to(gamma_grid[j]);
                d.omega_mm[r][j] = es.frequency(minus_minus);
                d.omega_mp[r][j] = es.frequency(minus_plus);
                d.linewidth_mm[r][j] = es.linewidth(minus_minus);
                d.C00_sq[r][j] = std::norm(es.c00());
                if (n >= 2) d.C11_sq[r][j] = std::norm(es.c11());
            } catch (const BranchTrackingLost& e) {
                std::ostringstream msg;
                msg << "grid point " << j << " (gamma_theta = " << gamma_grid[j] << "): " << e.what();
                d.warnings.push_back(msg.str());
                break;
            }
        }
    }

    const double tiny = 1e-14;
    d.G_values.assign(m, nan);
    for (std::size_t j = 0; j < m; ++j) {
        const double w2 = d.linewidth_mm[1][j];
        if (!(std::abs(w2) > tiny)) continue;
        double g_sum = 0.0;
        double weight = 0.5;
        for (std::size_t r = 0; r < nr; ++r, weight *= 0.5) {
            const double wn = d.linewidth_mm[r][j];
            g_sum += weight * wn / w2;
            if (r != 1 && wn / w2 > 0.0) d.E_n[r][j] = std::log(wn / w2);
        }
        d.G_values[j] = g_sum;
        for (std::size_t r = 2; r < nr; ++r) {
            const double den = d.linewidth_mm[r - 1][j];
            if (std::abs(den) > tiny) d.linewidth_ratio[r][j] = (d.linewidth_mm[r][j] + d.linewidth_mm[r - 2][j]) / den;
        }
    }
    d.dG_values = finite_difference(d.gamma_grid, d.G_values);
    return d;
}

} // namespace jcdpt
