#include <gtest/gtest.h>

#include <random>

#include "jcdpt/spectrum.hpp"
#include "jcdpt/steadystate.hpp"
#include "oracles.hpp"

using namespace jcdpt;

TEST(SteadyState, VacuumWithoutPump) {
    const SystemParams p = SystemParams{}.with_pump(0.0);
    const auto ss = solve_steady_state(full_liouvillian(p, FockTruncation(3)));
    EXPECT_NEAR(std::abs(ss.rho(0, 0) - 1.0), 0.0, 1e-12);
    EXPECT_NEAR(ss.photon_number, 0.0, 1e-12);
    EXPECT_NEAR(ss.exciton_population, 0.0, 1e-12);
}

TEST(SteadyState, PumpedEmitterAlone) {
    // With g → 0 the emitter is a two-level system with up rate P_x and down rate γ_x.
    SystemParams p;
    p.g = 1e-12;
    p.gamma_theta = 0.0;
    const auto ss = solve_steady_state(full_liouvillian(p, FockTruncation(2)));
    EXPECT_NEAR(ss.exciton_population, p.pump / (p.pump + p.gamma_x), 1e-9);
    EXPECT_NEAR(ss.photon_number, 0.0, 1e-12);
}

TEST(SteadyState, MatchesLongTimeEvolution) {
    const SystemParams p;
    const FockTruncation t(5);
    const auto ss = solve_steady_state(full_liouvillian(p, t));
    const auto m = oracle::build(p, 5, 0.5 * p.gamma_theta);
    const auto rho = oracle::steady_state(m, 6000.0, 0.25);
    const double max_diff = (ss.rho - rho).cwiseAbs().maxCoeff();
    EXPECT_LT(max_diff, 1e-8);
    const double n_oracle = (m.a.adjoint() * m.a * rho).trace().real();
    EXPECT_NEAR(ss.photon_number, n_oracle, 1e-6 * n_oracle);
}

TEST(SteadyState, Invariants) {
    const auto ss = solve_steady_state(full_liouvillian(SystemParams{}, FockTruncation(6)));
    EXPECT_LT(ss.residual, 1e-10);
    EXPECT_NEAR(ss.trace, 1.0, 1e-12);
    EXPECT_GT(ss.min_eigenvalue, -1e-12);
    EXPECT_NEAR((ss.rho - ss.rho.adjoint()).norm(), 0.0, 1e-15);
    const auto pops = photon_distribution(ss.rho, ss.trunc);
    double total = 0.0;
    for (double v : pops) total += v;
    EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(SteadyState, DegenerateNullSpaceIsRejected) {
    SystemParams p;
    p.kappa = p.gamma_x = p.pump = p.gamma_theta = 0.0;
    EXPECT_THROW(solve_steady_state(full_liouvillian(p, FockTruncation(2))), NonUniqueSteadyState);
}

TEST(SteadyState, RequiresFullGenerator) {
    const auto l = gain_free_liouvillian(SystemParams{}, FockTruncation(2), PhononPrefactor::half_rate);
    EXPECT_THROW(solve_steady_state(l), ConfigError);
}

TEST(SteadyState, AdaptiveTruncation) {
    const auto ad = choose_truncation(SystemParams{});
    EXPECT_LT(ad.top_population, 1e-8);
    EXPECT_GE(ad.trunc.n_max, 3);
    TruncationPolicy strict;
    strict.max = 3;
    strict.tolerance = 1e-30;
    EXPECT_THROW(choose_truncation(SystemParams{}, strict), NoConvergence);
}

TEST(Spectrum, BareCavityLorentzian) {
    SystemParams p;
    p.g = 1e-12;
    p.gamma_theta = p.gamma_x = p.pump = 0.0;
    const FockTruncation t(2);
    DensityMatrix one = DensityMatrix::Zero(t.dim(), t.dim());
    one(FockTruncation::index(1, 0), FockTruncation::index(1, 0)) = 1.0;
    const auto modes = correlation_transfer(full_liouvillian(p, t), one);
    for (double dw : {0.0, 0.01, -0.03, 0.2}) {
        const double expected = p.kappa / (dw * dw + 0.25 * p.kappa * p.kappa);
        EXPECT_NEAR(modes.spectrum_at(p.omega_c + dw), expected, 1e-8 * expected);
    }
    EXPECT_NEAR(std::abs(modes.correlation(10.0) - std::exp(-0.5 * p.kappa * 10.0)), 0.0, 1e-10);
}

TEST(Spectrum, EqualTimeCorrelationIsPhotonNumber) {
    const SystemParams p;
    const FockTruncation t(5);
    const auto l = full_liouvillian(p, t);
    const auto ss = solve_steady_state(l);
    const auto modes = correlation_transfer(l, ss.rho);
    EXPECT_NEAR(std::abs(modes.equal_time() - ss.photon_number), 0.0, 1e-10 * ss.photon_number);
    EXPECT_LT(modes.reconstruction_error, 1e-8);
}

TEST(Spectrum, ModalAgreesWithResolvent) {
    const SystemParams p;
    const FockTruncation t(5);
    const auto l = full_liouvillian(p, t);
    const auto ss = solve_steady_state(l);
    const auto modes = correlation_transfer(l, ss.rho);
    const std::vector<double> w{p.omega_c - 0.2, p.omega_c - 0.09, p.omega_c, p.omega_c + 0.05};
    const auto r = resolvent_spectrum(l, ss.rho, w);
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(modes.spectrum_at(w[i]), r[i], 1e-9 * std::abs(r[i]));
}

TEST(Spectrum, ResolventMatchesTimeDomainTransform) {
    const SystemParams p;
    const FockTruncation t(5);
    const auto l = full_liouvillian(p, t);
    const auto ss = solve_steady_state(l);
    const auto m = oracle::build(p, 5, 0.5 * p.gamma_theta);
    const double dt = 0.25;
    const auto g = oracle::correlation(m, ss.rho, dt, std::size_t(1) << 16);
    const auto ref = oracle::spectrum_from_correlation(g, dt);

    std::vector<double> w;
    std::vector<double> s_oracle;
    for (std::size_t j = 0; j < ref.omega.size(); ++j) {
        if (std::abs(ref.omega[j]) <= 0.4 && j % 8 == 0) {
            w.push_back(p.omega_c + ref.omega[j]);
            s_oracle.push_back(ref.value[j]);
        }
    }
    const auto s = resolvent_spectrum(l, ss.rho, w);
    double smax = 0.0, dmax = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        smax = std::max(smax, s[i]);
        dmax = std::max(dmax, std::abs(s[i] - s_oracle[i]));
    }
    EXPECT_LT(dmax / smax, 5e-3);
}

TEST(Spectrum, SumRuleOnRandomParameters) {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    GridSpec grid{2.0, 8001};
    for (int k = 0; k < 5; ++k) {
        SystemParams p;
        p.g = 0.08 + 0.07 * u(rng);
        p.kappa = 0.01 + 0.02 * u(rng);
        p.gamma_x = 0.005 + 0.015 * u(rng);
        p.pump = 0.001 + 0.004 * u(rng);
        p.gamma_theta = 0.3 * u(rng);
        p = p.with_delta(-0.1 + 0.2 * u(rng));
        const auto s = emission_spectrum(p, grid);
        EXPECT_NEAR(s.sum_rule_ratio(), 1.0, 0.01) << "set " << k;
    }
}

TEST(Spectrum, TruncationStability) {
    const SystemParams p;
    const auto s0 = emission_spectrum(p);
    SpectrumOptions opt;
    opt.n_max = s0.trunc.n_max + 2;
    const auto s1 = emission_spectrum(p, {}, opt);
    double dmax = 0.0;
    for (std::size_t i = 0; i < s0.values.size(); ++i) dmax = std::max(dmax, std::abs(s0.values[i] - s1.values[i]));
    EXPECT_LT(dmax / s0.max_value(), 1e-4);
}

TEST(Spectrum, RejectsNarrowGrid) {
    EXPECT_THROW(emission_spectrum(SystemParams{}, GridSpec{0.1, 101}), ConfigError);
    EXPECT_THROW(emission_spectrum(SystemParams{}, GridSpec{0.6, 2}), ConfigError);
}

TEST(Spectrum, ResonantTripletShape) {
    const SystemParams p;
    const auto s = emission_spectrum(p);
    const auto peaks = extract_peaks(s, 0.01);
    ASSERT_EQ(peaks.size(), 3u);
    EXPECT_NEAR(peaks[1].position, p.omega_c, 1e-9);
    EXPECT_NEAR(peaks[0].position - p.omega_c, -(peaks[2].position - p.omega_c), 1e-9);
    EXPECT_NEAR(peaks[0].prominence, peaks[2].prominence, 1e-9 * peaks[0].prominence);
    EXPECT_NEAR(peaks[0].fwhm, peaks[2].fwhm, 1e-9);
}

TEST(Spectrum, DoubletWithoutPhonons) {
    const SystemParams p = SystemParams{}.with_gamma_theta(0.0);
    const auto peaks = extract_peaks(emission_spectrum(p), 0.01);
    ASSERT_EQ(peaks.size(), 2u);
    EXPECT_NEAR(peaks[1].position - peaks[0].position, 2.0 * p.g, 0.05 * p.g);
}

namespace {

double lorentz(double x, double x0, double hw) { return hw * hw / ((x - x0) * (x - x0) + hw * hw); }

} // namespace

TEST(Peaks, SyntheticLorentzians) {
    std::vector<double> x, y;
    for (int i = 0; i <= 20000; ++i) {
        const double xi = -1.0 + 2.0 * i / 20000.0;
        x.push_back(xi);
        y.push_back(lorentz(xi, -0.5, 0.02) + 0.5 * lorentz(xi, 0.1234, 0.01) + 0.002 * lorentz(xi, 0.7, 0.01));
    }
    const auto all = extract_peaks(x, y, 1e-3);
    ASSERT_EQ(all.size(), 3u);
    EXPECT_NEAR(all[0].position, -0.5, 1e-6);
    EXPECT_NEAR(all[1].position, 0.1234, 1e-6);
    EXPECT_NEAR(all[0].fwhm, 0.04, 0.04 * 0.01);
    EXPECT_NEAR(all[1].fwhm, 0.02, 0.02 * 0.02);
    EXPECT_NEAR(all[1].height, 0.5 + 0.002 * lorentz(0.1234, 0.7, 0.01) + lorentz(0.1234, -0.5, 0.02), 1e-5);
    EXPECT_EQ(extract_peaks(x, y, 0.01).size(), 2u);
}

TEST(Peaks, Degenerate) {
    EXPECT_TRUE(extract_peaks({0, 1, 2, 3}, {0, 1, 2, 3}).empty());
    EXPECT_TRUE(extract_peaks({0, 1}, {1, 0}).empty());
    EXPECT_THROW(extract_peaks({0, 1, 2}, {0, 1}), ConfigError);
    // Plateaus are not strict maxima.
    EXPECT_TRUE(extract_peaks({0, 1, 2, 3}, {0, 1, 1, 0}).empty());
}
