#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "eepn/channel.hpp"
#include "eepn/constellation.hpp"
#include "eepn/error.hpp"
#include "eepn/fft.hpp"
#include "eepn/metrics.hpp"

using namespace eepn;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

LinkConfig small_link() {
    LinkConfig c;
    c.n_symbols = std::size_t{1} << 14;
    c.n_discard = 2000;
    c.n_realizations = 1;
    return c;
}

std::vector<cplx> random_signal(std::size_t n, std::uint64_t seed) {
    RngStream r(seed, 0);
    std::vector<cplx> v(n);
    for (auto& x : v) x = complex_gaussian(r, 1.0);
    return v;
}

double energy(const std::vector<cplx>& v) {
    double e = 0.0;
    for (const auto& x : v) e += std::norm(x);
    return e;
}

std::vector<cplx> cd_transfer(std::size_t m, double dt, const LinkConfig& c, bool conjugate) {
    std::vector<cplx> h(m);
    const auto f = bin_frequencies(m, dt);
    for (std::size_t i = 0; i < m; ++i) {
        const double phi = cd_phase(f[i], c.dispersion_ps_nm_km, c.length_km, c.center_frequency_thz);
        h[i] = std::polar(1.0, conjugate ? phi : -phi);
    }
    return h;
}

}  // namespace

TEST(Fft, MatchesNaiveDft) {
    for (std::size_t m : {1U, 2U, 8U, 12U, 17U, 64U, 100U}) {
        const auto x = random_signal(m, m);
        std::vector<cplx> expected(m);
        for (std::size_t k = 0; k < m; ++k) {
            for (std::size_t n = 0; n < m; ++n) {
                const double a = -2.0 * std::numbers::pi * static_cast<double>(k * n % m) / static_cast<double>(m);
                expected[k] += x[n] * std::polar(1.0, a);
            }
        }
        auto y = x;
        Fft::forward(y);
        for (std::size_t k = 0; k < m; ++k) EXPECT_LT(std::abs(y[k] - expected[k]), 1e-11 * std::sqrt(m)) << m;
        Fft::inverse(y);
        for (std::size_t k = 0; k < m; ++k) EXPECT_LT(std::abs(y[k] - x[k]), 1e-13) << m;
    }
}

TEST(Rrc, CentreEdgeAndHalfPower) {
    const double baud = 49e9;
    const double ts = 1.0 / baud;
    for (double beta : {0.01, 0.1, 0.5, 1.0}) {
        EXPECT_NEAR(rrc_amplitude(0.0, baud, beta), std::sqrt(ts), 1e-15);
        EXPECT_EQ(rrc_amplitude(baud * (1.0 + beta) / 2.0 * (1.0 + 1e-9), baud, beta), 0.0);
        EXPECT_NEAR(rrc_amplitude(baud / 2.0, baud, beta), std::sqrt(ts / 2.0), 1e-12 * std::sqrt(ts));
        EXPECT_NEAR(rrc_amplitude(-0.3 * baud, baud, beta), rrc_amplitude(0.3 * baud, baud, beta), 1e-20);
    }
}

TEST(Rrc, FoldedSpectrumIsFlat) {
    const double baud = 49e9;
    const double ts = 1.0 / baud;
    for (double beta : {0.01, 0.3, 1.0}) {
        for (int i = 0; i <= 100; ++i) {
            const double f = baud * i / 100.0;
            const double a = rrc_amplitude(f, baud, beta);
            const double b = rrc_amplitude(f - baud, baud, beta);
            EXPECT_NEAR((a * a + b * b) / ts, 1.0, 1e-12);
        }
    }
}

TEST(Dispersion, ZeroCases) {
    EXPECT_EQ(cd_phase(0.0, 20.6, 6600.0, 194.0), 0.0);
    EXPECT_EQ(cd_phase(10e9, 0.0, 6600.0, 194.0), 0.0);
    EXPECT_EQ(cd_phase(10e9, 20.6, 0.0, 194.0), 0.0);
}

TEST(Dispersion, UnitConversionOracle) {
    // SI: D in s/m^2, L in m, f0 in Hz.
    const double d_si = 20.6 * 1e-12 / (1e-9 * 1e3);
    const double l_si = 6600.0 * 1e3;
    const double f = 24.5e9;
    const double f0 = 194e12;
    const double si = std::numbers::pi * kSpeedOfLight * d_si * l_si * f * f / (f0 * f0);
    // Mixed: D L in ps/nm, f in GHz, f0 in THz. ps/nm = 1e-3 s/m; GHz^2/THz^2 = 1e-6.
    const double mixed = std::numbers::pi * kSpeedOfLight * (20.6 * 6600.0 * 1e-3) * (24.5 * 24.5 / (194.0 * 194.0)) * 1e-6;
    const double got = cd_phase(f, 20.6, 6600.0, 194.0);
    EXPECT_NEAR(got / si, 1.0, 1e-12);
    EXPECT_NEAR(got / mixed, 1.0, 1e-12);
}

TEST(Transfer, IdentityAllPassInversionAndParseval) {
    const std::size_t m = 4096;
    const auto s = random_signal(m, 3);
    auto y = s;
    const std::vector<cplx> ones(m, cplx(1.0, 0.0));
    apply_transfer(y, ones);
    for (std::size_t i = 0; i < m; ++i) ASSERT_LT(std::abs(y[i] - s[i]), 1e-12);

    LinkConfig c;
    const double dt = c.sample_period();
    const auto h = cd_transfer(m, dt, c, false);
    const auto hc = cd_transfer(m, dt, c, true);
    y = s;
    apply_transfer(y, h);
    EXPECT_NEAR(energy(y) / energy(s), 1.0, 1e-10);
    apply_transfer(y, hc);
    double err = 0.0;
    for (std::size_t i = 0; i < m; ++i) err = std::max(err, std::abs(y[i] - s[i]));
    EXPECT_LT(err, 1e-10);

    EXPECT_THROW(apply_transfer(y, std::vector<cplx>(m - 1)), ConfigError);
}

TEST(Bins, FftOrder) {
    const auto f = bin_frequencies(8, 0.125);
    const std::vector<double> expected{0, 1, 2, 3, -4, -3, -2, -1};
    ASSERT_EQ(f.size(), 8U);
    for (std::size_t i = 0; i < 8; ++i) EXPECT_DOUBLE_EQ(f[i], expected[i]);
}

TEST(Ase, SnrConversionAndVariance) {
    EXPECT_NEAR(ase_only_snr_db(20.0, 49e9), 20.0 + 10.0 * std::log10(12.5 / 49.0), 1e-12);
    EXPECT_NEAR(ase_only_snr_db(20.0, 49e9), 14.0668, 1e-3);
    EXPECT_NEAR(ase_only_snr_db(20.0, 98e9), 20.0 + 10.0 * std::log10(12.5 / 98.0), 1e-12);
    EXPECT_NEAR(ase_only_snr_db(20.0, 98e9), 11.07, 0.015);
    EXPECT_NEAR(ase_only_snr_db(20.0, 49e9) - ase_only_snr_db(20.0, 98e9), 3.0103, 1e-4);
    EXPECT_EQ(ase_variance(kInf, 49e9, 2), 0.0);
    EXPECT_NEAR(ase_variance(20.0, 49e9, 2, 2.0), 2.0 * 49.0 / (100.0 * 12.5), 1e-15);
}

TEST(Config, ValidationAndJson) {
    LinkConfig c = small_link();
    EXPECT_NO_THROW(c.validate());
    LinkConfig bad = c;
    bad.oversampling = 1;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = c;
    bad.n_discard = c.n_symbols / 2;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = c;
    bad.lw_lo_hz = -1.0;
    EXPECT_THROW(bad.validate(), ConfigError);

    c.osnr_db = kInf;
    nlohmann::json j = c;
    LinkConfig back = j.get<LinkConfig>();
    EXPECT_TRUE(std::isinf(back.osnr_db));
    EXPECT_EQ(back.n_symbols, c.n_symbols);
    EXPECT_THROW((nlohmann::json{{"lenght_km", 1}}.get<LinkConfig>()), ConfigError);
}

TEST(Chain, TransparentWithoutImpairments) {
    LinkConfig c = small_link();
    c.length_km = 0.0;
    c.lw_lo_hz = 0.0;
    c.osnr_db = kInf;
    c.signal_power = 2.0;
    const auto rec = simulate_link(c, build_qam(64), RngStream(1, 1));
    ASSERT_EQ(rec.size(), c.kept_symbols());
    double err = 0.0;
    for (std::size_t k = 0; k < rec.size(); ++k) err = std::max(err, std::abs(rec.y[k] - std::sqrt(2.0) * rec.x[k]));
    EXPECT_LT(err, 1e-10);
}

TEST(Chain, DispersionIsFullyCompensated) {
    LinkConfig c = small_link();
    c.lw_lo_hz = 0.0;
    c.osnr_db = kInf;
    const auto rec = simulate_link(c, build_qam(16), RngStream(1, 2));
    double err = 0.0;
    for (std::size_t k = 0; k < rec.size(); ++k) err = std::max(err, std::abs(rec.y[k] - rec.x[k]));
    EXPECT_LT(err, 1e-10);
}

TEST(Chain, AseScalesWithOsnr) {
    LinkConfig c = small_link();
    c.lw_lo_hz = 0.0;
    const auto real = realize_link(c, build_qam(64), RngStream(2, 2));
    const auto a = real.at_osnr(20.0);
    const auto b = real.at_osnr(23.0);
    EXPECT_NEAR(sample_variance(a.n) / ase_variance(20.0, c.baud, 2), 1.0, 0.05);
    for (std::size_t k = 0; k < a.size(); k += 97) {
        EXPECT_NEAR(std::abs(b.n[k]) / std::abs(a.n[k]), std::pow(10.0, -0.15), 1e-9);
    }
    const auto clean = real.at_osnr(kInf);
    for (std::size_t k = 0; k < clean.size(); k += 97) EXPECT_EQ(clean.n[k], cplx(0.0, 0.0));
}

TEST(Chain, TransmitterPhaseNoiseCreatesNegligibleEepn) {
    LinkConfig c = small_link();
    c.osnr_db = kInf;
    c.lw_tx_hz = 200e3;
    c.lw_lo_hz = 0.0;
    const auto tx = simulate_link(c, build_qam(64), RngStream(3, 3));
    std::swap(c.lw_tx_hz, c.lw_lo_hz);
    const auto lo = simulate_link(c, build_qam(64), RngStream(3, 3));
    const double tx_var = sample_variance(extract_eepn(tx));
    const double lo_var = sample_variance(extract_eepn(lo));
    EXPECT_LT(tx_var, 0.01 * lo_var);
}

TEST(Chain, NoDispersionLeavesOnlyBandLimitLeakage) {
    LinkConfig c = small_link();
    c.length_km = 0.0;
    c.osnr_db = kInf;
    for (double lw : {1e3, 2e5, 1e6}) {
        c.lw_lo_hz = lw;
        const auto rec = simulate_link(c, build_qam(64), RngStream(4, 4));
        LinkConfig dispersive = c;
        dispersive.length_km = 6600.0;
        EXPECT_LT(sample_variance(extract_eepn(rec)), 0.01 * analytic_eepn_variance(dispersive, lw)) << lw;
    }
    c.lw_lo_hz = 1e3;
    const auto rec = simulate_link(c, build_qam(64), RngStream(4, 5));
    EXPECT_LT(sample_variance(extract_eepn(rec)), 1e-6);
}

TEST(Chain, SameStreamSameRealization) {
    LinkConfig c = small_link();
    const auto a = simulate_link(c, build_qam(64), RngStream(5, 5));
    const auto b = simulate_link(c, build_qam(64), RngStream(5, 5));
    EXPECT_EQ(a.y, b.y);
    EXPECT_EQ(a.phi_lo, b.phi_lo);
}
