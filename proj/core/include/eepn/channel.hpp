#pragma once

#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "eepn/constellation.hpp"
#include "eepn/stochastic.hpp"

namespace eepn {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kOsnrReferenceBandwidth = 12.5e9;  // Hz, 0.1 nm at 1550 nm

/// Physical and system parameters of one link operating point.
struct LinkConfig {
    double dispersion_ps_nm_km = 20.6;
    double length_km = 6600.0;
    double center_frequency_thz = 194.0;
    double baud = 49e9;
    double rolloff = 0.01;
    double lw_tx_hz = 0.0;
    double lw_lo_hz = 200e3;
    double osnr_db = 20.0;  // dB / 0.1 nm; +inf disables ASE
    std::size_t n_symbols = std::size_t{1} << 17;
    std::size_t n_realizations = 10;
    std::size_t n_discard = 15000;  // per edge
    std::size_t oversampling = 2;
    double signal_power = 1.0;  // P

    double symbol_period() const { return 1.0 / baud; }
    double sample_period() const { return 1.0 / (baud * static_cast<double>(oversampling)); }
    std::size_t kept_symbols() const { return n_symbols - 2 * n_discard; }
    /// Throws ConfigError when an invariant is violated.
    void validate() const;
};

void to_json(nlohmann::json& j, const LinkConfig& c);
/// Missing keys keep their current values, so `from_json` layers onto defaults.
void from_json(const nlohmann::json& j, LinkConfig& c);

/// Aligned per-symbol ground truth of one realization, edges trimmed.
struct ReceptionRecord {
    std::vector<cplx> x;          // transmitted symbols
    std::vector<double> phi_tx;   // TX laser phase at symbol instants (rad)
    std::vector<double> phi_lo;   // LO phase at symbol instants (rad)
    std::vector<cplx> n;          // ASE after LO rotation and matched filter
    std::vector<cplx> y;          // CPR input
    LinkConfig config;

    std::size_t size() const noexcept { return y.size(); }
    /// Total laser phase phi_tx + phi_lo per symbol.
    std::vector<double> laser_phase() const;
};

/// Noise-free received waveform plus a unit-variance ASE draw, both taken
/// at symbol instants. Because the chain is linear in the ASE, any OSNR is
/// obtained by scaling the same noise draw, which gives common random
/// numbers across OSNR points.
struct LinkRealization {
    std::vector<cplx> x;
    std::vector<double> phi_tx;
    std::vector<double> phi_lo;
    std::vector<cplx> y_signal;  // sqrt(P) scaled, no ASE
    std::vector<cplx> n_unit;    // ASE at unit post-filter variance
    LinkConfig config;

    ReceptionRecord at_osnr(double osnr_db) const;
};

/// Root-raised-cosine amplitude with H(0) = sqrt(Ts); |H|^2 / Ts is the
/// Nyquist raised cosine.
double rrc_amplitude(double f, double baud, double rolloff);

/// Dispersion phase pi c D L f^2 / f0^2 in radians, D in ps/nm/km, L in km,
/// f0 in THz.
double cd_phase(double f, double dispersion_ps_nm_km, double length_km, double center_frequency_thz);

/// Circular convolution: data <- IDFT(DFT(data) * transfer).
void apply_transfer(std::span<cplx> data, std::span<const cplx> transfer);

/// DFT bin frequencies in Hz for a block of `size` samples at spacing `dt`,
/// in FFT order (non-negative first).
std::vector<double> bin_frequencies(std::size_t size, double dt);

/// Post-matched-filter ASE variance P B / (OSNR B_ref), single polarization.
/// The simulated matched filter has unit noise gain, so this is also the
/// per-sample variance injected on the oversampled grid, for any
/// oversampling factor.
double ase_variance(double osnr_db, double baud, std::size_t oversampling, double signal_power = 1.0);

/// ASE-only SNR in dB: OSNR + 10 log10(B_ref / B).
double ase_only_snr_db(double osnr_db, double baud);

/// Independent sub-streams used by one realization.
enum class StreamPurpose : std::uint64_t { Symbols = 1, TxPhase = 2, LoPhase = 3, Ase = 4 };

/// Runs the baseband chain on one oversampled block: upsample, RRC, TX phase,
/// dispersion, LO phase, matched filter with dispersion compensation,
/// sampling at oversample index 0 of each symbol, edge trimming. The ASE
/// path (added before the LO) is propagated separately through the same LO
/// rotation and matched filter.
LinkRealization realize_link(const LinkConfig& config, const ConstellationSpec& constellation, const RngStream& rng);

/// One realization at `config.osnr_db`.
ReceptionRecord simulate_link(const LinkConfig& config, const ConstellationSpec& constellation, const RngStream& rng);

}  // namespace eepn
