#include "eepn/channel.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "eepn/error.hpp"
#include "eepn/fft.hpp"

namespace eepn {

void LinkConfig::validate() const {
    if (oversampling < 2) throw ConfigError("oversampling must be at least 2");
    if (!(rolloff >= 0.0 && rolloff <= 1.0)) throw ConfigError("rolloff must lie in [0, 1]");
    if (n_symbols <= 2 * n_discard) throw ConfigError("n_symbols must exceed 2 * n_discard");
    if (n_realizations == 0) throw ConfigError("n_realizations must be positive");
    if (!(baud > 0.0)) throw ConfigError("baud must be positive");
    if (!(center_frequency_thz > 0.0)) throw ConfigError("center frequency must be positive");
    if (!(lw_tx_hz >= 0.0) || !(lw_lo_hz >= 0.0)) throw ConfigError("linewidths must be non-negative");
    if (!(length_km >= 0.0)) throw ConfigError("length must be non-negative");
    if (!(signal_power > 0.0)) throw ConfigError("signal power must be positive");
    if (std::isnan(osnr_db)) throw ConfigError("osnr_db is NaN");
}

void to_json(nlohmann::json& j, const LinkConfig& c) {
    j = nlohmann::json{{"dispersion_ps_nm_km", c.dispersion_ps_nm_km},
                       {"length_km", c.length_km},
                       {"center_frequency_thz", c.center_frequency_thz},
                       {"baud_hz", c.baud},
                       {"rolloff", c.rolloff},
                       {"lw_tx_hz", c.lw_tx_hz},
                       {"lw_lo_hz", c.lw_lo_hz},
                       {"n_symbols", c.n_symbols},
                       {"n_realizations", c.n_realizations},
                       {"n_discard", c.n_discard},
                       {"oversampling", c.oversampling},
                       {"signal_power", c.signal_power}};
    // JSON has no infinity; a null OSNR means ASE is disabled.
    if (std::isfinite(c.osnr_db)) j["osnr_db"] = c.osnr_db;
    else j["osnr_db"] = nullptr;
}

void from_json(const nlohmann::json& j, LinkConfig& c) {
    static const char* const known[] = {"dispersion_ps_nm_km", "length_km", "center_frequency_thz", "baud_hz",
                                        "rolloff", "lw_tx_hz", "lw_lo_hz", "osnr_db", "n_symbols",
                                        "n_realizations", "n_discard", "oversampling", "signal_power"};
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError("unknown link field '" + key + "'");
    }
    auto read = [&j](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    read("dispersion_ps_nm_km", c.dispersion_ps_nm_km);
    read("length_km", c.length_km);
    read("center_frequency_thz", c.center_frequency_thz);
    read("baud_hz", c.baud);
    read("rolloff", c.rolloff);
    read("lw_tx_hz", c.lw_tx_hz);
    read("lw_lo_hz", c.lw_lo_hz);
    if (j.contains("osnr_db")) {
        c.osnr_db = j.at("osnr_db").is_null() ? std::numeric_limits<double>::infinity()
                                              : j.at("osnr_db").get<double>();
    }
    read("n_symbols", c.n_symbols);
    read("n_realizations", c.n_realizations);
    read("n_discard", c.n_discard);
    read("oversampling", c.oversampling);
    read("signal_power", c.signal_power);
}

std::vector<double> ReceptionRecord::laser_phase() const {
    std::vector<double> phase(phi_lo.size());
    for (std::size_t k = 0; k < phase.size(); ++k) phase[k] = phi_lo[k] + phi_tx[k];
    return phase;
}

ReceptionRecord LinkRealization::at_osnr(double osnr_db) const {
    ReceptionRecord rec;
    rec.x = x;
    rec.phi_tx = phi_tx;
    rec.phi_lo = phi_lo;
    rec.config = config;
    rec.config.osnr_db = osnr_db;
    const double sigma = std::sqrt(ase_variance(osnr_db, config.baud, config.oversampling, config.signal_power));
    rec.n.resize(n_unit.size());
    rec.y.resize(y_signal.size());
    for (std::size_t k = 0; k < rec.y.size(); ++k) {
        rec.n[k] = sigma * n_unit[k];
        rec.y[k] = y_signal[k] + rec.n[k];
    }
    return rec;
}

double rrc_amplitude(double f, double baud, double rolloff) {
    const double ts = 1.0 / baud;
    const double af = std::abs(f);
    const double lower = (1.0 - rolloff) * baud / 2.0;
    const double upper = (1.0 + rolloff) * baud / 2.0;
    if (af <= lower) {
        // An ideal Nyquist filter is halved at the band edge itself.
        if (rolloff == 0.0 && af == lower) return std::sqrt(ts / 2.0);
        return std::sqrt(ts);
    }
    if (af > upper) return 0.0;
    return std::sqrt(ts) * std::cos(std::numbers::pi * ts / (2.0 * rolloff) * (af - lower));
}

double cd_phase(double f, double dispersion_ps_nm_km, double length_km, double center_frequency_thz) {
    const double d_si = dispersion_ps_nm_km * 1e-6;  // s/m^2
    const double l_si = length_km * 1e3;
    const double f0 = center_frequency_thz * 1e12;
    return std::numbers::pi * kSpeedOfLight * d_si * l_si * f * f / (f0 * f0);
}

void apply_transfer(std::span<cplx> data, std::span<const cplx> transfer) {
    if (data.size() != transfer.size()) {
        throw ConfigError("transfer length " + std::to_string(transfer.size()) + " does not match block length " +
                          std::to_string(data.size()));
    }
    Fft::forward(data);
    for (std::size_t m = 0; m < data.size(); ++m) data[m] *= transfer[m];
    Fft::inverse(data);
}

std::vector<double> bin_frequencies(std::size_t size, double dt) {
    std::vector<double> f(size);
    const double df = 1.0 / (static_cast<double>(size) * dt);
    for (std::size_t m = 0; m < size; ++m) {
        const auto signed_m = m < (size + 1) / 2 ? static_cast<double>(m) : static_cast<double>(m) - static_cast<double>(size);
        f[m] = signed_m * df;
    }
    return f;
}

double ase_variance(double osnr_db, double baud, std::size_t /*oversampling*/, double signal_power) {
    if (std::isinf(osnr_db) && osnr_db > 0) return 0.0;
    const double osnr_lin = std::pow(10.0, osnr_db / 10.0);
    return signal_power * baud / (osnr_lin * kOsnrReferenceBandwidth);
}

double ase_only_snr_db(double osnr_db, double baud) {
    return osnr_db + 10.0 * std::log10(kOsnrReferenceBandwidth / baud);
}

namespace {

void rotate(std::span<cplx> data, const std::vector<double>& phases) {
    for (std::size_t n = 0; n < data.size(); ++n) data[n] *= std::polar(1.0, phases[n]);
}

template <typename T>
std::vector<T> decimate_trim(const std::vector<T>& full, std::size_t os, std::size_t n_symbols, std::size_t discard) {
    std::vector<T> out;
    out.reserve(n_symbols - 2 * discard);
    for (std::size_t k = discard; k < n_symbols - discard; ++k) out.push_back(full[k * os]);
    return out;
}

}  // namespace

LinkRealization realize_link(const LinkConfig& config, const ConstellationSpec& constellation, const RngStream& rng) {
    config.validate();
    const std::size_t k_sym = config.n_symbols;
    const std::size_t os = config.oversampling;
    const std::size_t m = k_sym * os;
    const double dt = config.sample_period();

    RngStream sym_rng = rng.child(static_cast<std::uint64_t>(StreamPurpose::Symbols));
    RngStream tx_rng = rng.child(static_cast<std::uint64_t>(StreamPurpose::TxPhase));
    RngStream lo_rng = rng.child(static_cast<std::uint64_t>(StreamPurpose::LoPhase));
    RngStream ase_rng = rng.child(static_cast<std::uint64_t>(StreamPurpose::Ase));

    const auto symbols = sample_symbols(constellation, k_sym, sym_rng);
    const auto tx_path = wiener_path(tx_rng, config.lw_tx_hz, dt, m);
    const auto lo_path = wiener_path(lo_rng, config.lw_lo_hz, dt, m);

    const auto freqs = bin_frequencies(m, dt);
    const bool has_cd = config.dispersion_ps_nm_km != 0.0 && config.length_km != 0.0;
    std::vector<cplx> h_tx(m);  // pulse shaping
    std::vector<cplx> h_cd(m);  // fiber
    std::vector<cplx> h_rx(m);  // dispersion compensation + matched filter
    const double digital_gain = 1.0 / std::sqrt(dt);
    for (std::size_t i = 0; i < m; ++i) {
        const double amp = rrc_amplitude(freqs[i], config.baud, config.rolloff) * digital_gain;
        const double phase =
            has_cd ? cd_phase(freqs[i], config.dispersion_ps_nm_km, config.length_km, config.center_frequency_thz) : 0.0;
        h_tx[i] = amp;
        h_cd[i] = std::polar(1.0, phase);
        h_rx[i] = std::polar(amp, -phase);
    }

    std::vector<cplx> wave(m, cplx{});
    for (std::size_t k = 0; k < k_sym; ++k) wave[k * os] = symbols[k];
    Fft::forward(wave);
    for (std::size_t i = 0; i < m; ++i) wave[i] *= h_tx[i];
    if (config.lw_tx_hz > 0.0) {
        Fft::inverse(wave);
        rotate(wave, tx_path.phases);
        Fft::forward(wave);
    }
    if (has_cd) {
        for (std::size_t i = 0; i < m; ++i) wave[i] *= h_cd[i];
    }
    Fft::inverse(wave);
    if (config.lw_lo_hz > 0.0) rotate(wave, lo_path.phases);
    apply_transfer(wave, h_rx);

    std::vector<cplx> ase(m);
    for (auto& a : ase) a = complex_gaussian(ase_rng, 1.0);
    if (config.lw_lo_hz > 0.0) rotate(ase, lo_path.phases);
    apply_transfer(ase, h_rx);

    LinkRealization out;
    out.config = config;
    const double amplitude = std::sqrt(config.signal_power);
    out.y_signal = decimate_trim(wave, os, k_sym, config.n_discard);
    for (auto& v : out.y_signal) v *= amplitude;
    out.n_unit = decimate_trim(ase, os, k_sym, config.n_discard);
    out.phi_tx = decimate_trim(tx_path.phases, os, k_sym, config.n_discard);
    out.phi_lo = decimate_trim(lo_path.phases, os, k_sym, config.n_discard);
    out.x.assign(symbols.begin() + static_cast<std::ptrdiff_t>(config.n_discard),
                 symbols.end() - static_cast<std::ptrdiff_t>(config.n_discard));
    return out;
}

ReceptionRecord simulate_link(const LinkConfig& config, const ConstellationSpec& constellation, const RngStream& rng) {
    return realize_link(config, constellation, rng).at_osnr(config.osnr_db);
}

}  // namespace eepn
