#include "eepn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "eepn/error.hpp"

namespace eepn {

std::vector<cplx> extract_eepn(const ReceptionRecord& record) {
    const double amplitude = std::sqrt(record.config.signal_power);
    std::vector<cplx> w(record.size());
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double phase = record.phi_lo[k] + record.phi_tx[k];
        w[k] = record.y[k] - amplitude * record.x[k] * std::polar(1.0, phase) - record.n[k];
    }
    return w;
}

double pooled_variance(std::span<const std::span<const cplx>> blocks) {
    double sum_sq = 0.0;
    double dof = 0.0;
    for (const auto& block : blocks) {
        if (block.size() < 2) continue;
        cplx mean{};
        for (const auto& v : block) mean += v;
        mean /= static_cast<double>(block.size());
        for (const auto& v : block) sum_sq += std::norm(v - mean);
        dof += static_cast<double>(block.size() - 1);
    }
    if (dof == 0.0) throw ConfigError("variance needs at least two samples");
    return sum_sq / dof;
}

double sample_variance(std::span<const cplx> values) {
    const std::span<const cplx> blocks[] = {values};
    return pooled_variance(blocks);
}

double snr_db_from_variance(double variance, double signal_power) {
    return 10.0 * std::log10(signal_power / variance);
}

TotalNoise total_noise(std::span<const cplx> y_hat, const ReceptionRecord& record) {
    if (y_hat.size() != record.size()) throw ConfigError("total_noise: length mismatch");
    const double amplitude = std::sqrt(record.config.signal_power);
    TotalNoise out;
    out.noise.resize(y_hat.size());
    for (std::size_t k = 0; k < y_hat.size(); ++k) out.noise[k] = y_hat[k] - amplitude * record.x[k];
    out.variance = sample_variance(out.noise);
    out.snr_db = snr_db_from_variance(out.variance, record.config.signal_power);
    return out;
}

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

NoiseStats noise_stats(std::span<const cplx> values, std::optional<std::size_t> n_bins) {
    const std::size_t n = values.size();
    if (n < 2) throw ConfigError("noise_stats needs at least two samples");
    NoiseStats stats;
    stats.variance = sample_variance(values);
    if (!(stats.variance > 0.0)) throw ConfigError("noise_stats: degenerate zero-variance input");

    std::vector<double> re(n);
    for (std::size_t i = 0; i < n; ++i) {
        re[i] = values[i].real();
        stats.mean += values[i];
    }
    stats.mean /= static_cast<double>(n);

    double m2 = 0.0;
    double m4 = 0.0;
    const double mu = stats.mean.real();
    for (double v : re) {
        const double d2 = (v - mu) * (v - mu);
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= static_cast<double>(n);
    m4 /= static_cast<double>(n);
    if (!(m2 > 0.0)) throw ConfigError("noise_stats: degenerate real part");
    stats.excess_kurtosis_re = m4 / (m2 * m2) - 3.0;

    const auto [min_it, max_it] = std::minmax_element(re.begin(), re.end());
    const double lo = *min_it;
    const double hi = *max_it;
    std::size_t bins = 0;
    if (n_bins) {
        bins = std::max<std::size_t>(*n_bins, 1);
    } else {
        std::vector<double> sorted = re;
        const auto q1 = sorted.begin() + static_cast<std::ptrdiff_t>(n / 4);
        const auto q3 = sorted.begin() + static_cast<std::ptrdiff_t>((3 * n) / 4);
        std::nth_element(sorted.begin(), q1, sorted.end());
        const double v1 = *q1;
        std::nth_element(sorted.begin(), q3, sorted.end());
        const double iqr = *q3 - v1;
        const double width = 2.0 * iqr / std::cbrt(static_cast<double>(n));
        bins = width > 0.0 ? static_cast<std::size_t>(std::ceil((hi - lo) / width)) : 1;
        bins = std::clamp<std::size_t>(bins, 1, 100000);
    }
    const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
    stats.bin_width = width;
    stats.first_edge = lo;

    std::vector<double> counts(bins, 0.0);
    for (double v : re) {
        auto idx = static_cast<std::size_t>((v - lo) / width);
        counts[std::min(idx, bins - 1)] += 1.0;
    }
    const double sigma = std::sqrt(m2);
    stats.density.resize(bins);
    double l1 = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        const double mass = counts[b] / static_cast<double>(n);
        stats.density[b] = mass / width;
        const double left = lo + static_cast<double>(b) * width;
        const double expected = normal_cdf((left + width - mu) / sigma) - normal_cdf((left - mu) / sigma);
        l1 += std::abs(mass - expected);
    }
    // Gaussian mass outside the histogram support.
    l1 += normal_cdf((lo - mu) / sigma) + (1.0 - normal_cdf((lo + static_cast<double>(bins) * width - mu) / sigma));
    stats.gaussian_fit_error = l1;
    return stats;
}

GaussianBaseline calibrate_gaussian_baseline(std::size_t length, std::size_t trials, RngStream rng,
                                             std::optional<std::size_t> n_bins) {
    if (trials < 2) throw ConfigError("calibration needs at least two trials");
    std::vector<double> errors;
    errors.reserve(trials);
    std::vector<cplx> sample(length);
    for (std::size_t t = 0; t < trials; ++t) {
        for (auto& v : sample) v = complex_gaussian(rng, 1.0);
        errors.push_back(noise_stats(sample, n_bins).gaussian_fit_error);
    }
    GaussianBaseline base;
    for (double e : errors) base.mean += e;
    base.mean /= static_cast<double>(trials);
    for (double e : errors) base.stddev += (e - base.mean) * (e - base.mean);
    base.stddev = std::sqrt(base.stddev / static_cast<double>(trials - 1));
    return base;
}

CrossCorr cross_correlation(std::span<const std::span<const cplx>> w, std::span<const std::span<const cplx>> x,
                            std::span<const std::span<const double>> phi, std::size_t max_lag, std::size_t stride) {
    if (w.size() != x.size() || w.size() != phi.size()) throw ConfigError("cross_correlation: block count mismatch");
    if (stride == 0) throw ConfigError("cross_correlation: stride must be positive");
    for (std::size_t r = 0; r < w.size(); ++r) {
        if (w[r].size() != x[r].size() || w[r].size() != phi[r].size()) {
            throw ConfigError("cross_correlation: sequences are not aligned");
        }
        if (2 * max_lag >= w[r].size()) throw ConfigError("cross_correlation: max_lag must be below half the length");
    }
    CrossCorr out;
    for (std::size_t lag = 0; lag <= max_lag; lag += stride) out.lags.push_back(lag);
    out.values.assign(out.lags.size(), cplx{});

    std::vector<std::vector<cplx>> lhs(w.size());
    std::vector<std::vector<cplx>> field(w.size());
    for (std::size_t r = 0; r < w.size(); ++r) {
        lhs[r].resize(w[r].size());
        field[r].resize(w[r].size());
        for (std::size_t k = 0; k < w[r].size(); ++k) {
            lhs[r][k] = std::conj(w[r][k]) * x[r][k];
            field[r][k] = std::polar(1.0, phi[r][k]);
        }
    }
    for (std::size_t i = 0; i < out.lags.size(); ++i) {
        const std::size_t lag = out.lags[i];
        cplx sum{};
        double count = 0.0;
        for (std::size_t r = 0; r < w.size(); ++r) {
            const std::size_t terms = w[r].size() - lag;
            for (std::size_t k = 0; k < terms; ++k) sum += lhs[r][k] * field[r][k + lag];
            count += static_cast<double>(terms);
        }
        out.values[i] = sum / count;
    }
    out.half_width = half_width_at_half_maximum(out.lags, out.values);
    return out;
}

CrossCorr cross_correlation(std::span<const cplx> w, std::span<const cplx> x, std::span<const double> phi,
                            std::size_t max_lag, std::size_t stride) {
    const std::span<const cplx> ws[] = {w};
    const std::span<const cplx> xs[] = {x};
    const std::span<const double> ps[] = {phi};
    return cross_correlation(ws, xs, ps, max_lag, stride);
}

double half_width_at_half_maximum(std::span<const std::size_t> lags, std::span<const cplx> values) {
    if (values.empty()) return 0.0;
    const double half = 0.5 * std::abs(values.front());
    for (std::size_t i = 1; i < values.size(); ++i) {
        const double a = std::abs(values[i]);
        if (a <= half) {
            const double prev = std::abs(values[i - 1]);
            const double frac = prev > a ? (prev - half) / (prev - a) : 0.0;
            return static_cast<double>(lags[i - 1]) + frac * static_cast<double>(lags[i] - lags[i - 1]);
        }
    }
    return 0.0;
}

double analytic_eepn_variance(const LinkConfig& config, double linewidth) {
    const double d_si = config.dispersion_ps_nm_km * 1e-6;
    const double l_si = config.length_km * 1e3;
    const double f0 = config.center_frequency_thz * 1e12;
    return std::numbers::pi * kSpeedOfLight * d_si * l_si * config.baud * linewidth / (2.0 * f0 * f0);
}

double analytic_snr(double osnr_db, double baud, const LinkConfig& config, double linewidth, bool include_eepn) {
    const double snr_ase = std::pow(10.0, ase_only_snr_db(osnr_db, baud) / 10.0);
    if (!include_eepn) return 10.0 * std::log10(snr_ase);
    LinkConfig at_baud = config;
    at_baud.baud = baud;
    const double eepn = analytic_eepn_variance(at_baud, linewidth);
    return -10.0 * std::log10(1.0 / snr_ase + eepn);
}

}  // namespace eepn
