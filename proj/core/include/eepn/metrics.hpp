#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "eepn/channel.hpp"
#include "eepn/stochastic.hpp"

namespace eepn {

/// w_k = y_k - sqrt(P) x_k e^{j phi_k} - n_k with phi_k the total laser phase.
std::vector<cplx> extract_eepn(const ReceptionRecord& record);

/// Pooled unbiased complex variance: sum over blocks of |v - mean_block|^2
/// divided by sum of (size - 1). Each block is centred on its own mean.
double pooled_variance(std::span<const std::span<const cplx>> blocks);
double sample_variance(std::span<const cplx> values);

struct TotalNoise {
    std::vector<cplx> noise;  // N_k
    double variance = 0.0;
    double snr_db = 0.0;
};

/// Residual after phase recovery, N_k = y_hat_k - sqrt(P) x_k, and
/// SNR = P / Var(N).
TotalNoise total_noise(std::span<const cplx> y_hat, const ReceptionRecord& record);

/// 10 log10(P / variance).
double snr_db_from_variance(double variance, double signal_power = 1.0);

struct NoiseStats {
    double variance = 0.0;
    cplx mean{};
    double excess_kurtosis_re = 0.0;
    double gaussian_fit_error = 0.0;  // L1 between histogram and moment-matched Gaussian
    double bin_width = 0.0;
    double first_edge = 0.0;
    std::vector<double> density;  // normalized histogram of Re, integrates to 1
};

/// Histogram analysis of the real part. Bins follow the Freedman-Diaconis
/// rule unless `n_bins` is given. Throws ConfigError on zero-variance input.
NoiseStats noise_stats(std::span<const cplx> values, std::optional<std::size_t> n_bins = std::nullopt);

/// Gaussianity verdict threshold: the mean plus five standard deviations of
/// the fit error over `trials` synthetic circular Gaussians of the same
/// length and binning rule.
struct GaussianBaseline {
    double mean = 0.0;
    double stddev = 0.0;
    double threshold() const noexcept { return mean + 5.0 * stddev; }
};
GaussianBaseline calibrate_gaussian_baseline(std::size_t length, std::size_t trials, RngStream rng,
                                             std::optional<std::size_t> n_bins = std::nullopt);

struct CrossCorr {
    std::vector<std::size_t> lags;
    std::vector<cplx> values;
    double half_width = 0.0;  // symbols; 0 when |R| never falls to half inside the range
};

/// R_n = <conj(w_k) x_k e^{j phi_{k+n}}> for n = 0, stride, ..., <= max_lag,
/// averaging over all k with k + n inside the block. Multiple blocks are
/// pooled with equal weight per term.
CrossCorr cross_correlation(std::span<const std::span<const cplx>> w, std::span<const std::span<const cplx>> x,
                            std::span<const std::span<const double>> phi, std::size_t max_lag, std::size_t stride = 1);
CrossCorr cross_correlation(std::span<const cplx> w, std::span<const cplx> x, std::span<const double> phi,
                            std::size_t max_lag, std::size_t stride = 1);

/// First lag where |R_n| <= |R_0| / 2, linearly interpolated between samples.
double half_width_at_half_maximum(std::span<const std::size_t> lags, std::span<const cplx> values);

/// Closed-form EEPN variance per unit signal power, pi c D L B dnu / (2 f0^2).
double analytic_eepn_variance(const LinkConfig& config, double linewidth);

/// Equivalent-AWGN SNR in dB: 1 / (1/SNR_ASE + sigma_EEPN^2), or SNR_ASE
/// alone without the EEPN term.
double analytic_snr(double osnr_db, double baud, const LinkConfig& config, double linewidth, bool include_eepn);

}  // namespace eepn
