#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "eepn/channel.hpp"
#include "eepn/constellation.hpp"

namespace eepn {

enum class CprAlgorithm { LoCancel, Idr, Bps };

std::string_view to_string(CprAlgorithm algorithm);
CprAlgorithm parse_cpr_algorithm(std::string_view text);

/// Carrier-phase recovery configuration. The averaging block spans
/// N = 2 l + 1 symbols centred on the estimated symbol.
struct CprSpec {
    CprAlgorithm algorithm = CprAlgorithm::Bps;
    std::size_t half_window = 500;
    std::size_t n_test_phases = 64;

    std::size_t window() const noexcept { return 2 * half_window + 1; }
    /// Half window for an odd block length; throws ConfigError otherwise.
    static std::size_t half_window_for(std::size_t window);
    void validate() const;
};

struct CprResult {
    std::vector<double> phi_hat;
    std::vector<cplx> y_hat;
    CprSpec spec;
};

/// y_k exp(-j phi_k), elementwise.
std::vector<cplx> apply_cpr(std::span<const cplx> y, std::span<const double> phi_hat);

/// Genie estimate: the true laser phase (LO plus TX).
CprResult lo_cancellation(const ReceptionRecord& record);

/// Ideal data remodulation: angle of sum y_m conj(x_m) over the centred
/// window, clipped at the block edges.
CprResult idr_estimate(const ReceptionRecord& record, const CprSpec& spec);

/// Test-phase grid of the phase search, -pi/4 + b (pi/2) / n_test.
std::vector<double> bps_test_phases(std::size_t n_test);

/// Per-symbol, per-test-phase squared decision distances |y e^{-j theta_b} - dec|^2.
///
/// Building the table is the expensive part of the phase search and does not
/// depend on the window, so a window sweep reuses one table.
class BpsDistanceTable {
public:
    BpsDistanceTable(std::span<const cplx> y, const ConstellationSpec& constellation, std::size_t n_test,
                     double signal_power = 1.0);

    std::size_t symbols() const noexcept { return symbols_; }
    std::size_t test_phases() const noexcept { return n_test_; }
    double at(std::size_t k, std::size_t b) const noexcept { return distances_[k * n_test_ + b]; }

    /// Index of the minimizing test phase per symbol for a centred window of
    /// 2 l + 1 symbols, clipped at the edges; ties keep the lowest index.
    /// Window sums are updated incrementally and recomputed from scratch
    /// every `kRefreshInterval` symbols.
    std::vector<std::size_t> select(std::size_t half_window) const;

    static constexpr std::size_t kRefreshInterval = std::size_t{1} << 12;

private:
    std::size_t symbols_;
    std::size_t n_test_;
    std::vector<double> distances_;
};

/// Maps selected test-phase indices to a continuous phase track: each
/// decision is moved by a multiple of pi/2 so consecutive estimates differ by
/// at most pi/4.
std::vector<double> bps_unwrap(std::span<const std::size_t> selection, std::size_t n_test);

/// Blind phase search on y only.
CprResult bps_estimate(std::span<const cplx> y, const ConstellationSpec& constellation, const CprSpec& spec,
                       double signal_power = 1.0);
CprResult bps_estimate(const ReceptionRecord& record, const ConstellationSpec& constellation, const CprSpec& spec);

/// Adds the multiple of pi/2 per symbol that places phi_hat - reference in
/// (-pi/4, pi/4].
std::vector<double> genie_slip_removal(std::span<const double> phi_hat, std::span<const double> reference);

}  // namespace eepn
