#include "eepn/cpr.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "eepn/error.hpp"

namespace eepn {

namespace {

constexpr double kQuarterTurn = std::numbers::pi / 2.0;
constexpr double kEighthTurn = std::numbers::pi / 4.0;

// Window bounds [first, last) of a centred block clipped to [0, size).
struct Window {
    std::size_t first;
    std::size_t last;
};

Window clipped_window(std::size_t k, std::size_t half, std::size_t size) {
    return {k >= half ? k - half : 0, std::min(size, k + half + 1)};
}

}  // namespace

std::string_view to_string(CprAlgorithm algorithm) {
    switch (algorithm) {
        case CprAlgorithm::LoCancel: return "lo";
        case CprAlgorithm::Idr: return "idr";
        case CprAlgorithm::Bps: return "bps";
    }
    return "?";
}

CprAlgorithm parse_cpr_algorithm(std::string_view text) {
    if (text == "lo") return CprAlgorithm::LoCancel;
    if (text == "idr") return CprAlgorithm::Idr;
    if (text == "bps") return CprAlgorithm::Bps;
    throw ConfigError("unknown CPR algorithm '" + std::string(text) + "' (expected lo, idr or bps)");
}

std::size_t CprSpec::half_window_for(std::size_t window) {
    if (window % 2 == 0) throw ConfigError("CPR window must be odd, got " + std::to_string(window));
    return window / 2;
}

void CprSpec::validate() const {
    if (algorithm == CprAlgorithm::Bps && n_test_phases < 2) throw ConfigError("BPS needs at least 2 test phases");
}

std::vector<cplx> apply_cpr(std::span<const cplx> y, std::span<const double> phi_hat) {
    if (y.size() != phi_hat.size()) throw ConfigError("apply_cpr: length mismatch");
    std::vector<cplx> out(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) out[k] = y[k] * std::polar(1.0, -phi_hat[k]);
    return out;
}

CprResult lo_cancellation(const ReceptionRecord& record) {
    CprResult result;
    result.spec.algorithm = CprAlgorithm::LoCancel;
    result.spec.half_window = 0;
    result.phi_hat = record.laser_phase();
    result.y_hat = apply_cpr(record.y, result.phi_hat);
    return result;
}

CprResult idr_estimate(const ReceptionRecord& record, const CprSpec& spec) {
    const std::size_t size = record.size();
    const std::size_t half = spec.half_window;
    std::vector<cplx> products(size);
    for (std::size_t k = 0; k < size; ++k) products[k] = record.y[k] * std::conj(record.x[k]);

    CprResult result;
    result.spec = spec;
    result.spec.algorithm = CprAlgorithm::Idr;
    result.phi_hat.resize(size);
    cplx sum{};
    for (std::size_t k = 0; k < size; ++k) {
        const auto w = clipped_window(k, half, size);
        if (k % BpsDistanceTable::kRefreshInterval == 0) {
            sum = {};
            for (std::size_t m = w.first; m < w.last; ++m) sum += products[m];
        } else {
            if (k + half < size) sum += products[k + half];
            if (k > half) sum -= products[k - half - 1];
        }
        result.phi_hat[k] = std::arg(sum);
    }
    result.y_hat = apply_cpr(record.y, result.phi_hat);
    return result;
}

std::vector<double> bps_test_phases(std::size_t n_test) {
    std::vector<double> phases(n_test);
    for (std::size_t b = 0; b < n_test; ++b) {
        phases[b] = -kEighthTurn + static_cast<double>(b) * kQuarterTurn / static_cast<double>(n_test);
    }
    return phases;
}

BpsDistanceTable::BpsDistanceTable(std::span<const cplx> y, const ConstellationSpec& constellation,
                                   std::size_t n_test, double signal_power)
    : symbols_(y.size()), n_test_(n_test), distances_(y.size() * n_test) {
    if (n_test < 2) throw ConfigError("BPS needs at least 2 test phases");
    const SquareSlicer slicer(constellation, std::sqrt(signal_power));
    std::vector<cplx> rotators(n_test);
    const auto phases = bps_test_phases(n_test);
    for (std::size_t b = 0; b < n_test; ++b) rotators[b] = std::polar(1.0, -phases[b]);
    for (std::size_t k = 0; k < symbols_; ++k) {
        double* row = &distances_[k * n_test_];
        for (std::size_t b = 0; b < n_test_; ++b) row[b] = slicer.min_distance2(y[k] * rotators[b]);
    }
}

std::vector<std::size_t> BpsDistanceTable::select(std::size_t half_window) const {
    std::vector<std::size_t> chosen(symbols_);
    std::vector<double> sums(n_test_, 0.0);
    const auto add_row = [&](std::size_t k, double sign) {
        const double* row = &distances_[k * n_test_];
        for (std::size_t b = 0; b < n_test_; ++b) sums[b] += sign * row[b];
    };
    for (std::size_t k = 0; k < symbols_; ++k) {
        if (k % kRefreshInterval == 0) {
            std::fill(sums.begin(), sums.end(), 0.0);
            const auto w = clipped_window(k, half_window, symbols_);
            for (std::size_t m = w.first; m < w.last; ++m) add_row(m, 1.0);
        } else {
            if (k + half_window < symbols_) add_row(k + half_window, 1.0);
            if (k > half_window) add_row(k - half_window - 1, -1.0);
        }
        std::size_t best = 0;
        for (std::size_t b = 1; b < n_test_; ++b) {
            if (sums[b] < sums[best]) best = b;
        }
        chosen[k] = best;
    }
    return chosen;
}

std::vector<double> bps_unwrap(std::span<const std::size_t> selection, std::size_t n_test) {
    const auto grid = bps_test_phases(n_test);
    std::vector<double> phase(selection.size());
    double previous = 0.0;
    for (std::size_t k = 0; k < selection.size(); ++k) {
        const double theta = grid[selection[k]];
        phase[k] = k == 0 ? theta : theta + kQuarterTurn * std::round((previous - theta) / kQuarterTurn);
        previous = phase[k];
    }
    return phase;
}

CprResult bps_estimate(std::span<const cplx> y, const ConstellationSpec& constellation, const CprSpec& spec,
                       double signal_power) {
    spec.validate();
    const BpsDistanceTable table(y, constellation, spec.n_test_phases, signal_power);
    CprResult result;
    result.spec = spec;
    result.spec.algorithm = CprAlgorithm::Bps;
    result.phi_hat = bps_unwrap(table.select(spec.half_window), spec.n_test_phases);
    result.y_hat = apply_cpr(y, result.phi_hat);
    return result;
}

CprResult bps_estimate(const ReceptionRecord& record, const ConstellationSpec& constellation, const CprSpec& spec) {
    return bps_estimate(record.y, constellation, spec, record.config.signal_power);
}

std::vector<double> genie_slip_removal(std::span<const double> phi_hat, std::span<const double> reference) {
    if (phi_hat.size() != reference.size()) throw ConfigError("genie_slip_removal: length mismatch");
    std::vector<double> out(phi_hat.size());
    for (std::size_t k = 0; k < phi_hat.size(); ++k) {
        const double diff = phi_hat[k] - reference[k];
        double turns = -std::round(diff / kQuarterTurn);
        double residual = diff + turns * kQuarterTurn;
        if (residual <= -kEighthTurn) turns += 1.0;
        else if (residual > kEighthTurn) turns -= 1.0;
        out[k] = phi_hat[k] + turns * kQuarterTurn;
    }
    return out;
}

}  // namespace eepn
