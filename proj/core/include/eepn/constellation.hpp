#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace eepn {

class RngStream;

using cplx = std::complex<double>;

enum class FormatLabel { QPSK, QAM16, QAM64, PCS64, TPCS64 };

std::string_view to_string(FormatLabel label);
FormatLabel parse_format_label(std::string_view text);

/// Symbol alphabet with per-symbol probabilities, normalized to unit mean
/// power under `probs`.
///
/// Points of square QAM are laid out row-major over the in-phase and
/// quadrature levels, lowest level first. The point set is invariant under
/// multiplication by j, as required by a pi/2-ambiguous phase search.
struct ConstellationSpec {
    std::vector<cplx> points;
    std::vector<double> probs;
    double entropy_bits = 0.0;
    FormatLabel label = FormatLabel::QPSK;

    std::size_t size() const noexcept { return points.size(); }
    double mean_power() const;
    /// Amplitude of the +1 grid level (square QAM only).
    double grid_scale() const;
    /// Number of levels per axis (square QAM only).
    int levels_per_axis() const;
};

/// Uniform square QAM of order 4, 16 or 64.
ConstellationSpec build_qam(int order);

/// Maxwell-Boltzmann probabilities p_i ~ exp(-lambda |a_i|^2) on the
/// unnormalized odd-integer grid of square QAM.
std::vector<double> mb_distribution(int order, double lambda);

/// Shaping rate reaching `target_entropy` bits/symbol, found by bisection.
/// Entropy of the MB family is strictly decreasing in lambda and tends to
/// 2 bits as lambda grows, so targets must lie in (2, log2(order)].
double solve_mb_lambda(int order, double target_entropy);

/// Probabilistically shaped square QAM at the requested entropy.
ConstellationSpec build_shaped_qam(int order, double target_entropy, FormatLabel label);

/// Builds the alphabet for a format label. Shaped labels need an entropy.
ConstellationSpec build_format(FormatLabel label, double entropy_bits = 0.0);

/// Shannon entropy in bits.
double entropy(std::span<const double> probs);

/// I.i.d. draws from (points, probs) by inverse-CDF lookup on one uniform
/// variate per symbol.
std::vector<cplx> sample_symbols(const ConstellationSpec& spec, std::size_t count, RngStream& rng);

/// Minimum Euclidean distance decision; ties resolve to the lowest index.
/// Probabilities are ignored.
std::size_t nearest_symbol(const ConstellationSpec& spec, cplx z);

/// Constant-time nearest-point search for square grids, used inside the
/// phase search. Gives the same decision as `nearest_symbol` away from
/// exact ties.
class SquareSlicer {
public:
    explicit SquareSlicer(const ConstellationSpec& spec, double amplitude_scale = 1.0);

    /// Squared distance from z to the nearest (scaled) grid point.
    double min_distance2(cplx z) const noexcept {
        const double dr = z.real() - slice_axis(z.real());
        const double di = z.imag() - slice_axis(z.imag());
        return dr * dr + di * di;
    }

    std::size_t index(cplx z) const noexcept;

private:
    double slice_axis(double v) const noexcept;

    double step_;       // scaled grid amplitude of level +1
    double inv_step_;
    double max_level_;  // largest odd level, e.g. 7 for 64QAM
    int levels_;
};

void to_json(nlohmann::json& j, const ConstellationSpec& spec);
void from_json(const nlohmann::json& j, ConstellationSpec& spec);

}  // namespace eepn
