#include "eepn/constellation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "eepn/error.hpp"
#include "eepn/stochastic.hpp"

namespace eepn {

namespace {

int side_for_order(int order) {
    switch (order) {
        case 4: return 2;
        case 16: return 4;
        case 64: return 8;
        default:
            throw ConfigError("unsupported QAM order " + std::to_string(order) +
                              " (expected 4, 16 or 64)");
    }
}

// Odd-integer grid, row-major: index = i_row * side + q_col.
std::vector<cplx> integer_grid(int order) {
    const int side = side_for_order(order);
    std::vector<cplx> grid;
    grid.reserve(static_cast<std::size_t>(order));
    for (int i = 0; i < side; ++i) {
        for (int q = 0; q < side; ++q) {
            grid.emplace_back(2.0 * i - (side - 1), 2.0 * q - (side - 1));
        }
    }
    return grid;
}

ConstellationSpec normalized(std::vector<cplx> grid, std::vector<double> probs, FormatLabel label) {
    double power = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) power += probs[i] * std::norm(grid[i]);
    const double scale = 1.0 / std::sqrt(power);
    for (auto& p : grid) p *= scale;
    ConstellationSpec spec;
    spec.points = std::move(grid);
    spec.entropy_bits = entropy(probs);
    spec.probs = std::move(probs);
    spec.label = label;
    return spec;
}

}  // namespace

std::string_view to_string(FormatLabel label) {
    switch (label) {
        case FormatLabel::QPSK: return "QPSK";
        case FormatLabel::QAM16: return "QAM16";
        case FormatLabel::QAM64: return "QAM64";
        case FormatLabel::PCS64: return "PCS64";
        case FormatLabel::TPCS64: return "TPCS64";
    }
    return "?";
}

FormatLabel parse_format_label(std::string_view text) {
    if (text == "QPSK") return FormatLabel::QPSK;
    if (text == "QAM16" || text == "16QAM") return FormatLabel::QAM16;
    if (text == "QAM64" || text == "64QAM") return FormatLabel::QAM64;
    if (text == "PCS64" || text == "PCS64QAM") return FormatLabel::PCS64;
    if (text == "TPCS64" || text == "TPCS64QAM") return FormatLabel::TPCS64;
    throw ConfigError("unknown format label '" + std::string(text) + "'");
}

double ConstellationSpec::mean_power() const {
    double power = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) power += probs[i] * std::norm(points[i]);
    return power;
}

int ConstellationSpec::levels_per_axis() const {
    return side_for_order(static_cast<int>(points.size()));
}

double ConstellationSpec::grid_scale() const {
    // Point 0 sits at (-(side-1), -(side-1)) times the scale.
    const int side = levels_per_axis();
    return -points.front().real() / (side - 1);
}

ConstellationSpec build_qam(int order) {
    auto grid = integer_grid(order);
    std::vector<double> probs(grid.size(), 1.0 / static_cast<double>(grid.size()));
    const FormatLabel label = order == 4 ? FormatLabel::QPSK : order == 16 ? FormatLabel::QAM16 : FormatLabel::QAM64;
    auto spec = normalized(std::move(grid), std::move(probs), label);
    spec.entropy_bits = std::log2(static_cast<double>(order));
    return spec;
}

std::vector<double> mb_distribution(int order, double lambda) {
    if (!(lambda >= 0.0)) throw ConfigError("shaping rate must be non-negative");
    const auto grid = integer_grid(order);
    // Shift by the innermost energy (2) so large lambda does not underflow.
    std::vector<double> probs(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        probs[i] = std::exp(-lambda * (std::norm(grid[i]) - 2.0));
    }
    const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    for (auto& p : probs) p /= total;
    return probs;
}

double solve_mb_lambda(int order, double target_entropy) {
    const double max_entropy = std::log2(static_cast<double>(side_for_order(order) * side_for_order(order)));
    if (!(target_entropy > 2.0) || target_entropy > max_entropy + 1e-12) {
        throw ConfigError("target entropy " + std::to_string(target_entropy) +
                          " outside the attainable range (2, " + std::to_string(max_entropy) + "]");
    }
    if (target_entropy >= max_entropy) return 0.0;

    auto h = [order](double lambda) { return entropy(mb_distribution(order, lambda)); };
    double lo = 0.0;
    double hi = 0.01;
    while (h(hi) > target_entropy) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) throw ConfigError("entropy bisection failed to bracket the target");
    }
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double hm = h(mid);
        if (std::abs(hm - target_entropy) < 1e-13) return mid;
        (hm > target_entropy ? lo : hi) = mid;
        if (hi - lo < 1e-16 * hi) break;
    }
    return 0.5 * (lo + hi);
}

ConstellationSpec build_shaped_qam(int order, double target_entropy, FormatLabel label) {
    const double lambda = solve_mb_lambda(order, target_entropy);
    return normalized(integer_grid(order), mb_distribution(order, lambda), label);
}

ConstellationSpec build_format(FormatLabel label, double entropy_bits) {
    switch (label) {
        case FormatLabel::QPSK: return build_qam(4);
        case FormatLabel::QAM16: return build_qam(16);
        case FormatLabel::QAM64: return build_qam(64);
        case FormatLabel::PCS64:
        case FormatLabel::TPCS64:
            if (!(entropy_bits > 0.0)) {
                throw ConfigError(std::string(to_string(label)) + " requires an explicit entropy_bits");
            }
            return build_shaped_qam(64, entropy_bits, label);
    }
    throw ConfigError("unknown format");
}

double entropy(std::span<const double> probs) {
    double h = 0.0;
    for (double p : probs) {
        if (p > 0.0) h -= p * std::log2(p);
    }
    return h;
}

std::vector<cplx> sample_symbols(const ConstellationSpec& spec, std::size_t count, RngStream& rng) {
    std::vector<double> cdf(spec.probs.size());
    std::partial_sum(spec.probs.begin(), spec.probs.end(), cdf.begin());
    cdf.back() = 1.0;
    std::vector<cplx> symbols(count);
    for (auto& s : symbols) {
        const double u = rng.uniform();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        s = spec.points[static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf.begin(), cdf.size() - 1))];
    }
    return symbols;
}

std::size_t nearest_symbol(const ConstellationSpec& spec, cplx z) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < spec.points.size(); ++i) {
        const double d = std::norm(z - spec.points[i]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

SquareSlicer::SquareSlicer(const ConstellationSpec& spec, double amplitude_scale)
    : step_(spec.grid_scale() * amplitude_scale),
      inv_step_(1.0 / step_),
      max_level_(spec.levels_per_axis() - 1),
      levels_(spec.levels_per_axis()) {}

double SquareSlicer::slice_axis(double v) const noexcept {
    double level = 2.0 * std::floor(v * inv_step_ * 0.5) + 1.0;
    level = std::clamp(level, -max_level_, max_level_);
    return level * step_;
}

std::size_t SquareSlicer::index(cplx z) const noexcept {
    const auto to_col = [this](double v) {
        return static_cast<std::size_t>((slice_axis(v) * inv_step_ + max_level_) * 0.5 + 0.5);
    };
    return to_col(z.real()) * static_cast<std::size_t>(levels_) + to_col(z.imag());
}

void to_json(nlohmann::json& j, const ConstellationSpec& spec) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : spec.points) points.push_back({p.real(), p.imag()});
    j = nlohmann::json{{"label", std::string(to_string(spec.label))},
                       {"entropy_bits", spec.entropy_bits},
                       {"points", std::move(points)},
                       {"probs", spec.probs}};
}

void from_json(const nlohmann::json& j, ConstellationSpec& spec) {
    spec.label = parse_format_label(j.at("label").get<std::string>());
    spec.entropy_bits = j.at("entropy_bits").get<double>();
    spec.probs = j.at("probs").get<std::vector<double>>();
    spec.points.clear();
    for (const auto& p : j.at("points")) spec.points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    if (spec.points.size() != spec.probs.size()) throw ConfigError("constellation points/probs length mismatch");
}

}  // namespace eepn
