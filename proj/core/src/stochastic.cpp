#include "eepn/stochastic.hpp"

#include <cmath>
#include <numbers>

#include "eepn/error.hpp"

namespace eepn {

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace {

std::mt19937_64 seeded_engine(std::uint64_t master_seed, std::uint64_t stream_id) {
    // Expand the identity into a full seed sequence so nearby ids do not
    // produce correlated engine states.
    std::uint64_t s = mix64(master_seed ^ mix64(stream_id));
    std::uint32_t words[8];
    for (auto& w : words) {
        s = mix64(s);
        w = static_cast<std::uint32_t>(s >> 32);
    }
    std::seed_seq seq(std::begin(words), std::end(words));
    return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : master_seed_(master_seed), stream_id_(stream_id), engine_(seeded_engine(master_seed, stream_id)) {}

RngStream RngStream::child(std::uint64_t label) const {
    return derive_stream(master_seed_, {stream_id_, label});
}

double RngStream::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::gaussian() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_gaussian_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_gaussian_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
}

RngStream derive_stream(std::uint64_t master_seed, std::span<const std::uint64_t> labels) {
    std::uint64_t h = mix64(0x6a09e667f3bcc909ULL ^ labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        h = mix64(h ^ mix64(labels[i] + 0x9e3779b97f4a7c15ULL * (i + 1)));
    }
    return RngStream(master_seed, h);
}

RngStream derive_stream(std::uint64_t master_seed, std::initializer_list<std::uint64_t> labels) {
    return derive_stream(master_seed, std::span<const std::uint64_t>(labels.begin(), labels.size()));
}

std::complex<double> complex_gaussian(RngStream& rng, double variance) {
    const double sigma = std::sqrt(0.5 * variance);
    const double re = rng.gaussian();
    const double im = rng.gaussian();
    return {sigma * re, sigma * im};
}

PhasePath wiener_path(RngStream& rng, double linewidth, double dt, std::size_t count) {
    if (!(linewidth >= 0.0)) throw ConfigError("linewidth must be non-negative");
    if (!(dt > 0.0)) throw ConfigError("phase-noise sample spacing must be positive");
    PhasePath path{std::vector<double>(count, 0.0), dt, linewidth};
    if (linewidth == 0.0 || count == 0) return path;
    const double step_sigma = std::sqrt(2.0 * std::numbers::pi * linewidth * dt);
    double phase = 0.0;
    for (std::size_t n = 1; n < count; ++n) {
        phase += step_sigma * rng.gaussian();
        path.phases[n] = phase;
    }
    return path;
}

}  // namespace eepn
