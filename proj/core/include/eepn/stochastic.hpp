#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace eepn {

/// Deterministic random stream identified by (master_seed, stream_id).
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. Uniforms take the top 53 bits of one engine draw. Gaussians use
/// the Box-Muller transform and emit both variates of each pair, cached, so
/// the stream is identical across standard library implementations.
///
/// A stream is single-owner. Parallel work derives independent children via
/// `child()` or `derive_stream()` instead of sharing one stream.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

    std::uint64_t master_seed() const noexcept { return master_seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    /// Stream derived from this one's identity and `label`; does not consume
    /// or depend on this stream's position.
    RngStream child(std::uint64_t label) const;

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform on [0, 1).
    double uniform();
    /// Standard normal.
    double gaussian();

    bool operator==(const RngStream& other) const noexcept {
        return master_seed_ == other.master_seed_ && stream_id_ == other.stream_id_;
    }

private:
    std::uint64_t master_seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    double cached_gaussian_ = 0.0;
    bool has_cached_ = false;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Order-sensitive hash of the label tuple, keyed by the master seed.
RngStream derive_stream(std::uint64_t master_seed, std::span<const std::uint64_t> labels);
RngStream derive_stream(std::uint64_t master_seed, std::initializer_list<std::uint64_t> labels);

/// Circular complex Gaussian with E|z|^2 = variance.
std::complex<double> complex_gaussian(RngStream& rng, double variance);

/// Wiener phase trajectory sampled every `dt` seconds.
struct PhasePath {
    std::vector<double> phases;  // rad, phases[0] == 0
    double dt = 0.0;             // s
    double linewidth = 0.0;      // Hz
};

/// Cumulative sum of N(0, 2 pi linewidth dt) increments starting at zero.
/// A zero linewidth draws nothing from the stream.
PhasePath wiener_path(RngStream& rng, double linewidth, double dt, std::size_t count);

}  // namespace eepn
