#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "eepn/channel.hpp"
#include "eepn/constellation.hpp"
#include "eepn/cpr.hpp"
#include "eepn/stochastic.hpp"

namespace eepn {

enum class ScenarioKind { VarianceSweep, CprSweep, LinewidthSweep, OsnrCurve, PenaltySweep };

std::string_view to_string(ScenarioKind kind);
ScenarioKind parse_scenario_kind(std::string_view text);  // accepts snake_case and CLI dash-case

/// n_symbols, n_realizations and n_discard presets.
enum class Profile { Desk, Paper };
Profile parse_profile(std::string_view text);
void apply_profile(LinkConfig& config, Profile profile);

/// Default BPS averaging-length candidates.
const std::vector<std::size_t>& default_window_candidates();

/// Scenario windows are averaging lengths N on the figure axes; the estimator
/// averages N symbols on each side, a centred block of 2 N + 1 symbols.
inline std::size_t half_window_of(std::size_t nominal) { return nominal; }

struct FormatChoice {
    FormatLabel label = FormatLabel::QAM64;
    double entropy_bits = 0.0;  // required for shaped labels
    ConstellationSpec build() const { return build_format(label, entropy_bits); }
};

struct Diagnostics {
    bool pdf = false;
    std::size_t xcorr_max_lag = 0;  // 0 disables the cross-correlation output
    std::size_t xcorr_stride = 40;
    std::size_t calibration_trials = 16;
};

/// A figure-regeneration job: a base link, variant lists expanded as a
/// cartesian product, and one swept axis.
struct Scenario {
    ScenarioKind kind = ScenarioKind::CprSweep;
    std::string description;
    LinkConfig base;
    std::vector<FormatChoice> formats{FormatChoice{}};
    std::vector<double> bauds;            // empty: base.baud only
    std::vector<double> distances_km;     // empty: base.length_km only
    std::vector<bool> dispersion{true};   // false forces D L = 0
    std::vector<bool> tx_equals_lo{false};
    std::vector<CprAlgorithm> algorithms{CprAlgorithm::Bps};  // CPR sweeps
    std::string sweep_axis;
    std::vector<double> sweep_values;
    std::size_t n_test_phases = 64;
    std::vector<std::size_t> window_candidates = default_window_candidates();
    std::optional<double> snr_ref_db;     // penalty sweeps only
    bool include_pn_penalty = true;
    double osnr_span_db = 4.0;            // half-width of the root-finding grid
    bool allow_unbracketed = false;       // penalty sweeps: NaN instead of a RangeError
    Diagnostics diagnostics;

    /// Throws ConfigError when an invariant is violated.
    void validate() const;
    /// Stable 64-bit hash of the resolved scenario, used to key random streams.
    std::uint64_t hash() const;
};

nlohmann::json to_json(const Scenario& scenario);
/// Layers the scenario JSON onto `profile` defaults. JSON link fields win.
Scenario scenario_from_json(const nlohmann::json& j, Profile profile = Profile::Desk);

/// One emitted CSV line. Absent numeric outputs are NaN; absent windows are
/// empty.
struct ScenarioRow {
    std::string scenario_kind;
    std::string format;
    double baud_hz = 0.0;
    double distance_km = 0.0;  // 0 when dispersion is disabled
    double lw_tx_hz = 0.0;
    double lw_lo_hz = 0.0;
    double osnr_db = 0.0;
    std::string cpr;
    std::optional<std::size_t> window;
    double snr_db = 0.0;
    double snr_std_db = 0.0;
    double var_w = 0.0;
    std::optional<std::size_t> best_window;
    double osnr_req_db = 0.0;
    double pn_penalty_db = 0.0;
    double total_penalty_db = 0.0;
    double analytic_penalty_db = 0.0;
    std::size_t n_realizations = 0;
    std::uint64_t seed = 0;

    /// Field-wise equality with NaN equal to NaN.
    bool same_as(const ScenarioRow& other) const;
};

const std::vector<std::string>& csv_columns();
std::string csv_header();
std::string to_csv_line(const ScenarioRow& row);
ScenarioRow parse_csv_line(std::string_view line);
std::vector<ScenarioRow> parse_csv(std::string_view text);

struct SnrEstimate {
    double snr_db = 0.0;       // from the pooled variance
    double snr_std_db = 0.0;   // spread of per-realization SNRs
    double variance = 0.0;     // pooled Var(N)
    std::size_t n_realizations = 0;
};

struct WindowChoice {
    std::size_t best_window = 0;
    SnrEstimate best;
    std::vector<SnrEstimate> per_candidate;
};

/// A link operating point with its realizations, simulated on construction.
/// Two points built from the same streams share symbols, phase-noise
/// increments and ASE draws.
class OperatingPoint {
public:
    OperatingPoint(LinkConfig link, ConstellationSpec constellation, std::vector<RngStream> realization_streams,
                   std::size_t n_test_phases = 64);

    const LinkConfig& link() const noexcept { return link_; }
    const ConstellationSpec& constellation() const noexcept { return constellation_; }
    std::size_t n_test_phases() const noexcept { return n_test_phases_; }
    const std::vector<LinkRealization>& realizations() const noexcept { return realizations_; }

    /// SNR with a fixed CPR at the given OSNR.
    SnrEstimate evaluate(const CprSpec& cpr, double osnr_db) const;
    /// SNR vs every nominal BPS window at the given OSNR.
    std::vector<SnrEstimate> evaluate_bps_windows(std::span<const std::size_t> nominal_windows, double osnr_db) const;
    /// Pooled Var(w) over the realizations.
    double eepn_variance() const;

private:
    LinkConfig link_;
    ConstellationSpec constellation_;
    std::size_t n_test_phases_;
    std::vector<LinkRealization> realizations_;
};

/// Streams for `count` realizations keyed by (seed, scenario hash, index).
std::vector<RngStream> realization_streams(std::uint64_t seed, std::uint64_t scenario_hash, std::size_t count);

/// Argmax of SNR over the candidates (same realizations for all); ties keep
/// the smaller window.
WindowChoice optimize_bps_window(const OperatingPoint& point, std::span<const std::size_t> window_candidates,
                                 double osnr_db);

/// OSNR at which the BPS-optimized SNR reaches `snr_ref_db`. Scans a 1 dB
/// grid spanning +-span_db around the ASE-only requirement outward from that
/// requirement, then bisects the bracketing cell to 0.01 dB and interpolates
/// linearly inside it. Throws RangeError when the grid does not bracket.
struct OsnrSolution {
    double osnr_db = 0.0;
    std::size_t best_window = 0;
    std::size_t evaluations = 0;
};
OsnrSolution osnr_required(const OperatingPoint& point, double snr_ref_db,
                           std::span<const std::size_t> window_candidates, double span_db = 4.0);

/// Same search on an arbitrary monotone SNR(OSNR) function; lets the
/// closed-form model check the root finder.
double osnr_required(const std::function<double(double)>& snr_of_osnr, double snr_ref_db, double baud,
                     double span_db = 4.0, std::size_t* evaluations = nullptr);

/// ASE-only OSNR requirement: snr_ref - 10 log10(B_ref / B).
double ase_only_osnr_required(double snr_ref_db, double baud);
/// Equivalent-AWGN OSNR requirement; NaN when the EEPN floor alone exceeds
/// the target.
double analytic_osnr_required(double snr_ref_db, const LinkConfig& config, double linewidth);

struct RunOptions {
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    std::optional<std::filesystem::path> dump_records_dir;
};

/// Auxiliary per-figure series (histograms, cross-correlations).
struct DiagnosticSeries {
    std::string name;   // file stem, e.g. "pdf" or "xcorr"
    std::string csv;    // full file content with header
    nlohmann::json summary;
};

struct RunResult {
    std::vector<ScenarioRow> rows;
    std::vector<DiagnosticSeries> diagnostics;
};

/// Executes every point on a bounded worker pool. Output is identical for
/// any thread count.
RunResult run_scenario(const Scenario& scenario, const RunOptions& options);

/// Convenience wrapper for the row-level contract.
std::vector<ScenarioRow> penalty_sweep(const Scenario& scenario, const RunOptions& options);

/// Writes results.csv, scenario.json, plot.py and diagnostics. Nothing is
/// written when `rows` is empty.
void emit_outputs(const RunResult& result, const Scenario& scenario, const RunOptions& options,
                  const std::filesystem::path& out_dir);

/// Runs `task(i)` for i in [0, count) on up to `threads` workers. The first
/// exception by index is rethrown after all workers stop.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& task);

}  // namespace eepn
