#include "eepn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "eepn/error.hpp"
#include "eepn/metrics.hpp"
#include "eepn/record_io.hpp"

namespace eepn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kCalibrationLabel = 0xca11b4a7e0000000ULL;

std::string lower_dashless(std::string_view text) {
    std::string out(text);
    for (auto& c : out) {
        if (c == '-') c = '_';
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

std::string_view default_axis(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::CprSweep: return "window";
        case ScenarioKind::OsnrCurve: return "osnr_db";
        default: return "lw_lo_hz";
    }
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view field) {
    if (field.empty()) return kNaN;
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
        throw ConfigError("bad numeric CSV field '" + std::string(field) + "'");
    }
    return v;
}

template <typename T>
T parse_integer(std::string_view field) {
    T v{};
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
        throw ConfigError("bad integer CSV field '" + std::string(field) + "'");
    }
    return v;
}

bool same_double(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Per-realization residual energy of N_k = y_k e^{-j phi_k} - sqrt(P) x_k.
struct Residual {
    double sum_sq = 0.0;
    double dof = 0.0;
};

Residual residual(std::span<const cplx> y, std::span<const cplx> x, std::span<const double> phi, double amplitude,
                  std::vector<cplx>& scratch) {
    scratch.resize(y.size());
    cplx mean{};
    for (std::size_t k = 0; k < y.size(); ++k) {
        scratch[k] = y[k] * std::polar(1.0, -phi[k]) - amplitude * x[k];
        mean += scratch[k];
    }
    mean /= static_cast<double>(y.size());
    Residual out;
    for (const auto& v : scratch) out.sum_sq += std::norm(v - mean);
    out.dof = static_cast<double>(y.size() - 1);
    return out;
}

SnrEstimate combine(std::span<const Residual> parts, double signal_power) {
    SnrEstimate est;
    est.n_realizations = parts.size();
    double sum_sq = 0.0;
    double dof = 0.0;
    std::vector<double> per;
    per.reserve(parts.size());
    for (const auto& p : parts) {
        sum_sq += p.sum_sq;
        dof += p.dof;
        per.push_back(snr_db_from_variance(p.sum_sq / p.dof, signal_power));
    }
    est.variance = sum_sq / dof;
    est.snr_db = snr_db_from_variance(est.variance, signal_power);
    if (per.size() > 1) {
        double mean = 0.0;
        for (double v : per) mean += v;
        mean /= static_cast<double>(per.size());
        double ss = 0.0;
        for (double v : per) ss += (v - mean) * (v - mean);
        est.snr_std_db = std::sqrt(ss / static_cast<double>(per.size() - 1));
    }
    return est;
}

}  // namespace

std::string_view to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::VarianceSweep: return "variance_sweep";
        case ScenarioKind::CprSweep: return "cpr_sweep";
        case ScenarioKind::LinewidthSweep: return "linewidth_sweep";
        case ScenarioKind::OsnrCurve: return "osnr_curve";
        case ScenarioKind::PenaltySweep: return "penalty_sweep";
    }
    return "?";
}

ScenarioKind parse_scenario_kind(std::string_view text) {
    const std::string key = lower_dashless(text);
    for (auto kind : {ScenarioKind::VarianceSweep, ScenarioKind::CprSweep, ScenarioKind::LinewidthSweep,
                      ScenarioKind::OsnrCurve, ScenarioKind::PenaltySweep}) {
        if (key == to_string(kind)) return kind;
    }
    throw ConfigError("unknown scenario kind '" + std::string(text) + "'");
}

Profile parse_profile(std::string_view text) {
    if (text == "desk") return Profile::Desk;
    if (text == "paper") return Profile::Paper;
    throw ConfigError("unknown profile '" + std::string(text) + "' (expected desk or paper)");
}

void apply_profile(LinkConfig& config, Profile profile) {
    if (profile == Profile::Desk) {
        config.n_symbols = std::size_t{1} << 16;
        config.n_realizations = 4;
        config.n_discard = 4000;
    } else {
        config.n_symbols = std::size_t{1} << 17;
        config.n_realizations = 10;
        config.n_discard = 15000;
    }
}

const std::vector<std::size_t>& default_window_candidates() {
    static const std::vector<std::size_t> grid{30, 40, 50, 70, 100, 200, 400, 700, 1000, 1200, 1600, 2000, 2500, 3000, 5000};
    return grid;
}

// ---------------------------------------------------------------------------
// Scenario schema

void Scenario::validate() const {
    base.validate();
    if (formats.empty()) throw ConfigError("at least one format is required");
    for (const auto& f : formats) (void)f.build();
    for (double b : bauds) {
        if (!(b > 0.0)) throw ConfigError("baud values must be positive");
    }
    for (double d : distances_km) {
        if (!(d >= 0.0)) throw ConfigError("distances must be non-negative");
    }
    if (dispersion.empty() || tx_equals_lo.empty()) throw ConfigError("variant lists must not be empty");
    if (algorithms.empty()) throw ConfigError("at least one CPR algorithm is required");
    if (sweep_axis != default_axis(kind)) {
        throw ConfigError("sweep axis for " + std::string(to_string(kind)) + " must be '" +
                          std::string(default_axis(kind)) + "', got '" + sweep_axis + "'");
    }
    if (sweep_values.empty()) throw ConfigError("sweep values must not be empty");
    for (std::size_t i = 1; i < sweep_values.size(); ++i) {
        if (!(sweep_values[i] > sweep_values[i - 1])) throw ConfigError("sweep values must be strictly increasing");
    }
    for (double v : sweep_values) {
        if (!std::isfinite(v)) throw ConfigError("sweep values must be finite");
        if (sweep_axis != "osnr_db" && v < 0.0) throw ConfigError("sweep values must be non-negative");
        if (sweep_axis == "window" && (v < 1.0 || v != std::floor(v))) {
            throw ConfigError("window values must be positive integers");
        }
    }
    if (n_test_phases < 2) throw ConfigError("BPS needs at least 2 test phases");
    if (window_candidates.size() < 2) throw ConfigError("at least two window candidates are required");
    for (std::size_t i = 0; i < window_candidates.size(); ++i) {
        if (window_candidates[i] == 0) throw ConfigError("window candidates must be positive");
        if (i > 0 && window_candidates[i] <= window_candidates[i - 1]) {
            throw ConfigError("window candidates must be strictly increasing");
        }
    }
    if (snr_ref_db.has_value() != (kind == ScenarioKind::PenaltySweep)) {
        throw ConfigError("snr_ref_db must be given for penalty sweeps and only for them");
    }
    if (snr_ref_db && !std::isfinite(*snr_ref_db)) throw ConfigError("snr_ref_db must be finite");
    if (!(osnr_span_db >= 1.0)) throw ConfigError("osnr_span_db must be at least 1");
    if (diagnostics.xcorr_max_lag > 0) {
        if (diagnostics.xcorr_stride == 0) throw ConfigError("xcorr_stride must be positive");
        if (2 * diagnostics.xcorr_max_lag >= base.kept_symbols()) {
            throw ConfigError("xcorr_max_lag must be below half the kept block");
        }
    }
    if ((diagnostics.pdf || diagnostics.xcorr_max_lag > 0) && kind != ScenarioKind::VarianceSweep) {
        throw ConfigError("pdf and xcorr diagnostics are only available for variance sweeps");
    }
    if (diagnostics.pdf && diagnostics.calibration_trials < 2) throw ConfigError("calibration needs two trials");
}

nlohmann::json to_json(const Scenario& s) {
    nlohmann::json formats = nlohmann::json::array();
    for (const auto& f : s.formats) {
        nlohmann::json entry = {{"label", to_string(f.label)}};
        if (f.entropy_bits > 0.0) entry["entropy_bits"] = f.entropy_bits;
        formats.push_back(entry);
    }
    nlohmann::json algorithms = nlohmann::json::array();
    for (auto a : s.algorithms) algorithms.push_back(to_string(a));
    nlohmann::json dispersion = nlohmann::json::array();
    for (bool d : s.dispersion) dispersion.push_back(d);
    nlohmann::json tx_eq = nlohmann::json::array();
    for (bool t : s.tx_equals_lo) tx_eq.push_back(t);

    nlohmann::json j = {{"kind", to_string(s.kind)},
                        {"description", s.description},
                        {"link", s.base},
                        {"formats", formats},
                        {"dispersion", dispersion},
                        {"tx_equals_lo", tx_eq},
                        {"cpr", algorithms},
                        {"sweep", {{"axis", s.sweep_axis}, {"values", s.sweep_values}}},
                        {"test_phases", s.n_test_phases},
                        {"window_candidates", s.window_candidates},
                        {"osnr_span_db", s.osnr_span_db},
                        {"allow_unbracketed", s.allow_unbracketed},
                        {"include_pn_penalty", s.include_pn_penalty}};
    if (!s.bauds.empty()) j["baud_hz"] = s.bauds;
    if (!s.distances_km.empty()) j["distance_km"] = s.distances_km;
    if (s.snr_ref_db) j["snr_ref_db"] = *s.snr_ref_db;
    if (s.diagnostics.pdf || s.diagnostics.xcorr_max_lag > 0) {
        j["diagnostics"] = {{"pdf", s.diagnostics.pdf},
                            {"xcorr_max_lag", s.diagnostics.xcorr_max_lag},
                            {"xcorr_stride", s.diagnostics.xcorr_stride},
                            {"calibration_trials", s.diagnostics.calibration_trials}};
    }
    return j;
}

Scenario scenario_from_json(const nlohmann::json& j, Profile profile) {
    static const char* const known[] = {"kind", "description", "link", "formats", "baud_hz", "distance_km",
                                        "dispersion", "tx_equals_lo", "cpr", "sweep", "test_phases",
                                        "window_candidates", "snr_ref_db", "osnr_span_db", "allow_unbracketed",
                                        "include_pn_penalty", "diagnostics"};
    if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError("unknown scenario field '" + key + "'");
    }
    try {
        Scenario s;
        if (!j.contains("kind")) throw ConfigError("scenario field 'kind' is required");
        s.kind = parse_scenario_kind(j.at("kind").get<std::string>());
        s.description = j.value("description", std::string{});
        apply_profile(s.base, profile);
        if (j.contains("link")) from_json(j.at("link"), s.base);

        if (j.contains("formats")) {
            s.formats.clear();
            for (const auto& f : j.at("formats")) {
                for (const auto& [key, _] : f.items()) {
                    if (key != "label" && key != "entropy_bits") throw ConfigError("unknown format field '" + key + "'");
                }
                FormatChoice choice;
                choice.label = parse_format_label(f.at("label").get<std::string>());
                choice.entropy_bits = f.value("entropy_bits", 0.0);
                s.formats.push_back(choice);
            }
        }
        if (j.contains("baud_hz")) s.bauds = j.at("baud_hz").get<std::vector<double>>();
        if (j.contains("distance_km")) s.distances_km = j.at("distance_km").get<std::vector<double>>();
        if (j.contains("dispersion")) s.dispersion = j.at("dispersion").get<std::vector<bool>>();
        if (j.contains("tx_equals_lo")) {
            const auto& t = j.at("tx_equals_lo");
            s.tx_equals_lo = t.is_boolean() ? std::vector<bool>{t.get<bool>()} : t.get<std::vector<bool>>();
        }
        if (j.contains("cpr")) {
            s.algorithms.clear();
            const auto& c = j.at("cpr");
            if (c.is_string()) s.algorithms.push_back(parse_cpr_algorithm(c.get<std::string>()));
            else for (const auto& a : c) s.algorithms.push_back(parse_cpr_algorithm(a.get<std::string>()));
        }
        s.sweep_axis = std::string(default_axis(s.kind));
        if (j.contains("sweep")) {
            const auto& sw = j.at("sweep");
            for (const auto& [key, _] : sw.items()) {
                if (key != "axis" && key != "values") throw ConfigError("unknown sweep field '" + key + "'");
            }
            s.sweep_axis = sw.value("axis", s.sweep_axis);
            s.sweep_values = sw.at("values").get<std::vector<double>>();
        }
        s.n_test_phases = j.value("test_phases", s.n_test_phases);
        if (j.contains("window_candidates")) {
            s.window_candidates = j.at("window_candidates").get<std::vector<std::size_t>>();
        }
        if (j.contains("snr_ref_db")) s.snr_ref_db = j.at("snr_ref_db").get<double>();
        s.osnr_span_db = j.value("osnr_span_db", s.osnr_span_db);
        s.allow_unbracketed = j.value("allow_unbracketed", s.allow_unbracketed);
        s.include_pn_penalty = j.value("include_pn_penalty", s.include_pn_penalty);
        if (j.contains("diagnostics")) {
            const auto& d = j.at("diagnostics");
            for (const auto& [key, _] : d.items()) {
                if (key != "pdf" && key != "xcorr_max_lag" && key != "xcorr_stride" && key != "calibration_trials") {
                    throw ConfigError("unknown diagnostics field '" + key + "'");
                }
            }
            s.diagnostics.pdf = d.value("pdf", false);
            s.diagnostics.xcorr_max_lag = d.value("xcorr_max_lag", std::size_t{0});
            s.diagnostics.xcorr_stride = d.value("xcorr_stride", s.diagnostics.xcorr_stride);
            s.diagnostics.calibration_trials = d.value("calibration_trials", s.diagnostics.calibration_trials);
        }
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed scenario: ") + e.what());
    }
}

std::uint64_t Scenario::hash() const {
    nlohmann::json j = to_json(*this);
    j.erase("description");
    return fnv1a(j.dump());
}

// ---------------------------------------------------------------------------
// Rows and CSV

bool ScenarioRow::same_as(const ScenarioRow& o) const {
    return scenario_kind == o.scenario_kind && format == o.format && same_double(baud_hz, o.baud_hz) &&
           same_double(distance_km, o.distance_km) && same_double(lw_tx_hz, o.lw_tx_hz) &&
           same_double(lw_lo_hz, o.lw_lo_hz) && same_double(osnr_db, o.osnr_db) && cpr == o.cpr &&
           window == o.window && same_double(snr_db, o.snr_db) && same_double(snr_std_db, o.snr_std_db) &&
           same_double(var_w, o.var_w) && best_window == o.best_window && same_double(osnr_req_db, o.osnr_req_db) &&
           same_double(pn_penalty_db, o.pn_penalty_db) && same_double(total_penalty_db, o.total_penalty_db) &&
           same_double(analytic_penalty_db, o.analytic_penalty_db) && n_realizations == o.n_realizations &&
           seed == o.seed;
}

const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> columns{
        "scenario_kind", "format",      "baud_hz",       "distance_km",      "lw_tx_hz",
        "lw_lo_hz",      "osnr_db",     "cpr",           "window",           "snr_db",
        "snr_std_db",    "var_w",       "best_window",   "osnr_req_db",      "pn_penalty_db",
        "total_penalty_db", "analytic_penalty_db", "n_realizations", "seed"};
    return columns;
}

std::string csv_header() {
    std::string out;
    for (const auto& c : csv_columns()) {
        if (!out.empty()) out += ',';
        out += c;
    }
    return out;
}

std::string to_csv_line(const ScenarioRow& r) {
    const auto opt = [](const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : std::string{}; };
    std::string out;
    const auto field = [&out](const std::string& v) {
        if (!out.empty()) out += ',';
        out += v;
    };
    field(r.scenario_kind);
    field(r.format);
    field(format_double(r.baud_hz));
    field(format_double(r.distance_km));
    field(format_double(r.lw_tx_hz));
    field(format_double(r.lw_lo_hz));
    field(format_double(r.osnr_db));
    field(r.cpr);
    field(opt(r.window));
    field(format_double(r.snr_db));
    field(format_double(r.snr_std_db));
    field(format_double(r.var_w));
    field(opt(r.best_window));
    field(format_double(r.osnr_req_db));
    field(format_double(r.pn_penalty_db));
    field(format_double(r.total_penalty_db));
    field(format_double(r.analytic_penalty_db));
    field(std::to_string(r.n_realizations));
    field(std::to_string(r.seed));
    return out;
}

ScenarioRow parse_csv_line(std::string_view line) {
    std::vector<std::string_view> f;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        f.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    if (f.size() != csv_columns().size()) {
        throw ConfigError("CSV line has " + std::to_string(f.size()) + " fields, expected " +
                          std::to_string(csv_columns().size()));
    }
    const auto opt = [](std::string_view v) -> std::optional<std::size_t> {
        if (v.empty()) return std::nullopt;
        return parse_integer<std::size_t>(v);
    };
    ScenarioRow r;
    r.scenario_kind = std::string(f[0]);
    r.format = std::string(f[1]);
    r.baud_hz = parse_double(f[2]);
    r.distance_km = parse_double(f[3]);
    r.lw_tx_hz = parse_double(f[4]);
    r.lw_lo_hz = parse_double(f[5]);
    r.osnr_db = parse_double(f[6]);
    r.cpr = std::string(f[7]);
    r.window = opt(f[8]);
    r.snr_db = parse_double(f[9]);
    r.snr_std_db = parse_double(f[10]);
    r.var_w = parse_double(f[11]);
    r.best_window = opt(f[12]);
    r.osnr_req_db = parse_double(f[13]);
    r.pn_penalty_db = parse_double(f[14]);
    r.total_penalty_db = parse_double(f[15]);
    r.analytic_penalty_db = parse_double(f[16]);
    r.n_realizations = parse_integer<std::size_t>(f[17]);
    r.seed = parse_integer<std::uint64_t>(f[18]);
    return r;
}

std::vector<ScenarioRow> parse_csv(std::string_view text) {
    std::vector<ScenarioRow> rows;
    bool header_seen = false;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        start = end + 1;
        if (line.empty()) continue;
        if (!header_seen) {
            if (line != csv_header()) throw ConfigError("CSV header does not match the results schema");
            header_seen = true;
            continue;
        }
        rows.push_back(parse_csv_line(line));
    }
    if (!header_seen) throw ConfigError("CSV is empty");
    return rows;
}

// ---------------------------------------------------------------------------
// Operating points

OperatingPoint::OperatingPoint(LinkConfig link, ConstellationSpec constellation,
                               std::vector<RngStream> realization_streams, std::size_t n_test_phases)
    : link_(std::move(link)), constellation_(std::move(constellation)), n_test_phases_(n_test_phases) {
    link_.validate();
    if (realization_streams.empty()) throw ConfigError("an operating point needs at least one realization");
    realizations_.reserve(realization_streams.size());
    for (const auto& stream : realization_streams) realizations_.push_back(realize_link(link_, constellation_, stream));
}

SnrEstimate OperatingPoint::evaluate(const CprSpec& cpr, double osnr_db) const {
    cpr.validate();
    if (cpr.algorithm == CprAlgorithm::Bps) {
        const std::size_t one[] = {cpr.half_window};
        return evaluate_bps_windows(one, osnr_db).front();
    }
    const double amplitude = std::sqrt(link_.signal_power);
    std::vector<Residual> parts;
    std::vector<cplx> scratch;
    for (const auto& real : realizations_) {
        const ReceptionRecord rec = real.at_osnr(osnr_db);
        const std::vector<double> phi =
            cpr.algorithm == CprAlgorithm::LoCancel ? rec.laser_phase() : idr_estimate(rec, cpr).phi_hat;
        parts.push_back(residual(rec.y, rec.x, phi, amplitude, scratch));
    }
    return combine(parts, link_.signal_power);
}

std::vector<SnrEstimate> OperatingPoint::evaluate_bps_windows(std::span<const std::size_t> nominal_windows,
                                                              double osnr_db) const {
    const double amplitude = std::sqrt(link_.signal_power);
    std::vector<std::vector<Residual>> parts(nominal_windows.size());
    std::vector<cplx> scratch;
    for (const auto& real : realizations_) {
        const ReceptionRecord rec = real.at_osnr(osnr_db);
        const BpsDistanceTable table(rec.y, constellation_, n_test_phases_, link_.signal_power);
        const std::vector<double> reference = rec.laser_phase();
        for (std::size_t i = 0; i < nominal_windows.size(); ++i) {
            const auto selection = table.select(half_window_of(nominal_windows[i]));
            const auto phi = genie_slip_removal(bps_unwrap(selection, n_test_phases_), reference);
            parts[i].push_back(residual(rec.y, rec.x, phi, amplitude, scratch));
        }
    }
    std::vector<SnrEstimate> out;
    out.reserve(parts.size());
    for (const auto& p : parts) out.push_back(combine(p, link_.signal_power));
    return out;
}

double OperatingPoint::eepn_variance() const {
    std::vector<std::vector<cplx>> w;
    w.reserve(realizations_.size());
    for (const auto& real : realizations_) {
        // w does not depend on the ASE, so the noiseless record is enough.
        w.push_back(extract_eepn(real.at_osnr(std::numeric_limits<double>::infinity())));
    }
    std::vector<std::span<const cplx>> blocks(w.begin(), w.end());
    return pooled_variance(blocks) / link_.signal_power;
}

std::vector<RngStream> realization_streams(std::uint64_t seed, std::uint64_t scenario_hash, std::size_t count) {
    std::vector<RngStream> streams;
    streams.reserve(count);
    for (std::size_t r = 0; r < count; ++r) streams.push_back(derive_stream(seed, {scenario_hash, r}));
    return streams;
}

WindowChoice optimize_bps_window(const OperatingPoint& point, std::span<const std::size_t> window_candidates,
                                 double osnr_db) {
    if (window_candidates.size() < 2) throw ConfigError("optimize_bps_window needs at least two candidates");
    WindowChoice choice;
    choice.per_candidate = point.evaluate_bps_windows(window_candidates, osnr_db);
    std::size_t best = 0;
    for (std::size_t i = 1; i < window_candidates.size(); ++i) {
        const double s = choice.per_candidate[i].snr_db;
        const double b = choice.per_candidate[best].snr_db;
        if (s > b || (s == b && window_candidates[i] < window_candidates[best])) best = i;
    }
    choice.best_window = window_candidates[best];
    choice.best = choice.per_candidate[best];
    return choice;
}

double ase_only_osnr_required(double snr_ref_db, double baud) {
    return snr_ref_db - 10.0 * std::log10(kOsnrReferenceBandwidth / baud);
}

double analytic_osnr_required(double snr_ref_db, const LinkConfig& config, double linewidth) {
    const double inv_ref = std::pow(10.0, -snr_ref_db / 10.0);
    const double inv_ase = inv_ref - analytic_eepn_variance(config, linewidth);
    if (!(inv_ase > 0.0)) return kNaN;
    return ase_only_osnr_required(-10.0 * std::log10(inv_ase), config.baud);
}

double osnr_required(const std::function<double(double)>& snr_of_osnr, double snr_ref_db, double baud,
                     double span_db, std::size_t* evaluations) {
    const double center = ase_only_osnr_required(snr_ref_db, baud);
    const int steps = static_cast<int>(std::floor(span_db + 1e-9));
    std::size_t count = 0;
    const auto eval = [&](double osnr) {
        ++count;
        return snr_of_osnr(osnr);
    };
    double low = std::numeric_limits<double>::infinity();
    double high = -std::numeric_limits<double>::infinity();
    const auto track = [&](double s) {
        low = std::min(low, s);
        high = std::max(high, s);
        return s;
    };

    // Bracket [a, b] on the grid with SNR(a) < ref <= SNR(b), scanning away
    // from the ASE-only requirement.
    double a = 0.0, b = 0.0, sa = 0.0, sb = 0.0;
    bool found = false;
    const double s0 = track(eval(center));
    if (s0 >= snr_ref_db) {
        b = center;
        sb = s0;
        for (int i = 1; i <= steps; ++i) {
            const double o = center - i;
            const double s = track(eval(o));
            if (s < snr_ref_db) {
                a = o;
                sa = s;
                found = true;
                break;
            }
            b = o;
            sb = s;
        }
    } else {
        a = center;
        sa = s0;
        for (int i = 1; i <= steps; ++i) {
            const double o = center + i;
            const double s = track(eval(o));
            if (s >= snr_ref_db) {
                b = o;
                sb = s;
                found = true;
                break;
            }
            a = o;
            sa = s;
        }
    }
    if (evaluations) *evaluations = count;
    if (!found) {
        throw RangeError("SNR target " + format_double(snr_ref_db) + " dB is not bracketed on the OSNR grid (reached " +
                             format_double(low) + " to " + format_double(high) + " dB)",
                         low, high);
    }
    while (b - a > 0.01) {
        const double m = 0.5 * (a + b);
        const double s = eval(m);
        if (s >= snr_ref_db) {
            b = m;
            sb = s;
        } else {
            a = m;
            sa = s;
        }
    }
    if (evaluations) *evaluations = count;
    return sb > sa ? a + (snr_ref_db - sa) * (b - a) / (sb - sa) : b;
}

OsnrSolution osnr_required(const OperatingPoint& point, double snr_ref_db,
                           std::span<const std::size_t> window_candidates, double span_db) {
    OsnrSolution out;
    std::vector<std::pair<double, std::size_t>> windows;
    const auto snr = [&](double osnr) {
        const auto choice = optimize_bps_window(point, window_candidates, osnr);
        windows.emplace_back(osnr, choice.best_window);
        return choice.best.snr_db;
    };
    out.osnr_db = osnr_required(snr, snr_ref_db, point.link().baud, span_db, &out.evaluations);
    // Window chosen at the evaluated OSNR closest to the solution.
    double gap = std::numeric_limits<double>::infinity();
    for (const auto& [osnr, w] : windows) {
        if (std::abs(osnr - out.osnr_db) < gap) {
            gap = std::abs(osnr - out.osnr_db);
            out.best_window = w;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scheduling

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& task) {
    const std::size_t workers = std::max<std::size_t>(1, std::min(threads, count));
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    const auto work = [&] {
        while (!failed.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                task(i);
            } catch (...) {
                errors[i] = std::current_exception();
                failed.store(true);
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

// ---------------------------------------------------------------------------
// Scenario execution

namespace {

struct Variant {
    FormatChoice format;
    ConstellationSpec constellation;
    LinkConfig link;
    bool dispersion = true;
    bool tx_equals_lo = false;
};

std::vector<Variant> expand_variants(const Scenario& s) {
    const std::vector<double> bauds = s.bauds.empty() ? std::vector<double>{s.base.baud} : s.bauds;
    const std::vector<double> distances =
        s.distances_km.empty() ? std::vector<double>{s.base.length_km} : s.distances_km;
    std::vector<Variant> out;
    for (const auto& f : s.formats) {
        const ConstellationSpec constellation = f.build();
        for (double baud : bauds) {
            for (double distance : distances) {
                for (bool dispersion : s.dispersion) {
                    for (bool tx_eq : s.tx_equals_lo) {
                        Variant v{f, constellation, s.base, dispersion, tx_eq};
                        v.link.baud = baud;
                        v.link.length_km = distance;
                        if (!dispersion) v.link.dispersion_ps_nm_km = 0.0;
                        if (tx_eq) v.link.lw_tx_hz = v.link.lw_lo_hz;
                        out.push_back(std::move(v));
                    }
                }
            }
        }
    }
    return out;
}

LinkConfig with_linewidth(const Variant& v, double lw) {
    LinkConfig link = v.link;
    link.lw_lo_hz = lw;
    if (v.tx_equals_lo) link.lw_tx_hz = lw;
    return link;
}

ScenarioRow row_template(const Scenario& s, const Variant& v, const LinkConfig& link, std::uint64_t seed) {
    ScenarioRow r;
    r.scenario_kind = std::string(to_string(s.kind));
    r.format = std::string(to_string(v.format.label));
    r.baud_hz = link.baud;
    r.distance_km = v.dispersion ? link.length_km : 0.0;
    r.lw_tx_hz = link.lw_tx_hz;
    r.lw_lo_hz = link.lw_lo_hz;
    r.osnr_db = link.osnr_db;
    r.cpr = "none";
    r.snr_db = kNaN;
    r.snr_std_db = kNaN;
    r.var_w = kNaN;
    r.osnr_req_db = kNaN;
    r.pn_penalty_db = kNaN;
    r.total_penalty_db = kNaN;
    r.analytic_penalty_db = kNaN;
    r.n_realizations = link.n_realizations;
    r.seed = seed;
    return r;
}

void fill_snr(ScenarioRow& r, const SnrEstimate& e) {
    r.snr_db = e.snr_db;
    r.snr_std_db = e.snr_std_db;
    r.n_realizations = e.n_realizations;
}

struct ItemOutput {
    std::vector<ScenarioRow> rows;
    std::string pdf_csv;
    std::string xcorr_csv;
    nlohmann::json summary = nlohmann::json::array();
};

class Runner {
public:
    Runner(const Scenario& s, const RunOptions& o)
        : s_(s), o_(o), hash_(s.hash()), variants_(expand_variants(s)),
          streams_(realization_streams(o.seed, hash_, s.base.n_realizations)) {}

    std::size_t item_count() const {
        switch (s_.kind) {
            case ScenarioKind::CprSweep:
            case ScenarioKind::OsnrCurve: return variants_.size();
            default: return variants_.size() * s_.sweep_values.size();
        }
    }

    ItemOutput run(std::size_t item) const {
        switch (s_.kind) {
            case ScenarioKind::VarianceSweep: return variance_item(item);
            case ScenarioKind::CprSweep: return cpr_item(item);
            case ScenarioKind::LinewidthSweep: return linewidth_item(item);
            case ScenarioKind::OsnrCurve: return osnr_item(item);
            case ScenarioKind::PenaltySweep: return penalty_item(item);
        }
        return {};
    }

    std::uint64_t hash() const { return hash_; }

private:
    const Variant& variant_of(std::size_t item) const { return variants_[item / s_.sweep_values.size()]; }
    double sweep_of(std::size_t item) const { return s_.sweep_values[item % s_.sweep_values.size()]; }

    OperatingPoint point(const Variant& v, const LinkConfig& link) const {
        return OperatingPoint(link, v.constellation, streams_, s_.n_test_phases);
    }

    void dump(const OperatingPoint& p, std::size_t item, double osnr_db) const {
        if (!o_.dump_records_dir) return;
        std::filesystem::create_directories(*o_.dump_records_dir);
        for (std::size_t r = 0; r < p.realizations().size(); ++r) {
            const auto name = "item" + std::to_string(item) + "_r" + std::to_string(r) + ".eepnrec";
            write_record(*o_.dump_records_dir / name, p.realizations()[r].at_osnr(osnr_db));
        }
    }

    ItemOutput variance_item(std::size_t item) const {
        const Variant& v = variant_of(item);
        const LinkConfig link = with_linewidth(v, sweep_of(item));
        const OperatingPoint p = point(v, link);
        dump(p, item, link.osnr_db);
        ItemOutput out;
        ScenarioRow row = row_template(s_, v, link, o_.seed);
        row.var_w = p.eepn_variance();
        out.rows.push_back(row);

        if (s_.diagnostics.pdf || s_.diagnostics.xcorr_max_lag > 0) diagnostics(p, item, out);
        return out;
    }

    void diagnostics(const OperatingPoint& p, std::size_t item, ItemOutput& out) const {
        std::vector<ReceptionRecord> records;
        std::vector<std::vector<cplx>> w;
        for (const auto& real : p.realizations()) {
            records.push_back(real.at_osnr(p.link().osnr_db));
            w.push_back(extract_eepn(records.back()));
        }
        if (s_.diagnostics.pdf) {
            std::vector<cplx> pooled_w;
            std::vector<cplx> pooled_nw;
            for (std::size_t r = 0; r < records.size(); ++r) {
                pooled_w.insert(pooled_w.end(), w[r].begin(), w[r].end());
                for (std::size_t k = 0; k < w[r].size(); ++k) pooled_nw.push_back(w[r][k] + records[r].n[k]);
            }
            const auto baseline = calibrate_gaussian_baseline(pooled_w.size(), s_.diagnostics.calibration_trials,
                                                              derive_stream(o_.seed, {hash_, kCalibrationLabel, item}));
            const auto emit = [&](const char* series, std::span<const cplx> values) {
                const NoiseStats st = noise_stats(values);
                const double sigma = std::sqrt(st.variance / 2.0);
                for (std::size_t b = 0; b < st.density.size(); ++b) {
                    const double centre = st.first_edge + (static_cast<double>(b) + 0.5) * st.bin_width;
                    const double z = (centre - st.mean.real()) / sigma;
                    const double gauss = std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
                    out.pdf_csv += std::to_string(item) + "," + series + "," + format_double(centre) + "," +
                                   format_double(st.density[b]) + "," + format_double(gauss) + "\n";
                }
                out.summary.push_back({{"item", item},
                                       {"series", series},
                                       {"variance", st.variance},
                                       {"excess_kurtosis_re", st.excess_kurtosis_re},
                                       {"gaussian_fit_error", st.gaussian_fit_error},
                                       {"threshold", baseline.threshold()},
                                       {"gaussian", st.gaussian_fit_error <= baseline.threshold()}});
            };
            emit("w", pooled_w);
            emit("n_plus_w", pooled_nw);
        }
        if (s_.diagnostics.xcorr_max_lag > 0) {
            std::vector<std::vector<double>> phi;
            for (const auto& rec : records) phi.push_back(rec.laser_phase());
            std::vector<std::span<const cplx>> ws(w.begin(), w.end());
            std::vector<std::span<const cplx>> xs;
            std::vector<std::span<const double>> ps(phi.begin(), phi.end());
            for (const auto& rec : records) xs.emplace_back(rec.x);
            const CrossCorr cc = cross_correlation(ws, xs, ps, s_.diagnostics.xcorr_max_lag, s_.diagnostics.xcorr_stride);
            const double r0 = std::abs(cc.values.front());
            for (std::size_t i = 0; i < cc.lags.size(); ++i) {
                out.xcorr_csv += std::to_string(item) + "," + std::to_string(cc.lags[i]) + "," +
                                 format_double(std::abs(cc.values[i])) + "," +
                                 format_double(r0 > 0.0 ? std::abs(cc.values[i]) / r0 : kNaN) + "\n";
            }
            out.summary.push_back({{"item", item}, {"series", "xcorr"}, {"half_width_symbols", cc.half_width}});
        }
    }

    ItemOutput cpr_item(std::size_t item) const {
        const Variant& v = variants_[item];
        const OperatingPoint p = point(v, v.link);
        dump(p, item, v.link.osnr_db);
        const double var_w = p.eepn_variance();
        std::vector<std::size_t> windows;
        for (double w : s_.sweep_values) windows.push_back(static_cast<std::size_t>(w));

        ItemOutput out;
        for (auto algorithm : s_.algorithms) {
            ScenarioRow base = row_template(s_, v, v.link, o_.seed);
            base.cpr = std::string(to_string(algorithm));
            base.var_w = var_w;
            std::vector<SnrEstimate> est;
            if (algorithm == CprAlgorithm::LoCancel) {
                // Window-independent; repeated so every algorithm covers the same grid.
                est.assign(windows.size(), p.evaluate({CprAlgorithm::LoCancel, 0, s_.n_test_phases}, v.link.osnr_db));
            } else if (algorithm == CprAlgorithm::Bps) {
                est = p.evaluate_bps_windows(windows, v.link.osnr_db);
            } else {
                for (auto w : windows) {
                    est.push_back(p.evaluate({CprAlgorithm::Idr, half_window_of(w), s_.n_test_phases}, v.link.osnr_db));
                }
            }
            for (std::size_t i = 0; i < windows.size(); ++i) {
                ScenarioRow row = base;
                row.window = windows[i];
                fill_snr(row, est[i]);
                out.rows.push_back(row);
            }
        }
        return out;
    }

    // Best SNR over the candidate grid for one algorithm; LO cancellation has no window.
    void best_of(const OperatingPoint& p, CprAlgorithm algorithm, double osnr, ScenarioRow& row) const {
        row.cpr = std::string(to_string(algorithm));
        if (algorithm == CprAlgorithm::LoCancel) {
            fill_snr(row, p.evaluate({CprAlgorithm::LoCancel, 0, s_.n_test_phases}, osnr));
            return;
        }
        WindowChoice choice;
        if (algorithm == CprAlgorithm::Bps) {
            choice = optimize_bps_window(p, s_.window_candidates, osnr);
        } else {
            std::size_t best = 0;
            for (std::size_t i = 0; i < s_.window_candidates.size(); ++i) {
                const auto e = p.evaluate({CprAlgorithm::Idr, half_window_of(s_.window_candidates[i]), s_.n_test_phases}, osnr);
                choice.per_candidate.push_back(e);
                if (e.snr_db > choice.per_candidate[best].snr_db) best = i;
            }
            choice.best_window = s_.window_candidates[best];
            choice.best = choice.per_candidate[best];
        }
        row.window = choice.best_window;
        row.best_window = choice.best_window;
        fill_snr(row, choice.best);
    }

    ItemOutput linewidth_item(std::size_t item) const {
        const Variant& v = variant_of(item);
        const LinkConfig link = with_linewidth(v, sweep_of(item));
        const OperatingPoint p = point(v, link);
        dump(p, item, link.osnr_db);
        const double var_w = p.eepn_variance();
        ItemOutput out;
        for (auto algorithm : s_.algorithms) {
            ScenarioRow row = row_template(s_, v, link, o_.seed);
            row.var_w = var_w;
            best_of(p, algorithm, link.osnr_db, row);
            out.rows.push_back(row);
        }
        return out;
    }

    ItemOutput osnr_item(std::size_t item) const {
        const Variant& v = variants_[item];
        const OperatingPoint p = point(v, v.link);
        dump(p, item, v.link.osnr_db);
        const double var_w = p.eepn_variance();
        ItemOutput out;
        for (double osnr : s_.sweep_values) {
            for (auto algorithm : s_.algorithms) {
                LinkConfig link = v.link;
                link.osnr_db = osnr;
                ScenarioRow row = row_template(s_, v, link, o_.seed);
                row.var_w = var_w;
                best_of(p, algorithm, osnr, row);
                out.rows.push_back(row);
            }
        }
        return out;
    }

    double solve(const Variant& v, const LinkConfig& link, std::size_t& best_window) const {
        const OperatingPoint p = point(v, link);
        try {
            const auto sol = osnr_required(p, *s_.snr_ref_db, s_.window_candidates, s_.osnr_span_db);
            best_window = sol.best_window;
            return sol.osnr_db;
        } catch (const RangeError& e) {
            if (s_.allow_unbracketed) return kNaN;
            throw RangeError(std::string(e.what()) + " at " + std::string(to_string(v.format.label)) + ", " +
                                 format_double(link.baud) + " Bd, D L = " +
                                 format_double(link.dispersion_ps_nm_km * link.length_km) + " ps/nm, LO " +
                                 format_double(link.lw_lo_hz) + " Hz, TX " + format_double(link.lw_tx_hz) + " Hz",
                             e.achieved_low(), e.achieved_high());
        }
    }

    ItemOutput penalty_item(std::size_t item) const {
        const Variant& v = variant_of(item);
        LinkConfig link = with_linewidth(v, sweep_of(item));
        const double ref = *s_.snr_ref_db;
        const double ase_req = ase_only_osnr_required(ref, link.baud);

        ScenarioRow row = row_template(s_, v, link, o_.seed);
        row.cpr = "bps";
        row.snr_db = ref;
        std::size_t window = 0;
        const double total = solve(v, link, window);
        row.osnr_db = total;
        row.osnr_req_db = total;
        row.total_penalty_db = total - ase_req;
        if (window > 0) {
            row.window = window;
            row.best_window = window;
        }
        if (s_.include_pn_penalty) {
            LinkConfig flat = link;
            flat.dispersion_ps_nm_km = 0.0;
            std::size_t pn_window = 0;
            row.pn_penalty_db = solve(v, flat, pn_window) - ase_req;
        }
        row.analytic_penalty_db = analytic_osnr_required(ref, link, link.lw_lo_hz) - ase_req;
        if (o_.dump_records_dir && std::isfinite(total)) dump(point(v, link), item, total);
        ItemOutput out;
        out.rows.push_back(row);
        return out;
    }

    const Scenario& s_;
    const RunOptions& o_;
    std::uint64_t hash_;
    std::vector<Variant> variants_;
    std::vector<RngStream> streams_;
};

}  // namespace

RunResult run_scenario(const Scenario& scenario, const RunOptions& options) {
    scenario.validate();
    const Runner runner(scenario, options);
    std::vector<ItemOutput> outputs(runner.item_count());
    parallel_for(outputs.size(), options.threads, [&](std::size_t i) { outputs[i] = runner.run(i); });

    RunResult result;
    std::string pdf;
    std::string xcorr;
    nlohmann::json pdf_summary = nlohmann::json::array();
    nlohmann::json xcorr_summary = nlohmann::json::array();
    for (auto& o : outputs) {
        for (auto& r : o.rows) result.rows.push_back(std::move(r));
        pdf += o.pdf_csv;
        xcorr += o.xcorr_csv;
        for (auto& e : o.summary) {
            (e.at("series") == "xcorr" ? xcorr_summary : pdf_summary).push_back(std::move(e));
        }
    }
    if (!pdf.empty()) {
        result.diagnostics.push_back({"pdf", "item,series,bin_center,density,gaussian_density\n" + pdf, pdf_summary});
    }
    if (!xcorr.empty()) {
        result.diagnostics.push_back({"xcorr", "item,lag,abs_r,abs_r_normalized\n" + xcorr, xcorr_summary});
    }
    return result;
}

std::vector<ScenarioRow> penalty_sweep(const Scenario& scenario, const RunOptions& options) {
    if (scenario.kind != ScenarioKind::PenaltySweep) throw ConfigError("penalty_sweep needs a penalty scenario");
    return run_scenario(scenario, options).rows;
}

// ---------------------------------------------------------------------------
// Output

namespace {

constexpr const char* kPlotScript = R"PY(#!/usr/bin/env python3
"""Render the figure analog of results.csv (written next to this script)."""
import csv
import json
import math
import os
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def num(v):
    return float(v) if v not in ("", None) else math.nan


def load():
    with open(os.path.join(HERE, "results.csv"), newline="") as f:
        rows = list(csv.DictReader(f))
    with open(os.path.join(HERE, "scenario.json")) as f:
        meta = json.load(f)
    return rows, meta


def series(rows, keys):
    groups = defaultdict(list)
    for r in rows:
        groups[tuple(r[k] for k in keys)].append(r)
    return groups


def label(key, names):
    return ", ".join(f"{n}={v}" for n, v in zip(names, key))


def variance(ax, rows, meta):
    link = meta["scenario"]["link"]
    for key, rs in series(rows, ["format", "baud_hz", "distance_km"]).items():
        lw = [num(r["lw_lo_hz"]) for r in rs]
        ax.loglog(lw, [num(r["var_w"]) for r in rs], "o", label="sim " + label(key, ["fmt", "B", "L"]))
        b, d = num(key[1]), num(key[2])
        c = 299792458.0
        f0 = link["center_frequency_thz"] * 1e12
        ax.loglog(lw, [math.pi * c * link["dispersion_ps_nm_km"] * 1e-6 * d * 1e3 * b * x / (2 * f0 * f0) for x in lw], "--")
    ax.set_xlabel("LO linewidth [Hz]")
    ax.set_ylabel("EEPN variance / P")


def cpr(ax, rows, meta):
    for key, rs in series(rows, ["format", "distance_km", "cpr"]).items():
        if key[2] == "lo":
            ax.axhline(num(rs[0]["snr_db"]), ls=":", label=label(key, ["fmt", "L", "cpr"]))
            continue
        ax.semilogx([num(r["window"]) for r in rs], [num(r["snr_db"]) for r in rs], "o-", label=label(key, ["fmt", "L", "cpr"]))
    ax.set_xlabel("CPR averaging length N")
    ax.set_ylabel("SNR [dB]")


def linewidth(ax, rows, meta):
    for key, rs in series(rows, ["format", "baud_hz", "cpr"]).items():
        ax.semilogx([num(r["lw_lo_hz"]) for r in rs], [num(r["snr_db"]) for r in rs], "o-", label=label(key, ["fmt", "B", "cpr"]))
    ax.set_xlabel("LO linewidth [Hz]")
    ax.set_ylabel("SNR [dB]")


def osnr(ax, rows, meta):
    for key, rs in series(rows, ["format", "distance_km", "cpr"]).items():
        ax.plot([num(r["osnr_db"]) for r in rs], [num(r["snr_db"]) for r in rs], "o-", label=label(key, ["fmt", "L", "cpr"]))
    ax.set_xlabel("OSNR [dB / 0.1 nm]")
    ax.set_ylabel("SNR [dB]")


def penalty(ax, rows, meta):
    for key, rs in series(rows, ["format", "baud_hz", "distance_km"]).items():
        tx_eq = defaultdict(list)
        for r in rs:
            tx_eq[num(r["lw_tx_hz"]) > 0].append(r)
        for flag, group in tx_eq.items():
            tag = "TX=LO" if flag else "TX=0"
            lw = [num(r["lw_lo_hz"]) for r in group]
            ax.semilogx(lw, [num(r["total_penalty_db"]) for r in group], "o-", label=f"total {tag}")
            ax.semilogx(lw, [num(r["pn_penalty_db"]) for r in group], "d-", label=f"PN {tag}")
        lw = [num(r["lw_lo_hz"]) for r in rs]
        ax.semilogx(lw, [num(r["analytic_penalty_db"]) for r in rs], "k--", label="analytic")
    ax.set_xlabel("Laser linewidth [Hz]")
    ax.set_ylabel("OSNR penalty [dB]")


def main():
    rows, meta = load()
    kind = rows[0]["scenario_kind"]
    fig, ax = plt.subplots(figsize=(6, 4))
    {"variance_sweep": variance, "cpr_sweep": cpr, "linewidth_sweep": linewidth,
     "osnr_curve": osnr, "penalty_sweep": penalty}[kind](ax, rows, meta)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(HERE, kind + ".png")
    fig.savefig(out, dpi=150)


if __name__ == "__main__":
    main()
)PY";

void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

void emit_outputs(const RunResult& result, const Scenario& scenario, const RunOptions& options,
                  const std::filesystem::path& out_dir) {
    if (result.rows.empty()) throw ConfigError("no rows to emit");

    std::vector<std::pair<std::string, std::string>> files;
    std::string csv = csv_header() + "\n";
    for (const auto& r : result.rows) csv += to_csv_line(r) + "\n";
    files.emplace_back("results.csv", std::move(csv));

    nlohmann::json formats = nlohmann::json::array();
    for (const auto& f : scenario.formats) {
        const auto spec = f.build();
        formats.push_back({{"label", to_string(spec.label)}, {"entropy_bits", spec.entropy_bits},
                           {"mean_power", spec.mean_power()}, {"points", spec.size()}});
    }
    const nlohmann::json echo = {{"scenario", to_json(scenario)},
                                 {"seed", options.seed},
                                 {"scenario_hash", scenario.hash()},
                                 {"resolved_formats", formats},
                                 {"columns", csv_columns()}};
    files.emplace_back("scenario.json", echo.dump(2) + "\n");
    files.emplace_back("plot.py", kPlotScript);
    for (const auto& d : result.diagnostics) {
        files.emplace_back(d.name + ".csv", d.csv);
        files.emplace_back(d.name + "_summary.json", d.summary.dump(2) + "\n");
    }

    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> staged;
    try {
        for (const auto& [name, content] : files) {
            const auto tmp = out_dir / (name + ".tmp");
            staged.push_back(tmp);
            write_file(tmp, content);
        }
        for (std::size_t i = 0; i < files.size(); ++i) std::filesystem::rename(staged[i], out_dir / files[i].first);
    } catch (...) {
        std::error_code ec;
        for (const auto& p : staged) std::filesystem::remove(p, ec);
        throw;
    }
}

}  // namespace eepn
