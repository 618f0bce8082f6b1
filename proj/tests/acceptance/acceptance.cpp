// Acceptance suite: one [PASS]/[FAIL] line per criterion, tolerances pinned
// below. Figure criteria run the shipped scenario files unmodified at the
// desk profile, seed 1.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "eepn/channel.hpp"
#include "eepn/constellation.hpp"
#include "eepn/cpr.hpp"
#include "eepn/fft.hpp"
#include "eepn/harness.hpp"
#include "eepn/metrics.hpp"

using namespace eepn;
namespace fs = std::filesystem;

namespace {

struct Context {
    fs::path configs;
    Profile profile = Profile::Desk;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
};

struct Verdict {
    bool pass = true;
    std::string summary;
    std::vector<std::string> details;

    void check(bool ok, const std::string& line) {
        pass = pass && ok;
        details.push_back(std::string(ok ? "ok   " : "MISS ") + line);
    }
};

std::string fmt(double v, int digits = 4) {
    std::ostringstream os;
    os.precision(digits);
    os << std::fixed << v;
    return os.str();
}

bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }

nlohmann::json config(const Context& c, const std::string& name) {
    std::ifstream in(c.configs / name);
    if (!in) throw std::runtime_error("missing config " + (c.configs / name).string());
    return nlohmann::json::parse(in);
}

RunResult run(const Context& c, const nlohmann::json& j) {
    const Scenario s = scenario_from_json(j, c.profile);
    RunOptions o;
    o.seed = c.seed;
    o.threads = c.threads;
    return run_scenario(s, o);
}

std::vector<ScenarioRow> select(const std::vector<ScenarioRow>& rows, const std::function<bool(const ScenarioRow&)>& f) {
    std::vector<ScenarioRow> out;
    std::copy_if(rows.begin(), rows.end(), std::back_inserter(out), f);
    return out;
}

const ScenarioRow& best_snr(const std::vector<ScenarioRow>& rows) {
    return *std::max_element(rows.begin(), rows.end(),
                             [](const ScenarioRow& a, const ScenarioRow& b) { return a.snr_db < b.snr_db; });
}

const DiagnosticSeries* diagnostic(const RunResult& r, const std::string& name) {
    for (const auto& d : r.diagnostics) {
        if (d.name == name) return &d;
    }
    return nullptr;
}

LinkConfig desk_link(const Context& c) {
    LinkConfig link;
    apply_profile(link, c.profile);
    return link;
}

// ---------------------------------------------------------------------------

Verdict closed_form(const Context&) {
    Verdict v;
    LinkConfig c;
    c.dispersion_ps_nm_km = 20.6;
    c.length_km = 6600.0;
    c.baud = 49e9;
    c.center_frequency_thz = 194.0;
    const double value = analytic_eepn_variance(c, 1e6);
    v.check(std::abs(value / 0.0834 - 1.0) <= 0.01, "sigma^2 = " + fmt(value, 5) + ", target 0.0834 +- 1%");

    const auto ratio = [&](LinkConfig m, double lw) { return analytic_eepn_variance(m, lw) / value; };
    LinkConfig m = c;
    m.baud *= 2.0;
    const double rb = ratio(m, 1e6);
    m = c;
    m.length_km *= 2.0;
    const double rl = ratio(m, 1e6);
    const double rn = ratio(c, 2e6);
    v.check(rb == 2.0 && rl == 2.0 && rn == 2.0,
            "doubling B, L, dnu scales by " + fmt(rb, 15) + ", " + fmt(rl, 15) + ", " + fmt(rn, 15));
    v.summary = "closed-form EEPN variance " + fmt(value, 5);
    return v;
}

Verdict variance_vs_closed_form(const Context& c) {
    Verdict v;
    const auto rows = select(run(c, config(c, "fig2.json")).rows, [](const ScenarioRow& r) {
        return r.lw_lo_hz == 1e4 || r.lw_lo_hz == 1e5 || r.lw_lo_hz == 1e6;
    });
    double worst = 1.0;
    for (const auto& r : rows) {
        LinkConfig link = desk_link(c);
        link.baud = r.baud_hz;
        link.length_km = r.distance_km;
        const double ratio = r.var_w / analytic_eepn_variance(link, r.lw_lo_hz);
        if (std::abs(ratio - 1.0) > std::abs(worst - 1.0)) worst = ratio;
        v.check(within(ratio, 0.88, 1.02), fmt(r.baud_hz / 1e9, 0) + " GBd, " + fmt(r.lw_lo_hz / 1e3, 0) +
                                               " kHz: Var(w)/P / closed form = " + fmt(ratio) + ", target [0.88, 1.02]");
    }
    v.summary = "simulated vs closed-form EEPN variance, worst ratio " + fmt(worst);
    return v;
}

Verdict gaussianity(const Context& c) {
    Verdict v;
    const auto result = run(c, config(c, "fig3.json"));
    const DiagnosticSeries* pdf = diagnostic(result, "pdf");
    if (!pdf) {
        v.check(false, "no pdf diagnostics produced");
        v.summary = "Gaussianity verdicts";
        return v;
    }
    for (const auto& e : pdf->summary) {
        const std::string series = e.at("series");
        const bool gaussian = e.at("gaussian");
        const bool want = series != "w";
        v.check(gaussian == want, series + ": fit error " + fmt(e.at("gaussian_fit_error").get<double>()) +
                                      " vs threshold " + fmt(e.at("threshold").get<double>()) + " -> " +
                                      (gaussian ? "Gaussian" : "non-Gaussian") + ", expected " +
                                      (want ? "Gaussian" : "non-Gaussian"));
    }
    v.summary = "w non-Gaussian, n + w Gaussian";
    return v;
}

Verdict correlation_widths(const Context& c) {
    Verdict v;
    const auto result = run(c, config(c, "fig4.json"));
    const DiagnosticSeries* xc = diagnostic(result, "xcorr");
    if (!xc || xc->summary.size() != 2) {
        v.check(false, "expected two cross-correlation summaries");
        v.summary = "cross-correlation half widths";
        return v;
    }
    const double targets[] = {400.0, 760.0};
    const double km[] = {6600.0, 13419.0};
    std::string widths;
    for (std::size_t i = 0; i < 2; ++i) {
        const double hw = xc->summary[i].at("half_width_symbols");
        v.check(within(hw, 0.85 * targets[i], 1.15 * targets[i]),
                fmt(km[i], 0) + " km: half width " + fmt(hw, 1) + " symbols, target " + fmt(targets[i], 0) + " +- 15%");
        widths += (i ? ", " : "") + fmt(hw, 0);
    }
    v.summary = "cross-correlation half widths " + widths + " symbols";
    return v;
}

Verdict cpr_anchors(const Context& c) {
    Verdict v;
    const auto j = config(c, "fig5.json");
    const auto rows = run(c, j).rows;
    const auto pick = [&](bool dispersion, const char* cpr) {
        return select(rows, [&](const ScenarioRow& r) { return (r.distance_km > 0.0) == dispersion && r.cpr == cpr; });
    };
    const auto near = [&](const std::string& what, double got, double target, double tol) {
        v.check(std::abs(got - target) <= tol,
                what + " " + fmt(got, 3) + " dB, target " + fmt(target, 2) + " +- " + fmt(tol, 2));
    };
    const auto lo_off = pick(false, "lo");
    const auto lo_on = pick(true, "lo");
    const auto idr_on = select(pick(true, "idr"), [](const ScenarioRow& r) { return r.window == 30U; });
    const auto bps_on = pick(true, "bps");
    const auto bps_off = pick(false, "bps");
    if (lo_off.empty() || lo_on.empty() || idr_on.empty() || bps_on.empty() || bps_off.empty()) {
        v.check(false, "missing rows in the CPR sweep");
        return v;
    }
    const Scenario s = scenario_from_json(j, c.profile);
    near("ASE-only (LO cancel, no dispersion)", lo_off.front().snr_db, 14.07, 0.15);
    near("equivalent-AWGN closed form", analytic_snr(20.0, 49e9, s.base, 2e5, true), 12.52, 0.01);
    near("LO cancel with EEPN", lo_on.front().snr_db, 12.53, 0.15);
    near("IDR with EEPN, N = 30", idr_on.front().snr_db, 13.03, 0.15);
    const auto& peak = best_snr(bps_on);
    near("BPS with EEPN peak", peak.snr_db, 12.91, 0.15);
    v.check(within(static_cast<double>(*peak.window), 700, 1200),
            "BPS with EEPN best N = " + std::to_string(*peak.window) + ", target [700, 1200]");
    const auto& peak_off = best_snr(bps_off);
    v.check(within(static_cast<double>(*peak_off.window), 100, 400),
            "BPS without EEPN best N = " + std::to_string(*peak_off.window) +
                " (peak " + fmt(peak_off.snr_db, 3) + " dB), target one grid step from 200: [100, 400]");
    v.summary = "SNR vs averaging length anchors";
    return v;
}

Verdict format_mildness(const Context& c) {
    Verdict v;
    const auto rows = run(c, config(c, "fig7.json")).rows;
    const auto at = [&](const char* fmt_label, double lw) {
        const auto r = select(rows, [&](const ScenarioRow& x) {
            return x.format == fmt_label && x.lw_lo_hz == lw && x.baud_hz == 49e9;
        });
        return r.empty() ? std::numeric_limits<double>::quiet_NaN() : r.front().snr_db;
    };
    const double gap = at("QPSK", 1e6) - at("PCS64", 1e6);
    v.check(within(gap, 0.3, 0.9), "1 MHz: SNR(QPSK) - SNR(PCS64) = " + fmt(gap, 3) + " dB, target [0.3, 0.9]");
    const double theory = ase_only_snr_db(20.0, 49e9);
    for (const char* f : {"QPSK", "QAM64", "PCS64"}) {
        const double d = at(f, 1e3) - theory;
        v.check(std::abs(d) <= 0.1, std::string("1 kHz: ") + f + " - ASE-only = " + fmt(d, 3) + " dB, target +- 0.1");
    }
    v.summary = "format dependence, QPSK - PCS64 at 1 MHz = " + fmt(gap, 3) + " dB";
    return v;
}

Verdict snr_reference_penalties(const Context& c) {
    Verdict v;
    const auto rows = run(c, config(c, "fig9_penalty.json")).rows;
    const ScenarioRow& r = rows.front();
    const double over = r.analytic_penalty_db - r.total_penalty_db;
    v.check(std::abs(r.pn_penalty_db - 0.3) <= 0.15, "PN penalty " + fmt(r.pn_penalty_db, 3) + " dB, target 0.3 +- 0.15");
    v.check(std::abs(r.total_penalty_db - 1.0) <= 0.15,
            "total penalty " + fmt(r.total_penalty_db, 3) + " dB, target 1.0 +- 0.15");
    v.check(std::abs(over - 0.3) <= 0.15, "analytic overestimation " + fmt(over, 3) + " dB (analytic " +
                                              fmt(r.analytic_penalty_db, 3) + "), target 0.3 +- 0.15");
    v.summary = "penalties at SNR_ref 12 dB, 200 kHz";
    return v;
}

struct LimitSweep {
    std::vector<ScenarioRow> rows;
};

// TX = LO total penalties on a linewidth grid at both symbol rates, shared by
// the linewidth-limit criterion and the monotonicity property.
const LimitSweep& limit_sweep(const Context& c) {
    static std::optional<LimitSweep> cache;
    if (!cache) {
        cache = LimitSweep{run(c, config(c, "fig10_limits.json")).rows};
    }
    return *cache;
}

std::vector<ScenarioRow> at_baud(const LimitSweep& s, double baud, double max_lw) {
    return select(s.rows, [&](const ScenarioRow& r) { return r.baud_hz == baud && r.lw_lo_hz <= max_lw; });
}

double one_db_crossing(const std::vector<ScenarioRow>& rows) {
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double a = rows[i - 1].total_penalty_db;
        const double b = rows[i].total_penalty_db;
        if (rows[0].total_penalty_db >= 1.0) return rows[0].lw_lo_hz;
        if (a < 1.0 && b >= 1.0) {
            return rows[i - 1].lw_lo_hz + (1.0 - a) * (rows[i].lw_lo_hz - rows[i - 1].lw_lo_hz) / (b - a);
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

Verdict linewidth_limits(const Context& c) {
    Verdict v;
    const auto& sweep = limit_sweep(c);
    const double bounds[2][2] = {{110e3, 150e3}, {85e3, 115e3}};
    const double bauds[] = {49e9, 98e9};
    std::string limits;
    for (int b = 0; b < 2; ++b) {
        const auto rows = at_baud(sweep, bauds[b], 2e5);
        std::string curve;
        for (const auto& r : rows) curve += " " + fmt(r.lw_lo_hz / 1e3, 0) + ":" + fmt(r.total_penalty_db, 3);
        const double x = one_db_crossing(rows);
        v.check(within(x, bounds[b][0], bounds[b][1]),
                fmt(bauds[b] / 1e9, 0) + " GBd: 1 dB total penalty at " + fmt(x / 1e3, 1) + " kHz, target [" +
                    fmt(bounds[b][0] / 1e3, 0) + ", " + fmt(bounds[b][1] / 1e3, 0) + "] kHz; kHz:dB" + curve);
        limits += (b ? ", " : "") + fmt(x / 1e3, 0) + " kHz";
    }
    const auto at500 = select(sweep.rows, [](const ScenarioRow& r) { return r.baud_hz == 49e9 && r.lw_lo_hz == 5e5; });
    const double over = at500.empty() ? std::numeric_limits<double>::quiet_NaN()
                                      : at500.front().analytic_penalty_db - at500.front().total_penalty_db;
    v.check(std::abs(over - 0.54) <= 0.15,
            "49 GBd, 500 kHz: analytic - simulated = " + fmt(over, 3) + " dB (total " +
                fmt(at500.empty() ? std::nan("") : at500.front().total_penalty_db, 3) + "), target 0.54 +- 0.15");
    v.summary = "1 dB linewidth limits " + limits;
    return v;
}

// ---------------------------------------------------------------------------
// Property suite

std::vector<std::size_t> brute_bps(std::span<const cplx> y, const ConstellationSpec& s, std::size_t n_test,
                                   std::size_t l, std::vector<double>& gaps) {
    const auto theta = bps_test_phases(n_test);
    const std::size_t n = y.size();
    std::vector<double> d(n * n_test);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t b = 0; b < n_test; ++b) {
            const cplx z = y[k] * std::polar(1.0, -theta[b]);
            double best = std::numeric_limits<double>::infinity();
            for (const auto& p : s.points) best = std::min(best, std::norm(z - p));
            d[k * n_test + b] = best;
        }
    }
    std::vector<std::size_t> out(n);
    gaps.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<double> sums(n_test, 0.0);
        for (std::size_t m = (k >= l ? k - l : 0); m <= std::min(n - 1, k + l); ++m) {
            for (std::size_t b = 0; b < n_test; ++b) sums[b] += d[m * n_test + b];
        }
        const auto best = static_cast<std::size_t>(std::min_element(sums.begin(), sums.end()) - sums.begin());
        double second = std::numeric_limits<double>::infinity();
        for (std::size_t b = 0; b < n_test; ++b) {
            if (b != best) second = std::min(second, sums[b]);
        }
        out[k] = best;
        gaps[k] = (second - sums[best]) / std::max(sums[best], 1e-300);
    }
    return out;
}

Verdict properties(const Context& c) {
    Verdict v;
    const auto con = build_qam(64);
    LinkConfig base = desk_link(c);
    base.osnr_db = std::numeric_limits<double>::infinity();
    std::vector<RngStream> streams = realization_streams(c.seed, 0x9e3779b97f4a7c15ULL, 1);

    // EEPN null at D L = 0.
    for (double lw : {1e3, 1e4, 2e5, 1e6}) {
        LinkConfig link = base;
        link.length_km = 0.0;
        link.lw_lo_hz = lw;
        const double var = sample_variance(extract_eepn(simulate_link(link, con, streams[0])));
        v.check(var < 1e-6, "EEPN null, D L = 0, " + fmt(lw / 1e3, 0) + " kHz: Var(w)/P = " + fmt(var * 1e6, 4) +
                                "e-6, target < 1e-6");
    }

    // TX-only null.
    for (double lw : {2e5, 1e6}) {
        LinkConfig tx = base;
        tx.lw_tx_hz = lw;
        tx.lw_lo_hz = 0.0;
        LinkConfig lo = base;
        lo.lw_lo_hz = lw;
        const double vt = sample_variance(extract_eepn(simulate_link(tx, con, streams[0])));
        const double vl = sample_variance(extract_eepn(simulate_link(lo, con, streams[0])));
        v.check(vt < 0.01 * vl, "TX-only null, " + fmt(lw / 1e3, 0) + " kHz: Var(w) TX-only / LO-only = " +
                                    fmt(vt / vl, 6) + ", target < 0.01");
    }

    // Dispersion filter unitarity on a block of the simulated size.
    {
        const std::size_t m = base.n_symbols * base.oversampling;
        const auto f = bin_frequencies(m, base.sample_period());
        std::vector<cplx> h(m), hc(m);
        for (std::size_t i = 0; i < m; ++i) {
            const double phi = cd_phase(f[i], base.dispersion_ps_nm_km, base.length_km, base.center_frequency_thz);
            h[i] = std::polar(1.0, -phi);
            hc[i] = std::conj(h[i]);
        }
        RngStream r(c.seed, 77);
        std::vector<cplx> s(m);
        for (auto& z : s) z = complex_gaussian(r, 1.0);
        auto y = s;
        apply_transfer(y, h);
        double e_in = 0.0, e_out = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            e_in += std::norm(s[i]);
            e_out += std::norm(y[i]);
        }
        apply_transfer(y, hc);
        double err = 0.0;
        for (std::size_t i = 0; i < m; ++i) err = std::max(err, std::abs(y[i] - s[i]));
        const double parseval = std::abs(e_out / e_in - 1.0);
        v.check(parseval <= 1e-10 && err <= 1e-10,
                "CD all-pass: |E_out/E_in - 1| = " + fmt(parseval * 1e12, 3) + "e-12, inversion error " +
                    fmt(err * 1e12, 3) + "e-12, target <= 1e-10");
    }

    // Phase search against an exhaustive evaluation.
    {
        const auto q16 = build_qam(16);
        RngStream r(c.seed, 78);
        const auto x = sample_symbols(q16, 6000, r);
        RngStream pn(c.seed, 79);
        const auto path = wiener_path(pn, 2e-5, 1.0, x.size());
        std::vector<cplx> y(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) y[k] = x[k] * std::polar(1.0, path.phases[k] + 0.3) + complex_gaussian(r, 0.02);
        const BpsDistanceTable table(y, q16, 32);
        std::size_t mismatches = 0, compared = 0;
        for (std::size_t l : {0U, 7U, 60U, 5000U}) {
            std::vector<double> gaps;
            const auto expected = brute_bps(y, q16, 32, l, gaps);
            const auto got = table.select(l);
            for (std::size_t k = 0; k < y.size(); ++k) {
                if (gaps[k] > 1e-9) {
                    ++compared;
                    mismatches += got[k] != expected[k];
                }
            }
        }
        v.check(mismatches == 0, "BPS brute-force equivalence: " + std::to_string(mismatches) + " mismatches in " +
                                     std::to_string(compared) + " decisions (l = 0, 7, 60, 5000)");
    }

    // Thread-count independence of the emitted CSV.
    {
        auto j = config(c, "fig5.json");
        j["link"]["n_symbols"] = 16384;
        j["link"]["n_discard"] = 2000;
        j["link"]["n_realizations"] = 3;
        j["sweep"]["values"] = {30, 200, 1000};
        const Scenario s = scenario_from_json(j, c.profile);
        const auto csv = [&](std::size_t threads) {
            RunOptions o;
            o.seed = c.seed;
            o.threads = threads;
            std::string text = csv_header() + "\n";
            for (const auto& row : run_scenario(s, o).rows) text += to_csv_line(row) + "\n";
            return text;
        };
        const std::string a = csv(1);
        const bool same = a == csv(2) && a == csv(5);
        v.check(same, std::string("CSV bytes with 1, 2 and 5 threads ") + (same ? "identical" : "differ"));
    }

    // Penalty monotonicity in linewidth.
    {
        const auto& sweep = limit_sweep(c);
        for (double baud : {49e9, 98e9}) {
            const auto rows = at_baud(sweep, baud, 1e12);
            // An unbracketed point (NaN) lies beyond the top of the OSNR grid,
            // so it may only be followed by further unbracketed points.
            bool mono = rows.size() > 1 && !std::isnan(rows.front().total_penalty_db);
            std::size_t beyond = 0;
            for (std::size_t i = 1; i < rows.size(); ++i) {
                const double a = rows[i - 1].total_penalty_db;
                const double b = rows[i].total_penalty_db;
                if (std::isnan(b)) {
                    ++beyond;
                    continue;
                }
                mono = mono && !std::isnan(a) && b >= a;
            }
            v.check(mono, fmt(baud / 1e9, 0) + " GBd: total penalty non-decreasing over " +
                              std::to_string(rows.size()) + " linewidths (" + std::to_string(beyond) +
                              " beyond the OSNR grid)");
        }
    }
    v.summary = "property suite";
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EEPN acceptance criteria"};
    Context ctx;
    std::string configs = "configs";
    std::string profile = "desk";
    std::size_t threads = 0;
    std::vector<int> only;
    app.add_option("--configs", configs, "Directory with the shipped scenario files")->check(CLI::ExistingDirectory);
    app.add_option("--profile", profile, "Scale profile")->check(CLI::IsMember({"desk", "paper"}));
    app.add_option("--seed", ctx.seed, "Master seed");
    app.add_option("--threads", threads, "Worker threads (0: hardware concurrency)");
    app.add_option("--only", only, "Run only these criterion numbers");
    CLI11_PARSE(app, argc, argv);
    ctx.configs = configs;
    ctx.profile = parse_profile(profile);
    ctx.threads = threads > 0 ? threads : std::max(1U, std::thread::hardware_concurrency());

    using Criterion = Verdict (*)(const Context&);
    const std::pair<int, Criterion> criteria[] = {
        {1, closed_form},           {2, variance_vs_closed_form}, {3, gaussianity},
        {4, correlation_widths},    {5, cpr_anchors},             {6, format_mildness},
        {7, snr_reference_penalties}, {8, linewidth_limits},     {9, properties},
    };

    std::cout << "acceptance: profile " << profile << ", seed " << ctx.seed << ", " << ctx.threads << " thread(s)\n";
    int passed = 0, total = 0;
    for (const auto& [id, fn] : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        ++total;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = fn(ctx);
        } catch (const std::exception& e) {
            v.pass = false;
            v.summary = std::string("error: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        passed += v.pass;
        std::cout << (v.pass ? "[PASS] " : "[FAIL] ") << "criterion " << id << ": " << v.summary << " (" << fmt(secs, 1)
                  << " s)\n";
        for (const auto& d : v.details) std::cout << "         " << d << "\n";
        std::cout.flush();
    }
    std::cout << "acceptance: " << passed << "/" << total << " criteria passed\n";
    return passed == total ? 0 : 1;
}
