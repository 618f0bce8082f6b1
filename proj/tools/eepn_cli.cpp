// eepn: regenerate EEPN simulation figures from scenario files.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "eepn/error.hpp"
#include "eepn/harness.hpp"
#include "eepn/metrics.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRange = 3;

struct Options {
    std::string config;
    std::uint64_t seed = 1;
    std::string profile = "desk";
    std::string out = "out";
    std::size_t threads = 0;
    bool dump_records = false;
    std::optional<std::string> cpr;
    std::optional<std::size_t> window;
    std::optional<std::size_t> test_phases;
};

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw eepn::ConfigError("cannot open config " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw eepn::ConfigError(path + ": " + e.what());
    }
}

// Command-line CPR overrides are applied to the JSON before validation.
void apply_overrides(nlohmann::json& j, const Options& o) {
    if (o.cpr) j["cpr"] = nlohmann::json::array({*o.cpr});
    if (o.test_phases) j["test_phases"] = *o.test_phases;
    if (o.window) {
        if (*o.window == 0) throw eepn::ConfigError("--window must be positive");
        j["window_candidates"] = nlohmann::json::array({*o.window, *o.window + 1});
        if (j.value("kind", std::string{}) == "cpr_sweep") j["sweep"] = {{"axis", "window"}, {"values", {*o.window}}};
    }
}

eepn::Scenario load(const Options& o, std::optional<eepn::ScenarioKind> expected) {
    nlohmann::json j = read_json(o.config);
    if (expected && !j.contains("kind")) j["kind"] = std::string(eepn::to_string(*expected));
    apply_overrides(j, o);
    eepn::Scenario s = eepn::scenario_from_json(j, eepn::parse_profile(o.profile));
    if (expected && s.kind != *expected) {
        throw eepn::ConfigError("config describes a " + std::string(eepn::to_string(s.kind)) +
                                " but the subcommand expects " + std::string(eepn::to_string(*expected)));
    }
    return s;
}

int run(const Options& o, eepn::ScenarioKind kind) {
    const eepn::Scenario s = load(o, kind);
    eepn::RunOptions ro;
    ro.seed = o.seed;
    ro.threads = o.threads > 0 ? o.threads : std::max(1U, std::thread::hardware_concurrency());
    if (o.dump_records) ro.dump_records_dir = std::filesystem::path(o.out) / "records";
    const eepn::RunResult result = eepn::run_scenario(s, ro);
    eepn::emit_outputs(result, s, ro, o.out);
    std::cout << "wrote " << result.rows.size() << " rows to " << (std::filesystem::path(o.out) / "results.csv").string()
              << "\n";
    return 0;
}

int validate(const Options& o) {
    const eepn::Scenario s = load(o, std::nullopt);
    nlohmann::json report = {{"scenario", eepn::to_json(s)}, {"scenario_hash", s.hash()}};
    nlohmann::json formats = nlohmann::json::array();
    for (const auto& f : s.formats) {
        const auto spec = f.build();
        formats.push_back({{"label", eepn::to_string(spec.label)}, {"entropy_bits", spec.entropy_bits}});
    }
    report["formats"] = formats;
    report["analytic_eepn_variance_at_base"] = eepn::analytic_eepn_variance(s.base, s.base.lw_lo_hz);
    std::cout << report.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EEPN Monte Carlo simulator"};
    app.require_subcommand(1);
    Options o;

    const auto add_common = [&o](CLI::App* sub) {
        sub->add_option("--config", o.config, "Scenario JSON file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "Master seed");
        sub->add_option("--profile", o.profile, "Scale profile")->check(CLI::IsMember({"desk", "paper"}));
        sub->add_option("--out", o.out, "Output directory");
        sub->add_option("--threads", o.threads, "Worker threads (0: hardware concurrency)");
        sub->add_flag("--dump-records", o.dump_records, "Write binary reception records under <out>/records");
        sub->add_option("--cpr", o.cpr, "Override the CPR algorithm")->check(CLI::IsMember({"lo", "idr", "bps"}));
        sub->add_option("--window", o.window, "Fixed CPR averaging length N (block of 2N+1 symbols)");
        sub->add_option("--test-phases", o.test_phases, "BPS test phases");
    };

    const std::pair<const char*, eepn::ScenarioKind> kinds[] = {
        {"variance-sweep", eepn::ScenarioKind::VarianceSweep},
        {"cpr-sweep", eepn::ScenarioKind::CprSweep},
        {"linewidth-sweep", eepn::ScenarioKind::LinewidthSweep},
        {"osnr-curve", eepn::ScenarioKind::OsnrCurve},
        {"penalty-sweep", eepn::ScenarioKind::PenaltySweep},
    };
    std::optional<eepn::ScenarioKind> chosen;
    for (const auto& [name, kind] : kinds) {
        CLI::App* sub = app.add_subcommand(name, std::string("Run a ") + name + " scenario");
        add_common(sub);
        sub->callback([&chosen, kind = kind] { chosen = kind; });
    }
    CLI::App* check = app.add_subcommand("validate", "Validate a scenario and print its resolved form");
    add_common(check);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        return chosen ? run(o, *chosen) : validate(o);
    } catch (const eepn::RangeError& e) {
        std::cerr << "range error: " << e.what() << "\n";
        return kExitRange;
    } catch (const eepn::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
