#include "saf/dispatch.hpp"

#include "saf/errors.hpp"
#include "saf/report.hpp"

#include <algorithm>
#include <string>

namespace saf {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> run_decisions(const RunResult& r) {
    std::vector<std::string> d;
    d.push_back("integrator: classical 4-stage fixed step, dt=" +
                fmt_double(r.meta.dt_plant) + " s");
    d.push_back("modulator: " + r.meta.duty_mode + " common-mode injection");
    d.push_back("controller gain k=" + fmt_double(r.meta.k) +
                " (k_bar=" + fmt_double(r.meta.k_bar) +
                ", boundary-layer abscissa=" + fmt_double(r.meta.closed_loop_abscissa) +
                " 1/s)");
    d.push_back("voltage window slots: " + std::to_string(r.meta.window_slots));
    if (r.meta.mode == SimMode::SampledPwm) {
        d.push_back("clamped duty samples: " + std::to_string(r.meta.clamped_duties));
    }
    return d;
}

DispatchResult do_size(const ConfigFile& cfg, const fs::path& out_dir) {
    if (!cfg.sizing) {
        throw ConfigError("size: configuration has no [sizing] section");
    }
    const SizingReport report = cfg.sizing_approach == "switches"
                                    ? size_from_switches(*cfg.sizing)
                                    : size_from_load(*cfg.sizing);
    DispatchResult out;
    fs::create_directories(out_dir);
    write_sizing_report_csv(report, out_dir / "sizing_report.csv");
    out.outputs.push_back("sizing_report.csv");

    ManifestInfo manifest;
    manifest.tool_version = kToolVersion;
    manifest.command = "size";
    manifest.seed = cfg.sizing->search.seed;
    manifest.config_echo = config_echo(cfg);
    manifest.outputs = out.outputs;
    manifest.decisions.push_back("sizing approach: " + cfg.sizing_approach);
    manifest.decisions.push_back("filter power uses the 3/2 planar product");
    if (!report.feasible) {
        for (const auto& note : report.notes) {
            manifest.decisions.push_back("note: " + note);
        }
    }
    out.manifest = out_dir / "manifest.txt";
    write_manifest(manifest, out.manifest);
    out.outputs.push_back("manifest.txt");
    return out;
}

DispatchResult do_simulate(const ConfigFile& cfg, const fs::path& out_dir) {
    const RunResult result = run_scenario(cfg.scenario);
    DispatchResult out;
    fs::create_directories(out_dir);
    write_run_csvs(result, out_dir);
    out.outputs = {"currents.csv", "powers.csv", "voltage.csv", "controller.csv"};

    // steady-state compensation table over the last analysis window
    if (!cfg.analysis_freqs_hz.empty()) {
        const double f_m = cfg.scenario.params.f_m();
        const int periods = std::min(cfg.analysis_periods,
                                     cfg.scenario.duration_periods);
        const auto per_period =
            static_cast<std::size_t>(std::llround(1.0 / (f_m * result.meta.dt_record)));
        const std::size_t window = per_period * static_cast<std::size_t>(periods);
        if (window > result.samples()) {
            throw InputError("simulate: analysis window longer than the run");
        }
        const std::size_t start = result.samples() - window;
        std::vector<double> i_ma(window), i_la(window);
        for (std::size_t i = 0; i < window; ++i) {
            i_ma[i] = result.i_mains[start + i].a;
            i_la[i] = result.i_load[start + i].a;
        }
        out.compensation =
            compensation_report(i_ma, i_la, result.meta.dt_record, f_m, periods,
                                cfg.analysis_freqs_hz);
        write_compensation_csv(out.compensation, out_dir / "compensation.csv");
        out.outputs.push_back("compensation.csv");
    }

    ManifestInfo manifest;
    manifest.tool_version = kToolVersion;
    manifest.command = "simulate";
    manifest.seed = cfg.scenario.seed;
    manifest.config_echo = config_echo(cfg);
    manifest.outputs = out.outputs;
    manifest.decisions = run_decisions(result);
    manifest.events = result.events;
    out.manifest = out_dir / "manifest.txt";
    write_manifest(manifest, out.manifest);
    out.outputs.push_back("manifest.txt");
    return out;
}

DispatchResult do_analyze(const ConfigFile& cfg, const fs::path& out_dir) {
    const CsvTable currents = read_csv(out_dir / "currents.csv");
    const auto t = currents.column("t");
    if (t.size() < 2) {
        throw InputError("analyze: currents.csv has no samples");
    }
    const double dt = t[1] - t[0];
    const double f_m = cfg.scenario.params.f_m();
    const auto per_period = static_cast<std::size_t>(std::llround(1.0 / (f_m * dt)));
    const int periods = cfg.analysis_periods;
    const std::size_t window = per_period * static_cast<std::size_t>(periods);
    if (window > t.size()) {
        throw InputError("analyze: currents.csv shorter than the analysis window");
    }
    const std::size_t start = t.size() - window;
    const auto full_ma = currents.column("i_ma");
    const auto full_la = currents.column("i_la");
    const std::vector<double> i_ma(full_ma.begin() + start, full_ma.end());
    const std::vector<double> i_la(full_la.begin() + start, full_la.end());

    DispatchResult out;
    out.compensation =
        compensation_report(i_ma, i_la, dt, f_m, periods, cfg.analysis_freqs_hz);
    write_compensation_csv(out.compensation, out_dir / "compensation.csv");
    out.outputs.push_back("compensation.csv");

    ManifestInfo manifest;
    manifest.tool_version = kToolVersion;
    manifest.command = "analyze";
    manifest.seed = cfg.scenario.seed;
    manifest.config_echo = config_echo(cfg);
    manifest.outputs = out.outputs;
    out.manifest = out_dir / "manifest.txt";
    write_manifest(manifest, out.manifest);
    out.outputs.push_back("manifest.txt");
    return out;
}

} // namespace

DispatchResult dispatch(const std::string& command, const fs::path& config_path,
                        const fs::path& out_dir, const DispatchOverrides& overrides) {
    ConfigFile cfg = parse_config(config_path);
    if (overrides.seed) {
        cfg.scenario.seed = *overrides.seed;
        if (cfg.sizing) {
            cfg.sizing->search.seed = *overrides.seed;
        }
    }
    if (overrides.mode) {
        cfg.scenario.mode = *overrides.mode;
        const bool continuous = cfg.scenario.mode == SimMode::Continuous;
        cfg.scenario.output_decimation = continuous ? 10 : 1;
    }

    if (command == "size") {
        return do_size(cfg, out_dir);
    }
    if (command == "simulate") {
        return do_simulate(cfg, out_dir);
    }
    if (command == "analyze") {
        return do_analyze(cfg, out_dir);
    }
    throw InputError("unknown command '" + command + "'");
}

} // namespace saf
