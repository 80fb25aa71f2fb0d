#include "saf/config.hpp"

#include "saf/errors.hpp"
#include "saf/report.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace saf {

namespace {

struct RawEntry {
    std::string value;
    int line = 0;
    bool used = false;
};

struct RawSection {
    // repeated keys are kept in order (harmonic lists)
    std::vector<std::pair<std::string, RawEntry>> entries;
    int line = 0;
    bool known = false;
};

struct RawConfig {
    std::string name;
    std::map<std::string, RawSection> sections;

    RawSection* find(const std::string& section) {
        const auto it = sections.find(section);
        return it == sections.end() ? nullptr : &it->second;
    }
};

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
        ++b;
    }
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
        --e;
    }
    return s.substr(b, e - b);
}

RawConfig tokenize(const std::string& text, const std::string& name) {
    RawConfig cfg;
    cfg.name = name;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    std::string section;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        const std::string t = trim(line);
        if (t.empty()) {
            continue;
        }
        if (t.front() == '[') {
            if (t.back() != ']') {
                throw ConfigError(name + ":" + std::to_string(line_no) +
                                  ": malformed section header '" + t + "'");
            }
            section = trim(t.substr(1, t.size() - 2));
            cfg.sections[section].line = line_no;
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(name + ":" + std::to_string(line_no) +
                              ": expected 'key = value', got '" + t + "'");
        }
        if (section.empty()) {
            throw ConfigError(name + ":" + std::to_string(line_no) +
                              ": key outside any [section]");
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError(name + ":" + std::to_string(line_no) +
                              ": empty key or value");
        }
        cfg.sections[section].entries.push_back({key, {value, line_no, false}});
    }
    return cfg;
}

class SectionReader {
  public:
    SectionReader(RawConfig& cfg, const std::string& section)
        : cfg_(cfg), name_(section), section_(cfg.find(section)) {
        if (section_ != nullptr) {
            section_->known = true;
        }
    }

    bool present() const { return section_ != nullptr; }

    std::optional<std::string> raw(const std::string& key) {
        if (section_ == nullptr) {
            return std::nullopt;
        }
        std::optional<std::string> found;
        for (auto& [k, entry] : section_->entries) {
            if (k == key) {
                if (found) {
                    throw ConfigError(context(key) + ": key repeated (only harmonic "
                                      "entries may repeat)");
                }
                entry.used = true;
                found = entry.value;
            }
        }
        return found;
    }

    std::vector<std::string> raw_list(const std::string& key) {
        std::vector<std::string> out;
        if (section_ == nullptr) {
            return out;
        }
        for (auto& [k, entry] : section_->entries) {
            if (k == key) {
                entry.used = true;
                out.push_back(entry.value);
            }
        }
        return out;
    }

    double number(const std::string& key, std::optional<double> fallback = {}) {
        const auto r = raw(key);
        if (!r) {
            if (fallback) {
                return *fallback;
            }
            throw ConfigError("[" + name_ + "] in " + cfg_.name +
                              ": missing required key '" + key + "'");
        }
        return parse_number(*r, key);
    }

    int integer(const std::string& key, std::optional<int> fallback = {}) {
        const double v = number(key, fallback ? std::optional<double>(*fallback)
                                              : std::nullopt);
        const int i = static_cast<int>(std::llround(v));
        if (std::abs(v - i) > 1e-9) {
            throw ConfigError(context(key) + ": expected an integer, got '" +
                              fmt_double(v) + "'");
        }
        return i;
    }

    std::string word(const std::string& key, std::optional<std::string> fallback = {}) {
        const auto r = raw(key);
        if (!r) {
            if (fallback) {
                return *fallback;
            }
            throw ConfigError("[" + name_ + "] in " + cfg_.name +
                              ": missing required key '" + key + "'");
        }
        return *r;
    }

    bool flag(const std::string& key, bool fallback) {
        const auto r = raw(key);
        if (!r) {
            return fallback;
        }
        if (*r == "true" || *r == "1") {
            return true;
        }
        if (*r == "false" || *r == "0") {
            return false;
        }
        throw ConfigError(context(key) + ": expected true/false");
    }

    std::vector<double> number_list(const std::string& key) {
        const auto r = raw(key);
        std::vector<double> out;
        if (!r) {
            return out;
        }
        for (const std::string& part : split_csv(*r)) {
            out.push_back(parse_number(part, key));
        }
        return out;
    }

    static std::vector<std::string> split_csv(const std::string& s) {
        std::vector<std::string> parts;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = s.find(',', start);
            parts.push_back(trim(s.substr(start, comma - start)));
            if (comma == std::string::npos) {
                break;
            }
            start = comma + 1;
        }
        return parts;
    }

    double parse_number(const std::string& s, const std::string& key) {
        double v = 0.0;
        const char* first = s.data();
        const char* last = first + s.size();
        const auto res = std::from_chars(first, last, v);
        if (res.ec != std::errc{} || res.ptr != last) {
            throw ConfigError(context(key) + ": cannot parse number '" + s + "'");
        }
        return v;
    }

    std::string context(const std::string& key) const {
        return cfg_.name + " [" + name_ + "] key '" + key + "'";
    }

  private:
    RawConfig& cfg_;
    std::string name_;
    RawSection* section_;
};

void reject_unknown(const RawConfig& cfg) {
    for (const auto& [section, body] : cfg.sections) {
        if (!body.known) {
            throw ConfigError(cfg.name + ":" + std::to_string(body.line) +
                              ": unknown section [" + section + "]");
        }
        for (const auto& [key, entry] : body.entries) {
            if (!entry.used) {
                throw ConfigError(cfg.name + ":" + std::to_string(entry.line) +
                                  ": unknown key '" + key + "' in [" + section + "]");
            }
        }
    }
}

LoadSpectrum build_load(SectionReader& load, double V_m) {
    LoadSpectrum spectrum;
    std::vector<FixedFrameHarmonic> lines;
    for (const std::string& entry : load.raw_list("harmonic")) {
        const auto parts = SectionReader::split_csv(entry);
        if (parts.size() != 3 && parts.size() != 4) {
            throw ConfigError("[load] harmonic: expected 'order, amp_A, +|-|auto"
                              "[, phase_rad]', got '" + entry + "'");
        }
        FixedFrameHarmonic h;
        h.order = static_cast<int>(std::llround(load.parse_number(parts[0], "harmonic")));
        h.amp = load.parse_number(parts[1], "harmonic");
        if (parts[2] == "+") {
            h.seq = Sequence::Positive;
        } else if (parts[2] == "-") {
            h.seq = Sequence::Negative;
        } else if (parts[2] == "auto") {
            h.seq = natural_sequence(h.order);
        } else {
            throw ConfigError("[load] harmonic: sequence must be '+', '-' or 'auto'");
        }
        h.phase = parts.size() == 4 ? load.parse_number(parts[3], "harmonic") : 0.0;
        lines.push_back(h);
    }
    const double fundamental = load.number("fundamental_amp", 0.0);
    if (!lines.empty() || fundamental != 0.0) {
        spectrum = spectrum_from_fixed_frame(lines, V_m, fundamental);
    }
    for (const std::string& entry : load.raw_list("dq_harmonic")) {
        const auto parts = SectionReader::split_csv(entry);
        if (parts.size() != 5) {
            throw ConfigError("[load] dq_harmonic: expected 'order, amp_d, phase_d, "
                              "amp_q, phase_q', got '" + entry + "'");
        }
        LoadHarmonic h;
        h.n = static_cast<int>(std::llround(load.parse_number(parts[0], "dq_harmonic")));
        h.amp_d = load.parse_number(parts[1], "dq_harmonic");
        h.phase_d = load.parse_number(parts[2], "dq_harmonic");
        h.amp_q = load.parse_number(parts[3], "dq_harmonic");
        h.phase_q = load.parse_number(parts[4], "dq_harmonic");
        for (const auto& existing : spectrum.harmonics) {
            if (existing.n == h.n) {
                throw ConfigError("[load] dq_harmonic: order " + std::to_string(h.n) +
                                  " already defined by a stationary-frame entry");
            }
        }
        spectrum.harmonics.push_back(h);
    }
    spectrum.x_d0 += load.number("x_d0", 0.0);
    spectrum.x_q0 = load.number("x_q0", 0.0);
    std::sort(spectrum.harmonics.begin(), spectrum.harmonics.end(),
              [](const LoadHarmonic& a, const LoadHarmonic& b) { return a.n < b.n; });
    spectrum.validate();
    return spectrum;
}

} // namespace

std::string config_echo(const ConfigFile& cfg) {
    std::ostringstream out;
    const Scenario& sc = cfg.scenario;
    const LoadSpectrum& load = cfg.scenario.load;
    out << "[plant]\n";
    out << "L = " << fmt_double(sc.params.L) << "        # H\n";
    out << "R = " << fmt_double(sc.params.R) << "        # ohm\n";
    out << "C = " << fmt_double(sc.params.C) << "        # F\n";
    out << "V_m = " << fmt_double(sc.params.V_m) << "        # V\n";
    out << "f_m = " << fmt_double(sc.params.f_m()) << "        # Hz\n";
    out << "\n[load]\n";
    out << "x_d0 = " << fmt_double(load.x_d0) << "        # V*A\n";
    out << "x_q0 = " << fmt_double(load.x_q0) << "        # V*A\n";
    for (const auto& h : load.harmonics) {
        out << "dq_harmonic = " << h.n << ", " << fmt_double(h.amp_d) << ", "
            << fmt_double(h.phase_d) << ", " << fmt_double(h.amp_q) << ", "
            << fmt_double(h.phase_q) << "        # order, V*A, rad, V*A, rad\n";
    }
    out << "\n[controller]\n";
    out << "orders = ";
    for (std::size_t i = 0; i < sc.controller.orders.size(); ++i) {
        out << (i ? ", " : "") << sc.controller.orders[i];
    }
    out << "\n";
    out << "K_P = " << fmt_double(sc.controller.K_P) << "\n";
    out << "K_I = " << fmt_double(sc.controller.K_I) << "\n";
    if (sc.controller.k) {
        out << "k = " << fmt_double(*sc.controller.k) << "\n";
    } else {
        out << "k = auto\n";
    }
    out << "k_d = " << fmt_double(sc.controller.k_d) << "\n";
    out << "k_q = " << fmt_double(sc.controller.k_q) << "\n";
    out << "v_m = " << fmt_double(sc.v_m) << "        # V\n";
    out << "v_M = " << fmt_double(sc.v_M) << "        # V\n";
    out << "\n[simulation]\n";
    out << "mode = "
        << (sc.mode == SimMode::Continuous
                ? "continuous"
                : (sc.mode == SimMode::Sampled ? "sampled" : "sampled_pwm"))
        << "\n";
    out << "duration_periods = " << sc.duration_periods << "\n";
    out << "step = " << fmt_double(sc.step) << "        # s\n";
    out << "f_s = " << fmt_double(sc.f_s) << "        # Hz\n";
    out << "substeps = " << sc.substeps << "\n";
    out << "v0 = " << fmt_double(sc.v0) << "        # V\n";
    out << "v_floor = " << fmt_double(sc.v_floor) << "        # V\n";
    out << "init = " << (sc.init == InitMode::Zero ? "zero" : "equilibrium") << "\n";
    out << "decimation = " << sc.output_decimation << "\n";
    out << "duty_mode = "
        << (sc.duty_mode == DutyMode::Centered ? "centered" : "sinusoidal") << "\n";
    out << "seed = " << sc.seed << "\n";
    out << "analysis_periods = " << cfg.analysis_periods << "\n";
    out << "analysis_harmonics_hz = ";
    for (std::size_t i = 0; i < cfg.analysis_freqs_hz.size(); ++i) {
        out << (i ? ", " : "") << fmt_double(cfg.analysis_freqs_hz[i]);
    }
    out << "\n";
    if (cfg.sizing) {
        const SizingInputs& sz = *cfg.sizing;
        out << "\n[sizing]\n";
        out << "approach = " << cfg.sizing_approach << "\n";
        out << "f_pwm = " << fmt_double(sz.f_pwm) << "        # Hz\n";
        out << "delta_I_Mpp = " << fmt_double(sz.delta_I_Mpp) << "        # A\n";
        out << "v_M = " << fmt_double(sz.v_M) << "        # V\n";
        out << "I_max = " << fmt_double(sz.I_max) << "        # A\n";
        out << "safety_factor = " << fmt_double(sz.safety_factor) << "\n";
        out << "samples_per_period = " << sz.samples_per_period << "\n";
        if (cfg.sizing_approach == "switches") {
            out << "orders = ";
            for (std::size_t i = 0; i < sz.orders.size(); ++i) {
                out << (i ? ", " : "") << sz.orders[i];
            }
            out << "\n";
            out << "v_m_assumed = " << fmt_double(sz.v_m_assumed) << "        # V\n";
            out << "multistarts = " << sz.search.multistarts << "\n";
            out << "refine_steps = " << sz.search.refine_steps << "\n";
            out << "search_samples = " << sz.search.samples_per_period << "\n";
            out << "include_dc = " << (sz.search.include_dc ? "true" : "false") << "\n";
            out << "include_q_axis = " << (sz.search.include_q_axis ? "true" : "false")
                << "\n";
        }
    }
    return out.str();
}

ConfigFile parse_config_text(const std::string& text, const std::string& name) {
    RawConfig raw = tokenize(text, name);
    ConfigFile cfg;

    SectionReader plant(raw, "plant");
    if (!plant.present()) {
        throw ConfigError(name + ": missing required section [plant]");
    }
    const double L = plant.number("L");
    const double R = plant.number("R", 0.0);
    const double C = plant.number("C");
    const double V_m = plant.number("V_m");
    const double f_m = plant.number("f_m", 50.0);
    try {
        cfg.scenario.params = make_plant_params(L, R, C, V_m, f_m);
    } catch (const ConstraintError& e) {
        throw ConfigError(name + " [plant]: " + e.what());
    }

    SectionReader load(raw, "load");
    LoadSpectrum spectrum;
    if (load.present()) {
        try {
            spectrum = build_load(load, V_m);
        } catch (const ConstraintError& e) {
            throw ConfigError(name + " [load]: " + e.what());
        }
        cfg.has_load = true;
    }
    cfg.scenario.load = spectrum;

    SectionReader ctrl(raw, "controller");
    if (ctrl.present()) {
        const auto orders = ctrl.number_list("orders");
        if (!orders.empty()) {
            cfg.scenario.controller.orders.clear();
            for (double o : orders) {
                cfg.scenario.controller.orders.push_back(static_cast<int>(std::llround(o)));
            }
        }
        cfg.scenario.controller.K_P = ctrl.number("K_P", 0.3);
        cfg.scenario.controller.K_I = ctrl.number("K_I", 3.7);
        const std::string k = ctrl.word("k", std::string("200"));
        if (k == "auto") {
            cfg.scenario.controller.k.reset();
        } else {
            cfg.scenario.controller.k = ctrl.parse_number(k, "k");
        }
        cfg.scenario.controller.k_d = ctrl.number("k_d", 1.0);
        cfg.scenario.controller.k_q = ctrl.number("k_q", 1.0);
        cfg.scenario.v_m = ctrl.number("v_m", 700.0);
        cfg.scenario.v_M = ctrl.number("v_M", 900.0);
    }

    SectionReader simu(raw, "simulation");
    if (simu.present()) {
        const std::string mode = simu.word("mode", std::string("continuous"));
        if (mode == "continuous") {
            cfg.scenario.mode = SimMode::Continuous;
        } else if (mode == "sampled") {
            cfg.scenario.mode = SimMode::Sampled;
        } else if (mode == "sampled_pwm") {
            cfg.scenario.mode = SimMode::SampledPwm;
        } else {
            throw ConfigError(simu.context("mode") + ": unknown mode '" + mode + "'");
        }
        cfg.scenario.duration_periods = simu.integer("duration_periods", 30);
        cfg.scenario.step = simu.number("step", 1e-6);
        cfg.scenario.f_s = simu.number("f_s", 7000.0);
        cfg.scenario.substeps = simu.integer("substeps", 20);
        cfg.scenario.v0 = simu.number("v0", 850.0);
        cfg.scenario.v_floor = simu.number("v_floor", 50.0);
        const std::string init = simu.word("init", std::string("zero"));
        if (init == "zero") {
            cfg.scenario.init = InitMode::Zero;
        } else if (init == "equilibrium") {
            cfg.scenario.init = InitMode::Equilibrium;
        } else {
            throw ConfigError(simu.context("init") + ": unknown init '" + init + "'");
        }
        const int default_decimation = cfg.scenario.mode == SimMode::Continuous ? 10 : 1;
        cfg.scenario.output_decimation = simu.integer("decimation", default_decimation);
        const std::string duty = simu.word("duty_mode", std::string("centered"));
        if (duty == "centered") {
            cfg.scenario.duty_mode = DutyMode::Centered;
        } else if (duty == "sinusoidal") {
            cfg.scenario.duty_mode = DutyMode::Sinusoidal;
        } else {
            throw ConfigError(simu.context("duty_mode") + ": unknown duty mode");
        }
        cfg.scenario.seed = static_cast<std::uint64_t>(simu.number("seed", 42.0));
        cfg.analysis_periods = simu.integer("analysis_periods", 10);
        cfg.analysis_freqs_hz = simu.number_list("analysis_harmonics_hz");
    }
    if (cfg.analysis_freqs_hz.empty()) {
        // default: stationary-frame sidebands of every synchronous load order
        for (const auto& h : spectrum.harmonics) {
            for (int n : {h.n - 1, h.n + 1}) {
                const double f = n * f_m;
                if (n >= 2 &&
                    std::find(cfg.analysis_freqs_hz.begin(), cfg.analysis_freqs_hz.end(),
                              f) == cfg.analysis_freqs_hz.end()) {
                    cfg.analysis_freqs_hz.push_back(f);
                }
            }
        }
        std::sort(cfg.analysis_freqs_hz.begin(), cfg.analysis_freqs_hz.end());
    }

    SectionReader sizing(raw, "sizing");
    if (sizing.present()) {
        SizingInputs in;
        cfg.sizing_approach = sizing.word("approach", std::string("load"));
        if (cfg.sizing_approach != "load" && cfg.sizing_approach != "switches") {
            throw ConfigError(sizing.context("approach") + ": must be load or switches");
        }
        in.f_pwm = sizing.number("f_pwm", 7000.0);
        in.delta_I_Mpp = sizing.number("delta_I_Mpp");
        in.v_M = sizing.number("v_M", cfg.scenario.v_M);
        in.I_max = sizing.number("I_max");
        in.V_m = V_m;
        in.f_m = f_m;
        in.safety_factor = sizing.number("safety_factor", 1.15);
        in.samples_per_period = sizing.integer("samples_per_period", 4096);
        if (cfg.sizing_approach == "load") {
            if (!cfg.has_load) {
                throw ConfigError(name + ": load-based sizing needs a [load] section");
            }
            in.spectrum = spectrum;
        } else {
            for (double o : sizing.number_list("orders")) {
                in.orders.push_back(static_cast<int>(std::llround(o)));
            }
            if (in.orders.empty()) {
                throw ConfigError(name + ": switches-based sizing needs 'orders'");
            }
            in.v_m_assumed = sizing.number("v_m_assumed", cfg.scenario.v_m);
            in.search.multistarts = sizing.integer("multistarts", 64);
            in.search.refine_steps = sizing.integer("refine_steps", 2000);
            in.search.samples_per_period = sizing.integer("search_samples", 1024);
            in.search.include_dc = sizing.flag("include_dc", true);
            in.search.include_q_axis = sizing.flag("include_q_axis", true);
            in.search.seed = cfg.scenario.seed;
        }
        cfg.sizing = in;
    }

    reject_unknown(raw);
    cfg.echo = config_echo(cfg);
    return cfg;
}

ConfigFile parse_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str(), path.string());
}

} // namespace saf
