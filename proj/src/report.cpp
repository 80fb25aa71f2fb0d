#include "saf/report.hpp"

#include "saf/errors.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace saf {

namespace fs = std::filesystem;

std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, res.ptr};
}

std::size_t CsvTable::col(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
        throw InputError("csv: missing column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
}

std::vector<double> CsvTable::column(const std::string& name) const {
    const std::size_t c = col(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        out.push_back(row[c]);
    }
    return out;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               std::span<const std::vector<double>> columns) {
    if (columns.size() != header.size()) {
        throw InputError("write_csv: header/column count mismatch");
    }
    const std::size_t n = columns.empty() ? 0 : columns.front().size();
    for (const auto& c : columns) {
        if (c.size() != n) {
            throw InputError("write_csv: ragged columns");
        }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("write_csv: cannot open " + path.string());
    }
    for (std::size_t i = 0; i < header.size(); ++i) {
        out << (i ? "," : "") << header[i];
    }
    out << '\n';
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            out << (c ? "," : "") << fmt_double(columns[c][r]);
        }
        out << '\n';
    }
    if (!out.good()) {
        throw InputError("write_csv: write failed for " + path.string());
    }
}

CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("read_csv: cannot open " + path.string());
    }
    CsvTable table;
    std::string line;
    long line_no = 0;
    auto split = [](const std::string& s) {
        std::vector<std::string> parts;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = s.find(',', start);
            parts.push_back(s.substr(start, comma - start));
            if (comma == std::string::npos) {
                break;
            }
            start = comma + 1;
        }
        return parts;
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (table.header.empty()) {
            table.header = split(line);
            continue;
        }
        const auto parts = split(line);
        if (parts.size() != table.header.size()) {
            throw InputError("read_csv: " + path.string() + ":" + std::to_string(line_no) +
                             ": expected " + std::to_string(table.header.size()) +
                             " fields, got " + std::to_string(parts.size()));
        }
        std::vector<double> row(parts.size());
        for (std::size_t i = 0; i < parts.size(); ++i) {
            const char* first = parts[i].data();
            const char* last = first + parts[i].size();
            const auto res = std::from_chars(first, last, row[i]);
            if (res.ec != std::errc{} || res.ptr != last) {
                throw InputError("read_csv: " + path.string() + ":" +
                                 std::to_string(line_no) + ": bad number '" + parts[i] + "'");
            }
        }
        table.rows.push_back(std::move(row));
    }
    if (table.header.empty()) {
        throw InputError("read_csv: " + path.string() + " is empty");
    }
    return table;
}

void write_run_csvs(const RunResult& r, const fs::path& dir) {
    fs::create_directories(dir);
    const std::size_t n = r.samples();
    auto dq_cols = [n](const std::vector<Dq>& v) {
        std::pair<std::vector<double>, std::vector<double>> cols;
        cols.first.reserve(n);
        cols.second.reserve(n);
        for (const Dq& e : v) {
            cols.first.push_back(e.d);
            cols.second.push_back(e.q);
        }
        return cols;
    };
    auto abc_cols = [n](const std::vector<Abc>& v) {
        std::array<std::vector<double>, 3> cols;
        for (auto& c : cols) {
            c.reserve(n);
        }
        for (const Abc& e : v) {
            cols[0].push_back(e.a);
            cols[1].push_back(e.b);
            cols[2].push_back(e.c);
        }
        return cols;
    };

    {
        const auto f = abc_cols(r.i_filter);
        const auto l = abc_cols(r.i_load);
        const auto m = abc_cols(r.i_mains);
        const std::vector<std::vector<double>> cols{r.t,   f[0], f[1], f[2], l[0],
                                                    l[1], l[2], m[0], m[1], m[2]};
        write_csv(dir / "currents.csv",
                  {"t", "i_fa", "i_fb", "i_fc", "i_la", "i_lb", "i_lc", "i_ma", "i_mb",
                   "i_mc"},
                  cols);
    }
    {
        const auto x = dq_cols(r.x);
        const auto xr = dq_cols(r.xref);
        const auto xe = dq_cols(r.xerr);
        const auto xl = dq_cols(r.xload);
        const std::vector<std::vector<double>> cols{
            r.t,      x.first,  x.second,  xr.first, xr.second,
            xe.first, xe.second, xl.first, xl.second};
        write_csv(dir / "powers.csv",
                  {"t", "x_d", "x_q", "xref_d", "xref_q", "xerr_d", "xerr_q", "xload_d",
                   "xload_q"},
                  cols);
    }
    {
        const std::vector<std::vector<double>> cols{r.t, r.v, r.z_tilde, r.z_tilde_a};
        write_csv(dir / "voltage.csv", {"t", "v", "z_tilde", "z_tilde_a"}, cols);
    }
    {
        const auto u = dq_cols(r.u_dq);
        std::vector<double> warm(r.warmup.begin(), r.warmup.end());
        const std::vector<std::vector<double>> cols{r.t,     r.eta,    r.eta_a, r.d_eta,
                                                    r.theta, u.first, u.second, warm};
        write_csv(dir / "controller.csv",
                  {"t", "eta", "eta_a", "d_eta", "theta", "u_d", "u_q", "warmup"}, cols);
    }
}

void write_compensation_csv(std::span<const CompensationRow> rows, const fs::path& path) {
    std::vector<double> f, ma, la, pct, flag;
    for (const auto& row : rows) {
        f.push_back(row.f_hz);
        ma.push_back(row.i_ma);
        la.push_back(row.i_la);
        pct.push_back(row.percent);
        flag.push_back(row.no_load_content ? 1.0 : 0.0);
    }
    const std::vector<std::vector<double>> cols{f, ma, la, pct, flag};
    write_csv(path, {"f_hz", "i_ma", "i_la", "percent", "no_load_content"}, cols);
}

std::vector<CompensationRow> read_compensation_csv(const fs::path& path) {
    const CsvTable table = read_csv(path);
    std::vector<CompensationRow> rows;
    const auto f = table.column("f_hz");
    const auto ma = table.column("i_ma");
    const auto la = table.column("i_la");
    const auto pct = table.column("percent");
    const auto flag = table.column("no_load_content");
    for (std::size_t i = 0; i < f.size(); ++i) {
        rows.push_back({f[i], ma[i], la[i], pct[i], flag[i] != 0.0});
    }
    return rows;
}

void write_sizing_report_csv(const SizingReport& report, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("write_sizing_report_csv: cannot open " + path.string());
    }
    out << "key,value,unit\n";
    out << "L_min," << fmt_double(report.L_min) << ",H\n";
    out << "v_m_bound," << fmt_double(report.v_m_bound) << ",V\n";
    out << "v_m_chosen," << fmt_double(report.v_m_chosen) << ",V\n";
    out << "E_max," << fmt_double(report.E_max) << ",J\n";
    out << "C," << fmt_double(report.C) << ",F\n";
    out << "feasible," << (report.feasible ? 1 : 0) << ",-\n";
    out << "peak_v_star," << fmt_double(report.peak_v_star) << ",V\n";
    out << "current_margin," << fmt_double(report.current_margin) << ",A\n";
    out << "voltage_slack," << fmt_double(report.voltage_slack) << ",V\n";
    if (report.worst_case) {
        out << "E_max_worst," << fmt_double(report.worst_case->e_max) << ",J\n";
        out << "search_seed," << report.worst_case->seed << ",-\n";
        out << "search_converged," << (report.worst_case->converged ? 1 : 0) << ",-\n";
        out << "search_evaluations," << report.worst_case->evaluations << ",-\n";
        const CurrentSpectrum& z = report.worst_case->maximizer;
        out << "z_i_d0," << fmt_double(z.i_d0) << ",A\n";
        out << "z_i_q0," << fmt_double(z.i_q0) << ",A\n";
        for (const auto& h : z.harmonics) {
            const std::string tag = "z_n" + std::to_string(h.n);
            out << tag << "_amp_d," << fmt_double(h.amp_d) << ",A\n";
            out << tag << "_phase_d," << fmt_double(h.phase_d) << ",rad\n";
            out << tag << "_amp_q," << fmt_double(h.amp_q) << ",A\n";
            out << tag << "_phase_q," << fmt_double(h.phase_q) << ",rad\n";
        }
    }
    for (std::size_t i = 0; i < report.notes.size(); ++i) {
        out << "note_" << i << ",\"" << report.notes[i] << "\",-\n";
    }
    if (!out.good()) {
        throw InputError("write_sizing_report_csv: write failed");
    }
}

void write_manifest(const ManifestInfo& info, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("write_manifest: cannot open " + path.string());
    }
    out << "saf-toolkit " << info.tool_version << '\n';
    out << "command: " << info.command << '\n';
    out << "seed: " << info.seed << '\n';
    out << "outputs:\n";
    for (const auto& o : info.outputs) {
        out << "  " << o << '\n';
    }
    out << "decisions:\n";
    for (const auto& d : info.decisions) {
        out << "  " << d << '\n';
    }
    out << "events:\n";
    for (const auto& e : info.events) {
        out << "  t=" << fmt_double(e.t) << " " << e.what << '\n';
    }
    out << "--- config ---\n" << info.config_echo;
    if (!info.config_echo.empty() && info.config_echo.back() != '\n') {
        out << '\n';
    }
    out << "--- end config ---\n";
    if (!out.good()) {
        throw InputError("write_manifest: write failed");
    }
}

std::string manifest_config_block(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("manifest: cannot open " + path.string());
    }
    std::string line;
    std::string config;
    bool inside = false;
    while (std::getline(in, line)) {
        if (line == "--- end config ---") {
            return config;
        }
        if (inside) {
            config += line;
            config += '\n';
        }
        if (line == "--- config ---") {
            inside = true;
        }
    }
    throw InputError("manifest: no config block in " + path.string());
}

} // namespace saf
