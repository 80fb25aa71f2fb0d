#pragma once

#include "saf/sim.hpp"
#include "saf/sizing.hpp"

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace saf {

/// Locale-independent shortest round-trip representation.
std::string fmt_double(double v);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t col(const std::string& name) const;
    std::vector<double> column(const std::string& name) const;
};

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               std::span<const std::vector<double>> columns);

/// Strict reader for the files written above: rejects ragged rows and
/// unparseable numbers with line context.
CsvTable read_csv(const std::filesystem::path& path);

/// Writes currents.csv, powers.csv, voltage.csv, controller.csv.
void write_run_csvs(const RunResult& result, const std::filesystem::path& dir);

void write_compensation_csv(std::span<const CompensationRow> rows,
                            const std::filesystem::path& path);

std::vector<CompensationRow> read_compensation_csv(const std::filesystem::path& path);

/// Flat key,value,unit block.
void write_sizing_report_csv(const SizingReport& report,
                             const std::filesystem::path& path);

struct ManifestInfo {
    std::string tool_version;
    std::string command;
    std::uint64_t seed = 0;
    std::string config_echo; ///< resolved configuration, re-runnable as-is
    std::vector<std::string> outputs;
    std::vector<std::string> decisions; ///< fixed modelling choices for this run
    std::vector<SimEvent> events;
};

void write_manifest(const ManifestInfo& info, const std::filesystem::path& path);

/// Extracts the echoed configuration block from a manifest file.
std::string manifest_config_block(const std::filesystem::path& path);

} // namespace saf
