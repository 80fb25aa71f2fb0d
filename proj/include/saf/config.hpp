#pragma once

#include "saf/sim.hpp"
#include "saf/sizing.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace saf {

/// Parsed scenario/sizing description. One file drives both the sizing and
/// the simulation commands so a sized design can be replayed in closed loop
/// without retyping.
struct ConfigFile {
    Scenario scenario;
    bool has_load = false;
    std::optional<SizingInputs> sizing;
    std::string sizing_approach; ///< "load" or "switches" when [sizing] present
    std::vector<double> analysis_freqs_hz; ///< defaults derived from the load
    int analysis_periods = 10;
    std::string echo; ///< canonical text with defaults resolved
};

/// Parses and fully validates a configuration file. Sections: [plant],
/// [load], [controller], [simulation], [sizing]. Unknown sections or keys
/// are rejected with line context; missing required keys name the section.
ConfigFile parse_config(const std::filesystem::path& path);

/// Same, from an in-memory string (name used in diagnostics).
ConfigFile parse_config_text(const std::string& text, const std::string& name = "<string>");

/// Canonical text echo of a resolved configuration (reparseable; used for
/// the manifest so a run can be reproduced from it verbatim).
std::string config_echo(const ConfigFile& cfg);

} // namespace saf
