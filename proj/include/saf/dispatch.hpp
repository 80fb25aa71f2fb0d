#pragma once

#include "saf/config.hpp"
#include "saf/sim.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace saf {

inline constexpr const char* kToolVersion = "0.1.0";

struct DispatchOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<SimMode> mode;
};

struct DispatchResult {
    std::vector<std::string> outputs; ///< file names written under out_dir
    std::vector<CompensationRow> compensation;
    std::filesystem::path manifest;
};

/// Applies the command (size | simulate | analyze) to one configuration,
/// writing reports and plot-ready CSVs plus a manifest sufficient to
/// reproduce the run bit-for-bit.
DispatchResult dispatch(const std::string& command,
                        const std::filesystem::path& config_path,
                        const std::filesystem::path& out_dir,
                        const DispatchOverrides& overrides = {});

} // namespace saf
