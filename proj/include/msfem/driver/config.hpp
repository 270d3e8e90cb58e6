#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "msfem/model.hpp"
#include "msfem/scheme.hpp"

namespace msfem::driver {

/// Bad or conflicting configuration; key() names the offending entry.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& message)
        : std::runtime_error("config key '" + key + "': " + message), key_(std::move(key))
    {
    }
    [[nodiscard]] const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

enum class Preset { convergence2, experiment1, experiment2, custom };

[[nodiscard]] std::string to_string(Preset p);
[[nodiscard]] std::string to_string(scheme::InitialData d);

/// Fully expanded run description. Presets fill every field, so a
/// serialized config reproduces the run on its own.
struct ExperimentConfig {
    Preset preset = Preset::convergence2;
    int level = 3;
    model::MixtureParams params;
    scheme::SolverConfig solver;
    scheme::InitialDataSpec initial;
    std::vector<double> snapshot_times;
    std::filesystem::path output_dir = "out";
    bool write_vtu = false;

    bool operator==(const ExperimentConfig&) const = default;
};

/// Defaults of a preset before user overrides.
[[nodiscard]] ExperimentConfig preset_defaults(Preset p);

/// Parses a flat JSON object. Unknown keys, wrong types, out-of-range values
/// and preset conflicts raise ConfigError naming the key.
[[nodiscard]] ExperimentConfig parse_config(const std::string& json_text);
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

/// Expanded JSON text; parse_config(serialize_config(c)) == c.
[[nodiscard]] std::string serialize_config(const ExperimentConfig& c);

/// Drops snapshot times past t_final; used when a preset's default times
/// outlive a shortened run.
void clip_snapshot_times(ExperimentConfig& c);

/// Checks every bound (parameters, solver, level, snapshot times).
void validate(const ExperimentConfig& c);

/// Velocity/density variant of the convergence test: 'A' uses V = (0.3, 0.7),
/// 'B' uses V = (0.5, 0.5).
[[nodiscard]] std::vector<double> convergence_volumes(char variant);

}  // namespace msfem::driver
