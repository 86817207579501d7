#pragma once

// One-command scenario runs and file-based verification.
//
// Configuration precedence, lowest first: built-in defaults, the JSON config
// document, command-line flags. The output directory additionally falls back
// to $PULSEFORGE_OUT before the built-in "pulseforge-out".

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pulseforge/io.hpp"

namespace pulseforge {

enum class ScenarioKind { ChainReshape, SpinNot, OscillatorScaling, LatticeRoundtrip };

std::string_view to_string(ScenarioKind kind);
/// Throws Config for an unknown name.
ScenarioKind scenario_from_string(std::string_view name);

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int failure = 1;
inline constexpr int config = 2;
inline constexpr int representability = 3;
inline constexpr int verification = 4;
} // namespace exit_code

int exit_code_for(ErrorCode code);

struct ScenarioThresholds {
    double max_density_error = 1e-5;
    double min_ground_state_overlap = 1.0 - 1e-6;
    double potential_step_tolerance = 1e-6;
    double min_fidelity = 1.0 - 1e-6;
    double phase_tolerance = 1e-4;
    double max_wavefunction_l2 = 1e-3;
    double max_newton_residual = 1e-12;
    double max_roundtrip_error = 1e-6;
    double max_norm_drift_rate = 1e-10;
};

struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::ChainReshape;

    int M = 11;
    double T0 = 1.0;
    double t1 = 3.0;
    double t2 = 12.0;

    double B0 = 1.0;
    /// NOT-gate duration (default 12) or oscillator ramp time (default 5).
    std::optional<double> tau;

    double omega0 = 1.0;
    double m = 1.0;
    std::string alpha_program = "smooth-step";
    std::string r0_program = "smooth-step";
    double stretch = 0.5;
    double shift = 1.0;
    int n_points = 512;
    double x_min = -8.0;
    double x_max = 8.0;

    int sites = 4;
    std::uint64_t seed = 2024;

    /// Run length; defaults to t2 (chain), tau (spin, oscillator), 1 (round trip).
    std::optional<double> t_end;
    /// Defaults: 1e-3 (chain, oscillator), tau * 1e-5 (spin), 1e-4 (round trip).
    std::optional<double> dt;
    /// Exported rows are every stride-th step. Defaults: 1 (chain), 10 otherwise.
    std::optional<int> stride;

    io::Format format = io::Format::Json;
    std::filesystem::path output_dir = "pulseforge-out";
    bool emit_plot_data = false;
    ScenarioThresholds thresholds;

    double resolved_tau() const;
    double resolved_t_end() const;
    double resolved_dt() const;
    int resolved_stride() const;
    /// round((t_end - t_start)/dt); throws Config when dt does not divide the span.
    int n_steps() const;

    /// Throws Config for out-of-range or inconsistent values.
    void validate() const;
};

/// Keys mirror the field names ("M", "T0", "t1", ..., "output_dir",
/// "thresholds": {...}); "scenario" selects the kind. Unknown keys are a
/// Config error. `base` supplies values for absent keys.
ScenarioConfig config_from_json(const nlohmann::json& doc, ScenarioConfig base = {});
nlohmann::json config_to_json(const ScenarioConfig& config);

/// Built-in defaults with output_dir taken from $PULSEFORGE_OUT when set.
ScenarioConfig default_config(ScenarioKind kind);

struct ScenarioOutcome {
    int exit_code = exit_code::ok;
    nlohmann::json report;
    std::vector<std::filesystem::path> files;
    std::string message;
};

/// Writes pulse, observables, wavefunction and report files under
/// output_dir/<scenario>/ (plus plots/ with emit_plot_data). Library errors
/// are caught and mapped to exit codes; the report records them.
ScenarioOutcome run_scenario(const ScenarioConfig& config);

/// Propagates the pulse file's initial state under its signal and compares
/// densities with the target file (channels n_1..n_M, or n for grid data).
/// Writes output_dir/verify/report.json.
ScenarioOutcome verify_files(const std::filesystem::path& pulse, const std::filesystem::path& target,
                             const ScenarioThresholds& thresholds, const std::filesystem::path& output_dir);

} // namespace pulseforge
