#pragma once

// Configuration file: INI-style sections of `key = value` lines, `#` or `;` comments.
// Every key is optional; unknown sections or keys are errors. Shared sections ([ground],
// [roi], [ransac], [heading]) apply to both detectors, the suffixed ones
// ([grid.eight_plane], ...) to one.

#include <cstdint>
#include <filesystem>
#include <string>

#include "sparse_lidar/cloud_io.hpp"
#include "sparse_lidar/detect.hpp"
#include "sparse_lidar/simulate.hpp"

namespace sparse_lidar
{

struct LidarConfig
{
    int rings = 16;
    double min_elevation_deg = -15.0;
    double max_elevation_deg = 15.0;
    double azimuth_step_deg = 0.2;
    double max_range = 100.0;
    double noise_sigma = 0.01;
    double mount_height = 1.8;

    LidarModel model() const;
};

struct EvalParams
{
    double max_match_distance = 3.0; ///< meters between footprint centers
    double time_tolerance = 1e-6;    ///< seconds
};

struct AppConfig
{
    PipelineConfig sixteen_plane = PipelineConfig::defaults(DetectorMode::sixteen_plane);
    PipelineConfig eight_plane = PipelineConfig::defaults(DetectorMode::eight_plane);
    RingSelection decimation_keep = RingSelection::even;
    LidarConfig lidar;
    ScenarioParams scenario;
    EvalParams eval;
    std::uint64_t seed = 1;

    const PipelineConfig& pipeline(DetectorMode mode) const;
    /// Throws ConfigError on any out-of-range value.
    void validate() const;
};

/// Throws ConfigError (with a line number) on syntax errors, unknown keys or invalid values.
AppConfig parse_config(const std::string& text, const std::string& source = "<memory>");
/// Missing file is a ConfigError.
AppConfig load_config(const std::filesystem::path& path);

/// Every key with its current value; parse_config(format_config(c)) reproduces c.
std::string format_config(const AppConfig& config);

} // namespace sparse_lidar
