#pragma once

#include "evgaze/augment.hpp"
#include "evgaze/simulator.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace evgaze {

// One step of the augmentation pipeline; fields beyond `op` are read per op.
struct AugmentStep {
    std::string op; // spatial_flip_h | spatial_shift | temporal_flip |
                    // temporal_shift | affine | cutout
    int dx = 0, dy = 0;
    ShiftPolicy policy = ShiftPolicy::drop;
    std::int64_t dt_us = 0;
    Window window{0, 0}; // temporal_shift bound; zero span = stream span
    AffineParams affine;
    CutoutMask mask;
};

struct SensorConfig {
    int width = 80;
    int height = 60;
};

struct WindowConfig {
    std::int64_t width_us = 10000;
    std::int64_t stride_us = 10000;
};

struct RepresentationConfig {
    std::string kind = "causal_event_volume";
    // direct_binning | event_volume | causal_event_volume | time_surface |
    // memory | bina_rep | voxel_grid
    int t_bins = 1;
    std::string polarity = "two_channel"; // signed | two_channel | merged
    int n_frames = 8;                     // bina_rep sub-frames
    std::string decay = "linear";         // time_surface: linear | exponential
    double tau_s = 0.05;
    int downsample_x = 1;
    int downsample_y = 1;
};

struct PathsConfig {
    std::string events;
    std::string events_out; // augment output
    std::string labels;
    std::string predictions;
    std::string tensors_dir;
    std::string weights;
    std::string report;
    std::string report_json;
};

struct TrackerConfig {
    double tau_s = 0.05;
    double w_ref = 100.0;
};

struct EvalConfig {
    bool exclude_blinks = false;
    std::optional<double> min_p10;
};

// Versioned JSON schema; unknown keys are rejected everywhere.
struct PipelineConfig {
    std::uint64_t seed = 0;
    SensorConfig sensor;
    WindowConfig window;
    RepresentationConfig representation;
    PathsConfig paths;
    std::vector<AugmentStep> augmentations;
    TrajectorySpec trajectory;
    SceneSpec scene;
    TrackerConfig tracker;
    EvalConfig eval;
};

PipelineConfig load_config(const std::string& path);
PipelineConfig parse_config(const std::string& json_text);

} // namespace evgaze
