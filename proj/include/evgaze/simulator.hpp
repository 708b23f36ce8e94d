#pragma once

#include "evgaze/events.hpp"
#include "evgaze/metrics.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace evgaze {

enum class TrajectoryKind { fixation, smooth_pursuit, saccade, random_walk, blink_overlay };

TrajectoryKind trajectory_kind_from_name(const std::string& name);
const char* trajectory_kind_name(TrajectoryKind k);

struct TrajectorySpec {
    TrajectoryKind kind = TrajectoryKind::fixation;
    double amplitude_px = 10.0;    // pursuit/saccade excursion
    double frequency_hz = 0.5;     // pursuit sinusoid frequency
    double saccade_rate_hz = 2.0;  // Poisson jump rate
    double walk_step_px = 1.0;     // random-walk step stddev per tick
    double blink_rate_hz = 0.0;    // Poisson blink rate (any kind may blink)
    double blink_duration_s = 0.15;
    double duration_s = 1.0;
    std::uint64_t seed = 0;
};

struct SceneSpec {
    int width = 80;
    int height = 60;
    double pupil_radius_px = 6.0;
    double background_intensity = 200.0;
    double pupil_intensity = 40.0;
    double threshold = 0.2;    // log-contrast threshold, > 0
    double jitter_sigma_s = 0; // per-event timestamp jitter
};

// Pupil-center labels sampled at rate_hz: floor(duration*rate) rows at
// t = k/rate. smooth_pursuit follows a sinusoid about the sensor center,
// saccade jumps at Poisson times, random_walk takes clipped Gaussian
// steps; blink intervals set close=1.
LabelSeries gen_trajectory(const TrajectorySpec& spec, int width, int height,
                           double rate_hz = 100.0);

// Ideal-DVS render of a dark disk on a bright background: per pixel, the
// log intensity is tracked along the trajectory at a 1 kHz internal rate
// and an event fires each time the accumulated change crosses the
// threshold, with the timestamp interpolated inside the step. During
// close=1 intervals the disk is hidden. Output is globally sorted.
EventStream render_events(const LabelSeries& traj, const SceneSpec& scene,
                          std::uint64_t seed = 0);

// Exponentially-weighted centroid of past events, evaluated at each label
// time; falls back to the previous prediction (sensor center at the start)
// when no weight has accumulated.
std::vector<PupilPrediction> centroid_tracker(const EventStream& stream,
                                              const std::vector<std::int64_t>& label_times,
                                              double tau_s, double w_ref = 100.0);

} // namespace evgaze
