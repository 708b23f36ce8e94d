#include "evgaze/simulator.hpp"

#include "evgaze/common.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace evgaze {

TrajectoryKind trajectory_kind_from_name(const std::string& name) {
    if (name == "fixation") return TrajectoryKind::fixation;
    if (name == "smooth_pursuit") return TrajectoryKind::smooth_pursuit;
    if (name == "saccade") return TrajectoryKind::saccade;
    if (name == "random_walk") return TrajectoryKind::random_walk;
    if (name == "blink_overlay") return TrajectoryKind::blink_overlay;
    throw config_error("unknown trajectory kind '" + name + "'");
}

const char* trajectory_kind_name(TrajectoryKind k) {
    switch (k) {
    case TrajectoryKind::fixation: return "fixation";
    case TrajectoryKind::smooth_pursuit: return "smooth_pursuit";
    case TrajectoryKind::saccade: return "saccade";
    case TrajectoryKind::random_walk: return "random_walk";
    case TrajectoryKind::blink_overlay: return "blink_overlay";
    }
    return "?";
}

LabelSeries gen_trajectory(const TrajectorySpec& spec, int width, int height,
                           double rate_hz) {
    if (spec.duration_s <= 0.0)
        throw config_error("trajectory duration must be positive");
    if (rate_hz <= 0.0)
        throw config_error("label rate must be positive");
    if (spec.saccade_rate_hz < 0.0 || spec.blink_rate_hz < 0.0)
        throw config_error("rates must be non-negative");
    if (width < 2 || height < 2)
        throw config_error("sensor too small for trajectory generation");

    const std::size_t n = static_cast<std::size_t>(spec.duration_s * rate_hz);
    const double cx = (width - 1) / 2.0;
    const double cy = (height - 1) / 2.0;
    const double max_x = static_cast<double>(width - 1);
    const double max_y = static_cast<double>(height - 1);

    std::mt19937_64 rng(spec.seed);
    LabelSeries out;
    out.rate_hz = rate_hz;
    out.rows.reserve(n);

    // Poisson arrival times drawn ahead of the sweep so the position model
    // consumes the generator in a fixed order.
    auto poisson_times = [&](double rate, double horizon) {
        std::vector<double> times;
        if (rate <= 0.0)
            return times;
        std::exponential_distribution<double> gap(rate);
        double t = gap(rng);
        while (t < horizon) {
            times.push_back(t);
            t += gap(rng);
        }
        return times;
    };

    const std::vector<double> jump_times =
        spec.kind == TrajectoryKind::saccade
            ? poisson_times(spec.saccade_rate_hz, spec.duration_s)
            : std::vector<double>{};
    // blink_rate_hz = 0 means no blinks for every kind, blink_overlay included
    const std::vector<double> blink_starts =
        poisson_times(spec.blink_rate_hz, spec.duration_s);

    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    double sac_x = cx, sac_y = cy;
    std::size_t next_jump = 0;
    double walk_x = cx, walk_y = cy;

    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) / rate_hz;
        LabelRow row;
        row.t = static_cast<std::int64_t>(std::llround(t * 1e6));
        double x = cx, y = cy;
        switch (spec.kind) {
        case TrajectoryKind::fixation:
        case TrajectoryKind::blink_overlay:
            break;
        case TrajectoryKind::smooth_pursuit:
            x = cx + spec.amplitude_px *
                         std::sin(2.0 * std::numbers::pi * spec.frequency_hz * t);
            y = cy + 0.5 * spec.amplitude_px *
                         std::sin(4.0 * std::numbers::pi * spec.frequency_hz * t);
            break;
        case TrajectoryKind::saccade:
            while (next_jump < jump_times.size() && jump_times[next_jump] <= t) {
                sac_x = std::clamp(cx + spec.amplitude_px * uni(rng), 0.0, max_x);
                sac_y = std::clamp(cy + spec.amplitude_px * uni(rng), 0.0, max_y);
                ++next_jump;
            }
            x = sac_x;
            y = sac_y;
            break;
        case TrajectoryKind::random_walk:
            walk_x = std::clamp(walk_x + spec.walk_step_px * gauss(rng), 0.0, max_x);
            walk_y = std::clamp(walk_y + spec.walk_step_px * gauss(rng), 0.0, max_y);
            x = walk_x;
            y = walk_y;
            break;
        }
        row.x = std::clamp(x, 0.0, max_x);
        row.y = std::clamp(y, 0.0, max_y);
        for (double bs : blink_starts) {
            if (t >= bs && t < bs + spec.blink_duration_s) {
                row.close = true;
                break;
            }
        }
        out.rows.push_back(row);
    }
    return out;
}

namespace {

// Disk intensity with a one-pixel linear edge so sub-pixel motion produces
// gradual log-intensity change.
double disk_intensity(double px, double py, double cx, double cy, const SceneSpec& scene,
                      bool hidden) {
    if (hidden)
        return scene.background_intensity;
    const double dx = px - cx;
    const double dy = py - cy;
    const double d = std::sqrt(dx * dx + dy * dy);
    const double edge = std::clamp(d - (scene.pupil_radius_px - 0.5), 0.0, 1.0);
    return scene.pupil_intensity +
           (scene.background_intensity - scene.pupil_intensity) * edge;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace

EventStream render_events(const LabelSeries& traj, const SceneSpec& scene,
                          std::uint64_t seed) {
    if (scene.threshold <= 0.0)
        throw config_error("contrast threshold must be positive");
    if (scene.background_intensity <= 0.0 || scene.pupil_intensity <= 0.0)
        throw config_error("intensities must be positive");
    if (scene.pupil_radius_px <= 0.0 ||
        2.0 * scene.pupil_radius_px >= std::min(scene.width, scene.height))
        throw config_error("pupil must fit the sensor");

    EventStream out;
    out.width = scene.width;
    out.height = scene.height;
    if (traj.rows.empty())
        return out;

    // internal simulation rate: 1 kHz, linearly interpolating the labels
    constexpr std::int64_t kStepUs = 1000;
    const std::int64_t t_first = traj.rows.front().t;
    const std::int64_t t_last = traj.rows.back().t;
    const std::int64_t duration =
        t_last - t_first +
        static_cast<std::int64_t>(std::llround(1e6 / traj.rate_hz));
    const std::size_t n_steps = static_cast<std::size_t>(duration / kStepUs) + 1;

    // sample center position and blink state at every internal step
    std::vector<double> cxs(n_steps), cys(n_steps);
    std::vector<char> hidden(n_steps);
    {
        std::size_t li = 0;
        for (std::size_t si = 0; si < n_steps; ++si) {
            const std::int64_t t = t_first + static_cast<std::int64_t>(si) * kStepUs;
            while (li + 1 < traj.rows.size() && traj.rows[li + 1].t <= t)
                ++li;
            const LabelRow& a = traj.rows[li];
            if (li + 1 < traj.rows.size() && t > a.t) {
                const LabelRow& b = traj.rows[li + 1];
                const double f = static_cast<double>(t - a.t) /
                                 static_cast<double>(b.t - a.t);
                cxs[si] = a.x + (b.x - a.x) * f;
                cys[si] = a.y + (b.y - a.y) * f;
            } else {
                cxs[si] = a.x;
                cys[si] = a.y;
            }
            hidden[si] = a.close ? 1 : 0;
        }
    }

    const std::int64_t rows = scene.height;
    std::vector<std::vector<Event>> per_row(static_cast<std::size_t>(rows));

#pragma omp parallel for schedule(dynamic)
    for (std::int64_t y = 0; y < rows; ++y) {
        std::vector<Event>& evs = per_row[static_cast<std::size_t>(y)];
        for (int x = 0; x < scene.width; ++x) {
            // per-pixel jitter stream, independent of thread scheduling
            std::mt19937_64 rng(
                mix_seed(seed, static_cast<std::uint64_t>(y) * scene.width +
                                   static_cast<std::uint64_t>(x)));
            std::normal_distribution<double> jitter(0.0, 1.0);

            double ref = std::log(disk_intensity(x, y, cxs[0], cys[0], scene,
                                                 hidden[0] != 0));
            double prev = ref;
            for (std::size_t si = 1; si < n_steps; ++si) {
                const double cur = std::log(
                    disk_intensity(x, y, cxs[si], cys[si], scene, hidden[si] != 0));
                if (cur != prev) {
                    const double pol = cur >= prev ? 1.0 : -1.0;
                    double cross = ref + pol * scene.threshold;
                    while ((pol > 0 && cross <= cur) || (pol < 0 && cross >= cur)) {
                        // skip levels already passed before this step
                        if ((pol > 0 && cross > prev) || (pol < 0 && cross < prev)) {
                            const double f = (cross - prev) / (cur - prev);
                            const std::int64_t t0 =
                                t_first + static_cast<std::int64_t>(si - 1) * kStepUs;
                            double te = static_cast<double>(t0) + f * kStepUs;
                            if (scene.jitter_sigma_s > 0.0)
                                te += jitter(rng) * scene.jitter_sigma_s * 1e6;
                            const std::int64_t ti = std::clamp<std::int64_t>(
                                std::llround(te), t_first, t_first + duration - 1);
                            evs.push_back(Event{ti, x, static_cast<int>(y), pol > 0});
                        }
                        ref = cross;
                        cross = ref + pol * scene.threshold;
                    }
                }
                prev = cur;
            }
        }
    }

    std::size_t total = 0;
    for (const auto& v : per_row)
        total += v.size();
    out.events.reserve(total);
    for (const auto& v : per_row)
        out.events.insert(out.events.end(), v.begin(), v.end());
    std::sort(out.events.begin(), out.events.end(), [](const Event& a, const Event& b) {
        if (a.t != b.t) return a.t < b.t;
        if (a.y != b.y) return a.y < b.y;
        if (a.x != b.x) return a.x < b.x;
        return a.p < b.p;
    });
    return out;
}

std::vector<PupilPrediction> centroid_tracker(const EventStream& stream,
                                              const std::vector<std::int64_t>& label_times,
                                              double tau_s, double w_ref) {
    if (tau_s <= 0.0)
        throw config_error("tracker tau must be positive");
    for (std::size_t i = 1; i < label_times.size(); ++i)
        if (label_times[i] < label_times[i - 1])
            throw config_error("label times must be non-decreasing");
    std::vector<PupilPrediction> out;
    out.reserve(label_times.size());

    const double tau_us = tau_s * 1e6;
    double sum_w = 0.0, sum_wx = 0.0, sum_wy = 0.0;
    std::int64_t cursor_t = 0; // time the running sums are decayed to
    std::size_t next_event = 0;

    PupilPrediction prev;
    prev.x = (stream.width - 1) / 2.0;
    prev.y = (stream.height - 1) / 2.0;
    prev.confidence = 0.0;

    for (std::int64_t lt : label_times) {
        // fold in events up to lt, decaying the sums as time advances
        while (next_event < stream.events.size() && stream.events[next_event].t <= lt) {
            const Event& e = stream.events[next_event];
            const double decay =
                std::exp(-static_cast<double>(e.t - cursor_t) / tau_us);
            sum_w *= decay;
            sum_wx *= decay;
            sum_wy *= decay;
            cursor_t = e.t;
            sum_w += 1.0;
            sum_wx += e.x;
            sum_wy += e.y;
            ++next_event;
        }
        const double decay = std::exp(-static_cast<double>(lt - cursor_t) / tau_us);
        sum_w *= decay;
        sum_wx *= decay;
        sum_wy *= decay;
        cursor_t = lt;

        PupilPrediction p = prev;
        if (sum_w >= 1e-9) {
            p.x = sum_wx / sum_w;
            p.y = sum_wy / sum_w;
            p.confidence = std::min(1.0, sum_w / w_ref);
        }
        out.push_back(p);
        prev = p;
    }
    return out;
}

} // namespace evgaze
