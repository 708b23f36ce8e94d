#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace evgaze {

// One DVS event: timestamp in microseconds since stream start, pixel
// coordinates, and polarity (true = ON / brightness increase).
struct Event {
    std::int64_t t = 0;
    int x = 0;
    int y = 0;
    bool p = false;

    bool operator==(const Event&) const = default;
};

struct EventStream {
    int width = 0;
    int height = 0;
    std::vector<Event> events;

    // Events live in [0, last.t]; duration is the half-open span that
    // covers them, so windowing over [0, duration) touches every event.
    std::int64_t duration_us() const {
        return events.empty() ? 0 : events.back().t + 1;
    }
    bool empty() const { return events.empty(); }
    std::size_t size() const { return events.size(); }
};

// Throws if events are unsorted, out of bounds, or negatively stamped.
void validate(const EventStream& s);

struct Window {
    std::int64_t t_start = 0;
    std::int64_t t_end = 0;

    std::int64_t span() const { return t_end - t_start; }
    bool contains(std::int64_t t) const { return t >= t_start && t < t_end; }
    bool operator==(const Window&) const = default;
};

struct CloudPoint {
    double t = 0.0; // normalized into [0,1] over the source window
    double x = 0.0; // normalized by sensor width
    double y = 0.0;
    bool p = false;
};

struct EventCloudSample {
    std::vector<CloudPoint> points;
    Window source_window;
    bool empty = false; // true when the window held no events at all
};

// ---- CSV interface -------------------------------------------------------
// Events CSV: header exactly "t,x,y,p"; t non-decreasing integer
// microseconds, x,y decimal integers, p in {0,1}. UTF-8, LF endings.

EventStream parse_event_csv(std::istream& in, int sensor_width, int sensor_height);
EventStream parse_event_csv_file(const std::string& path, int sensor_width, int sensor_height);
void write_event_csv(std::ostream& out, const EventStream& s);
void write_event_csv_file(const std::string& path, const EventStream& s);

// ---- Windowing -----------------------------------------------------------

// Events with t_start <= t < t_end, order preserved, dims copied.
EventStream slice_window(const EventStream& s, Window w);

// Windows [k*stride, k*stride + width) for k = 0.. while k*stride < duration.
std::vector<Window> make_windows(const EventStream& s, std::int64_t width_us,
                                 std::int64_t stride_us);

// ---- Event-cloud sampling ------------------------------------------------

// Draws exactly n points: without replacement when the stream has >= n
// events, with replacement otherwise; an empty stream yields a zero-point
// sample flagged empty. Coordinates are normalized by the window span and
// the sensor dims. The two-argument form derives the window from the
// stream's own span.
EventCloudSample sample_random(const EventStream& s, std::size_t n, std::uint64_t seed);
EventCloudSample sample_random(const EventStream& s, Window w, std::size_t n,
                               std::uint64_t seed);

using Point3 = std::array<double, 3>;

// Greedy farthest-point sampling. First pick is start_index; every later
// pick maximizes the minimum distance to the already-selected set, ties
// broken by smallest index.
std::vector<std::size_t> farthest_point_sample(const std::vector<Point3>& points,
                                               std::size_t n, std::size_t start_index);

// For each query, the k nearest point indices sorted by ascending distance,
// ties by smallest index.
std::vector<std::vector<std::size_t>> knn_group(const std::vector<Point3>& points,
                                                const std::vector<Point3>& queries,
                                                std::size_t k);

} // namespace evgaze
