#include "evgaze/events.hpp"

#include "evgaze/common.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

namespace evgaze {

void validate(const EventStream& s) {
    if (s.width <= 0 || s.height <= 0)
        throw shape_error("sensor dims must be positive");
    std::int64_t prev = 0;
    for (std::size_t i = 0; i < s.events.size(); ++i) {
        const Event& e = s.events[i];
        if (e.t < 0)
            throw shape_error("negative timestamp at event " + std::to_string(i));
        if (i > 0 && e.t < prev)
            throw shape_error("non-monotonic timestamp at event " + std::to_string(i));
        if (e.x < 0 || e.x >= s.width || e.y < 0 || e.y >= s.height)
            throw shape_error("event " + std::to_string(i) + " out of bounds");
        prev = e.t;
    }
}

// ---- CSV -------------------------------------------------------------

namespace {

// Splits a CSV line in place; returns false on wrong field count.
bool split4(const std::string& line, std::array<std::string_view, 4>& out) {
    std::string_view v(line);
    for (int i = 0; i < 3; ++i) {
        auto pos = v.find(',');
        if (pos == std::string_view::npos)
            return false;
        out[static_cast<std::size_t>(i)] = v.substr(0, pos);
        v.remove_prefix(pos + 1);
    }
    if (v.find(',') != std::string_view::npos)
        return false;
    out[3] = v;
    return true;
}

template <typename T>
bool parse_int(std::string_view sv, T& out) {
    auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), out);
    return ec == std::errc() && ptr == sv.data() + sv.size();
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
}

} // namespace

EventStream parse_event_csv(std::istream& in, int sensor_width, int sensor_height) {
    if (sensor_width <= 0 || sensor_height <= 0)
        throw shape_error("sensor dims must be positive");
    std::string line;
    if (!std::getline(in, line))
        throw io_error("empty events CSV: missing header");
    strip_cr(line);
    if (line != "t,x,y,p")
        throw io_error("bad events CSV header: expected 't,x,y,p', got '" + line + "'");

    EventStream s;
    s.width = sensor_width;
    s.height = sensor_height;
    std::size_t lineno = 1;
    std::int64_t prev_t = -1;
    std::array<std::string_view, 4> f;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (line.empty())
            continue;
        if (!split4(line, f))
            throw io_error("malformed row at line " + std::to_string(lineno) +
                           ": expected 4 columns");
        Event e;
        int pol = 0;
        if (!parse_int(f[0], e.t) || !parse_int(f[1], e.x) || !parse_int(f[2], e.y) ||
            !parse_int(f[3], pol))
            throw io_error("parse failure at line " + std::to_string(lineno));
        if (pol != 0 && pol != 1)
            throw io_error("polarity must be 0 or 1 at line " + std::to_string(lineno));
        e.p = pol == 1;
        if (e.t < 0)
            throw io_error("negative timestamp at line " + std::to_string(lineno));
        if (e.t < prev_t)
            throw io_error("non-monotonic timestamp at line " + std::to_string(lineno));
        if (e.x < 0 || e.x >= sensor_width || e.y < 0 || e.y >= sensor_height)
            throw io_error("out-of-bounds coordinate at line " + std::to_string(lineno));
        prev_t = e.t;
        s.events.push_back(e);
    }
    return s;
}

EventStream parse_event_csv_file(const std::string& path, int sensor_width,
                                 int sensor_height) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw io_error("cannot open: " + path);
    return parse_event_csv(in, sensor_width, sensor_height);
}

void write_event_csv(std::ostream& out, const EventStream& s) {
    out << "t,x,y,p\n";
    for (const Event& e : s.events)
        out << e.t << ',' << e.x << ',' << e.y << ',' << (e.p ? 1 : 0) << '\n';
    if (!out)
        throw io_error("failed writing events CSV");
}

void write_event_csv_file(const std::string& path, const EventStream& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw io_error("cannot open for writing: " + path);
    write_event_csv(out, s);
}

// ---- Windowing -------------------------------------------------------

EventStream slice_window(const EventStream& s, Window w) {
    EventStream out;
    out.width = s.width;
    out.height = s.height;
    auto lo = std::lower_bound(s.events.begin(), s.events.end(), w.t_start,
                               [](const Event& e, std::int64_t t) { return e.t < t; });
    auto hi = std::lower_bound(lo, s.events.end(), w.t_end,
                               [](const Event& e, std::int64_t t) { return e.t < t; });
    out.events.assign(lo, hi);
    return out;
}

std::vector<Window> make_windows(const EventStream& s, std::int64_t width_us,
                                 std::int64_t stride_us) {
    if (width_us <= 0 || stride_us <= 0)
        throw config_error("window width and stride must be positive");
    std::vector<Window> out;
    const std::int64_t duration = s.duration_us();
    for (std::int64_t start = 0; start < duration; start += stride_us)
        out.push_back({start, start + width_us});
    return out;
}

// ---- Event-cloud sampling ----------------------------------------------

namespace {

CloudPoint normalize_event(const Event& e, Window w, int width, int height) {
    CloudPoint p;
    const double span = static_cast<double>(w.span());
    p.t = span > 0 ? static_cast<double>(e.t - w.t_start) / span : 0.0;
    p.x = width > 1 ? static_cast<double>(e.x) / (width - 1) : 0.0;
    p.y = height > 1 ? static_cast<double>(e.y) / (height - 1) : 0.0;
    p.p = e.p;
    return p;
}

} // namespace

EventCloudSample sample_random(const EventStream& s, Window w, std::size_t n,
                               std::uint64_t seed) {
    if (n == 0)
        throw config_error("sample size must be positive");
    EventCloudSample out;
    out.source_window = w;
    if (s.events.empty()) {
        out.empty = true;
        return out;
    }
    std::mt19937_64 rng(seed);
    out.points.reserve(n);
    if (s.events.size() >= n) {
        // partial Fisher-Yates over index vector: without replacement
        std::vector<std::size_t> idx(s.events.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        for (std::size_t i = 0; i < n; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
            std::swap(idx[i], idx[pick(rng)]);
            out.points.push_back(normalize_event(s.events[idx[i]], w, s.width, s.height));
        }
    } else {
        std::uniform_int_distribution<std::size_t> pick(0, s.events.size() - 1);
        for (std::size_t i = 0; i < n; ++i)
            out.points.push_back(normalize_event(s.events[pick(rng)], w, s.width, s.height));
    }
    return out;
}

EventCloudSample sample_random(const EventStream& s, std::size_t n, std::uint64_t seed) {
    Window w{0, 1};
    if (!s.events.empty())
        w = Window{s.events.front().t, s.events.back().t + 1};
    return sample_random(s, w, n, seed);
}

std::vector<std::size_t> farthest_point_sample(const std::vector<Point3>& points,
                                               std::size_t n, std::size_t start_index) {
    if (n > points.size())
        throw config_error("cannot sample more points than available");
    if (n == 0)
        return {};
    if (start_index >= points.size())
        throw config_error("start index out of range");

    auto dist2 = [&](std::size_t a, std::size_t b) {
        const double dt = points[a][0] - points[b][0];
        const double dx = points[a][1] - points[b][1];
        const double dy = points[a][2] - points[b][2];
        return dt * dt + dx * dx + dy * dy;
    };

    std::vector<std::size_t> selected;
    selected.reserve(n);
    selected.push_back(start_index);
    std::vector<double> min_d2(points.size(), std::numeric_limits<double>::infinity());
    std::vector<char> taken(points.size(), 0);
    taken[start_index] = 1;

    while (selected.size() < n) {
        const std::size_t last = selected.back();
        const std::int64_t count = static_cast<std::int64_t>(points.size());
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < count; ++i) {
            const double d = dist2(static_cast<std::size_t>(i), last);
            if (d < min_d2[static_cast<std::size_t>(i)])
                min_d2[static_cast<std::size_t>(i)] = d;
        }
        // serial argmax over unselected candidates keeps the
        // smallest-index tie rule deterministic
        std::size_t best = points.size();
        double best_d = -1.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (!taken[i] && min_d2[i] > best_d) {
                best_d = min_d2[i];
                best = i;
            }
        }
        taken[best] = 1;
        selected.push_back(best);
    }
    return selected;
}

std::vector<std::vector<std::size_t>> knn_group(const std::vector<Point3>& points,
                                                const std::vector<Point3>& queries,
                                                std::size_t k) {
    if (k > points.size())
        throw config_error("k exceeds point count");
    std::vector<std::vector<std::size_t>> out(queries.size());
    const std::int64_t nq = static_cast<std::int64_t>(queries.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t qi = 0; qi < nq; ++qi) {
        const Point3& q = queries[static_cast<std::size_t>(qi)];
        std::vector<std::pair<double, std::size_t>> d(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double dt = points[i][0] - q[0];
            const double dx = points[i][1] - q[1];
            const double dy = points[i][2] - q[2];
            d[i] = {dt * dt + dx * dx + dy * dy, i};
        }
        std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
        auto& row = out[static_cast<std::size_t>(qi)];
        row.resize(k);
        for (std::size_t i = 0; i < k; ++i)
            row[i] = d[i].second;
    }
    return out;
}

} // namespace evgaze
