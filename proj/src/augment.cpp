#include "evgaze/augment.hpp"

#include "evgaze/common.hpp"

#include <algorithm>
#include <cmath>

namespace evgaze {

namespace {

// nearest-integer rounding, halves toward +inf
int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

void sort_by_time(EventStream& s) {
    std::stable_sort(s.events.begin(), s.events.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });
}

} // namespace

EventStream spatial_flip_h(const EventStream& s) {
    EventStream out = s;
    for (Event& e : out.events)
        e.x = s.width - 1 - e.x;
    return out;
}

EventStream spatial_shift(const EventStream& s, int dx, int dy, ShiftPolicy policy) {
    EventStream out;
    out.width = s.width;
    out.height = s.height;
    out.events.reserve(s.events.size());
    for (Event e : s.events) {
        e.x += dx;
        e.y += dy;
        if (e.x < 0 || e.x >= s.width || e.y < 0 || e.y >= s.height) {
            if (policy == ShiftPolicy::drop)
                continue;
            e.x = std::clamp(e.x, 0, s.width - 1);
            e.y = std::clamp(e.y, 0, s.height - 1);
        }
        out.events.push_back(e);
    }
    return out;
}

EventStream temporal_flip(const EventStream& s) {
    EventStream out;
    out.width = s.width;
    out.height = s.height;
    if (s.events.empty())
        return out;
    // reflect about the time support so the operation is an involution
    const std::int64_t d = s.events.front().t + s.events.back().t;
    out.events.reserve(s.events.size());
    for (auto it = s.events.rbegin(); it != s.events.rend(); ++it) {
        Event e = *it;
        e.t = d - e.t;
        e.p = !e.p;
        out.events.push_back(e);
    }
    sort_by_time(out); // reverse order handles ties in the same pass
    return out;
}

EventStream temporal_shift(const EventStream& s, std::int64_t dt_us, Window window) {
    EventStream out;
    out.width = s.width;
    out.height = s.height;
    out.events.reserve(s.events.size());
    for (Event e : s.events) {
        e.t += dt_us;
        if (window.contains(e.t))
            out.events.push_back(e);
    }
    return out;
}

EventStream affine_events(const EventStream& s, const AffineParams& params) {
    if (params.scale_x <= 0 || params.scale_y <= 0 || params.time_scale <= 0)
        throw config_error("affine scale factors must be positive");
    EventStream out;
    out.width = s.width;
    out.height = s.height;
    out.events.reserve(s.events.size());

    const double cx = (s.width - 1) / 2.0;
    const double cy = (s.height - 1) / 2.0;
    const double cr = std::cos(params.rotation);
    const double sr = std::sin(params.rotation);
    // time flip reflects about the scaled support, as temporal_flip does
    const std::int64_t d =
        s.events.empty() ? 0 : s.events.front().t + s.events.back().t;
    const std::int64_t d_scaled =
        static_cast<std::int64_t>(std::llround(static_cast<double>(d) * params.time_scale));

    for (const Event& e : s.events) {
        const double px = (e.x - cx) * params.scale_x;
        const double py = (e.y - cy) * params.scale_y;
        const double rx = cr * px - sr * py;
        const double ry = sr * px + cr * py;
        const int nx = round_half_up(rx + cx + params.translate_x);
        const int ny = round_half_up(ry + cy + params.translate_y);
        if (nx < 0 || nx >= s.width || ny < 0 || ny >= s.height)
            continue;
        std::int64_t nt =
            static_cast<std::int64_t>(std::llround(static_cast<double>(e.t) * params.time_scale));
        if (params.time_flip)
            nt = d_scaled - nt;
        Event ne{nt, nx, ny, params.polarity_flip ? !e.p : e.p};
        out.events.push_back(ne);
    }
    sort_by_time(out);
    return out;
}

std::vector<EventStream> event_cutout(const std::vector<EventStream>& streams,
                                      const CutoutMask& mask) {
    if (mask.w <= 0 || mask.h <= 0)
        throw config_error("cutout mask must have positive extent");
    std::vector<EventStream> out;
    out.reserve(streams.size());
    for (const EventStream& s : streams) {
        if (!streams.empty() && (s.width != streams.front().width ||
                                 s.height != streams.front().height))
            throw shape_error("cutout streams must share sensor dims");
        if (mask.x0 >= s.width || mask.y0 >= s.height || mask.x0 + mask.w <= 0 ||
            mask.y0 + mask.h <= 0)
            throw config_error("cutout mask does not intersect the sensor plane");
        EventStream r;
        r.width = s.width;
        r.height = s.height;
        r.events.reserve(s.events.size());
        for (const Event& e : s.events) {
            const bool inside = e.x >= mask.x0 && e.x < mask.x0 + mask.w &&
                                e.y >= mask.y0 && e.y < mask.y0 + mask.h;
            if (!inside)
                r.events.push_back(e);
        }
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace evgaze
