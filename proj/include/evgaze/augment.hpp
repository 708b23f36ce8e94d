#pragma once

#include "evgaze/events.hpp"

#include <vector>

namespace evgaze {

// Spatio-temporal affine transform applied directly to raw events:
// (x,y) rotated/scaled about the sensor center then translated, t scaled
// and optionally reversed, polarity optionally inverted. time_flip and
// polarity_flip are independent knobs; callers wanting the reversed-
// brightness pairing set both (temporal_flip() does so itself).
struct AffineParams {
    double scale_x = 1.0;
    double scale_y = 1.0;
    double rotation = 0.0; // radians, counterclockwise
    double translate_x = 0.0;
    double translate_y = 0.0;
    double time_scale = 1.0;
    bool time_flip = false;
    bool polarity_flip = false;
};

struct CutoutMask {
    int x0 = 0;
    int y0 = 0;
    int w = 0;
    int h = 0;
};

enum class ShiftPolicy { drop, clamp };

// x -> width-1-x. Flagged: some training recipes exclude spatial
// reflections; callers opt in.
EventStream spatial_flip_h(const EventStream& s);

EventStream spatial_shift(const EventStream& s, int dx, int dy, ShiftPolicy policy);

// t -> D-t over the stream duration D = max t, order reversed to restore
// sorting, polarity inverted (a reversed brightness change flips sign).
EventStream temporal_flip(const EventStream& s);

// t -> t+dt; events leaving the window are dropped.
EventStream temporal_shift(const EventStream& s, std::int64_t dt_us, Window window);

EventStream affine_events(const EventStream& s, const AffineParams& params);

// Removes every event inside the rectangle from every stream of one
// recording. All streams must share sensor dims; the mask must intersect
// the sensor plane.
std::vector<EventStream> event_cutout(const std::vector<EventStream>& streams,
                                      const CutoutMask& mask);

} // namespace evgaze
