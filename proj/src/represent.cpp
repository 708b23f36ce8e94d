#include "evgaze/represent.hpp"

#include "evgaze/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace evgaze {

namespace {

void check_window(Window w) {
    if (w.t_start >= w.t_end)
        throw config_error("window must satisfy t_start < t_end");
}

std::size_t pol_channel(PolarityMode mode, bool on) {
    if (mode == PolarityMode::two_channel)
        return on ? 0 : 1;
    return 0;
}

double pol_weight(PolarityMode mode, bool on) {
    if (mode == PolarityMode::signed_sum)
        return on ? 1.0 : -1.0;
    return 1.0;
}

// Splits unit mass into a complementary pair (1-u, u). The fraction is
// snapped to a 2^-32 grid so both halves are exactly representable and sum
// to exactly 1.0, which keeps cell totals equal to event counts under
// double accumulation.
std::pair<double, double> split_mass(double u) {
    constexpr double grid = 4294967296.0; // 2^32
    double q = std::nearbyint(u * grid);
    if (q < 0.0)
        q = 0.0;
    if (q > grid)
        q = grid;
    const double hi = q / grid;
    return {1.0 - hi, hi};
}

// Intra-bin fraction of an event: bin index and u in [0,1) such that
// (t - t_start)/bin_width = bin + u, computed exactly in integers.
struct BinPos {
    std::int64_t bin;
    double u;
};

BinPos locate_bin(std::int64_t t, Window w, std::size_t t_bins) {
    const std::int64_t num = (t - w.t_start) * static_cast<std::int64_t>(t_bins);
    const std::int64_t span = w.span();
    std::int64_t bin = num / span;
    std::int64_t rem = num % span;
    if (rem < 0) { // events before the window start (not produced by slicing)
        bin -= 1;
        rem += span;
    }
    return {bin, static_cast<double>(rem) / static_cast<double>(span)};
}

} // namespace

EventStream downsample_coords(const EventStream& s, int factor_x, int factor_y) {
    if (factor_x < 1 || factor_y < 1)
        throw config_error("downsample factors must be >= 1");
    EventStream out;
    out.width = (s.width + factor_x - 1) / factor_x;
    out.height = (s.height + factor_y - 1) / factor_y;
    out.events.reserve(s.events.size());
    for (Event e : s.events) {
        e.x /= factor_x;
        e.y /= factor_y;
        out.events.push_back(e);
    }
    return out;
}

FrameTensor direct_binning(const EventStream& s, Window w, std::size_t t_bins,
                           PolarityMode mode) {
    check_window(w);
    if (t_bins == 0)
        throw config_error("t_bins must be positive");
    const std::size_t h = static_cast<std::size_t>(s.height);
    const std::size_t wd = static_cast<std::size_t>(s.width);
    FrameTensor out({t_bins, channel_count(mode), h, wd});
    for (const Event& e : s.events) {
        if (!w.contains(e.t))
            continue;
        const std::size_t bin = static_cast<std::size_t>(locate_bin(e.t, w, t_bins).bin);
        out.at(bin, pol_channel(mode, e.p), static_cast<std::size_t>(e.y),
               static_cast<std::size_t>(e.x)) += pol_weight(mode, e.p);
    }
    return out;
}

FrameTensor event_volume(const EventStream& s, Window w, std::size_t t_bins,
                         PolarityMode mode) {
    check_window(w);
    if (t_bins == 0)
        throw config_error("t_bins must be positive");
    const std::size_t h = static_cast<std::size_t>(s.height);
    const std::size_t wd = static_cast<std::size_t>(s.width);
    const std::int64_t last = static_cast<std::int64_t>(t_bins) - 1;
    FrameTensor out({t_bins, channel_count(mode), h, wd});
    for (const Event& e : s.events) {
        if (!w.contains(e.t))
            continue;
        // tau = bin + u - 0.5; the triangular kernel splits mass between
        // floor(tau) and floor(tau)+1
        const BinPos pos = locate_bin(e.t, w, t_bins);
        std::int64_t k0;
        double frac; // tau - k0
        if (pos.u >= 0.5) {
            k0 = pos.bin;
            frac = pos.u - 0.5;
        } else {
            k0 = pos.bin - 1;
            frac = pos.u + 0.5;
        }
        auto [w0, w1] = split_mass(frac);
        const std::int64_t b0 = std::clamp<std::int64_t>(k0, 0, last);
        const std::int64_t b1 = std::clamp<std::int64_t>(k0 + 1, 0, last);
        const std::size_t c = pol_channel(mode, e.p);
        const double sign = pol_weight(mode, e.p);
        const std::size_t y = static_cast<std::size_t>(e.y);
        const std::size_t x = static_cast<std::size_t>(e.x);
        out.at(static_cast<std::size_t>(b0), c, y, x) += sign * w0;
        out.at(static_cast<std::size_t>(b1), c, y, x) += sign * w1;
    }
    return out;
}

std::pair<FrameTensor, BinCarry> causal_event_volume(const EventStream& s, Window w,
                                                     std::size_t t_bins, PolarityMode mode,
                                                     const BinCarry* carry_in) {
    check_window(w);
    if (t_bins == 0)
        throw config_error("t_bins must be positive");
    const std::size_t h = static_cast<std::size_t>(s.height);
    const std::size_t wd = static_cast<std::size_t>(s.width);
    const std::size_t ch = channel_count(mode);
    FrameTensor out({t_bins, ch, h, wd});
    BinCarry carry{FrameTensor({ch, h, wd})};

    if (carry_in != nullptr) {
        if (carry_in->plane.dims() != carry.plane.dims())
            throw shape_error("carry plane dims do not match representation dims");
        for (std::size_t i = 0; i < carry_in->plane.size(); ++i)
            out[i] += carry_in->plane[i]; // bin 0 occupies the leading slice
    }

    for (const Event& e : s.events) {
        if (!w.contains(e.t))
            continue;
        const BinPos pos = locate_bin(e.t, w, t_bins);
        auto [w_here, w_next] = split_mass(pos.u);
        const std::size_t c = pol_channel(mode, e.p);
        const double sign = pol_weight(mode, e.p);
        const std::size_t y = static_cast<std::size_t>(e.y);
        const std::size_t x = static_cast<std::size_t>(e.x);
        out.at(static_cast<std::size_t>(pos.bin), c, y, x) += sign * w_here;
        if (static_cast<std::size_t>(pos.bin) + 1 < t_bins)
            out.at(static_cast<std::size_t>(pos.bin) + 1, c, y, x) += sign * w_next;
        else
            carry.plane.at(c, y, x) += sign * w_next;
    }
    return {std::move(out), std::move(carry)};
}

std::pair<FrameTensor, FrameTensor> time_surface(const EventStream& s, Window w,
                                                 DecayKind decay, double tau_s) {
    check_window(w);
    if (decay == DecayKind::exponential && tau_s <= 0.0)
        throw config_error("exponential decay needs tau_s > 0");
    const std::size_t h = static_cast<std::size_t>(s.height);
    const std::size_t wd = static_cast<std::size_t>(s.width);
    FrameTensor last_p({h, wd}, -1.0);
    FrameTensor last_n({h, wd}, -1.0);
    for (const Event& e : s.events) {
        if (!w.contains(e.t))
            continue;
        FrameTensor& plane = e.p ? last_p : last_n;
        plane.at(static_cast<std::size_t>(e.y), static_cast<std::size_t>(e.x)) =
            static_cast<double>(e.t);
    }
    const double span = static_cast<double>(w.span());
    auto surface = [&](const FrameTensor& last) {
        FrameTensor out({h, wd});
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (last[i] < 0.0)
                continue;
            if (decay == DecayKind::linear) {
                out[i] = (last[i] - static_cast<double>(w.t_start)) / span;
            } else {
                const double age_s = (static_cast<double>(w.t_end) - last[i]) * 1e-6;
                out[i] = std::exp(-age_s / tau_s);
            }
        }
        return out;
    };
    return {surface(last_p), surface(last_n)};
}

MemoryState MemoryState::zeros(std::size_t height, std::size_t width,
                               std::array<double, 3> k) {
    MemoryState st;
    for (auto& c : st.channels)
        c = FrameTensor({height, width});
    st.forgetting = k;
    return st;
}

MemoryState memory_update(const MemoryState& state, const FrameTensor& s_p,
                          const FrameTensor& s_n) {
    if (!s_p.same_dims(s_n) || !s_p.same_dims(state.channels[0]))
        throw shape_error("memory update dims mismatch");
    MemoryState out = state;
    for (std::size_t c = 0; c < 3; ++c) {
        const double k = state.forgetting[c];
        FrameTensor& m = out.channels[c];
        for (std::size_t i = 0; i < m.size(); ++i) {
            const double v = m[i] + (s_p[i] + s_n[i]) / 2.0;
            m[i] = k * std::clamp(v, 0.0, 1.0);
        }
    }
    return out;
}

FrameTensor memory_input(const MemoryState& state) {
    const auto& d = state.channels[0].dims();
    FrameTensor out({3, d[0], d[1]});
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < state.channels[c].size(); ++i)
            out[c * state.channels[c].size() + i] = state.channels[c][i];
    return out;
}

FrameTensor bina_rep(const EventStream& s, Window w, std::size_t n_frames,
                     std::size_t height, std::size_t width) {
    check_window(w);
    if (n_frames == 0 || n_frames > 30)
        throw config_error("bina_rep frame count must be in 1..30");
    // per pixel, one bit per sub-frame, oldest in bit 0
    std::vector<std::uint32_t> bits(height * width, 0);
    for (const Event& e : s.events) {
        if (!w.contains(e.t))
            continue;
        if (e.x < 0 || static_cast<std::size_t>(e.x) >= width || e.y < 0 ||
            static_cast<std::size_t>(e.y) >= height)
            throw shape_error("bina_rep event outside the target raster");
        const std::size_t sub = static_cast<std::size_t>(locate_bin(e.t, w, n_frames).bin);
        bits[static_cast<std::size_t>(e.y) * width + static_cast<std::size_t>(e.x)] |=
            1u << sub;
    }
    const double denom = static_cast<double>((1u << n_frames) - 1u);
    FrameTensor out({1, height, width});
    for (std::size_t i = 0; i < bits.size(); ++i)
        out[i] = static_cast<double>(bits[i]) / denom;
    return out;
}

FrameTensor voxel_grid(const EventStream& s, Window w, std::size_t t_bins) {
    return event_volume(s, w, t_bins, PolarityMode::signed_sum);
}

} // namespace evgaze
