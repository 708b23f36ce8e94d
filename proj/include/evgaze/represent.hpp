#pragma once

#include "evgaze/events.hpp"
#include "evgaze/tensor.hpp"

#include <array>
#include <optional>
#include <utility>

namespace evgaze {

enum class PolarityMode {
    signed_sum,  // ON adds +1, OFF adds -1, single channel
    two_channel, // channel 0 = ON, channel 1 = OFF
    merged       // any polarity adds +1, single channel
};

inline std::size_t channel_count(PolarityMode m) {
    return m == PolarityMode::two_channel ? 2 : 1;
}

// Deferred mass for the first bin of the next window (causal event volume
// chaining). Plane dims are [C,H,W], all values non-negative.
struct BinCarry {
    FrameTensor plane;
};

// Coordinates divided by integer factors; sensor dims shrink (ceil).
EventStream downsample_coords(const EventStream& s, int factor_x, int factor_y);

// Each event adds its polarity weight to the bin floor((t-t_start)/bin_width).
// Output dims [T,C,H,W].
FrameTensor direct_binning(const EventStream& s, Window w, std::size_t t_bins,
                           PolarityMode mode);

// Triangular temporal kernel centered on bin indices: with tau =
// (t-t_start)/bin_width - 0.5, mass splits between floor(tau) and
// floor(tau)+1; tails beyond either edge fold into the nearest edge bin.
FrameTensor event_volume(const EventStream& s, Window w, std::size_t t_bins,
                         PolarityMode mode);

// Causal variant: an event in bin k with intra-bin fraction u sends (1-u)
// to bin k and u to bin k+1; mass destined past the last bin is emitted as
// carry_out and carry_in (if any) lands in bin 0. Bin k never depends on
// events after bin k ends.
std::pair<FrameTensor, BinCarry> causal_event_volume(const EventStream& s, Window w,
                                                     std::size_t t_bins, PolarityMode mode,
                                                     const BinCarry* carry_in = nullptr);

enum class DecayKind { linear, exponential };

// Per-pixel value from the most recent event of each polarity:
// linear -> (t_last - t_start)/(t_end - t_start),
// exponential -> exp(-(t_end - t_last)/tau_s) with tau_s in seconds.
// Returns (S_p, S_n), each [H,W], values in [0,1], zero where no event.
std::pair<FrameTensor, FrameTensor> time_surface(const EventStream& s, Window w,
                                                 DecayKind decay, double tau_s = 0.0);

// Three exponentially-forgotten accumulations of averaged time surfaces
// with per-channel forgetting factors k_i in (0,1).
struct MemoryState {
    std::array<FrameTensor, 3> channels;
    std::array<double, 3> forgetting{0.8, 0.6, 0.4};

    static MemoryState zeros(std::size_t height, std::size_t width,
                             std::array<double, 3> k = {0.8, 0.6, 0.4});
};

// M_i' = k_i * clamp(M_i + (S_p + S_n)/2, 0, 1), element-wise per channel.
MemoryState memory_update(const MemoryState& state, const FrameTensor& s_p,
                          const FrameTensor& s_n);

// Channels stacked in forgetting order into a [3,H,W] tensor.
FrameTensor memory_input(const MemoryState& state);

// Window split into n_frames sub-bins; per pixel, sub-bin j is 1 iff it saw
// any event; value = sum_j b_j * 2^j / (2^n - 1) with the newest frame as
// the most significant bit. Output [1,H,W], values in [0,1].
FrameTensor bina_rep(const EventStream& s, Window w, std::size_t n_frames,
                     std::size_t height, std::size_t width);

// Signed-polarity event volume with T discretization steps, dims [T,1,H,W].
FrameTensor voxel_grid(const EventStream& s, Window w, std::size_t t_bins = 3);

} // namespace evgaze
