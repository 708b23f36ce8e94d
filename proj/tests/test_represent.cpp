#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "evgaze/common.hpp"
#include "evgaze/represent.hpp"

#include <cmath>
#include <random>

using namespace evgaze;

namespace {

EventStream one_event(std::int64_t t, int x, int y, bool p, int w = 8, int h = 8) {
    EventStream s;
    s.width = w;
    s.height = h;
    s.events = {{t, x, y, p}};
    return s;
}

EventStream random_stream(std::mt19937_64& rng, std::int64_t t_max, int w = 8, int h = 8,
                          int n = 200) {
    EventStream s;
    s.width = w;
    s.height = h;
    std::vector<std::int64_t> ts(n);
    for (auto& t : ts)
        t = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(t_max));
    std::sort(ts.begin(), ts.end());
    for (int i = 0; i < n; ++i)
        s.events.push_back({ts[static_cast<std::size_t>(i)], static_cast<int>(rng() % w),
                            static_cast<int>(rng() % h), (rng() & 1) != 0});
    return s;
}

} // namespace

TEST_CASE("downsample_coords") {
    EventStream s;
    s.width = 640;
    s.height = 480;
    s.events = {{0, 639, 479, true}, {1, 7, 7, false}};
    CHECK(downsample_coords(s, 1, 1).events == s.events);
    const EventStream d = downsample_coords(s, 8, 8);
    CHECK(d.width == 80);
    CHECK(d.height == 60);
    CHECK(d.events[0].x == 79);
    CHECK(d.events[0].y == 59);
    CHECK(d.events[1].x == 0);
    CHECK(d.events[1].y == 0);
}

TEST_CASE("direct_binning fixtures") {
    const Window w{0, 100};
    SUBCASE("one ON event, merged, T=1") {
        const FrameTensor t = direct_binning(one_event(50, 2, 3, true), w, 1,
                                             PolarityMode::merged);
        CHECK(t.dims() == std::vector<std::size_t>{1, 1, 8, 8});
        CHECK(t.at(0, 0, 3, 2) == 1.0);
        CHECK(t.sum() == 1.0);
    }
    SUBCASE("signed ON + OFF at the same cell cancel") {
        EventStream s = one_event(10, 2, 3, true);
        s.events.push_back({11, 2, 3, false});
        const FrameTensor t = direct_binning(s, w, 1, PolarityMode::signed_sum);
        CHECK(t.at(0, 0, 3, 2) == 0.0);
    }
    SUBCASE("event exactly at t_start + bin_width lands in bin 1") {
        const FrameTensor t = direct_binning(one_event(50, 0, 0, true), w, 2,
                                             PolarityMode::merged);
        CHECK(t.at(0, 0, 0, 0) == 0.0);
        CHECK(t.at(1, 0, 0, 0) == 1.0);
    }
    SUBCASE("two_channel routes by polarity") {
        EventStream s = one_event(10, 1, 1, true);
        s.events.push_back({20, 1, 1, false});
        const FrameTensor t = direct_binning(s, w, 1, PolarityMode::two_channel);
        CHECK(t.at(0, 0, 1, 1) == 1.0);
        CHECK(t.at(0, 1, 1, 1) == 1.0);
    }
    SUBCASE("empty stream gives an all-zero tensor") {
        EventStream s;
        s.width = 8;
        s.height = 8;
        const FrameTensor t = direct_binning(s, w, 4, PolarityMode::two_channel);
        CHECK(t.dims() == std::vector<std::size_t>{4, 2, 8, 8});
        CHECK(t.sum() == 0.0);
    }
    CHECK_THROWS_AS(direct_binning(one_event(0, 0, 0, true), w, 0, PolarityMode::merged),
                    config_error);
}

TEST_CASE("event_volume triangular kernel") {
    const Window w{0, 100}; // 2 bins of 50
    SUBCASE("event at a bin center keeps full mass") {
        // bin 0 center is tau=0 -> t = 25
        const FrameTensor t = event_volume(one_event(25, 1, 1, true), w, 2,
                                           PolarityMode::merged);
        CHECK(t.at(0, 0, 1, 1) == 1.0);
        CHECK(t.at(1, 0, 1, 1) == 0.0);
    }
    SUBCASE("event exactly between bins splits 0.5/0.5") {
        const FrameTensor t = event_volume(one_event(50, 1, 1, true), w, 2,
                                           PolarityMode::merged);
        CHECK(t.at(0, 0, 1, 1) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(t.at(1, 0, 1, 1) == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("edge tails fold inward, conserving mass") {
        const FrameTensor a = event_volume(one_event(0, 1, 1, true), w, 2,
                                           PolarityMode::merged);
        CHECK(a.sum() == 1.0);
        const FrameTensor b = event_volume(one_event(99, 1, 1, true), w, 2,
                                           PolarityMode::merged);
        CHECK(b.sum() == 1.0);
    }
}

TEST_CASE("event_volume conserves mass exactly on random windows") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 50; ++trial) {
        const std::int64_t span = 1000 + static_cast<std::int64_t>(rng() % 100000);
        const EventStream s = random_stream(rng, span);
        const std::size_t t_bins = 1 + rng() % 16;
        const FrameTensor t = event_volume(s, {0, span}, t_bins, PolarityMode::merged);
        CHECK(t.sum() == static_cast<double>(s.events.size()));
    }
}

TEST_CASE("causal_event_volume fixtures") {
    SUBCASE("event at a bin start puts all mass there") {
        const Window w{0, 100};
        const FrameTensor t =
            causal_event_volume(one_event(50, 1, 1, true), w, 2, PolarityMode::merged)
                .first;
        CHECK(t.at(1, 0, 1, 1) == 1.0);
        CHECK(t.at(0, 0, 1, 1) == 0.0);
    }
    SUBCASE("T=10 bins of 10 ms, event at 3 ms -> 0.7 / 0.3") {
        const Window w{0, 100000};
        const FrameTensor t =
            causal_event_volume(one_event(3000, 1, 1, true), w, 10, PolarityMode::merged)
                .first;
        CHECK(t.at(0, 0, 1, 1) == doctest::Approx(0.7).epsilon(1e-9));
        CHECK(t.at(1, 0, 1, 1) == doctest::Approx(0.3).epsilon(1e-9));
    }
    SUBCASE("event late in the last bin emits carry") {
        const Window w{0, 100000};
        auto [t, carry] = causal_event_volume(one_event(97000, 1, 1, true), w, 10,
                                              PolarityMode::merged);
        CHECK(t.at(9, 0, 1, 1) == doctest::Approx(0.3).epsilon(1e-9));
        CHECK(carry.plane.at(0, 1, 1) == doctest::Approx(0.7).epsilon(1e-9));
        CHECK(t.sum() + carry.plane.sum() == 1.0);
    }
    SUBCASE("carry_in lands in bin 0") {
        const Window w{0, 100};
        BinCarry carry{FrameTensor({1, 8, 8})};
        carry.plane.at(0, 2, 2) = 0.25;
        EventStream empty;
        empty.width = 8;
        empty.height = 8;
        const FrameTensor t =
            causal_event_volume(empty, w, 4, PolarityMode::merged, &carry).first;
        CHECK(t.at(0, 0, 2, 2) == 0.25);
        CHECK(t.sum() == 0.25);
    }
}

TEST_CASE("causal_event_volume conserves mass (+carry) exactly") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        const std::int64_t span = 1000 + static_cast<std::int64_t>(rng() % 100000);
        const EventStream s = random_stream(rng, span);
        const std::size_t t_bins = 1 + rng() % 16;
        auto [t, carry] = causal_event_volume(s, {0, span}, t_bins, PolarityMode::merged);
        CHECK(t.sum() + carry.plane.sum() == static_cast<double>(s.events.size()));
    }
}

TEST_CASE("causal bins are unchanged by truncating later events") {
    std::mt19937_64 rng(55);
    const std::int64_t span = 80000;
    const std::size_t t_bins = 8;
    const std::int64_t bin_width = span / static_cast<std::int64_t>(t_bins);
    for (int trial = 0; trial < 30; ++trial) {
        const EventStream s = random_stream(rng, span);
        const std::size_t cut_bin = rng() % t_bins;
        EventStream truncated;
        truncated.width = s.width;
        truncated.height = s.height;
        for (const Event& e : s.events)
            if (e.t < static_cast<std::int64_t>(cut_bin + 1) * bin_width)
                truncated.events.push_back(e);
        const FrameTensor full =
            causal_event_volume(s, {0, span}, t_bins, PolarityMode::merged).first;
        const FrameTensor part =
            causal_event_volume(truncated, {0, span}, t_bins, PolarityMode::merged).first;
        bool identical = true;
        for (std::size_t b = 0; b <= cut_bin; ++b)
            for (std::size_t y = 0; y < 8 && identical; ++y)
                for (std::size_t x = 0; x < 8; ++x)
                    if (full.at(b, 0, y, x) != part.at(b, 0, y, x)) {
                        identical = false;
                        break;
                    }
        CHECK(identical);
    }
}

TEST_CASE("plain event_volume violates causality on a witness input") {
    // an event early in bin 1 spreads mass back into bin 0: truncating the
    // stream at bin 0's end changes bin 0, which the causal variant never does
    const Window w{0, 100};
    const EventStream with_late = one_event(55, 1, 1, true); // bin 1, first half
    EventStream empty;
    empty.width = 8;
    empty.height = 8;

    const FrameTensor ev_full = event_volume(with_late, w, 2, PolarityMode::merged);
    const FrameTensor ev_trunc = event_volume(empty, w, 2, PolarityMode::merged);
    CHECK(ev_full.at(0, 0, 1, 1) != ev_trunc.at(0, 0, 1, 1)); // bin 0 changed

    const FrameTensor cv_full =
        causal_event_volume(with_late, w, 2, PolarityMode::merged).first;
    const FrameTensor cv_trunc =
        causal_event_volume(empty, w, 2, PolarityMode::merged).first;
    CHECK(cv_full.at(0, 0, 1, 1) == cv_trunc.at(0, 0, 1, 1)); // bin 0 unchanged
}

TEST_CASE("carry chaining equals one long window split at the boundary") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const std::int64_t half = 40000;
        const EventStream s = random_stream(rng, 2 * half, 8, 8, 300);
        const std::size_t t_bins = 4;

        auto [big, big_carry] =
            causal_event_volume(s, {0, 2 * half}, 2 * t_bins, PolarityMode::merged);

        EventStream first, second;
        first.width = second.width = 8;
        first.height = second.height = 8;
        for (const Event& e : s.events)
            (e.t < half ? first : second).events.push_back(e);
        auto [t1, c1] = causal_event_volume(first, {0, half}, t_bins, PolarityMode::merged);
        auto [t2, c2] =
            causal_event_volume(second, {half, 2 * half}, t_bins, PolarityMode::merged, &c1);

        for (std::size_t b = 0; b < t_bins; ++b)
            for (std::size_t y = 0; y < 8; ++y)
                for (std::size_t x = 0; x < 8; ++x) {
                    CHECK(big.at(b, 0, y, x) == t1.at(b, 0, y, x));
                    CHECK(big.at(t_bins + b, 0, y, x) == t2.at(b, 0, y, x));
                }
        for (std::size_t i = 0; i < big_carry.plane.size(); ++i)
            CHECK(big_carry.plane[i] == c2.plane[i]);
    }
}

TEST_CASE("time_surface") {
    const Window w{0, 50000};
    SUBCASE("no events -> all zeros") {
        EventStream s;
        s.width = 8;
        s.height = 8;
        auto [sp, sn] = time_surface(s, w, DecayKind::linear);
        CHECK(sp.sum() == 0.0);
        CHECK(sn.sum() == 0.0);
    }
    SUBCASE("linear value approaches 1 at the window end") {
        auto [sp, sn] = time_surface(one_event(49999, 2, 2, true), w, DecayKind::linear);
        CHECK(sp.at(2, 2) == doctest::Approx(1.0).epsilon(1e-4));
        CHECK(sn.at(2, 2) == 0.0);
    }
    SUBCASE("last event wins: 10 ms then 40 ms in a 50 ms window -> 0.8") {
        EventStream s = one_event(10000, 3, 3, true);
        s.events.push_back({40000, 3, 3, true});
        auto [sp, sn] = time_surface(s, w, DecayKind::linear);
        CHECK(sp.at(3, 3) == doctest::Approx(0.8).epsilon(1e-12));
    }
    SUBCASE("exponential decay") {
        auto [sp, sn] =
            time_surface(one_event(40000, 3, 3, true), w, DecayKind::exponential, 0.01);
        // age = 10 ms, tau = 10 ms
        CHECK(sp.at(3, 3) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
        CHECK_THROWS_AS(time_surface(one_event(0, 0, 0, true), w, DecayKind::exponential,
                                     0.0),
                        config_error);
    }
    SUBCASE("values stay in [0,1] and polarity planes are independent") {
        std::mt19937_64 rng(9);
        const EventStream s = random_stream(rng, 50000);
        auto [sp, sn] = time_surface(s, w, DecayKind::linear);
        for (std::size_t i = 0; i < sp.size(); ++i) {
            CHECK(sp[i] >= 0.0);
            CHECK(sp[i] <= 1.0);
            CHECK(sn[i] >= 0.0);
            CHECK(sn[i] <= 1.0);
        }
    }
}

TEST_CASE("memory channels follow the forgetting recurrence") {
    MemoryState st = MemoryState::zeros(4, 4);
    FrameTensor ones({4, 4}, 1.0);
    FrameTensor zeros({4, 4}, 0.0);

    SUBCASE("zero in, zero out") {
        const MemoryState n = memory_update(st, zeros, zeros);
        for (const auto& c : n.channels)
            CHECK(c.sum() == 0.0);
    }
    SUBCASE("saturated surfaces land at the forgetting factors") {
        const MemoryState n = memory_update(st, ones, ones);
        CHECK(n.channels[0].at(0, 0) == doctest::Approx(0.8).epsilon(1e-12));
        CHECK(n.channels[1].at(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
        CHECK(n.channels[2].at(0, 0) == doctest::Approx(0.4).epsilon(1e-12));
    }
    SUBCASE("iterating with saturated input stays at k_i (clamp saturates)") {
        MemoryState n = st;
        for (int i = 0; i < 5; ++i)
            n = memory_update(n, ones, ones);
        CHECK(n.channels[0].at(1, 1) == doctest::Approx(0.8).epsilon(1e-12));
        CHECK(n.channels[1].at(1, 1) == doctest::Approx(0.6).epsilon(1e-12));
        CHECK(n.channels[2].at(1, 1) == doctest::Approx(0.4).epsilon(1e-12));
    }
    SUBCASE("values remain in [0,1] under random input") {
        std::mt19937_64 rng(2);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        MemoryState n = st;
        for (int step = 0; step < 20; ++step) {
            FrameTensor sp({4, 4}), sn({4, 4});
            for (std::size_t i = 0; i < sp.size(); ++i) {
                sp[i] = u(rng);
                sn[i] = u(rng);
            }
            n = memory_update(n, sp, sn);
            for (const auto& c : n.channels)
                for (std::size_t i = 0; i < c.size(); ++i) {
                    CHECK(c[i] >= 0.0);
                    CHECK(c[i] <= 1.0);
                }
        }
    }
    SUBCASE("dims mismatch is an error") {
        FrameTensor bad({3, 3});
        CHECK_THROWS_AS(memory_update(st, bad, bad), shape_error);
    }
}

TEST_CASE("memory_input stacks channels in forgetting order") {
    MemoryState st = MemoryState::zeros(60, 80);
    st.channels[0].at(0, 0) = 0.8;
    st.channels[1].at(0, 0) = 0.6;
    st.channels[2].at(0, 0) = 0.4;
    const FrameTensor t = memory_input(st);
    CHECK(t.dims() == std::vector<std::size_t>{3, 60, 80});
    CHECK(t.at(0, 0, 0) == 0.8);
    CHECK(t.at(1, 0, 0) == 0.6);
    CHECK(t.at(2, 0, 0) == 0.4);
}

TEST_CASE("bina_rep bit stacking") {
    const Window w{0, 4000}; // 4 sub-frames of 1000
    SUBCASE("no events -> zeros") {
        EventStream s;
        s.width = 8;
        s.height = 8;
        CHECK(bina_rep(s, w, 4, 8, 8).sum() == 0.0);
    }
    SUBCASE("active frames [1,0,1,1] oldest->newest give 13/15") {
        EventStream s;
        s.width = 8;
        s.height = 8;
        s.events = {{100, 2, 2, true}, {2100, 2, 2, false}, {3100, 2, 2, true}};
        const FrameTensor t = bina_rep(s, w, 4, 8, 8);
        CHECK(t.at(0, 2, 2) == doctest::Approx(13.0 / 15.0).epsilon(1e-12));
    }
    SUBCASE("active in every frame -> 1.0") {
        EventStream s;
        s.width = 8;
        s.height = 8;
        s.events = {{0, 1, 1, true}, {1000, 1, 1, true}, {2000, 1, 1, false},
                    {3000, 1, 1, true}};
        CHECK(bina_rep(s, w, 4, 8, 8).at(0, 1, 1) == 1.0);
    }
    SUBCASE("invariant to event multiplicity within a sub-bin") {
        EventStream a;
        a.width = 8;
        a.height = 8;
        a.events = {{100, 2, 2, true}};
        EventStream b = a;
        b.events.push_back({200, 2, 2, false});
        b.events.push_back({300, 2, 2, true});
        CHECK(bina_rep(a, w, 4, 8, 8) == bina_rep(b, w, 4, 8, 8));
    }
    CHECK_THROWS_AS(bina_rep(EventStream{8, 8, {}}, w, 0, 8, 8), config_error);
}

TEST_CASE("voxel_grid is the signed event volume") {
    const Window w{0, 3000};
    EventStream s = one_event(500, 1, 1, true);
    s.events.push_back({1500, 2, 2, false});
    s.events.push_back({2500, 3, 3, true});
    const FrameTensor v = voxel_grid(s, w, 3);
    CHECK(v.dims() == std::vector<std::size_t>{3, 1, 8, 8});
    // total signed mass = #ON - #OFF
    CHECK(v.sum() == doctest::Approx(1.0).epsilon(1e-12));
    const FrameTensor ev = event_volume(s, w, 3, PolarityMode::signed_sum);
    CHECK(v == ev);
}
