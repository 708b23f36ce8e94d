// Times the OpenMP kernels against their serial reference implementations
// and checks the two routes agree. Usage: bench_kernels [repeats]

#include "evgaze/common.hpp"
#include "evgaze/nn.hpp"
#include "evgaze/reference.hpp"
#include "evgaze/simulator.hpp"
#include "evgaze/sparse.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

using namespace evgaze;
using clock_type = std::chrono::steady_clock;

namespace {

double ms_since(clock_type::time_point t0) {
    return std::chrono::duration<double, std::milli>(clock_type::now() - t0).count();
}

double max_abs_diff(const FrameTensor& a, const FrameTensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

FrameTensor random_tensor(std::vector<std::size_t> dims, std::mt19937_64& rng) {
    FrameTensor t(std::move(dims));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t i = 0; i < t.size(); ++i)
        t[i] = u(rng);
    return t;
}

} // namespace

int main(int argc, char** argv) {
    const int repeats = argc > 1 ? std::atoi(argv[1]) : 5;
    const int threads = configure_threads();
    std::printf("threads=%d repeats=%d\n", threads, repeats);
    std::printf("%-28s %10s %10s %10s %12s\n", "kernel", "omp ms", "serial ms", "speedup",
                "max|diff|");
    std::mt19937_64 rng(11);

    // conv2d 16x96x128, 3x3, 16 -> 16
    {
        const FrameTensor input = random_tensor({16, 96, 128}, rng);
        const FrameTensor kernel = random_tensor({16, 16, 3, 3}, rng);
        std::vector<double> bias(16, 0.1);
        LayerSpec l;
        l.kind = LayerKind::conv2d;
        l.in_channels = 16;
        l.out_channels = 16;
        l.kh = l.kw = 3;
        l.ph = l.pw = 1;
        l.params["weight"] = kernel;
        FrameTensor bias_t({16});
        for (std::size_t i = 0; i < 16; ++i)
            bias_t[i] = bias[i];
        l.params["bias"] = bias_t;

        FrameTensor out_omp, out_ref;
        auto t0 = clock_type::now();
        for (int r = 0; r < repeats; ++r)
            out_omp = apply_layer(l, input);
        const double omp_ms = ms_since(t0) / repeats;
        t0 = clock_type::now();
        for (int r = 0; r < repeats; ++r)
            out_ref = ref::conv2d(input, kernel, bias, 1, 1, 1, 1);
        const double ref_ms = ms_since(t0) / repeats;
        std::printf("%-28s %10.3f %10.3f %9.2fx %12.3e\n", "conv2d 16c 96x128 3x3",
                    omp_ms, ref_ms, ref_ms / omp_ms, max_abs_diff(out_omp, out_ref));
    }

    // submanifold conv on a 97% sparse 128x128 frame
    {
        FrameTensor frame({8, 128, 128});
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::uniform_int_distribution<int> coin(0, 32);
        for (std::size_t y = 0; y < 128; ++y)
            for (std::size_t x = 0; x < 128; ++x)
                if (coin(rng) == 0)
                    for (std::size_t c = 0; c < 8; ++c)
                        frame.at(c, y, x) = u(rng);
        const SparseFrame sf = to_sparse(frame);
        const FrameTensor kernel = random_tensor({8, 8, 3, 3}, rng);
        const std::vector<double> bias(8, 0.05);

        SparseFrame out_sp;
        FrameTensor oracle;
        auto t0 = clock_type::now();
        for (int r = 0; r < repeats; ++r)
            out_sp = submanifold_conv(sf, kernel, bias);
        const double omp_ms = ms_since(t0) / repeats;
        t0 = clock_type::now();
        for (int r = 0; r < repeats; ++r)
            oracle = ref::submanifold_oracle(sf, kernel, bias);
        const double ref_ms = ms_since(t0) / repeats;
        std::printf("%-28s %10.3f %10.3f %9.2fx %12.3e\n",
                    "submanifold 8c 128x128", omp_ms, ref_ms, ref_ms / omp_ms,
                    max_abs_diff(densify(out_sp), oracle));
    }

    // temporal causal conv, K=5, 30 frames of 12x30x40
    {
        std::vector<FrameTensor> seq;
        for (int t = 0; t < 30; ++t)
            seq.push_back(random_tensor({12, 30, 40}, rng));
        const FrameTensor weight = random_tensor({12, 12, 5}, rng);
        const std::vector<double> bias(12, 0.0);
        LayerSpec l;
        l.kind = LayerKind::temporal_causal_conv;
        l.in_channels = 12;
        l.out_channels = 12;
        l.k_t = 5;
        l.params["weight"] = weight;
        FrameTensor bias_t({12});
        l.params["bias"] = bias_t;

        std::vector<FrameTensor> out_omp, out_ref;
        auto t0 = clock_type::now();
        for (int r = 0; r < repeats; ++r)
            out_omp = temporal_causal_conv_offline(l, seq);
        const double omp_ms = ms_since(t0) / repeats;
        t0 = clock_type::now();
        for (int r = 0; r < repeats; ++r)
            out_ref = ref::temporal_conv(seq, weight, bias);
        const double ref_ms = ms_since(t0) / repeats;
        double diff = 0.0;
        for (std::size_t t = 0; t < seq.size(); ++t)
            diff = std::max(diff, max_abs_diff(out_omp[t], out_ref[t]));
        std::printf("%-28s %10.3f %10.3f %9.2fx %12.3e\n",
                    "temporal K=5 12c 30x40x30f", omp_ms, ref_ms, ref_ms / omp_ms, diff);
    }

    // event render, 5 s pursuit on 80x60
    {
        TrajectorySpec traj;
        traj.kind = TrajectoryKind::smooth_pursuit;
        traj.amplitude_px = 12;
        traj.frequency_hz = 1.0;
        traj.duration_s = 5.0;
        SceneSpec scene;
        const LabelSeries labels = gen_trajectory(traj, scene.width, scene.height);
        auto t0 = clock_type::now();
        EventStream ev;
        for (int r = 0; r < repeats; ++r)
            ev = render_events(labels, scene, 3);
        const double omp_ms = ms_since(t0) / repeats;
        std::printf("%-28s %10.3f %10s %10s %9zu ev\n", "render 5s pursuit 80x60",
                    omp_ms, "-", "-", ev.events.size());
    }
    return 0;
}
