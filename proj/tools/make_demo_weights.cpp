// Writes the representative streaming model shipped under configs/:
// five spatiotemporal blocks (temporal conv + spatial conv + BN + ReLU +
// pool) ending in a 3x4 grid head, sized for sub-5ms single-core steps on
// 80x60 two-channel frames. Weights are seeded, not trained; the toolkit
// does no training.

#include "evgaze/nn.hpp"

#include <cstdio>
#include <random>
#include <string>

using namespace evgaze;

namespace {

std::mt19937_64 g_rng(7);

FrameTensor randt(std::vector<std::size_t> dims, double scale) {
    FrameTensor t(std::move(dims));
    std::uniform_real_distribution<double> u(-scale, scale);
    for (std::size_t i = 0; i < t.size(); ++i)
        t[i] = u(g_rng);
    return t;
}

LayerSpec temporal(int in_c, int out_c, int k) {
    LayerSpec l;
    l.kind = LayerKind::temporal_causal_conv;
    l.in_channels = in_c;
    l.out_channels = out_c;
    l.k_t = k;
    const double s = 1.0 / std::sqrt(static_cast<double>(in_c * k));
    l.params["weight"] = randt({static_cast<std::size_t>(out_c),
                                static_cast<std::size_t>(in_c),
                                static_cast<std::size_t>(k)},
                               s);
    l.params["bias"] = randt({static_cast<std::size_t>(out_c)}, 0.1);
    return l;
}

LayerSpec depthwise(int c, int k) {
    LayerSpec l;
    l.kind = LayerKind::depthwise_conv2d;
    l.in_channels = c;
    l.out_channels = c;
    l.kh = l.kw = k;
    l.ph = l.pw = k / 2;
    const double s = 1.0 / static_cast<double>(k);
    l.params["weight"] = randt({static_cast<std::size_t>(c), static_cast<std::size_t>(k),
                                static_cast<std::size_t>(k)},
                               s);
    l.params["bias"] = randt({static_cast<std::size_t>(c)}, 0.1);
    return l;
}

LayerSpec pointwise(int in_c, int out_c) {
    LayerSpec l;
    l.kind = LayerKind::pointwise_conv2d;
    l.in_channels = in_c;
    l.out_channels = out_c;
    const double s = 1.0 / std::sqrt(static_cast<double>(in_c));
    l.params["weight"] =
        randt({static_cast<std::size_t>(out_c), static_cast<std::size_t>(in_c)}, s);
    l.params["bias"] = randt({static_cast<std::size_t>(out_c)}, 0.1);
    return l;
}

LayerSpec conv(int in_c, int out_c, int k) {
    LayerSpec l;
    l.kind = LayerKind::conv2d;
    l.in_channels = in_c;
    l.out_channels = out_c;
    l.kh = l.kw = k;
    l.ph = l.pw = k / 2;
    const double s = 1.0 / std::sqrt(static_cast<double>(in_c * k * k));
    l.params["weight"] = randt({static_cast<std::size_t>(out_c),
                                static_cast<std::size_t>(in_c),
                                static_cast<std::size_t>(k), static_cast<std::size_t>(k)},
                               s);
    l.params["bias"] = randt({static_cast<std::size_t>(out_c)}, 0.1);
    return l;
}

LayerSpec batchnorm(int c) {
    LayerSpec l;
    l.kind = LayerKind::batchnorm;
    l.in_channels = c;
    FrameTensor ones({static_cast<std::size_t>(c)}, 1.0);
    FrameTensor zeros({static_cast<std::size_t>(c)}, 0.0);
    l.params["gamma"] = ones;
    l.params["beta"] = zeros;
    l.params["mean"] = zeros;
    l.params["var"] = ones;
    return l;
}

LayerSpec relu() {
    LayerSpec l;
    l.kind = LayerKind::relu;
    return l;
}

LayerSpec pool(int k) {
    LayerSpec l;
    l.kind = LayerKind::avg_pool2d;
    l.kh = l.kw = k;
    l.sh = l.sw = k;
    return l;
}

} // namespace

int main(int argc, char** argv) {
    const std::string out_dir = argc > 1 ? argv[1] : "configs";

    ModelSpec m;
    m.input = {2, 60, 80};
    m.head.kind = HeadSpec::Kind::grid;
    m.head.rows = 3;
    m.head.cols = 4;

    // stem @60x80: spatial features first, so the sparse backend has a
    // stride-1 conv block to chew on while the input is still sparse
    m.layers.push_back(conv(2, 6, 3));
    m.layers.push_back(batchnorm(6));
    m.layers.push_back(relu());
    m.layers.push_back(pool(2));
    // block 2 @30x40
    m.layers.push_back(temporal(6, 10, 5));
    m.layers.push_back(depthwise(10, 3));
    m.layers.push_back(pointwise(10, 12));
    m.layers.push_back(batchnorm(12));
    m.layers.push_back(relu());
    m.layers.push_back(pool(2));
    // block 3 @15x20
    m.layers.push_back(temporal(12, 12, 5));
    m.layers.push_back(relu());
    m.layers.push_back(pool(5));
    // head @3x4
    m.layers.push_back(conv(12, 12, 3));
    m.layers.push_back(relu());
    m.layers.push_back(pointwise(12, 3));

    chain_check(m);
    save_model(m, out_dir + "/weights.json", "weights.bin");
    std::printf("wrote %s/weights.json (total MACs/frame: %llu)\n", out_dir.c_str(),
                static_cast<unsigned long long>(total_macs(m)));
    return 0;
}
