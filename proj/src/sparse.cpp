#include "evgaze/sparse.hpp"

#include "evgaze/common.hpp"

#include <atomic>
#include <unordered_map>

namespace evgaze {

namespace {

std::uint64_t site_key(int y, int x) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(y)) << 32) |
           static_cast<std::uint32_t>(x);
}

} // namespace

SparseFrame to_sparse(const FrameTensor& frame) {
    if (frame.rank() != 3)
        throw shape_error("to_sparse expects a [C,H,W] tensor");
    SparseFrame sf;
    sf.channels = frame.dims()[0];
    sf.height = frame.dims()[1];
    sf.width = frame.dims()[2];
    for (std::size_t y = 0; y < sf.height; ++y) {
        for (std::size_t x = 0; x < sf.width; ++x) {
            bool any = false;
            for (std::size_t c = 0; c < sf.channels && !any; ++c)
                any = frame.at(c, y, x) != 0.0;
            if (!any)
                continue;
            sf.active_sites.emplace_back(static_cast<int>(y), static_cast<int>(x));
            std::vector<double> feat(sf.channels);
            for (std::size_t c = 0; c < sf.channels; ++c)
                feat[c] = frame.at(c, y, x);
            sf.features.push_back(std::move(feat));
        }
    }
    return sf;
}

FrameTensor densify(const SparseFrame& sf) {
    FrameTensor out({sf.channels, sf.height, sf.width});
    for (std::size_t i = 0; i < sf.active_sites.size(); ++i) {
        const auto [y, x] = sf.active_sites[i];
        for (std::size_t c = 0; c < sf.channels; ++c)
            out.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) =
                sf.features[i][c];
    }
    return out;
}

SparseFrame submanifold_conv(const SparseFrame& sf, const FrameTensor& kernel,
                             const std::vector<double>& bias, std::uint64_t* tap_count) {
    if (kernel.rank() != 4)
        throw shape_error("kernel must be [C',C,Kh,Kw]");
    const std::size_t out_c = kernel.dims()[0];
    const std::size_t in_c = kernel.dims()[1];
    const std::size_t kh = kernel.dims()[2];
    const std::size_t kw = kernel.dims()[3];
    if (kh % 2 == 0 || kw % 2 == 0)
        throw shape_error("submanifold convolution needs odd kernel dims");
    if (in_c != sf.channels)
        throw shape_error("kernel input channels do not match frame channels");
    if (bias.size() != out_c)
        throw shape_error("bias length must equal output channels");

    std::unordered_map<std::uint64_t, std::size_t> index;
    index.reserve(sf.active_sites.size() * 2);
    for (std::size_t i = 0; i < sf.active_sites.size(); ++i)
        index.emplace(site_key(sf.active_sites[i].first, sf.active_sites[i].second), i);

    SparseFrame out;
    out.channels = out_c;
    out.height = sf.height;
    out.width = sf.width;
    out.active_sites = sf.active_sites; // submanifold rule: active set preserved
    out.features.assign(sf.active_sites.size(), {});

    const int rh = static_cast<int>(kh) / 2;
    const int rw = static_cast<int>(kw) / 2;
    const std::int64_t n_sites = static_cast<std::int64_t>(sf.active_sites.size());
    std::atomic<std::uint64_t> taps{0};

#pragma omp parallel for schedule(static)
    for (std::int64_t si = 0; si < n_sites; ++si) {
        const auto [y, x] = sf.active_sites[static_cast<std::size_t>(si)];
        std::vector<double> acc(bias);
        std::uint64_t local_taps = 0;
        // fixed offset order keeps the per-site summation deterministic
        for (std::size_t ky = 0; ky < kh; ++ky) {
            const int ny = y + static_cast<int>(ky) - rh;
            if (ny < 0 || ny >= static_cast<int>(sf.height))
                continue;
            for (std::size_t kx = 0; kx < kw; ++kx) {
                const int nx = x + static_cast<int>(kx) - rw;
                if (nx < 0 || nx >= static_cast<int>(sf.width))
                    continue;
                auto it = index.find(site_key(ny, nx));
                if (it == index.end())
                    continue;
                const std::vector<double>& feat = sf.features[it->second];
                for (std::size_t co = 0; co < out_c; ++co) {
                    double s = 0.0;
                    for (std::size_t ci = 0; ci < in_c; ++ci)
                        s += kernel.at(co, ci, ky, kx) * feat[ci];
                    acc[co] += s;
                }
                local_taps += out_c * in_c;
            }
        }
        out.features[static_cast<std::size_t>(si)] = std::move(acc);
        taps.fetch_add(local_taps, std::memory_order_relaxed);
    }
    if (tap_count != nullptr)
        *tap_count = taps.load();
    return out;
}

SparseFrame sparse_affine(const SparseFrame& sf, const std::vector<double>& scale,
                          const std::vector<double>& shift) {
    if (scale.size() != sf.channels || shift.size() != sf.channels)
        throw shape_error("affine parameter length must equal channels");
    SparseFrame out = sf;
    for (auto& feat : out.features)
        for (std::size_t c = 0; c < sf.channels; ++c)
            feat[c] = feat[c] * scale[c] + shift[c];
    return out;
}

SparseFrame sparse_relu(const SparseFrame& sf) {
    SparseFrame out = sf;
    for (auto& feat : out.features)
        for (double& v : feat)
            v = v > 0.0 ? v : 0.0;
    return out;
}

SparseFrame sparse_pointwise(const SparseFrame& sf,
                             const std::function<double(std::size_t, double)>& f) {
    SparseFrame out = sf;
    for (auto& feat : out.features)
        for (std::size_t c = 0; c < sf.channels; ++c)
            feat[c] = f(c, feat[c]);
    return out;
}

} // namespace evgaze
