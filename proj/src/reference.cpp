#include "evgaze/reference.hpp"

#include "evgaze/common.hpp"

namespace evgaze::ref {

FrameTensor conv2d(const FrameTensor& input, const FrameTensor& kernel,
                   const std::vector<double>& bias, int stride_h, int stride_w,
                   int pad_h, int pad_w) {
    if (input.rank() != 3 || kernel.rank() != 4)
        throw shape_error("ref::conv2d expects [C,H,W] input and [C',C,Kh,Kw] kernel");
    const int ic = static_cast<int>(input.dims()[0]);
    const int ih = static_cast<int>(input.dims()[1]);
    const int iw = static_cast<int>(input.dims()[2]);
    const int oc = static_cast<int>(kernel.dims()[0]);
    const int kh = static_cast<int>(kernel.dims()[2]);
    const int kw = static_cast<int>(kernel.dims()[3]);
    const int oh = (ih + 2 * pad_h - kh) / stride_h + 1;
    const int ow = (iw + 2 * pad_w - kw) / stride_w + 1;
    FrameTensor out({static_cast<std::size_t>(oc), static_cast<std::size_t>(oh),
                     static_cast<std::size_t>(ow)});
    for (int co = 0; co < oc; ++co)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                double acc = bias[static_cast<std::size_t>(co)];
                for (int ci = 0; ci < ic; ++ci)
                    for (int ky = 0; ky < kh; ++ky)
                        for (int kx = 0; kx < kw; ++kx) {
                            const int y = oy * stride_h - pad_h + ky;
                            const int x = ox * stride_w - pad_w + kx;
                            if (y < 0 || y >= ih || x < 0 || x >= iw)
                                continue;
                            acc += kernel.at(static_cast<std::size_t>(co),
                                             static_cast<std::size_t>(ci),
                                             static_cast<std::size_t>(ky),
                                             static_cast<std::size_t>(kx)) *
                                   input.at(static_cast<std::size_t>(ci),
                                            static_cast<std::size_t>(y),
                                            static_cast<std::size_t>(x));
                        }
                out.at(static_cast<std::size_t>(co), static_cast<std::size_t>(oy),
                       static_cast<std::size_t>(ox)) = acc;
            }
    return out;
}

FrameTensor submanifold_oracle(const SparseFrame& sf, const FrameTensor& kernel,
                               const std::vector<double>& bias) {
    const FrameTensor dense = densify(sf);
    const std::vector<double> zero_bias(bias.size(), 0.0);
    const int pad_h = static_cast<int>(kernel.dims()[2]) / 2;
    const int pad_w = static_cast<int>(kernel.dims()[3]) / 2;
    FrameTensor conv = conv2d(dense, kernel, zero_bias, 1, 1, pad_h, pad_w);
    FrameTensor out({kernel.dims()[0], sf.height, sf.width});
    for (const auto& [y, x] : sf.active_sites)
        for (std::size_t co = 0; co < kernel.dims()[0]; ++co)
            out.at(co, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) =
                conv.at(co, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) +
                bias[co];
    return out;
}

std::vector<FrameTensor> temporal_conv(const std::vector<FrameTensor>& seq,
                                       const FrameTensor& weight,
                                       const std::vector<double>& bias) {
    if (weight.rank() != 3)
        throw shape_error("ref::temporal_conv expects a [C',C,K] weight");
    const std::size_t oc = weight.dims()[0];
    const std::size_t ic = weight.dims()[1];
    const std::size_t k = weight.dims()[2];
    std::vector<FrameTensor> out;
    out.reserve(seq.size());
    for (std::size_t t = 0; t < seq.size(); ++t) {
        const std::size_t h = seq[t].dims()[1];
        const std::size_t w = seq[t].dims()[2];
        FrameTensor frame({oc, h, w});
        for (std::size_t co = 0; co < oc; ++co)
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x) {
                    double acc = bias[co];
                    for (std::size_t kk = 0; kk < k; ++kk) {
                        const std::int64_t src = static_cast<std::int64_t>(t) -
                                                 static_cast<std::int64_t>(k) + 1 +
                                                 static_cast<std::int64_t>(kk);
                        if (src < 0)
                            continue;
                        for (std::size_t ci = 0; ci < ic; ++ci)
                            acc += weight.at(co, ci, kk) *
                                   seq[static_cast<std::size_t>(src)].at(ci, y, x);
                    }
                    frame.at(co, y, x) = acc;
                }
        out.push_back(std::move(frame));
    }
    return out;
}

} // namespace evgaze::ref
