#include "evgaze/nn.hpp"

#include "evgaze/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace evgaze {

namespace {

constexpr double kBatchNormEps = 1e-5;

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

double softplus(double v) {
    if (v > 30.0)
        return v; // log1p(exp(v)) == v to double precision
    return std::log1p(std::exp(v));
}

std::vector<double> flatten(const FrameTensor& frame) {
    return std::vector<double>(frame.data(), frame.data() + frame.size());
}

FrameTensor vector_frame(const std::vector<double>& v) {
    FrameTensor out({v.size(), 1, 1});
    std::copy(v.begin(), v.end(), out.data());
    return out;
}

// W x + b with W as a [rows, cols] tensor.
std::vector<double> matvec(const FrameTensor& w, const std::vector<double>& x,
                           const FrameTensor* b) {
    const std::size_t rows = w.dims()[0];
    const std::size_t cols = w.dims()[1];
    std::vector<double> out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = b != nullptr ? (*b)[r] : 0.0;
        const double* wr = w.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c)
            acc += wr[c] * x[c];
        out[r] = acc;
    }
    return out;
}

void require(bool cond, const std::string& msg) {
    if (!cond)
        throw shape_error(msg);
}

void check_param(const LayerSpec& layer, const std::string& name,
                 const std::vector<std::size_t>& dims) {
    auto it = layer.params.find(name);
    require(it != layer.params.end(), std::string(layer_kind_name(layer.kind)) +
                                          ": missing parameter tensor '" + name + "'");
    require(it->second.dims() == dims, std::string(layer_kind_name(layer.kind)) +
                                           ": parameter '" + name + "' has wrong dims");
}

} // namespace

const char* layer_kind_name(LayerKind k) {
    switch (k) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::depthwise_conv2d: return "depthwise_conv2d";
    case LayerKind::pointwise_conv2d: return "pointwise_conv2d";
    case LayerKind::batchnorm: return "batchnorm";
    case LayerKind::relu: return "relu";
    case LayerKind::avg_pool2d: return "avg_pool2d";
    case LayerKind::global_avg_pool: return "global_avg_pool";
    case LayerKind::fully_connected: return "fully_connected";
    case LayerKind::temporal_causal_conv: return "temporal_causal_conv";
    case LayerKind::gru: return "gru";
    case LayerKind::ltv_ssm: return "ltv_ssm";
    }
    return "?";
}

LayerKind layer_kind_from_name(const std::string& name) {
    static const std::map<std::string, LayerKind> table = {
        {"conv2d", LayerKind::conv2d},
        {"depthwise_conv2d", LayerKind::depthwise_conv2d},
        {"pointwise_conv2d", LayerKind::pointwise_conv2d},
        {"batchnorm", LayerKind::batchnorm},
        {"relu", LayerKind::relu},
        {"avg_pool2d", LayerKind::avg_pool2d},
        {"global_avg_pool", LayerKind::global_avg_pool},
        {"fully_connected", LayerKind::fully_connected},
        {"temporal_causal_conv", LayerKind::temporal_causal_conv},
        {"gru", LayerKind::gru},
        {"ltv_ssm", LayerKind::ltv_ssm},
    };
    auto it = table.find(name);
    if (it == table.end())
        throw config_error("unknown layer kind '" + name + "'");
    return it->second;
}

std::vector<std::string> layer_param_names(LayerKind kind) {
    switch (kind) {
    case LayerKind::conv2d:
    case LayerKind::depthwise_conv2d:
    case LayerKind::pointwise_conv2d:
    case LayerKind::fully_connected:
    case LayerKind::temporal_causal_conv:
        return {"weight", "bias"};
    case LayerKind::batchnorm:
        return {"gamma", "beta", "mean", "var"};
    case LayerKind::relu:
    case LayerKind::avg_pool2d:
    case LayerKind::global_avg_pool:
        return {};
    case LayerKind::gru:
        return {"w_z", "w_r", "w_n", "u_z", "u_r", "u_n", "b_z", "b_r", "b_n"};
    case LayerKind::ltv_ssm:
        return {"a", "w_delta", "b_delta", "w_b", "b_b", "w_c", "b_c", "d_skip"};
    }
    return {};
}

const FrameTensor& LayerSpec::param(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end())
        throw shape_error(std::string(layer_kind_name(kind)) + ": missing parameter '" +
                          name + "'");
    return it->second;
}

Shape3 layer_output_shape(const LayerSpec& layer, Shape3 in) {
    const std::size_t c = in[0], h = in[1], w = in[2];
    const std::size_t flat = c * h * w;
    const auto uc = [](int v) { return static_cast<std::size_t>(v); };
    switch (layer.kind) {
    case LayerKind::conv2d:
    case LayerKind::depthwise_conv2d:
    case LayerKind::avg_pool2d:
        require(layer.kh >= 1 && layer.kw >= 1 && layer.sh >= 1 && layer.sw >= 1 &&
                    layer.ph >= 0 && layer.pw >= 0,
                std::string(layer_kind_name(layer.kind)) +
                    ": kernel/stride must be >= 1, padding >= 0");
        break;
    default:
        break;
    }
    switch (layer.kind) {
    case LayerKind::conv2d: {
        require(uc(layer.in_channels) == c, "conv2d input channel mismatch");
        check_param(layer, "weight",
                    {uc(layer.out_channels), c, uc(layer.kh), uc(layer.kw)});
        check_param(layer, "bias", {uc(layer.out_channels)});
        require(h + 2 * uc(layer.ph) >= uc(layer.kh) &&
                    w + 2 * uc(layer.pw) >= uc(layer.kw),
                "conv2d kernel larger than padded input");
        const std::size_t oh = (h + 2 * uc(layer.ph) - uc(layer.kh)) / uc(layer.sh) + 1;
        const std::size_t ow = (w + 2 * uc(layer.pw) - uc(layer.kw)) / uc(layer.sw) + 1;
        return {uc(layer.out_channels), oh, ow};
    }
    case LayerKind::depthwise_conv2d: {
        require(uc(layer.in_channels) == c, "depthwise input channel mismatch");
        check_param(layer, "weight", {c, uc(layer.kh), uc(layer.kw)});
        check_param(layer, "bias", {c});
        require(h + 2 * uc(layer.ph) >= uc(layer.kh) &&
                    w + 2 * uc(layer.pw) >= uc(layer.kw),
                "depthwise kernel larger than padded input");
        const std::size_t oh = (h + 2 * uc(layer.ph) - uc(layer.kh)) / uc(layer.sh) + 1;
        const std::size_t ow = (w + 2 * uc(layer.pw) - uc(layer.kw)) / uc(layer.sw) + 1;
        return {c, oh, ow};
    }
    case LayerKind::pointwise_conv2d:
        require(uc(layer.in_channels) == c, "pointwise input channel mismatch");
        check_param(layer, "weight", {uc(layer.out_channels), c});
        check_param(layer, "bias", {uc(layer.out_channels)});
        return {uc(layer.out_channels), h, w};
    case LayerKind::batchnorm:
        require(uc(layer.in_channels) == c, "batchnorm channel mismatch");
        for (const char* n : {"gamma", "beta", "mean", "var"})
            check_param(layer, n, {c});
        return in;
    case LayerKind::relu:
        return in;
    case LayerKind::avg_pool2d:
        require(h >= uc(layer.kh) && w >= uc(layer.kw), "pool window larger than input");
        return {c, (h - uc(layer.kh)) / uc(layer.sh) + 1,
                (w - uc(layer.kw)) / uc(layer.sw) + 1};
    case LayerKind::global_avg_pool:
        return {c, 1, 1};
    case LayerKind::fully_connected:
        require(uc(layer.in_channels) == flat, "fully_connected input size mismatch");
        check_param(layer, "weight", {uc(layer.out_channels), flat});
        check_param(layer, "bias", {uc(layer.out_channels)});
        return {uc(layer.out_channels), 1, 1};
    case LayerKind::temporal_causal_conv: {
        require(uc(layer.in_channels) == c, "temporal conv channel mismatch");
        require(layer.k_t >= 1, "temporal kernel must be >= 1");
        check_param(layer, "weight", {uc(layer.out_channels), c, uc(layer.k_t)});
        check_param(layer, "bias", {uc(layer.out_channels)});
        return {uc(layer.out_channels), h, w};
    }
    case LayerKind::gru: {
        require(uc(layer.in_channels) == flat, "gru input size mismatch");
        const std::size_t hid = uc(layer.out_channels);
        for (const char* n : {"w_z", "w_r", "w_n"})
            check_param(layer, n, {hid, flat});
        for (const char* n : {"u_z", "u_r", "u_n"})
            check_param(layer, n, {hid, hid});
        for (const char* n : {"b_z", "b_r", "b_n"})
            check_param(layer, n, {hid});
        return {hid, 1, 1};
    }
    case LayerKind::ltv_ssm: {
        require(uc(layer.in_channels) == flat, "ltv_ssm input size mismatch");
        const std::size_t d = flat;
        const std::size_t n = uc(layer.state_size);
        require(n >= 1, "ltv_ssm state size must be >= 1");
        check_param(layer, "a", {d, n});
        check_param(layer, "w_delta", {d, d});
        check_param(layer, "b_delta", {d});
        check_param(layer, "w_b", {n, d});
        check_param(layer, "b_b", {n});
        check_param(layer, "w_c", {n, d});
        check_param(layer, "b_c", {n});
        check_param(layer, "d_skip", {d});
        return {d, 1, 1};
    }
    }
    throw shape_error("unhandled layer kind");
}

std::vector<Shape3> chain_check(const ModelSpec& model) {
    std::vector<Shape3> out;
    out.reserve(model.layers.size());
    Shape3 cur = model.input;
    require(cur[0] >= 1 && cur[1] >= 1 && cur[2] >= 1, "model input dims must be positive");
    for (const LayerSpec& layer : model.layers) {
        cur = layer_output_shape(layer, cur);
        out.push_back(cur);
    }
    if (model.head.kind == HeadSpec::Kind::grid) {
        require(cur == Shape3{3, static_cast<std::size_t>(model.head.rows),
                              static_cast<std::size_t>(model.head.cols)},
                "grid head expects a [3,rows,cols] final output");
    }
    return out;
}

// ---- stateless layers ------------------------------------------------

namespace {

FrameTensor conv2d_apply(const LayerSpec& layer, const FrameTensor& in) {
    const std::size_t ic = in.dims()[0], ih = in.dims()[1], iw = in.dims()[2];
    const Shape3 os = layer_output_shape(layer, {ic, ih, iw});
    const FrameTensor& w = layer.param("weight");
    const FrameTensor& b = layer.param("bias");
    FrameTensor out({os[0], os[1], os[2]});
    const std::int64_t oc = static_cast<std::int64_t>(os[0]);
    const std::int64_t oh = static_cast<std::int64_t>(os[1]);
    const std::int64_t ow = static_cast<std::int64_t>(os[2]);
#pragma omp parallel for collapse(2) schedule(static) if (oc * oh * ow > 4096)
    for (std::int64_t co = 0; co < oc; ++co) {
        for (std::int64_t oy = 0; oy < oh; ++oy) {
            for (std::int64_t ox = 0; ox < ow; ++ox) {
                double acc = b[static_cast<std::size_t>(co)];
                for (std::size_t ci = 0; ci < ic; ++ci) {
                    for (int ky = 0; ky < layer.kh; ++ky) {
                        const std::int64_t y = oy * layer.sh - layer.ph + ky;
                        if (y < 0 || y >= static_cast<std::int64_t>(ih))
                            continue;
                        for (int kx = 0; kx < layer.kw; ++kx) {
                            const std::int64_t x = ox * layer.sw - layer.pw + kx;
                            if (x < 0 || x >= static_cast<std::int64_t>(iw))
                                continue;
                            acc += w.at(static_cast<std::size_t>(co), ci,
                                        static_cast<std::size_t>(ky),
                                        static_cast<std::size_t>(kx)) *
                                   in.at(ci, static_cast<std::size_t>(y),
                                         static_cast<std::size_t>(x));
                        }
                    }
                }
                out.at(static_cast<std::size_t>(co), static_cast<std::size_t>(oy),
                       static_cast<std::size_t>(ox)) = acc;
            }
        }
    }
    return out;
}

FrameTensor depthwise_apply(const LayerSpec& layer, const FrameTensor& in) {
    const std::size_t ic = in.dims()[0], ih = in.dims()[1], iw = in.dims()[2];
    const Shape3 os = layer_output_shape(layer, {ic, ih, iw});
    const FrameTensor& w = layer.param("weight");
    const FrameTensor& b = layer.param("bias");
    FrameTensor out({os[0], os[1], os[2]});
    const std::int64_t oc = static_cast<std::int64_t>(os[0]);
    const std::int64_t oh = static_cast<std::int64_t>(os[1]);
#pragma omp parallel for collapse(2) schedule(static) if (oc * oh > 2048)
    for (std::int64_t c = 0; c < oc; ++c) {
        for (std::int64_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < os[2]; ++ox) {
                double acc = b[static_cast<std::size_t>(c)];
                for (int ky = 0; ky < layer.kh; ++ky) {
                    const std::int64_t y = oy * layer.sh - layer.ph + ky;
                    if (y < 0 || y >= static_cast<std::int64_t>(ih))
                        continue;
                    for (int kx = 0; kx < layer.kw; ++kx) {
                        const std::int64_t x =
                            static_cast<std::int64_t>(ox) * layer.sw - layer.pw + kx;
                        if (x < 0 || x >= static_cast<std::int64_t>(iw))
                            continue;
                        acc += w.at(static_cast<std::size_t>(c),
                                    static_cast<std::size_t>(ky),
                                    static_cast<std::size_t>(kx)) *
                               in.at(static_cast<std::size_t>(c),
                                     static_cast<std::size_t>(y),
                                     static_cast<std::size_t>(x));
                    }
                }
                out.at(static_cast<std::size_t>(c), static_cast<std::size_t>(oy), ox) = acc;
            }
        }
    }
    return out;
}

FrameTensor pointwise_apply(const LayerSpec& layer, const FrameTensor& in) {
    const std::size_t ic = in.dims()[0], ih = in.dims()[1], iw = in.dims()[2];
    const FrameTensor& w = layer.param("weight");
    const FrameTensor& b = layer.param("bias");
    const std::size_t oc = w.dims()[0];
    FrameTensor out({oc, ih, iw});
    const std::size_t hw = ih * iw;
#pragma omp parallel for schedule(static) if (oc * hw > 8192)
    for (std::int64_t co = 0; co < static_cast<std::int64_t>(oc); ++co) {
        for (std::size_t i = 0; i < hw; ++i) {
            double acc = b[static_cast<std::size_t>(co)];
            for (std::size_t ci = 0; ci < ic; ++ci)
                acc += w.at(static_cast<std::size_t>(co), ci) * in[ci * hw + i];
            out[static_cast<std::size_t>(co) * hw + i] = acc;
        }
    }
    return out;
}

FrameTensor batchnorm_apply(const LayerSpec& layer, const FrameTensor& in) {
    const std::size_t c = in.dims()[0];
    const std::size_t hw = in.dims()[1] * in.dims()[2];
    const FrameTensor& gamma = layer.param("gamma");
    const FrameTensor& beta = layer.param("beta");
    const FrameTensor& mean = layer.param("mean");
    const FrameTensor& var = layer.param("var");
    FrameTensor out(in.dims());
    for (std::size_t ci = 0; ci < c; ++ci) {
        const double inv = 1.0 / std::sqrt(var[ci] + kBatchNormEps);
        for (std::size_t i = 0; i < hw; ++i)
            out[ci * hw + i] = (in[ci * hw + i] - mean[ci]) * inv * gamma[ci] + beta[ci];
    }
    return out;
}

FrameTensor relu_apply(const FrameTensor& in) {
    FrameTensor out(in.dims());
    for (std::size_t i = 0; i < in.size(); ++i)
        out[i] = in[i] > 0.0 ? in[i] : 0.0;
    return out;
}

FrameTensor avg_pool_apply(const LayerSpec& layer, const FrameTensor& in) {
    const std::size_t c = in.dims()[0], ih = in.dims()[1], iw = in.dims()[2];
    const Shape3 os = layer_output_shape(layer, {c, ih, iw});
    FrameTensor out({os[0], os[1], os[2]});
    const double norm = 1.0 / (layer.kh * layer.kw);
    for (std::size_t ci = 0; ci < c; ++ci) {
        for (std::size_t oy = 0; oy < os[1]; ++oy) {
            for (std::size_t ox = 0; ox < os[2]; ++ox) {
                double acc = 0.0;
                for (int ky = 0; ky < layer.kh; ++ky)
                    for (int kx = 0; kx < layer.kw; ++kx)
                        acc += in.at(ci,
                                     oy * static_cast<std::size_t>(layer.sh) +
                                         static_cast<std::size_t>(ky),
                                     ox * static_cast<std::size_t>(layer.sw) +
                                         static_cast<std::size_t>(kx));
                out.at(ci, oy, ox) = acc * norm;
            }
        }
    }
    return out;
}

FrameTensor global_avg_pool_apply(const FrameTensor& in) {
    const std::size_t c = in.dims()[0];
    const std::size_t hw = in.dims()[1] * in.dims()[2];
    FrameTensor out({c, 1, 1});
    for (std::size_t ci = 0; ci < c; ++ci) {
        double acc = 0.0;
        for (std::size_t i = 0; i < hw; ++i)
            acc += in[ci * hw + i];
        out[ci] = acc / static_cast<double>(hw);
    }
    return out;
}

FrameTensor fully_connected_apply(const LayerSpec& layer, const FrameTensor& in) {
    const std::vector<double> x = flatten(in);
    const FrameTensor& w = layer.param("weight");
    const FrameTensor& b = layer.param("bias");
    if (w.dims()[1] != x.size())
        throw shape_error("fully_connected input size mismatch");
    return vector_frame(matvec(w, x, &b));
}

// Dot product of the temporal kernel against a window of K frames (oldest
// first, nullptr = zero frame). Shared by the offline and streaming paths
// so both accumulate in the same order.
FrameTensor temporal_window_step(const LayerSpec& layer,
                                 const std::vector<const FrameTensor*>& window) {
    const FrameTensor& w = layer.param("weight");
    const FrameTensor& b = layer.param("bias");
    const std::size_t oc = w.dims()[0];
    const std::size_t ic = w.dims()[1];
    const std::size_t k = w.dims()[2];
    const FrameTensor* ref = nullptr;
    for (const FrameTensor* f : window)
        if (f != nullptr)
            ref = f;
    if (ref == nullptr)
        throw shape_error("temporal step needs at least the current frame");
    const std::size_t hw = ref->dims()[1] * ref->dims()[2];
    FrameTensor out({oc, ref->dims()[1], ref->dims()[2]});
#pragma omp parallel for schedule(static) if (oc * hw > 8192)
    for (std::int64_t co = 0; co < static_cast<std::int64_t>(oc); ++co) {
        for (std::size_t i = 0; i < hw; ++i) {
            double acc = b[static_cast<std::size_t>(co)];
            for (std::size_t kk = 0; kk < k; ++kk) {
                const FrameTensor* f = window[kk];
                if (f == nullptr)
                    continue;
                for (std::size_t ci = 0; ci < ic; ++ci)
                    acc += w.at(static_cast<std::size_t>(co), ci, kk) *
                           (*f)[ci * hw + i];
            }
            out[static_cast<std::size_t>(co) * hw + i] = acc;
        }
    }
    return out;
}

} // namespace

FrameTensor apply_layer(const LayerSpec& layer, const FrameTensor& input) {
    if (input.rank() != 3)
        throw shape_error("apply_layer expects a [C,H,W] frame");
    switch (layer.kind) {
    case LayerKind::conv2d: return conv2d_apply(layer, input);
    case LayerKind::depthwise_conv2d: return depthwise_apply(layer, input);
    case LayerKind::pointwise_conv2d: return pointwise_apply(layer, input);
    case LayerKind::batchnorm: return batchnorm_apply(layer, input);
    case LayerKind::relu: return relu_apply(input);
    case LayerKind::avg_pool2d: return avg_pool_apply(layer, input);
    case LayerKind::global_avg_pool: return global_avg_pool_apply(input);
    case LayerKind::fully_connected: return fully_connected_apply(layer, input);
    case LayerKind::temporal_causal_conv:
    case LayerKind::gru:
    case LayerKind::ltv_ssm:
        throw shape_error("apply_layer cannot run stateful layers; use the "
                          "offline or streaming path");
    }
    throw shape_error("unhandled layer kind");
}

std::vector<FrameTensor> temporal_causal_conv_offline(const LayerSpec& layer,
                                                      const std::vector<FrameTensor>& seq) {
    const std::size_t k = static_cast<std::size_t>(layer.k_t);
    std::vector<FrameTensor> out;
    out.reserve(seq.size());
    std::vector<const FrameTensor*> window(k, nullptr);
    for (std::size_t t = 0; t < seq.size(); ++t) {
        for (std::size_t kk = 0; kk < k; ++kk) {
            const std::int64_t src =
                static_cast<std::int64_t>(t) - static_cast<std::int64_t>(k) + 1 +
                static_cast<std::int64_t>(kk);
            window[kk] = src >= 0 ? &seq[static_cast<std::size_t>(src)] : nullptr;
        }
        out.push_back(temporal_window_step(layer, window));
    }
    return out;
}

std::vector<double> gru_cell(const std::vector<double>& x, const std::vector<double>& h,
                             const LayerSpec& layer) {
    const FrameTensor& bz = layer.param("b_z");
    const FrameTensor& br = layer.param("b_r");
    const FrameTensor& bn = layer.param("b_n");
    std::vector<double> z = matvec(layer.param("w_z"), x, nullptr);
    std::vector<double> zr = matvec(layer.param("u_z"), h, nullptr);
    std::vector<double> r = matvec(layer.param("w_r"), x, nullptr);
    std::vector<double> rr = matvec(layer.param("u_r"), h, nullptr);
    std::vector<double> n = matvec(layer.param("w_n"), x, nullptr);
    std::vector<double> nh = matvec(layer.param("u_n"), h, nullptr);
    std::vector<double> out(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double zi = sigmoid(z[i] + zr[i] + bz[i]);
        const double ri = sigmoid(r[i] + rr[i] + br[i]);
        const double ni = std::tanh(n[i] + ri * nh[i] + bn[i]);
        out[i] = (1.0 - zi) * ni + zi * h[i];
    }
    return out;
}

SsmStep ltv_ssm_cell(const std::vector<double>& u, const std::vector<double>& x,
                     const LayerSpec& layer) {
    const FrameTensor& a = layer.param("a");
    const std::size_t d = a.dims()[0];
    const std::size_t n = a.dims()[1];
    if (u.size() != d || x.size() != d * n)
        throw shape_error("ltv_ssm state or input size mismatch");
    const FrameTensor& b_delta = layer.param("b_delta");
    const FrameTensor& b_b = layer.param("b_b");
    const FrameTensor& b_c = layer.param("b_c");
    std::vector<double> delta = matvec(layer.param("w_delta"), u, &b_delta);
    for (double& v : delta)
        v = softplus(v);
    const std::vector<double> bvec = matvec(layer.param("w_b"), u, &b_b);
    const std::vector<double> cvec = matvec(layer.param("w_c"), u, &b_c);
    const FrameTensor& d_skip = layer.param("d_skip");

    SsmStep step;
    step.x_next.resize(d * n);
    step.y.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        double y = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double da = std::exp(delta[i] * a.at(i, j));
            const double xn = da * x[i * n + j] + delta[i] * bvec[j] * u[i];
            step.x_next[i * n + j] = xn;
            y += cvec[j] * xn;
        }
        step.y[i] = y + d_skip[i] * u[i];
    }
    return step;
}

// ---- offline / streaming --------------------------------------------

StreamState stream_init(const ModelSpec& model) {
    chain_check(model);
    StreamState st;
    st.fifos.resize(model.layers.size());
    st.hidden.resize(model.layers.size());
    Shape3 cur = model.input;
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        const LayerSpec& layer = model.layers[li];
        if (layer.kind == LayerKind::gru) {
            st.hidden[li].assign(static_cast<std::size_t>(layer.out_channels), 0.0);
        } else if (layer.kind == LayerKind::ltv_ssm) {
            st.hidden[li].assign(static_cast<std::size_t>(layer.in_channels) *
                                     static_cast<std::size_t>(layer.state_size),
                                 0.0);
        }
        cur = layer_output_shape(layer, cur);
    }
    return st;
}

FrameTensor stream_step(const ModelSpec& model, StreamState& state,
                        const FrameTensor& frame) {
    if (frame.rank() != 3 ||
        Shape3{frame.dims()[0], frame.dims()[1], frame.dims()[2]} != model.input)
        throw shape_error("stream frame dims do not match model input");
    FrameTensor cur = frame;
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        const LayerSpec& layer = model.layers[li];
        switch (layer.kind) {
        case LayerKind::temporal_causal_conv: {
            const std::size_t k = static_cast<std::size_t>(layer.k_t);
            auto& fifo = state.fifos[li];
            // missing history reads as zeros, matching offline left padding
            std::vector<const FrameTensor*> window(k, nullptr);
            const std::size_t have = fifo.size();
            for (std::size_t i = 0; i < have; ++i)
                window[k - 1 - have + i] = &fifo[i];
            window[k - 1] = &cur;
            FrameTensor next = temporal_window_step(layer, window);
            if (k > 1) {
                fifo.push_back(cur);
                while (fifo.size() > k - 1)
                    fifo.pop_front();
            }
            cur = std::move(next);
            break;
        }
        case LayerKind::gru: {
            state.hidden[li] = gru_cell(flatten(cur), state.hidden[li], layer);
            cur = vector_frame(state.hidden[li]);
            break;
        }
        case LayerKind::ltv_ssm: {
            SsmStep step = ltv_ssm_cell(flatten(cur), state.hidden[li], layer);
            state.hidden[li] = std::move(step.x_next);
            cur = vector_frame(step.y);
            break;
        }
        default:
            cur = apply_layer(layer, cur);
        }
    }
    return cur;
}

std::vector<FrameTensor> forward_offline(const ModelSpec& model,
                                         const std::vector<FrameTensor>& seq) {
    chain_check(model);
    std::vector<FrameTensor> frames = seq;
    for (const LayerSpec& layer : model.layers) {
        switch (layer.kind) {
        case LayerKind::temporal_causal_conv:
            frames = temporal_causal_conv_offline(layer, frames);
            break;
        case LayerKind::gru: {
            std::vector<double> h(static_cast<std::size_t>(layer.out_channels), 0.0);
            for (FrameTensor& f : frames) {
                h = gru_cell(flatten(f), h, layer);
                f = vector_frame(h);
            }
            break;
        }
        case LayerKind::ltv_ssm: {
            std::vector<double> x(static_cast<std::size_t>(layer.in_channels) *
                                      static_cast<std::size_t>(layer.state_size),
                                  0.0);
            for (FrameTensor& f : frames) {
                SsmStep step = ltv_ssm_cell(flatten(f), x, layer);
                x = std::move(step.x_next);
                f = vector_frame(step.y);
            }
            break;
        }
        default:
            for (FrameTensor& f : frames)
                f = apply_layer(layer, f);
        }
    }
    return frames;
}

SparsityReport activation_sparsity(const ModelSpec& model,
                                   const std::vector<FrameTensor>& seq) {
    chain_check(model);
    SparsityReport report;
    std::vector<FrameTensor> frames = seq;
    std::size_t total_count = 0;
    std::size_t total_zero = 0;
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        const LayerSpec& layer = model.layers[li];
        switch (layer.kind) {
        case LayerKind::temporal_causal_conv:
            frames = temporal_causal_conv_offline(layer, frames);
            break;
        case LayerKind::gru: {
            std::vector<double> h(static_cast<std::size_t>(layer.out_channels), 0.0);
            for (FrameTensor& f : frames) {
                h = gru_cell(flatten(f), h, layer);
                f = vector_frame(h);
            }
            break;
        }
        case LayerKind::ltv_ssm: {
            std::vector<double> x(static_cast<std::size_t>(layer.in_channels) *
                                      static_cast<std::size_t>(layer.state_size),
                                  0.0);
            for (FrameTensor& f : frames) {
                SsmStep step = ltv_ssm_cell(flatten(f), x, layer);
                x = std::move(step.x_next);
                f = vector_frame(step.y);
            }
            break;
        }
        default:
            for (FrameTensor& f : frames)
                f = apply_layer(layer, f);
        }
        if (layer.kind == LayerKind::relu) {
            SparsityReport::LayerStat stat{li, 0.0, 0.0, 0};
            std::size_t zeros = 0;
            for (const FrameTensor& f : frames) {
                stat.count += f.size();
                for (std::size_t i = 0; i < f.size(); ++i) {
                    if (f[i] == 0.0)
                        ++zeros;
                    stat.l1 += std::abs(f[i]);
                }
            }
            stat.zero_fraction =
                stat.count > 0 ? static_cast<double>(zeros) / stat.count : 0.0;
            report.total_l1 += stat.l1;
            total_count += stat.count;
            total_zero += zeros;
            report.relu_layers.push_back(stat);
        }
    }
    report.overall_zero_fraction =
        total_count > 0 ? static_cast<double>(total_zero) / total_count : 0.0;
    return report;
}

std::vector<std::uint64_t> mac_counts(const ModelSpec& model) {
    const std::vector<Shape3> shapes = chain_check(model);
    std::vector<std::uint64_t> out(model.layers.size(), 0);
    Shape3 in = model.input;
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        const LayerSpec& l = model.layers[li];
        const Shape3 os = shapes[li];
        const std::uint64_t out_hw = static_cast<std::uint64_t>(os[1]) * os[2];
        switch (l.kind) {
        case LayerKind::conv2d:
            out[li] = static_cast<std::uint64_t>(os[0]) * out_hw * in[0] *
                      static_cast<std::uint64_t>(l.kh) * static_cast<std::uint64_t>(l.kw);
            break;
        case LayerKind::depthwise_conv2d:
            out[li] = static_cast<std::uint64_t>(os[0]) * out_hw *
                      static_cast<std::uint64_t>(l.kh) * static_cast<std::uint64_t>(l.kw);
            break;
        case LayerKind::pointwise_conv2d:
            out[li] = static_cast<std::uint64_t>(os[0]) * out_hw * in[0];
            break;
        case LayerKind::batchnorm:
            out[li] = static_cast<std::uint64_t>(in[0]) * in[1] * in[2];
            break;
        case LayerKind::fully_connected:
            out[li] = static_cast<std::uint64_t>(l.out_channels) *
                      static_cast<std::uint64_t>(l.in_channels);
            break;
        case LayerKind::temporal_causal_conv:
            out[li] = static_cast<std::uint64_t>(os[0]) * out_hw * in[0] *
                      static_cast<std::uint64_t>(l.k_t);
            break;
        case LayerKind::gru: {
            const std::uint64_t x = static_cast<std::uint64_t>(l.in_channels);
            const std::uint64_t h = static_cast<std::uint64_t>(l.out_channels);
            out[li] = 3 * (h * x + h * h);
            break;
        }
        case LayerKind::ltv_ssm: {
            const std::uint64_t d = static_cast<std::uint64_t>(l.in_channels);
            const std::uint64_t n = static_cast<std::uint64_t>(l.state_size);
            out[li] = d * d + 2 * n * d // delta/B/C projections
                      + 2 * d * n       // state update
                      + d * n + d;      // output mix + skip
            break;
        }
        case LayerKind::relu:
        case LayerKind::avg_pool2d:
        case LayerKind::global_avg_pool:
            out[li] = 0;
            break;
        }
        in = os;
    }
    return out;
}

std::uint64_t total_macs(const ModelSpec& model) {
    std::uint64_t total = 0;
    for (std::uint64_t v : mac_counts(model))
        total += v;
    return total;
}

} // namespace evgaze
