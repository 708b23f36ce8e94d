#pragma once

#include "evgaze/tensor.hpp"

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace evgaze {

enum class LayerKind {
    conv2d,
    depthwise_conv2d,
    pointwise_conv2d,
    batchnorm,
    relu,
    avg_pool2d,
    global_avg_pool,
    fully_connected,
    temporal_causal_conv,
    gru,
    ltv_ssm
};

const char* layer_kind_name(LayerKind k);
LayerKind layer_kind_from_name(const std::string& name);

using Shape3 = std::array<std::size_t, 3>; // [C,H,W]

// One layer: kind, shape parameters, and named parameter tensors.
// Canonical tensor names per kind (also the blob serialization order):
//   conv2d               weight [C',C,Kh,Kw], bias [C']
//   depthwise_conv2d     weight [C,Kh,Kw],    bias [C]
//   pointwise_conv2d     weight [C',C],       bias [C']
//   batchnorm            gamma, beta, mean, var (each [C])
//   fully_connected      weight [out,in],     bias [out]
//   temporal_causal_conv weight [C',C,K],     bias [C']
//   gru                  w_z w_r w_n [H,X], u_z u_r u_n [H,H], b_z b_r b_n [H]
//   ltv_ssm              a [d,N], w_delta [d,d], b_delta [d], w_b [N,d],
//                        b_b [N], w_c [N,d], b_c [N], d_skip [d]
struct LayerSpec {
    LayerKind kind{};
    int in_channels = 0;
    int out_channels = 0;
    int kh = 0, kw = 0; // spatial kernel / pool window
    int sh = 1, sw = 1; // spatial stride
    int ph = 0, pw = 0; // zero padding (conv kinds)
    int k_t = 0;        // temporal kernel size
    int state_size = 0; // ltv_ssm state dimension N
    std::map<std::string, FrameTensor> params;

    const FrameTensor& param(const std::string& name) const;
};

// Canonical parameter-tensor order for serialization and validation.
std::vector<std::string> layer_param_names(LayerKind kind);

struct HeadSpec {
    enum class Kind { none, grid };
    Kind kind = Kind::none;
    int rows = 3;
    int cols = 4;
};

struct ModelSpec {
    Shape3 input{};
    std::vector<LayerSpec> layers;
    HeadSpec head;
};

// Validates parameter tensors and layer-to-layer dim chaining; returns the
// output dims after each layer. Throws shape_error on any mismatch.
std::vector<Shape3> chain_check(const ModelSpec& model);
Shape3 layer_output_shape(const LayerSpec& layer, Shape3 in);

// Stateless per-frame layers (conv/bn/relu/pool/fc). Temporal and recurrent
// kinds are rejected; they need sequence context or stream state.
FrameTensor apply_layer(const LayerSpec& layer, const FrameTensor& input);

// 1-D convolution over time at every spatial site, left-padded with K-1
// zero frames: output frame t depends only on inputs <= t.
std::vector<FrameTensor> temporal_causal_conv_offline(const LayerSpec& layer,
                                                      const std::vector<FrameTensor>& seq);

// z = sigma(W_z x + U_z h + b_z); r = sigma(W_r x + U_r h + b_r);
// n = tanh(W_n x + r .* (U_n h) + b_n); h' = (1-z) .* n + z .* h.
std::vector<double> gru_cell(const std::vector<double>& x, const std::vector<double>& h,
                             const LayerSpec& layer);

// Selective state-space step: per input channel i and state lane n,
//   delta  = softplus(W_delta u + b_delta)          (strictly positive)
//   B      = W_b u + b_b,  C = W_c u + b_c
//   x'     = exp(delta_i A[i,n]) x[i,n] + delta_i B[n] u_i
//   y_i    = sum_n C[n] x'[i,n] + D_i u_i            (uses the updated state)
struct SsmStep {
    std::vector<double> y;
    std::vector<double> x_next; // flattened [d*N]
};
SsmStep ltv_ssm_cell(const std::vector<double>& u, const std::vector<double>& x,
                     const LayerSpec& layer);

// Per-layer streaming state: a FIFO of the last K-1 input frames for each
// temporal layer, a hidden vector for each recurrent layer. Entries for
// stateless layers stay empty. Single-owner mutable; one state per stream.
struct StreamState {
    std::vector<std::deque<FrameTensor>> fifos;
    std::vector<std::vector<double>> hidden;
};

StreamState stream_init(const ModelSpec& model);

// Online step: output equals frame t of the offline run over all frames
// seen so far.
FrameTensor stream_step(const ModelSpec& model, StreamState& state,
                        const FrameTensor& frame);

// Whole-sequence run; recurrent layers scan over time from zero state.
std::vector<FrameTensor> forward_offline(const ModelSpec& model,
                                         const std::vector<FrameTensor>& seq);

struct SparsityReport {
    struct LayerStat {
        std::size_t layer_index;
        double zero_fraction;
        double l1;
        std::size_t count;
    };
    std::vector<LayerStat> relu_layers;
    double total_l1 = 0.0;
    double overall_zero_fraction = 0.0;
};

// Exact-zero fraction per relu output over an offline run, plus the L1
// activation mass of those outputs.
SparsityReport activation_sparsity(const ModelSpec& model,
                                   const std::vector<FrameTensor>& seq);

// Static multiply-accumulate counts per frame for each layer (pooling and
// relu count as zero).
std::vector<std::uint64_t> mac_counts(const ModelSpec& model);
std::uint64_t total_macs(const ModelSpec& model);

// Weights container: a JSON manifest naming layers in order plus a blob of
// float32 little-endian values; blob order follows the manifest, tensors
// row-major. The blob path in the manifest is resolved relative to the
// manifest's directory.
void save_model(const ModelSpec& model, const std::string& manifest_path,
                const std::string& blob_name);
ModelSpec load_model(const std::string& manifest_path);

} // namespace evgaze
