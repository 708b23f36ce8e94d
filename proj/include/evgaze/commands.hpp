#pragma once

#include "evgaze/config.hpp"
#include "evgaze/nn.hpp"
#include "evgaze/represent.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace evgaze {

struct CommandOptions {
    std::optional<std::uint64_t> seed;
    bool offline = false;
    bool exclude_blinks = false;
    std::optional<double> min_p10;
};

// Windowed representation frames ready for streaming inference: one or more
// [C,H,W] frames per window (a window tensor with T bins yields T frames),
// with the timestamp each frame corresponds to. Causal and memory kinds
// chain state across windows; the other kinds are processed in parallel,
// outputs in window order.
struct FrameSequence {
    std::vector<FrameTensor> frames;
    std::vector<std::int64_t> times;
    int raster_width = 0; // coordinate space of decoded predictions
    int raster_height = 0;
};

FrameSequence representation_frames(const EventStream& stream, const WindowConfig& window,
                                    const RepresentationConfig& rep);

// Exit codes: 0 ok, 1 config/threshold, 2 I/O, 3 shape, 4 alignment.
int cmd_generate(const PipelineConfig& cfg, const CommandOptions& opt);
int cmd_augment(const PipelineConfig& cfg, const CommandOptions& opt);
int cmd_represent(const PipelineConfig& cfg, const CommandOptions& opt);
int cmd_infer(const PipelineConfig& cfg, const CommandOptions& opt);
int cmd_track(const PipelineConfig& cfg, const CommandOptions& opt);
int cmd_eval(const std::string& pred_path, const std::string& label_path,
             const CommandOptions& opt, const std::string& report_path = "",
             const std::string& json_path = "");
int cmd_bench(const PipelineConfig& cfg, const CommandOptions& opt);

struct BenchResult {
    std::size_t frames = 0;
    std::uint64_t model_macs_per_frame = 0;
    double relu_zero_fraction = 0.0; // activation sparsity over the bench frames
    double dense_mean_ms = 0.0;
    double dense_p99_ms = 0.0;
    bool has_sparse_prefix = false;
    std::size_t sparse_prefix_layers = 0;
    std::uint64_t sparse_prefix_dense_macs = 0; // per-frame MACs of the dense route
    std::uint64_t sparse_taps_per_frame = 0;    // mean taps of the sparse route
    double sparse_mean_ms = 0.0;
    double dense_prefix_mean_ms = 0.0;
};

BenchResult run_bench(const PipelineConfig& cfg);

} // namespace evgaze
