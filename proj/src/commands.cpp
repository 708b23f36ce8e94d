#include "evgaze/commands.hpp"

#include "evgaze/common.hpp"
#include "evgaze/metrics.hpp"
#include "evgaze/reference.hpp"
#include "evgaze/simulator.hpp"
#include "evgaze/sparse.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace evgaze {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

PolarityMode polarity_from_name(const std::string& s) {
    if (s == "signed")
        return PolarityMode::signed_sum;
    if (s == "two_channel")
        return PolarityMode::two_channel;
    return PolarityMode::merged;
}

// One window's representation tensor (frames are sliced out by the caller).
FrameTensor window_tensor(const EventStream& slice, Window w,
                          const RepresentationConfig& rep, BinCarry* carry,
                          MemoryState* memory) {
    const PolarityMode mode = polarity_from_name(rep.polarity);
    const std::size_t t_bins = static_cast<std::size_t>(rep.t_bins);
    if (rep.kind == "direct_binning")
        return direct_binning(slice, w, t_bins, mode);
    if (rep.kind == "event_volume")
        return event_volume(slice, w, t_bins, mode);
    if (rep.kind == "voxel_grid")
        return voxel_grid(slice, w, t_bins);
    if (rep.kind == "causal_event_volume") {
        auto [tensor, carry_out] = causal_event_volume(slice, w, t_bins, mode, carry);
        if (carry != nullptr)
            *carry = std::move(carry_out);
        return std::move(tensor);
    }
    if (rep.kind == "time_surface") {
        const DecayKind decay =
            rep.decay == "exponential" ? DecayKind::exponential : DecayKind::linear;
        auto [sp, sn] = time_surface(slice, w, decay, rep.tau_s);
        FrameTensor out({2, sp.dims()[0], sp.dims()[1]});
        for (std::size_t i = 0; i < sp.size(); ++i) {
            out[i] = sp[i];
            out[sp.size() + i] = sn[i];
        }
        return out;
    }
    if (rep.kind == "memory") {
        auto [sp, sn] = time_surface(slice, w, DecayKind::linear);
        *memory = memory_update(*memory, sp, sn);
        return memory_input(*memory);
    }
    if (rep.kind == "bina_rep")
        return bina_rep(slice, w, static_cast<std::size_t>(rep.n_frames),
                        static_cast<std::size_t>(slice.height),
                        static_cast<std::size_t>(slice.width));
    throw config_error("unknown representation kind '" + rep.kind + "'");
}

bool representation_is_stateful(const RepresentationConfig& rep) {
    return rep.kind == "causal_event_volume" || rep.kind == "memory";
}

// Splits a window tensor into streaming frames with their timestamps.
void append_frames(const FrameTensor& tensor, Window w, FrameSequence& seq) {
    if (tensor.rank() == 3) {
        seq.frames.push_back(tensor);
        seq.times.push_back(w.t_start);
        return;
    }
    const std::size_t t_bins = tensor.dims()[0];
    const std::size_t frame_size = tensor.size() / t_bins;
    for (std::size_t k = 0; k < t_bins; ++k) {
        FrameTensor frame({tensor.dims()[1], tensor.dims()[2], tensor.dims()[3]});
        std::copy(tensor.data() + k * frame_size, tensor.data() + (k + 1) * frame_size,
                  frame.data());
        seq.frames.push_back(std::move(frame));
        seq.times.push_back(w.t_start +
                            static_cast<std::int64_t>(k) * w.span() /
                                static_cast<std::int64_t>(t_bins));
    }
}

std::vector<FrameTensor> compute_window_tensors(const EventStream& stream,
                                                const std::vector<Window>& windows,
                                                const RepresentationConfig& rep,
                                                const WindowConfig& wcfg) {
    std::vector<FrameTensor> tensors(windows.size());
    if (rep.kind == "causal_event_volume" && wcfg.stride_us != wcfg.width_us)
        throw config_error(
            "causal_event_volume carry chaining needs stride_us == width_us");
    if (representation_is_stateful(rep)) {
        BinCarry carry{FrameTensor(
            {channel_count(polarity_from_name(rep.polarity)),
             static_cast<std::size_t>(stream.height), static_cast<std::size_t>(stream.width)})};
        MemoryState memory = MemoryState::zeros(static_cast<std::size_t>(stream.height),
                                                static_cast<std::size_t>(stream.width));
        for (std::size_t i = 0; i < windows.size(); ++i)
            tensors[i] = window_tensor(slice_window(stream, windows[i]), windows[i], rep,
                                       &carry, &memory);
    } else {
        const std::int64_t n = static_cast<std::int64_t>(windows.size());
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t i = 0; i < n; ++i)
            tensors[static_cast<std::size_t>(i)] =
                window_tensor(slice_window(stream, windows[static_cast<std::size_t>(i)]),
                              windows[static_cast<std::size_t>(i)], rep, nullptr, nullptr);
    }
    return tensors;
}

struct LatencyStats {
    double mean_ms = 0.0;
    double p99_ms = 0.0;
};

LatencyStats latency_stats(std::vector<double>& ms) {
    LatencyStats st;
    if (ms.empty())
        return st;
    double total = 0.0;
    for (double v : ms)
        total += v;
    st.mean_ms = total / static_cast<double>(ms.size());
    std::sort(ms.begin(), ms.end());
    const std::size_t idx = std::min(
        ms.size() - 1, static_cast<std::size_t>(std::ceil(0.99 * ms.size())) - 1);
    st.p99_ms = ms[idx];
    return st;
}

} // namespace

FrameSequence representation_frames(const EventStream& stream, const WindowConfig& window,
                                    const RepresentationConfig& rep) {
    EventStream work = stream;
    if (rep.downsample_x > 1 || rep.downsample_y > 1)
        work = downsample_coords(stream, rep.downsample_x, rep.downsample_y);
    FrameSequence seq;
    seq.raster_width = work.width;
    seq.raster_height = work.height;
    const std::vector<Window> windows = make_windows(work, window.width_us, window.stride_us);
    const std::vector<FrameTensor> tensors = compute_window_tensors(work, windows, rep, window);
    for (std::size_t i = 0; i < windows.size(); ++i)
        append_frames(tensors[i], windows[i], seq);
    return seq;
}

int cmd_generate(const PipelineConfig& cfg, const CommandOptions& opt) {
    if (cfg.paths.events.empty() || cfg.paths.labels.empty())
        throw config_error("generate needs paths.events and paths.labels");
    TrajectorySpec traj = cfg.trajectory;
    if (opt.seed)
        traj.seed = *opt.seed;
    SceneSpec scene = cfg.scene;
    scene.width = cfg.sensor.width;
    scene.height = cfg.sensor.height;

    const LabelSeries labels = gen_trajectory(traj, scene.width, scene.height);
    const EventStream events = render_events(labels, scene, traj.seed);
    write_event_csv_file(cfg.paths.events, events);
    write_label_csv_file(cfg.paths.labels, labels);
    std::printf("generate: %zu events, %zu labels\n", events.events.size(),
                labels.rows.size());
    return 0;
}

int cmd_augment(const PipelineConfig& cfg, const CommandOptions&) {
    if (cfg.paths.events.empty())
        throw config_error("augment needs paths.events");
    const std::string out_path =
        cfg.paths.events_out.empty() ? cfg.paths.events : cfg.paths.events_out;
    EventStream s =
        parse_event_csv_file(cfg.paths.events, cfg.sensor.width, cfg.sensor.height);
    for (const AugmentStep& step : cfg.augmentations) {
        if (step.op == "spatial_flip_h") {
            s = spatial_flip_h(s);
        } else if (step.op == "spatial_shift") {
            s = spatial_shift(s, step.dx, step.dy, step.policy);
        } else if (step.op == "temporal_flip") {
            s = temporal_flip(s);
        } else if (step.op == "temporal_shift") {
            Window w = step.window;
            if (w.span() <= 0)
                w = Window{0, s.duration_us()};
            s = temporal_shift(s, step.dt_us, w);
        } else if (step.op == "affine") {
            s = affine_events(s, step.affine);
        } else if (step.op == "cutout") {
            s = event_cutout(std::vector<EventStream>{s}, step.mask).front();
        }
    }
    validate(s);
    write_event_csv_file(out_path, s);
    std::printf("augment: %zu events -> %s\n", s.events.size(), out_path.c_str());
    return 0;
}

int cmd_represent(const PipelineConfig& cfg, const CommandOptions&) {
    if (cfg.paths.events.empty() || cfg.paths.tensors_dir.empty())
        throw config_error("represent needs paths.events and paths.tensors_dir");
    EventStream stream =
        parse_event_csv_file(cfg.paths.events, cfg.sensor.width, cfg.sensor.height);
    if (cfg.representation.downsample_x > 1 || cfg.representation.downsample_y > 1)
        stream = downsample_coords(stream, cfg.representation.downsample_x,
                                   cfg.representation.downsample_y);

    std::error_code ec;
    fs::create_directories(cfg.paths.tensors_dir, ec);
    if (ec)
        throw io_error("cannot create tensors dir: " + cfg.paths.tensors_dir);

    const std::vector<Window> windows =
        make_windows(stream, cfg.window.width_us, cfg.window.stride_us);
    const std::vector<FrameTensor> tensors =
        compute_window_tensors(stream, windows, cfg.representation, cfg.window);

    const bool causal = cfg.representation.kind == "causal_event_volume";
    json manifest;
    manifest["version"] = 1;
    manifest["kind"] = cfg.representation.kind;
    manifest["polarity"] = cfg.representation.polarity;
    manifest["t_bins"] = cfg.representation.t_bins;
    manifest["sensor"] = {{"width", stream.width}, {"height", stream.height}};
    json jw = json::array();
    for (std::size_t i = 0; i < windows.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "window_%06zu.eett", i);
        save_tensor_file((fs::path(cfg.paths.tensors_dir) / name).string(), tensors[i]);
        json w;
        w["index"] = i;
        w["t_start"] = windows[i].t_start;
        w["t_end"] = windows[i].t_end;
        w["file"] = name;
        if (causal)
            w["carry_in"] = i > 0; // the chain starts from a zero carry
        jw.push_back(w);
    }
    manifest["windows"] = jw;
    std::ofstream mf(fs::path(cfg.paths.tensors_dir) / "manifest.json",
                     std::ios::binary);
    if (!mf)
        throw io_error("cannot write representation manifest");
    mf << manifest.dump(2) << '\n';
    std::printf("represent: %zu windows -> %s\n", windows.size(),
                cfg.paths.tensors_dir.c_str());
    return 0;
}

int cmd_infer(const PipelineConfig& cfg, const CommandOptions& opt) {
    if (cfg.paths.events.empty() || cfg.paths.weights.empty() ||
        cfg.paths.predictions.empty())
        throw config_error("infer needs paths.events, paths.weights, paths.predictions");
    const ModelSpec model = load_model(cfg.paths.weights);
    if (model.head.kind != HeadSpec::Kind::grid)
        throw config_error("infer needs a model with a grid head");
    const EventStream stream =
        parse_event_csv_file(cfg.paths.events, cfg.sensor.width, cfg.sensor.height);
    const FrameSequence seq =
        representation_frames(stream, cfg.window, cfg.representation);
    if (!seq.frames.empty()) {
        const auto& d = seq.frames.front().dims();
        if (Shape3{d[0], d[1], d[2]} != model.input)
            throw shape_error("representation frame dims do not match model input");
    }

    std::vector<PredictionRow> rows;
    rows.reserve(seq.frames.size());
    std::vector<double> lat_ms;
    lat_ms.reserve(seq.frames.size());
    const double fw = static_cast<double>(seq.raster_width);
    const double fh = static_cast<double>(seq.raster_height);

    if (opt.offline) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::vector<FrameTensor> outs = forward_offline(model, seq.frames);
        const auto t1 = std::chrono::steady_clock::now();
        for (std::size_t i = 0; i < outs.size(); ++i) {
            const PupilPrediction p = grid_decode(grid_from_tensor(outs[i]), fw, fh);
            rows.push_back({seq.times[i], p.x, p.y, p.confidence});
        }
        if (!outs.empty())
            lat_ms.assign(outs.size(),
                          std::chrono::duration<double, std::milli>(t1 - t0).count() /
                              static_cast<double>(outs.size()));
    } else {
        StreamState state = stream_init(model);
        for (std::size_t i = 0; i < seq.frames.size(); ++i) {
            const auto t0 = std::chrono::steady_clock::now();
            const FrameTensor out = stream_step(model, state, seq.frames[i]);
            const auto t1 = std::chrono::steady_clock::now();
            lat_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
            const PupilPrediction p = grid_decode(grid_from_tensor(out), fw, fh);
            rows.push_back({seq.times[i], p.x, p.y, p.confidence});
        }
    }
    write_prediction_csv_file(cfg.paths.predictions, rows);
    const LatencyStats st = latency_stats(lat_ms);
    std::printf("infer: frames=%zu mode=%s latency_ms_mean=%.3f latency_ms_p99=%.3f\n",
                rows.size(), opt.offline ? "offline" : "streaming", st.mean_ms, st.p99_ms);
    return 0;
}

int cmd_track(const PipelineConfig& cfg, const CommandOptions&) {
    if (cfg.paths.events.empty() || cfg.paths.labels.empty() ||
        cfg.paths.predictions.empty())
        throw config_error("track needs paths.events, paths.labels, paths.predictions");
    const EventStream stream =
        parse_event_csv_file(cfg.paths.events, cfg.sensor.width, cfg.sensor.height);
    const LabelSeries labels = parse_label_csv_file(cfg.paths.labels);
    std::vector<std::int64_t> times;
    times.reserve(labels.rows.size());
    for (const LabelRow& r : labels.rows)
        times.push_back(r.t);
    const std::vector<PupilPrediction> preds =
        centroid_tracker(stream, times, cfg.tracker.tau_s, cfg.tracker.w_ref);
    std::vector<PredictionRow> rows;
    rows.reserve(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i)
        rows.push_back({times[i], preds[i].x, preds[i].y, preds[i].confidence});
    write_prediction_csv_file(cfg.paths.predictions, rows);
    std::printf("track: %zu predictions -> %s\n", rows.size(),
                cfg.paths.predictions.c_str());
    return 0;
}

int cmd_eval(const std::string& pred_path, const std::string& label_path,
             const CommandOptions& opt, const std::string& report_path,
             const std::string& json_path) {
    const std::vector<PredictionRow> pred_rows = parse_prediction_csv_file(pred_path);
    const LabelSeries labels = parse_label_csv_file(label_path);
    std::vector<PupilPrediction> preds;
    preds.reserve(pred_rows.size());
    for (const PredictionRow& r : pred_rows)
        preds.push_back({r.x, r.y, r.confidence});
    const MetricsReport report = evaluate(preds, labels, !opt.exclude_blinks);
    const std::string text = report_text(report);
    std::fputs(text.c_str(), stdout);
    if (!report_path.empty()) {
        std::ofstream out(report_path, std::ios::binary);
        if (!out)
            throw io_error("cannot write report: " + report_path);
        out << text;
    }
    if (!json_path.empty()) {
        std::ofstream out(json_path, std::ios::binary);
        if (!out)
            throw io_error("cannot write report: " + json_path);
        out << report_json(report);
    }
    if (opt.min_p10 && report.p10() < *opt.min_p10) {
        std::fprintf(stderr, "eval: p10 %.4f below required %.4f\n", report.p10(),
                     *opt.min_p10);
        return 1;
    }
    return 0;
}

BenchResult run_bench(const PipelineConfig& cfg) {
    if (cfg.paths.weights.empty())
        throw config_error("bench needs paths.weights");
    const ModelSpec model = load_model(cfg.paths.weights);

    EventStream stream;
    if (!cfg.paths.events.empty() && fs::exists(cfg.paths.events)) {
        stream = parse_event_csv_file(cfg.paths.events, cfg.sensor.width,
                                      cfg.sensor.height);
    } else {
        // synthesize a 1 s pursuit scene so bench runs without input data
        TrajectorySpec traj;
        traj.kind = TrajectoryKind::smooth_pursuit;
        traj.amplitude_px = 10.0;
        traj.frequency_hz = 1.0;
        traj.duration_s = 1.0;
        traj.seed = cfg.seed;
        SceneSpec scene = cfg.scene;
        scene.width = cfg.sensor.width;
        scene.height = cfg.sensor.height;
        stream = render_events(gen_trajectory(traj, scene.width, scene.height), scene,
                               cfg.seed);
    }

    const FrameSequence seq = representation_frames(stream, cfg.window, cfg.representation);
    BenchResult res;
    res.frames = seq.frames.size();
    res.model_macs_per_frame = total_macs(model);
    if (seq.frames.empty())
        return res;
    {
        const auto& d = seq.frames.front().dims();
        if (Shape3{d[0], d[1], d[2]} != model.input)
            throw shape_error("representation frame dims do not match model input");
    }

    // dense streaming latency
    {
        StreamState state = stream_init(model);
        std::vector<double> ms;
        ms.reserve(seq.frames.size());
        for (const FrameTensor& f : seq.frames) {
            const auto t0 = std::chrono::steady_clock::now();
            (void)stream_step(model, state, f);
            const auto t1 = std::chrono::steady_clock::now();
            ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
        const LatencyStats st = latency_stats(ms);
        res.dense_mean_ms = st.mean_ms;
        res.dense_p99_ms = st.p99_ms;
    }
    res.relu_zero_fraction =
        activation_sparsity(model, seq.frames).overall_zero_fraction;

    // sparse route: run the leading stride-1 conv/bn/relu block through the
    // submanifold path on the same weights and count taps
    std::size_t prefix = 0;
    for (const LayerSpec& l : model.layers) {
        const bool sparse_ok =
            (l.kind == LayerKind::conv2d && l.sh == 1 && l.sw == 1 && l.kh % 2 == 1 &&
             l.kw % 2 == 1 && l.ph == l.kh / 2 && l.pw == l.kw / 2) ||
            l.kind == LayerKind::pointwise_conv2d || l.kind == LayerKind::batchnorm ||
            l.kind == LayerKind::relu;
        if (!sparse_ok)
            break;
        ++prefix;
    }
    res.sparse_prefix_layers = prefix;
    res.has_sparse_prefix = prefix > 0;
    if (prefix > 0) {
        const std::vector<std::uint64_t> macs = mac_counts(model);
        for (std::size_t li = 0; li < prefix; ++li)
            res.sparse_prefix_dense_macs += macs[li];

        std::uint64_t total_taps = 0;
        std::vector<double> sparse_ms, dense_ms;
        sparse_ms.reserve(seq.frames.size());
        dense_ms.reserve(seq.frames.size());
        for (const FrameTensor& f : seq.frames) {
            auto t0 = std::chrono::steady_clock::now();
            SparseFrame sf = to_sparse(f);
            for (std::size_t li = 0; li < prefix; ++li) {
                const LayerSpec& l = model.layers[li];
                if (l.kind == LayerKind::conv2d) {
                    std::uint64_t taps = 0;
                    const FrameTensor& w = l.param("weight");
                    const FrameTensor& b = l.param("bias");
                    sf = submanifold_conv(
                        sf, w, std::vector<double>(b.data(), b.data() + b.size()), &taps);
                    total_taps += taps;
                } else if (l.kind == LayerKind::pointwise_conv2d) {
                    const FrameTensor& w = l.param("weight");
                    FrameTensor k4({w.dims()[0], w.dims()[1], 1, 1});
                    std::copy(w.data(), w.data() + w.size(), k4.data());
                    const FrameTensor& b = l.param("bias");
                    std::uint64_t taps = 0;
                    sf = submanifold_conv(
                        sf, k4, std::vector<double>(b.data(), b.data() + b.size()), &taps);
                    total_taps += taps;
                } else if (l.kind == LayerKind::batchnorm) {
                    const FrameTensor& gamma = l.param("gamma");
                    const FrameTensor& beta = l.param("beta");
                    const FrameTensor& mean = l.param("mean");
                    const FrameTensor& var = l.param("var");
                    std::vector<double> scale(sf.channels), shift(sf.channels);
                    for (std::size_t c = 0; c < sf.channels; ++c) {
                        scale[c] = gamma[c] / std::sqrt(var[c] + 1e-5);
                        shift[c] = beta[c] - mean[c] * scale[c];
                    }
                    sf = sparse_affine(sf, scale, shift);
                } else {
                    sf = sparse_relu(sf);
                }
            }
            auto t1 = std::chrono::steady_clock::now();
            sparse_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());

            // dense route over the same prefix
            t0 = std::chrono::steady_clock::now();
            FrameTensor dense = f;
            for (std::size_t li = 0; li < prefix; ++li)
                dense = apply_layer(model.layers[li], dense);
            t1 = std::chrono::steady_clock::now();
            dense_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
        res.sparse_taps_per_frame = total_taps / seq.frames.size();
        res.sparse_mean_ms = latency_stats(sparse_ms).mean_ms;
        res.dense_prefix_mean_ms = latency_stats(dense_ms).mean_ms;
    }
    return res;
}

int cmd_bench(const PipelineConfig& cfg, const CommandOptions&) {
    const ModelSpec model = load_model(cfg.paths.weights);
    const std::vector<std::uint64_t> macs = mac_counts(model);
    std::printf("%-4s %-22s %12s\n", "#", "layer", "MACs/frame");
    for (std::size_t li = 0; li < model.layers.size(); ++li)
        std::printf("%-4zu %-22s %12llu\n", li, layer_kind_name(model.layers[li].kind),
                    static_cast<unsigned long long>(macs[li]));
    const BenchResult res = run_bench(cfg);
    std::printf("total_macs_per_frame=%llu\n",
                static_cast<unsigned long long>(res.model_macs_per_frame));
    std::printf("frames=%zu\n", res.frames);
    std::printf("relu_zero_fraction=%.4f\n", res.relu_zero_fraction);
    std::printf("dense_stream_ms_mean=%.4f\n", res.dense_mean_ms);
    std::printf("dense_stream_ms_p99=%.4f\n", res.dense_p99_ms);
    if (res.has_sparse_prefix) {
        std::printf("sparse_prefix_layers=%zu\n", res.sparse_prefix_layers);
        std::printf("sparse_prefix_dense_macs=%llu\n",
                    static_cast<unsigned long long>(res.sparse_prefix_dense_macs));
        std::printf("sparse_taps_per_frame=%llu\n",
                    static_cast<unsigned long long>(res.sparse_taps_per_frame));
        std::printf("sparse_prefix_ms_mean=%.4f\n", res.sparse_mean_ms);
        std::printf("dense_prefix_ms_mean=%.4f\n", res.dense_prefix_mean_ms);
    }
    return 0;
}

} // namespace evgaze
