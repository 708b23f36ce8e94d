#include "evgaze/config.hpp"

#include "evgaze/common.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace evgaze {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object())
        throw config_error(ctx + " must be a JSON object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key()))
            throw config_error("unknown key '" + it.key() + "' in " + ctx);
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            out = j.at(key).get<T>();
        } catch (const json::exception&) {
            throw config_error(std::string("bad value for '") + key + "'");
        }
    }
}

ShiftPolicy policy_from_name(const std::string& s) {
    if (s == "drop")
        return ShiftPolicy::drop;
    if (s == "clamp")
        return ShiftPolicy::clamp;
    throw config_error("shift policy must be 'drop' or 'clamp'");
}

AugmentStep parse_augment_step(const json& j) {
    AugmentStep step;
    if (!j.is_object() || !j.contains("op"))
        throw config_error("augmentation step needs an 'op' key");
    step.op = j.at("op").get<std::string>();
    if (step.op == "spatial_flip_h" || step.op == "temporal_flip") {
        check_keys(j, "augmentation '" + step.op + "'", {"op"});
    } else if (step.op == "spatial_shift") {
        check_keys(j, "augmentation 'spatial_shift'", {"op", "dx", "dy", "policy"});
        read(j, "dx", step.dx);
        read(j, "dy", step.dy);
        std::string pol = "drop";
        read(j, "policy", pol);
        step.policy = policy_from_name(pol);
    } else if (step.op == "temporal_shift") {
        check_keys(j, "augmentation 'temporal_shift'",
                   {"op", "dt_us", "window_start_us", "window_end_us"});
        read(j, "dt_us", step.dt_us);
        read(j, "window_start_us", step.window.t_start);
        read(j, "window_end_us", step.window.t_end);
    } else if (step.op == "affine") {
        check_keys(j, "augmentation 'affine'",
                   {"op", "scale_x", "scale_y", "rotation", "translate_x", "translate_y",
                    "time_scale", "time_flip", "polarity_flip"});
        read(j, "scale_x", step.affine.scale_x);
        read(j, "scale_y", step.affine.scale_y);
        read(j, "rotation", step.affine.rotation);
        read(j, "translate_x", step.affine.translate_x);
        read(j, "translate_y", step.affine.translate_y);
        read(j, "time_scale", step.affine.time_scale);
        read(j, "time_flip", step.affine.time_flip);
        read(j, "polarity_flip", step.affine.polarity_flip);
    } else if (step.op == "cutout") {
        check_keys(j, "augmentation 'cutout'", {"op", "x0", "y0", "w", "h"});
        read(j, "x0", step.mask.x0);
        read(j, "y0", step.mask.y0);
        read(j, "w", step.mask.w);
        read(j, "h", step.mask.h);
    } else {
        throw config_error("unknown augmentation op '" + step.op + "'");
    }
    return step;
}

} // namespace

PipelineConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw config_error("config is not valid JSON: " + std::string(e.what()));
    }
    check_keys(j, "config root",
               {"version", "seed", "sensor", "window", "representation", "paths",
                "augmentations", "trajectory", "scene", "tracker", "eval"});
    if (!j.contains("version") || !j.at("version").is_number_integer() ||
        j.at("version").get<int>() != 1)
        throw config_error("config must declare \"version\": 1");

    PipelineConfig cfg;
    read(j, "seed", cfg.seed);

    if (j.contains("sensor")) {
        const json& s = j.at("sensor");
        check_keys(s, "sensor", {"width", "height"});
        read(s, "width", cfg.sensor.width);
        read(s, "height", cfg.sensor.height);
        if (cfg.sensor.width <= 0 || cfg.sensor.height <= 0)
            throw config_error("sensor dims must be positive");
    }
    if (j.contains("window")) {
        const json& s = j.at("window");
        check_keys(s, "window", {"width_us", "stride_us"});
        read(s, "width_us", cfg.window.width_us);
        read(s, "stride_us", cfg.window.stride_us);
        if (cfg.window.width_us <= 0 || cfg.window.stride_us <= 0)
            throw config_error("window width/stride must be positive");
    }
    if (j.contains("representation")) {
        const json& s = j.at("representation");
        check_keys(s, "representation",
                   {"kind", "t_bins", "polarity", "n_frames", "decay", "tau_s",
                    "downsample_x", "downsample_y"});
        read(s, "kind", cfg.representation.kind);
        read(s, "t_bins", cfg.representation.t_bins);
        read(s, "polarity", cfg.representation.polarity);
        read(s, "n_frames", cfg.representation.n_frames);
        read(s, "decay", cfg.representation.decay);
        read(s, "tau_s", cfg.representation.tau_s);
        read(s, "downsample_x", cfg.representation.downsample_x);
        read(s, "downsample_y", cfg.representation.downsample_y);
        static const std::set<std::string> kinds = {
            "direct_binning", "event_volume", "causal_event_volume", "time_surface",
            "memory",         "bina_rep",     "voxel_grid"};
        if (!kinds.count(cfg.representation.kind))
            throw config_error("unknown representation kind '" +
                               cfg.representation.kind + "'");
        static const std::set<std::string> pols = {"signed", "two_channel", "merged"};
        if (!pols.count(cfg.representation.polarity))
            throw config_error("unknown polarity mode '" + cfg.representation.polarity +
                               "'");
        if (cfg.representation.t_bins < 1)
            throw config_error("t_bins must be >= 1");
    }
    if (j.contains("paths")) {
        const json& s = j.at("paths");
        check_keys(s, "paths", {"events", "events_out", "labels", "predictions",
                                "tensors_dir", "weights", "report", "report_json"});
        read(s, "events", cfg.paths.events);
        read(s, "events_out", cfg.paths.events_out);
        read(s, "labels", cfg.paths.labels);
        read(s, "predictions", cfg.paths.predictions);
        read(s, "tensors_dir", cfg.paths.tensors_dir);
        read(s, "weights", cfg.paths.weights);
        read(s, "report", cfg.paths.report);
        read(s, "report_json", cfg.paths.report_json);
    }
    if (j.contains("augmentations")) {
        const json& s = j.at("augmentations");
        if (!s.is_array())
            throw config_error("augmentations must be an array");
        for (const json& step : s)
            cfg.augmentations.push_back(parse_augment_step(step));
    }
    if (j.contains("trajectory")) {
        const json& s = j.at("trajectory");
        check_keys(s, "trajectory",
                   {"kind", "amplitude_px", "frequency_hz", "saccade_rate_hz",
                    "walk_step_px", "blink_rate_hz", "blink_duration_s", "duration_s",
                    "seed"});
        std::string kind = "fixation";
        read(s, "kind", kind);
        cfg.trajectory.kind = trajectory_kind_from_name(kind);
        read(s, "amplitude_px", cfg.trajectory.amplitude_px);
        read(s, "frequency_hz", cfg.trajectory.frequency_hz);
        read(s, "saccade_rate_hz", cfg.trajectory.saccade_rate_hz);
        read(s, "walk_step_px", cfg.trajectory.walk_step_px);
        read(s, "blink_rate_hz", cfg.trajectory.blink_rate_hz);
        read(s, "blink_duration_s", cfg.trajectory.blink_duration_s);
        read(s, "duration_s", cfg.trajectory.duration_s);
        cfg.trajectory.seed = cfg.seed;
        read(s, "seed", cfg.trajectory.seed);
        if (cfg.trajectory.duration_s <= 0.0)
            throw config_error("trajectory duration must be positive");
    }
    if (j.contains("scene")) {
        const json& s = j.at("scene");
        check_keys(s, "scene",
                   {"pupil_radius_px", "background_intensity", "pupil_intensity",
                    "threshold", "jitter_sigma_s"});
        cfg.scene.width = cfg.sensor.width;
        cfg.scene.height = cfg.sensor.height;
        read(s, "pupil_radius_px", cfg.scene.pupil_radius_px);
        read(s, "background_intensity", cfg.scene.background_intensity);
        read(s, "pupil_intensity", cfg.scene.pupil_intensity);
        read(s, "threshold", cfg.scene.threshold);
        read(s, "jitter_sigma_s", cfg.scene.jitter_sigma_s);
        if (cfg.scene.threshold <= 0.0)
            throw config_error("scene threshold must be positive");
    } else {
        cfg.scene.width = cfg.sensor.width;
        cfg.scene.height = cfg.sensor.height;
    }
    if (j.contains("tracker")) {
        const json& s = j.at("tracker");
        check_keys(s, "tracker", {"tau_s", "w_ref"});
        read(s, "tau_s", cfg.tracker.tau_s);
        read(s, "w_ref", cfg.tracker.w_ref);
        if (cfg.tracker.tau_s <= 0.0)
            throw config_error("tracker tau_s must be positive");
    }
    if (j.contains("eval")) {
        const json& s = j.at("eval");
        check_keys(s, "eval", {"exclude_blinks", "min_p10"});
        read(s, "exclude_blinks", cfg.eval.exclude_blinks);
        if (s.contains("min_p10"))
            cfg.eval.min_p10 = s.at("min_p10").get<double>();
    }
    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw io_error("cannot open config: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    PipelineConfig cfg = parse_config(buf.str());

    // paths resolve relative to the config file's directory
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    auto resolve = [&](std::string& p) {
        if (!p.empty() && std::filesystem::path(p).is_relative())
            p = (base / p).string();
    };
    resolve(cfg.paths.events);
    resolve(cfg.paths.events_out);
    resolve(cfg.paths.labels);
    resolve(cfg.paths.predictions);
    resolve(cfg.paths.tensors_dir);
    resolve(cfg.paths.weights);
    resolve(cfg.paths.report);
    resolve(cfg.paths.report_json);
    return cfg;
}

} // namespace evgaze
