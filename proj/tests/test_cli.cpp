#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "evgaze/commands.hpp"
#include "evgaze/common.hpp"
#include "evgaze/config.hpp"
#include "evgaze/metrics.hpp"
#include "evgaze/simulator.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace evgaze;
namespace fs = std::filesystem;

namespace {

fs::path test_dir() {
    const fs::path dir = fs::temp_directory_path() / "evgaze_cli_test";
    fs::create_directories(dir);
    return dir;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

PipelineConfig base_config(const fs::path& dir) {
    PipelineConfig cfg = parse_config(R"({"version": 1})");
    cfg.paths.events = (dir / "events.csv").string();
    cfg.paths.labels = (dir / "labels.csv").string();
    cfg.paths.predictions = (dir / "pred.csv").string();
    cfg.paths.tensors_dir = (dir / "tensors").string();
    cfg.trajectory.kind = TrajectoryKind::smooth_pursuit;
    cfg.trajectory.amplitude_px = 10.0;
    cfg.trajectory.frequency_hz = 1.0;
    cfg.trajectory.duration_s = 1.0;
    cfg.trajectory.seed = 7;
    return cfg;
}

} // namespace

TEST_CASE("config parsing is strict") {
    CHECK_THROWS_AS(parse_config("{"), config_error);
    CHECK_THROWS_AS(parse_config(R"({"seed": 1})"), config_error); // missing version
    CHECK_THROWS_AS(parse_config(R"({"version": 2})"), config_error);
    CHECK_THROWS_AS(parse_config(R"({"version": 1, "bogus": 3})"), config_error);
    CHECK_THROWS_AS(parse_config(R"({"version": 1, "sensor": {"width": 80, "depth": 1}})"),
                    config_error);
    CHECK_THROWS_AS(
        parse_config(R"({"version": 1, "representation": {"kind": "hologram"}})"),
        config_error);
    CHECK_THROWS_AS(
        parse_config(R"({"version": 1, "augmentations": [{"op": "mystery"}]})"),
        config_error);
    const PipelineConfig ok = parse_config(
        R"({"version": 1, "seed": 9, "sensor": {"width": 64, "height": 48}})");
    CHECK(ok.seed == 9);
    CHECK(ok.sensor.width == 64);
}

TEST_CASE("generate writes deterministic files with the label-time convention") {
    const fs::path dir = test_dir();
    PipelineConfig cfg = base_config(dir);
    cfg.trajectory.kind = TrajectoryKind::fixation;
    REQUIRE(cmd_generate(cfg, {}) == 0);

    const LabelSeries labels = parse_label_csv_file(cfg.paths.labels);
    REQUIRE(labels.rows.size() == 100); // 1 s at 100 Hz: t = 0..990000
    CHECK(labels.rows.front().t == 0);
    CHECK(labels.rows.back().t == 990000);

    const std::string events_a = read_file(cfg.paths.events);
    const std::string labels_a = read_file(cfg.paths.labels);
    REQUIRE(cmd_generate(cfg, {}) == 0);
    CHECK(read_file(cfg.paths.events) == events_a);
    CHECK(read_file(cfg.paths.labels) == labels_a);

    SUBCASE("zero duration is a config error") {
        cfg.trajectory.duration_s = 0.0;
        CHECK_THROWS_AS(cmd_generate(cfg, {}), config_error);
    }
}

TEST_CASE("represent writes one tensor per window plus a manifest") {
    const fs::path dir = test_dir();
    PipelineConfig cfg = base_config(dir);
    REQUIRE(cmd_generate(cfg, {}) == 0);

    cfg.window.width_us = 50000;
    cfg.window.stride_us = 50000;
    cfg.representation.kind = "causal_event_volume";
    cfg.representation.t_bins = 1;
    REQUIRE(cmd_represent(cfg, {}) == 0);

    int tensor_files = 0;
    for (const auto& e : fs::directory_iterator(cfg.paths.tensors_dir))
        if (e.path().extension() == ".eett")
            ++tensor_files;
    CHECK(tensor_files == 20); // 1 s / 50 ms

    const std::string manifest = read_file(fs::path(cfg.paths.tensors_dir) / "manifest.json");
    CHECK(manifest.find("\"carry_in\": true") != std::string::npos);
    CHECK(manifest.find("causal_event_volume") != std::string::npos);

    const FrameTensor t0 =
        load_tensor_file((fs::path(cfg.paths.tensors_dir) / "window_000000.eett").string());
    CHECK(t0.dims() == std::vector<std::size_t>{1, 2, 60, 80});
}

TEST_CASE("track then eval closes the loop") {
    const fs::path dir = test_dir();
    PipelineConfig cfg = base_config(dir);
    REQUIRE(cmd_generate(cfg, {}) == 0);
    REQUIRE(cmd_track(cfg, {}) == 0);

    CommandOptions opt;
    const fs::path report = dir / "report.txt";
    const fs::path js = dir / "report.json";
    REQUIRE(cmd_eval(cfg.paths.predictions, cfg.paths.labels, opt, report.string(),
                     js.string()) == 0);
    const std::string text = read_file(report);
    CHECK(text.find("p10_accuracy=") != std::string::npos);
    CHECK(read_file(js).find("mean_euclidean") != std::string::npos);

    SUBCASE("min-p10 gate fails cleanly") {
        opt.min_p10 = 1.01; // unattainable
        CHECK(cmd_eval(cfg.paths.predictions, cfg.paths.labels, opt) == 1);
    }
    SUBCASE("identical files score perfect p10") {
        // labels replayed as predictions
        const LabelSeries labels = parse_label_csv_file(cfg.paths.labels);
        std::vector<PredictionRow> rows;
        for (const LabelRow& r : labels.rows)
            rows.push_back({r.t, r.x, r.y, 1.0});
        const fs::path perfect = dir / "perfect.csv";
        write_prediction_csv_file(perfect.string(), rows);
        opt.min_p10 = 1.0;
        CHECK(cmd_eval(perfect.string(), cfg.paths.labels, opt) == 0);
    }
    SUBCASE("misaligned row counts exit via alignment_error") {
        const fs::path shorter = dir / "short.csv";
        write_prediction_csv_file(shorter.string(), {{0, 1, 1, 1}});
        CHECK_THROWS_AS(cmd_eval(shorter.string(), cfg.paths.labels, opt),
                        alignment_error);
    }
}

TEST_CASE("track falls back to the sensor center when there are no events") {
    const fs::path dir = test_dir();
    PipelineConfig cfg = base_config(dir);
    cfg.trajectory.kind = TrajectoryKind::fixation; // renders zero events
    REQUIRE(cmd_generate(cfg, {}) == 0);
    REQUIRE(cmd_track(cfg, {}) == 0);
    const auto rows = parse_prediction_csv_file(cfg.paths.predictions);
    REQUIRE(rows.size() == 100);
    CHECK(rows[0].x == doctest::Approx(39.5));
    CHECK(rows[0].y == doctest::Approx(29.5));
}

TEST_CASE("augment pipeline applies steps in order") {
    const fs::path dir = test_dir();
    PipelineConfig cfg = base_config(dir);
    REQUIRE(cmd_generate(cfg, {}) == 0);
    cfg.paths.events_out = (dir / "events_aug.csv").string();
    AugmentStep flip;
    flip.op = "spatial_flip_h";
    cfg.augmentations = {flip, flip}; // involution
    REQUIRE(cmd_augment(cfg, {}) == 0);
    CHECK(read_file(cfg.paths.events_out) == read_file(cfg.paths.events));

    AugmentStep cut;
    cut.op = "cutout";
    cut.mask = {0, 0, 80, 60};
    cfg.augmentations = {cut};
    REQUIRE(cmd_augment(cfg, {}) == 0);
    const EventStream emptied = parse_event_csv_file(cfg.paths.events_out, 80, 60);
    CHECK(emptied.events.empty());
}

TEST_CASE("representation_frames windows the stream for streaming inference") {
    const fs::path dir = test_dir();
    PipelineConfig cfg = base_config(dir);
    REQUIRE(cmd_generate(cfg, {}) == 0);
    const EventStream stream = parse_event_csv_file(cfg.paths.events, 80, 60);

    WindowConfig w;
    w.width_us = 10000;
    w.stride_us = 10000;
    RepresentationConfig rep;
    rep.kind = "causal_event_volume";
    rep.t_bins = 1;
    rep.polarity = "two_channel";
    const FrameSequence seq = representation_frames(stream, w, rep);
    CHECK(seq.frames.size() == 100);
    CHECK(seq.frames[0].dims() == std::vector<std::size_t>{2, 60, 80});
    CHECK(seq.times[0] == 0);
    CHECK(seq.times[99] == 990000);

    SUBCASE("stateless kinds parallelize over windows with ordered output") {
        RepresentationConfig rep2;
        rep2.kind = "bina_rep";
        rep2.n_frames = 4;
        const FrameSequence a = representation_frames(stream, w, rep2);
        const FrameSequence b = representation_frames(stream, w, rep2);
        REQUIRE(a.frames.size() == b.frames.size());
        for (std::size_t i = 0; i < a.frames.size(); ++i)
            CHECK(a.frames[i] == b.frames[i]);
    }
    SUBCASE("causal carry chaining rejects overlapping windows") {
        WindowConfig overlapping;
        overlapping.width_us = 20000;
        overlapping.stride_us = 10000;
        CHECK_THROWS_AS(representation_frames(stream, overlapping, rep), config_error);
        RepresentationConfig plain = rep;
        plain.kind = "event_volume";
        CHECK_NOTHROW(representation_frames(stream, overlapping, plain));
    }
    SUBCASE("chained causal windows equal one volume over the whole span") {
        const FrameSequence seq = representation_frames(stream, w, rep);
        const std::size_t n = seq.frames.size();
        REQUIRE(n > 0);
        const Window full{0, static_cast<std::int64_t>(n) * w.width_us};
        const FrameTensor big =
            causal_event_volume(stream, full, n, PolarityMode::two_channel).first;
        const std::size_t frame_size = seq.frames[0].size();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < frame_size; ++j)
                REQUIRE(seq.frames[i][j] == big[i * frame_size + j]);
    }
}
