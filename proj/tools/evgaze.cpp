#include "evgaze/commands.hpp"
#include "evgaze/common.hpp"
#include "evgaze/config.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>

using namespace evgaze;

int main(int argc, char** argv) {
    configure_threads();

    CLI::App app{"evgaze — event-based eye-tracking toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    CommandOptions opt;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", config_path, "pipeline config (JSON)");
        if (needs_config)
            c->required();
        sub->add_option("--seed", seed, "override the config seed")
            ->each([&](const std::string&) { seed_set = true; });
    };

    CLI::App* gen = app.add_subcommand("generate", "synthesize events + labels");
    add_common(gen, true);
    CLI::App* aug = app.add_subcommand("augment", "apply event augmentations");
    add_common(aug, true);
    CLI::App* rep = app.add_subcommand("represent", "events -> tensor files");
    add_common(rep, true);
    CLI::App* inf = app.add_subcommand("infer", "streaming inference -> predictions");
    add_common(inf, true);
    inf->add_flag("--offline", opt.offline, "run the whole sequence offline");
    CLI::App* trk = app.add_subcommand("track", "centroid baseline -> predictions");
    add_common(trk, true);

    std::string pred_path, label_path, report_path, json_path;
    double min_p10 = 0.0;
    bool min_p10_set = false;
    CLI::App* evl = app.add_subcommand("eval", "score predictions against labels");
    evl->add_option("predictions", pred_path, "predictions CSV")->required();
    evl->add_option("labels", label_path, "labels CSV")->required();
    evl->add_flag("--exclude-blinks", opt.exclude_blinks,
                  "drop rows where the eye is closed");
    evl->add_option("--min-p10", min_p10, "fail when p10 accuracy is below this")
        ->each([&](const std::string&) { min_p10_set = true; });
    evl->add_option("--report", report_path, "write the key=value report here");
    evl->add_option("--json", json_path, "write the JSON report here");

    CLI::App* ben = app.add_subcommand("bench", "latency and MACs, dense vs sparse");
    add_common(ben, true);

    CLI11_PARSE(app, argc, argv);

    if (seed_set)
        opt.seed = seed;
    if (min_p10_set)
        opt.min_p10 = min_p10;

    try {
        if (evl->parsed())
            return cmd_eval(pred_path, label_path, opt, report_path, json_path);

        PipelineConfig cfg = load_config(config_path);
        if (opt.seed)
            cfg.seed = *opt.seed;
        if (gen->parsed())
            return cmd_generate(cfg, opt);
        if (aug->parsed())
            return cmd_augment(cfg, opt);
        if (rep->parsed())
            return cmd_represent(cfg, opt);
        if (inf->parsed())
            return cmd_infer(cfg, opt);
        if (trk->parsed())
            return cmd_track(cfg, opt);
        if (ben->parsed())
            return cmd_bench(cfg, opt);
    } catch (const config_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const io_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const shape_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const alignment_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
