#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "evgaze/common.hpp"
#include "evgaze/metrics.hpp"

#include <cmath>
#include <random>

using namespace evgaze;

namespace {

GridPrediction uniform_grid(std::size_t rows, std::size_t cols, double p) {
    GridPrediction g;
    g.rows = rows;
    g.cols = cols;
    g.prob.assign(rows * cols, p);
    g.offset_x.assign(rows * cols, 0.0);
    g.offset_y.assign(rows * cols, 0.0);
    return g;
}

LabelSeries labels_at(std::initializer_list<LabelRow> rows) {
    LabelSeries s;
    s.rows = rows;
    return s;
}

// per-row brute force over the same success rule
MetricsReport evaluate_oracle(const std::vector<PupilPrediction>& preds,
                              const LabelSeries& labels, bool include_closed) {
    MetricsReport r;
    std::vector<double> dists, manh;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (labels.rows[i].close && !include_closed) {
            r.count_excluded++;
            continue;
        }
        const double dx = preds[i].x - labels.rows[i].x;
        const double dy = preds[i].y - labels.rows[i].y;
        dists.push_back(std::hypot(dx, dy));
        manh.push_back(std::abs(dx) + std::abs(dy));
    }
    r.count_evaluated = dists.size();
    if (dists.empty())
        return r;
    for (int pi = 0; pi < 5; ++pi) {
        std::size_t ok = 0;
        for (double d : dists)
            if (d <= MetricsReport::kTolerances[pi])
                ++ok;
        r.p_accuracy[pi] = static_cast<double>(ok) / dists.size();
    }
    for (double d : dists)
        r.mean_euclidean += d;
    for (double d : manh)
        r.mean_manhattan += d;
    r.mean_euclidean /= dists.size();
    r.mean_manhattan /= dists.size();
    return r;
}

} // namespace

TEST_CASE("grid_decode fixtures") {
    SUBCASE("single cell with centered offsets decodes to the frame center") {
        GridPrediction g = uniform_grid(1, 1, 0.9);
        g.offset_x[0] = 0.5;
        g.offset_y[0] = 0.5;
        const PupilPrediction p = grid_decode(g, 80, 60);
        CHECK(p.x == doctest::Approx(40.0));
        CHECK(p.y == doctest::Approx(30.0));
        CHECK(p.confidence == doctest::Approx(0.9));
    }
    SUBCASE("3x4 grid, argmax at (0,0), zero offsets") {
        GridPrediction g = uniform_grid(3, 4, 0.1);
        g.prob[0] = 0.9;
        const PupilPrediction p = grid_decode(g, 80, 60);
        CHECK(p.x == 0.0);
        CHECK(p.y == 0.0);
    }
    SUBCASE("3x4 grid on 80x60, cell (2,3), offsets (0.5,0.5)") {
        GridPrediction g = uniform_grid(3, 4, 0.1);
        const std::size_t idx = 2 * 4 + 3;
        g.prob[idx] = 0.8;
        g.offset_x[idx] = 0.5;
        g.offset_y[idx] = 0.5;
        const PupilPrediction p = grid_decode(g, 80, 60);
        CHECK(p.x == doctest::Approx(70.0));
        CHECK(p.y == doctest::Approx(50.0));
    }
    SUBCASE("argmax ties break to the smallest row-major index") {
        GridPrediction g = uniform_grid(2, 2, 0.5);
        const PupilPrediction p = grid_decode(g, 40, 40);
        CHECK(p.x == 0.0);
        CHECK(p.y == 0.0);
    }
    SUBCASE("decode is invariant to monotone rescaling of probabilities") {
        std::mt19937_64 rng(4);
        std::uniform_real_distribution<double> u(0.01, 0.99);
        GridPrediction g = uniform_grid(3, 4, 0.0);
        for (auto& v : g.prob)
            v = u(rng);
        for (auto& v : g.offset_x)
            v = u(rng);
        for (auto& v : g.offset_y)
            v = u(rng);
        GridPrediction h = g;
        for (auto& v : h.prob)
            v = v * 0.5 + 0.1; // strictly monotone map
        const PupilPrediction a = grid_decode(g, 80, 60);
        const PupilPrediction b = grid_decode(h, 80, 60);
        CHECK(a.x == b.x);
        CHECK(a.y == b.y);
    }
}

TEST_CASE("smooth_l1 fixtures") {
    CHECK(smooth_l1(0.0, 0.11) == 0.0);
    // both branches agree at the boundary
    CHECK(smooth_l1(0.11, 0.11) == doctest::Approx(0.055).epsilon(1e-9));
    CHECK(smooth_l1(1.0, 0.11) == doctest::Approx(0.945).epsilon(1e-9));
    CHECK(smooth_l1(-1.0, 0.11) == doctest::Approx(0.945).epsilon(1e-9));
    CHECK_THROWS_AS(smooth_l1(1.0, 0.0), config_error);
}

TEST_CASE("focal term fixtures") {
    // -(1-0.5)^2 ln 0.5 = 0.25 ln 2
    CHECK(focal_term(0.5, true, 2.0) == doctest::Approx(0.25 * std::log(2.0)).epsilon(1e-9));
    // corrected sign on the p=0 branch
    CHECK(focal_term(0.5, false, 2.0) ==
          doctest::Approx(0.25 * std::log(2.0)).epsilon(1e-9));
    CHECK(focal_term(0.5, false, 2.0) >= 0.0);
    // saturated predictions stay finite through the clamp
    CHECK(std::isfinite(focal_term(0.0, true, 2.0)));
    CHECK(std::isfinite(focal_term(1.0, false, 2.0)));
}

TEST_CASE("focal_grid_loss behaviour") {
    SUBCASE("perfect prediction drives the loss to ~0") {
        GridPrediction g = uniform_grid(3, 4, 1e-7);
        const std::size_t idx = 1 * 4 + 2;
        g.prob[idx] = 1.0 - 1e-7;
        g.offset_x[idx] = 0.5;
        g.offset_y[idx] = 0.5;
        GridTruth gt;
        gt.x = (2 + 0.5) * 20.0; // cell (1,2) center on 80x60
        gt.y = (1 + 0.5) * 20.0;
        CHECK(focal_grid_loss(g, gt, 80, 60) <= 1e-6);
    }
    SUBCASE("single-cell grid reproduces the focal fixture") {
        GridPrediction g = uniform_grid(1, 1, 0.5);
        g.offset_x[0] = 0.5;
        g.offset_y[0] = 0.5;
        GridTruth gt;
        gt.x = 40.0;
        gt.y = 30.0;
        CHECK(focal_grid_loss(g, gt, 80, 60, 2.0, 0.11) ==
              doctest::Approx(0.25 * std::log(2.0)).epsilon(1e-9));
    }
    SUBCASE("invalid frames contribute zero") {
        GridPrediction g = uniform_grid(3, 4, 0.5);
        GridTruth gt;
        gt.valid = false;
        CHECK(focal_grid_loss(g, gt, 80, 60) == 0.0);
    }
    SUBCASE("loss is non-negative on random inputs") {
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> u(0.01, 0.99);
        for (int trial = 0; trial < 50; ++trial) {
            GridPrediction g = uniform_grid(3, 4, 0.0);
            for (auto& v : g.prob)
                v = u(rng);
            for (auto& v : g.offset_x)
                v = u(rng);
            for (auto& v : g.offset_y)
                v = u(rng);
            GridTruth gt;
            gt.x = u(rng) * 80;
            gt.y = u(rng) * 60;
            CHECK(focal_grid_loss(g, gt, 80, 60) >= 0.0);
        }
    }
}

TEST_CASE("rmse_loss fixtures") {
    using pairs = std::vector<std::pair<double, double>>;
    CHECK(rmse_loss(pairs{{1, 2}}, pairs{{1, 2}}) == 0.0);
    CHECK(rmse_loss(pairs{{3, 4}}, pairs{{0, 0}}) == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(rmse_loss(pairs{{3, 4}, {0, 0}}, pairs{{0, 0}, {0, 0}}) ==
          doctest::Approx(std::sqrt(12.5)).epsilon(1e-9));
    CHECK_THROWS_AS(rmse_loss(pairs{{1, 1}}, pairs{}), alignment_error);
}

TEST_CASE("motion_consistency_loss fixtures") {
    using pairs = std::vector<std::pair<double, double>>;
    SUBCASE("exact predictions give zero everywhere") {
        const pairs p{{1, 1}, {2, 2}, {3, 3}};
        const MotionConsistency m = motion_consistency_loss(p, p);
        CHECK(m.l_0 == 0.0);
        CHECK(m.l_1 == 0.0);
        CHECK(m.l_mc == 0.0);
    }
    SUBCASE("constant offset: L0 = |c|, L1 = 0") {
        const pairs labels{{0, 0}, {1, 0}, {2, 0}};
        pairs preds = labels;
        for (auto& p : preds) {
            p.first += 3.0;
            p.second += 4.0;
        }
        const MotionConsistency m = motion_consistency_loss(preds, labels);
        CHECK(m.l_0 == doctest::Approx(5.0).epsilon(1e-12));
        CHECK(m.l_1 == 0.0);
    }
    SUBCASE("2 frames with delta mismatch (3,4) -> L1 = 5") {
        const pairs labels{{0, 0}, {0, 0}};
        const pairs preds{{0, 0}, {3, 4}};
        const MotionConsistency m = motion_consistency_loss(preds, labels);
        CHECK(m.l_1 == doctest::Approx(5.0).epsilon(1e-9));
        CHECK(m.l_mc == doctest::Approx(m.l_0 + m.l_1).epsilon(1e-12));
    }
    SUBCASE("fewer than 2 frames is an error") {
        CHECK_THROWS_AS(motion_consistency_loss(pairs{{1, 1}}, pairs{{1, 1}}),
                        alignment_error);
    }
}

TEST_CASE("evaluate fixtures") {
    SUBCASE("perfect predictions") {
        const LabelSeries labels =
            labels_at({{0, 10, 10, false}, {10000, 20, 20, false}});
        const std::vector<PupilPrediction> preds{{10, 10, 1}, {20, 20, 1}};
        const MetricsReport r = evaluate(preds, labels);
        for (int pi = 0; pi < 5; ++pi)
            CHECK(r.p_accuracy[pi] == 1.0);
        CHECK(r.mean_euclidean == 0.0);
        CHECK(r.mean_manhattan == 0.0);
        CHECK(r.count_evaluated == 2);
    }
    SUBCASE("single pair at distance 5") {
        const LabelSeries labels = labels_at({{0, 0, 0, false}});
        const std::vector<PupilPrediction> preds{{3, 4, 1}};
        const MetricsReport r = evaluate(preds, labels);
        CHECK(r.p_accuracy[0] == 0.0); // p=1
        CHECK(r.p_accuracy[1] == 0.0); // p=3
        CHECK(r.p_accuracy[2] == 1.0); // p=5, boundary counts as success
        CHECK(r.p_accuracy[3] == 1.0);
        CHECK(r.p_accuracy[4] == 1.0);
        CHECK(r.mean_euclidean == doctest::Approx(5.0).epsilon(1e-12));
        CHECK(r.mean_manhattan == doctest::Approx(7.0).epsilon(1e-12));
    }
    SUBCASE("blink exclusion") {
        const LabelSeries labels = labels_at({{0, 0, 0, false}, {10000, 0, 0, true}});
        const std::vector<PupilPrediction> preds{{0, 0, 1}, {50, 50, 1}};
        const MetricsReport incl = evaluate(preds, labels, true);
        CHECK(incl.count_evaluated == 2);
        CHECK(incl.count_excluded == 0);
        const MetricsReport excl = evaluate(preds, labels, false);
        CHECK(excl.count_evaluated == 1);
        CHECK(excl.count_excluded == 1);
        CHECK(excl.p_accuracy[3] == 1.0);
    }
    SUBCASE("length mismatch is an alignment error") {
        const LabelSeries labels = labels_at({{0, 0, 0, false}});
        CHECK_THROWS_AS(evaluate({}, labels), alignment_error);
    }
}

TEST_CASE("evaluate equals the per-row oracle on random inputs") {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> coord(0.0, 80.0);
    std::uniform_real_distribution<double> noise(-12.0, 12.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng() % 1000;
        LabelSeries labels;
        std::vector<PupilPrediction> preds;
        for (std::size_t i = 0; i < n; ++i) {
            LabelRow row;
            row.t = static_cast<std::int64_t>(i) * 10000;
            row.x = coord(rng);
            row.y = coord(rng) * 0.75;
            row.close = rng() % 10 == 0;
            labels.rows.push_back(row);
            preds.push_back({row.x + noise(rng), row.y + noise(rng), 1.0});
        }
        const bool include_closed = (rng() & 1) != 0;
        const MetricsReport a = evaluate(preds, labels, include_closed);
        const MetricsReport b = evaluate_oracle(preds, labels, include_closed);
        for (int pi = 0; pi < 5; ++pi)
            CHECK(a.p_accuracy[pi] == doctest::Approx(b.p_accuracy[pi]).epsilon(1e-12));
        CHECK(a.mean_euclidean == doctest::Approx(b.mean_euclidean).epsilon(1e-12));
        CHECK(a.mean_manhattan == doctest::Approx(b.mean_manhattan).epsilon(1e-12));
        CHECK(a.count_evaluated == b.count_evaluated);
        CHECK(a.count_excluded == b.count_excluded);

        // monotone in p, and l1 >= l2
        for (int pi = 1; pi < 5; ++pi)
            CHECK(a.p_accuracy[pi] >= a.p_accuracy[pi - 1]);
        CHECK(a.mean_manhattan >= a.mean_euclidean);
    }
}

TEST_CASE("report formats carry every field") {
    MetricsReport r;
    r.p_accuracy[3] = 0.5;
    r.mean_euclidean = 1.25;
    r.mean_manhattan = 2.5;
    r.count_evaluated = 7;
    r.count_excluded = 3;
    const std::string text = report_text(r);
    CHECK(text.find("p10_accuracy=0.5") != std::string::npos);
    CHECK(text.find("mean_euclidean=1.25") != std::string::npos);
    CHECK(text.find("count_excluded=3") != std::string::npos);
    const std::string json = report_json(r);
    CHECK(json.find("\"10\": 0.5") != std::string::npos);
    CHECK(json.find("\"count_evaluated\": 7") != std::string::npos);
}

TEST_CASE("grid_from_tensor maps logits into valid ranges") {
    FrameTensor t({3, 3, 4});
    for (std::size_t i = 0; i < t.size(); ++i)
        t[i] = (i % 7) - 3.0;
    const GridPrediction g = grid_from_tensor(t);
    CHECK(g.rows == 3);
    CHECK(g.cols == 4);
    for (std::size_t i = 0; i < g.prob.size(); ++i) {
        CHECK(g.prob[i] > 0.0);
        CHECK(g.prob[i] < 1.0);
        CHECK(g.offset_x[i] >= 0.0);
        CHECK(g.offset_x[i] < 1.0);
        CHECK(g.offset_y[i] >= 0.0);
        CHECK(g.offset_y[i] < 1.0);
    }
    CHECK_THROWS_AS(grid_from_tensor(FrameTensor({2, 3, 4})), shape_error);
}
