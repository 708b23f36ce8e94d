#pragma once

#include "evgaze/tensor.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace evgaze {

// Per-cell pupil-presence probability plus cell-relative offsets in [0,1).
struct GridPrediction {
    std::size_t rows = 3;
    std::size_t cols = 4;
    std::vector<double> prob;     // row-major, rows*cols
    std::vector<double> offset_x; // cell-relative [0,1)
    std::vector<double> offset_y;
};

struct PupilPrediction {
    double x = 0.0;
    double y = 0.0;
    double confidence = 0.0;
};

struct LabelRow {
    std::int64_t t = 0;
    double x = 0.0;
    double y = 0.0;
    bool close = false; // 1 = eye closed / blink
};

struct LabelSeries {
    double rate_hz = 100.0;
    std::vector<LabelRow> rows;
};

struct PredictionRow {
    std::int64_t t = 0;
    double x = 0.0;
    double y = 0.0;
    double confidence = 0.0;
};

struct MetricsReport {
    // p-accuracy at p in {1,3,5,10,15}, stored in that order
    static constexpr int kTolerances[5] = {1, 3, 5, 10, 15};
    double p_accuracy[5] = {0, 0, 0, 0, 0};
    double mean_euclidean = 0.0;
    double mean_manhattan = 0.0;
    std::size_t count_evaluated = 0;
    std::size_t count_excluded = 0;

    double p10() const { return p_accuracy[3]; }
    double p15() const { return p_accuracy[4]; }
};

// Builds a GridPrediction from a model head output [3,rows,cols]
// (channel 0 = presence logit, 1 = x offset, 2 = y offset); sigmoid maps
// every channel into (0,1) so the invariants hold for raw network output.
GridPrediction grid_from_tensor(const FrameTensor& head_out);

// argmax cell (ties: smallest row-major index), then
// x = (col + offset_x) * frame_w / cols, y likewise; confidence = max prob.
PupilPrediction grid_decode(const GridPrediction& g, double frame_w, double frame_h);

// 0.5*d^2/beta when |d| < beta, else |d| - 0.5*beta.
double smooth_l1(double d, double beta);

// Focal term for one cell: -(1-p)^gamma log(p) when the pupil is present,
// -p^gamma log(1-p) otherwise. p is clamped to [1e-7, 1-1e-7] first.
double focal_term(double p_hat, bool present, double gamma);

struct GridTruth {
    double x = 0.0; // pupil position in pixels
    double y = 0.0;
    bool valid = true; // eye open and inside the frame
};

// Mean over all grid cells of the focal term, plus SmoothL1 on both offsets
// in the cell that contains the pupil. Invalid frames contribute zero.
double focal_grid_loss(const GridPrediction& pred, const GridTruth& gt, double frame_w,
                       double frame_h, double gamma = 2.0, double beta = 0.11);

// sqrt(mean over pairs of squared Euclidean distance); the squared term
// sums both coordinates.
double rmse_loss(const std::vector<std::pair<double, double>>& preds,
                 const std::vector<std::pair<double, double>>& labels);

struct MotionConsistency {
    double l_mc = 0.0;
    double l_0 = 0.0; // mean distance of positions
    double l_1 = 0.0; // mean distance of one-step differences
};

MotionConsistency motion_consistency_loss(
    const std::vector<std::pair<double, double>>& preds,
    const std::vector<std::pair<double, double>>& labels);

// success iff Euclidean distance <= p. Rows with close=1 are excluded when
// include_closed is false and counted in count_excluded.
MetricsReport evaluate(const std::vector<PupilPrediction>& preds, const LabelSeries& labels,
                       bool include_closed = true);

// ---- CSV / report interfaces ---------------------------------------------
// Labels CSV: header exactly "t,x,y,close"; predictions CSV: "t,x,y,confidence".

LabelSeries parse_label_csv(std::istream& in);
LabelSeries parse_label_csv_file(const std::string& path);
void write_label_csv(std::ostream& out, const LabelSeries& labels);
void write_label_csv_file(const std::string& path, const LabelSeries& labels);

std::vector<PredictionRow> parse_prediction_csv(std::istream& in);
std::vector<PredictionRow> parse_prediction_csv_file(const std::string& path);
void write_prediction_csv(std::ostream& out, const std::vector<PredictionRow>& rows);
void write_prediction_csv_file(const std::string& path,
                               const std::vector<PredictionRow>& rows);

// Flat key=value block, one metric per line.
std::string report_text(const MetricsReport& r);
// Structured JSON with the same fields.
std::string report_json(const MetricsReport& r);

} // namespace evgaze
