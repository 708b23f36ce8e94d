#include "evgaze/metrics.hpp"

#include "evgaze/common.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace evgaze {

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

std::string fmt_double(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

bool split4(const std::string& line, std::array<std::string_view, 4>& out) {
    std::string_view v(line);
    for (int i = 0; i < 3; ++i) {
        auto pos = v.find(',');
        if (pos == std::string_view::npos)
            return false;
        out[static_cast<std::size_t>(i)] = v.substr(0, pos);
        v.remove_prefix(pos + 1);
    }
    if (v.find(',') != std::string_view::npos)
        return false;
    out[3] = v;
    return true;
}

template <typename T>
bool parse_num(std::string_view sv, T& out) {
    auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), out);
    return ec == std::errc() && ptr == sv.data() + sv.size();
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
}

} // namespace

GridPrediction grid_from_tensor(const FrameTensor& head_out) {
    if (head_out.rank() != 3 || head_out.dims()[0] != 3)
        throw shape_error("grid head output must be [3,rows,cols]");
    GridPrediction g;
    g.rows = head_out.dims()[1];
    g.cols = head_out.dims()[2];
    const std::size_t n = g.rows * g.cols;
    g.prob.resize(n);
    g.offset_x.resize(n);
    g.offset_y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        g.prob[i] = sigmoid(head_out[i]);
        g.offset_x[i] = sigmoid(head_out[n + i]);
        g.offset_y[i] = sigmoid(head_out[2 * n + i]);
    }
    return g;
}

PupilPrediction grid_decode(const GridPrediction& g, double frame_w, double frame_h) {
    const std::size_t n = g.rows * g.cols;
    if (g.prob.size() != n || g.offset_x.size() != n || g.offset_y.size() != n)
        throw shape_error("grid prediction dims inconsistent");
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (g.prob[i] > g.prob[best])
            best = i;
    const std::size_t row = best / g.cols;
    const std::size_t col = best % g.cols;
    PupilPrediction out;
    out.x = (static_cast<double>(col) + g.offset_x[best]) *
            (frame_w / static_cast<double>(g.cols));
    out.y = (static_cast<double>(row) + g.offset_y[best]) *
            (frame_h / static_cast<double>(g.rows));
    out.confidence = g.prob[best];
    return out;
}

double smooth_l1(double d, double beta) {
    if (beta <= 0.0)
        throw config_error("smooth_l1 beta must be positive");
    const double ad = std::abs(d);
    if (ad < beta)
        return 0.5 * d * d / beta;
    return ad - 0.5 * beta;
}

double focal_term(double p_hat, bool present, double gamma) {
    const double p = std::clamp(p_hat, 1e-7, 1.0 - 1e-7);
    if (present)
        return -std::pow(1.0 - p, gamma) * std::log(p);
    return -std::pow(p, gamma) * std::log(1.0 - p);
}

double focal_grid_loss(const GridPrediction& pred, const GridTruth& gt, double frame_w,
                       double frame_h, double gamma, double beta) {
    if (gamma < 0.0)
        throw config_error("focal gamma must be non-negative");
    if (!gt.valid)
        return 0.0;
    const double cell_w = frame_w / static_cast<double>(pred.cols);
    const double cell_h = frame_h / static_cast<double>(pred.rows);
    const std::size_t gt_col = std::min(
        pred.cols - 1, static_cast<std::size_t>(std::max(0.0, std::floor(gt.x / cell_w))));
    const std::size_t gt_row = std::min(
        pred.rows - 1, static_cast<std::size_t>(std::max(0.0, std::floor(gt.y / cell_h))));
    const double off_x = gt.x / cell_w - static_cast<double>(gt_col);
    const double off_y = gt.y / cell_h - static_cast<double>(gt_row);

    double total = 0.0;
    for (std::size_t r = 0; r < pred.rows; ++r) {
        for (std::size_t c = 0; c < pred.cols; ++c) {
            const std::size_t i = r * pred.cols + c;
            const bool present = r == gt_row && c == gt_col;
            total += focal_term(pred.prob[i], present, gamma);
            if (present)
                total += smooth_l1(pred.offset_x[i] - off_x, beta) +
                         smooth_l1(pred.offset_y[i] - off_y, beta);
        }
    }
    return total / static_cast<double>(pred.rows * pred.cols);
}

double rmse_loss(const std::vector<std::pair<double, double>>& preds,
                 const std::vector<std::pair<double, double>>& labels) {
    if (preds.size() != labels.size())
        throw alignment_error("rmse_loss length mismatch");
    if (preds.empty())
        throw alignment_error("rmse_loss needs at least one pair");
    double acc = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double dx = preds[i].first - labels[i].first;
        const double dy = preds[i].second - labels[i].second;
        acc += dx * dx + dy * dy;
    }
    return std::sqrt(acc / static_cast<double>(preds.size()));
}

MotionConsistency motion_consistency_loss(
    const std::vector<std::pair<double, double>>& preds,
    const std::vector<std::pair<double, double>>& labels) {
    if (preds.size() != labels.size())
        throw alignment_error("motion consistency length mismatch");
    if (preds.size() < 2)
        throw alignment_error("motion consistency needs at least 2 frames");
    MotionConsistency out;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double dx = preds[i].first - labels[i].first;
        const double dy = preds[i].second - labels[i].second;
        out.l_0 += std::sqrt(dx * dx + dy * dy);
    }
    out.l_0 /= static_cast<double>(preds.size());
    for (std::size_t i = 1; i < preds.size(); ++i) {
        const double px = preds[i].first - preds[i - 1].first;
        const double py = preds[i].second - preds[i - 1].second;
        const double lx = labels[i].first - labels[i - 1].first;
        const double ly = labels[i].second - labels[i - 1].second;
        const double dx = px - lx;
        const double dy = py - ly;
        out.l_1 += std::sqrt(dx * dx + dy * dy);
    }
    out.l_1 /= static_cast<double>(preds.size() - 1);
    out.l_mc = out.l_0 + out.l_1;
    return out;
}

MetricsReport evaluate(const std::vector<PupilPrediction>& preds, const LabelSeries& labels,
                       bool include_closed) {
    if (preds.size() != labels.rows.size())
        throw alignment_error("prediction and label row counts differ");
    MetricsReport r;
    std::size_t success[5] = {0, 0, 0, 0, 0};
    double sum_l2 = 0.0;
    double sum_l1 = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const LabelRow& row = labels.rows[i];
        if (row.close && !include_closed) {
            ++r.count_excluded;
            continue;
        }
        const double dx = preds[i].x - row.x;
        const double dy = preds[i].y - row.y;
        const double d2 = std::sqrt(dx * dx + dy * dy);
        sum_l2 += d2;
        sum_l1 += std::abs(dx) + std::abs(dy);
        for (int pi = 0; pi < 5; ++pi)
            if (d2 <= MetricsReport::kTolerances[pi])
                ++success[pi];
        ++r.count_evaluated;
    }
    if (r.count_evaluated > 0) {
        for (int pi = 0; pi < 5; ++pi)
            r.p_accuracy[pi] =
                static_cast<double>(success[pi]) / static_cast<double>(r.count_evaluated);
        r.mean_euclidean = sum_l2 / static_cast<double>(r.count_evaluated);
        r.mean_manhattan = sum_l1 / static_cast<double>(r.count_evaluated);
    }
    return r;
}

// ---- CSV --------------------------------------------------------------

LabelSeries parse_label_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        throw io_error("empty labels CSV: missing header");
    strip_cr(line);
    if (line != "t,x,y,close")
        throw io_error("bad labels CSV header: expected 't,x,y,close', got '" + line + "'");
    LabelSeries out;
    std::size_t lineno = 1;
    std::int64_t prev_t = -1;
    std::array<std::string_view, 4> f;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (line.empty())
            continue;
        if (!split4(line, f))
            throw io_error("malformed row at line " + std::to_string(lineno));
        LabelRow row;
        int close = 0;
        if (!parse_num(f[0], row.t) || !parse_num(f[1], row.x) || !parse_num(f[2], row.y) ||
            !parse_num(f[3], close))
            throw io_error("parse failure at line " + std::to_string(lineno));
        if (close != 0 && close != 1)
            throw io_error("close flag must be 0 or 1 at line " + std::to_string(lineno));
        if (row.t <= prev_t)
            throw io_error("label timestamps must strictly increase at line " +
                           std::to_string(lineno));
        row.close = close == 1;
        prev_t = row.t;
        out.rows.push_back(row);
    }
    return out;
}

LabelSeries parse_label_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw io_error("cannot open: " + path);
    return parse_label_csv(in);
}

void write_label_csv(std::ostream& out, const LabelSeries& labels) {
    out << "t,x,y,close\n";
    for (const LabelRow& r : labels.rows)
        out << r.t << ',' << fmt_double(r.x) << ',' << fmt_double(r.y) << ','
            << (r.close ? 1 : 0) << '\n';
    if (!out)
        throw io_error("failed writing labels CSV");
}

void write_label_csv_file(const std::string& path, const LabelSeries& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw io_error("cannot open for writing: " + path);
    write_label_csv(out, labels);
}

std::vector<PredictionRow> parse_prediction_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        throw io_error("empty predictions CSV: missing header");
    strip_cr(line);
    if (line != "t,x,y,confidence")
        throw io_error("bad predictions CSV header: expected 't,x,y,confidence', got '" +
                       line + "'");
    std::vector<PredictionRow> out;
    std::size_t lineno = 1;
    std::array<std::string_view, 4> f;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (line.empty())
            continue;
        if (!split4(line, f))
            throw io_error("malformed row at line " + std::to_string(lineno));
        PredictionRow row;
        if (!parse_num(f[0], row.t) || !parse_num(f[1], row.x) || !parse_num(f[2], row.y) ||
            !parse_num(f[3], row.confidence))
            throw io_error("parse failure at line " + std::to_string(lineno));
        out.push_back(row);
    }
    return out;
}

std::vector<PredictionRow> parse_prediction_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw io_error("cannot open: " + path);
    return parse_prediction_csv(in);
}

void write_prediction_csv(std::ostream& out, const std::vector<PredictionRow>& rows) {
    out << "t,x,y,confidence\n";
    for (const PredictionRow& r : rows)
        out << r.t << ',' << fmt_double(r.x) << ',' << fmt_double(r.y) << ','
            << fmt_double(r.confidence) << '\n';
    if (!out)
        throw io_error("failed writing predictions CSV");
}

void write_prediction_csv_file(const std::string& path,
                               const std::vector<PredictionRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw io_error("cannot open for writing: " + path);
    write_prediction_csv(out, rows);
}

std::string report_text(const MetricsReport& r) {
    std::ostringstream os;
    for (int pi = 0; pi < 5; ++pi)
        os << "p" << MetricsReport::kTolerances[pi] << "_accuracy="
           << fmt_double(r.p_accuracy[pi]) << '\n';
    os << "mean_euclidean=" << fmt_double(r.mean_euclidean) << '\n';
    os << "mean_manhattan=" << fmt_double(r.mean_manhattan) << '\n';
    os << "count_evaluated=" << r.count_evaluated << '\n';
    os << "count_excluded=" << r.count_excluded << '\n';
    return os.str();
}

std::string report_json(const MetricsReport& r) {
    nlohmann::json j;
    for (int pi = 0; pi < 5; ++pi)
        j["p_accuracy"][std::to_string(MetricsReport::kTolerances[pi])] = r.p_accuracy[pi];
    j["mean_euclidean"] = r.mean_euclidean;
    j["mean_manhattan"] = r.mean_manhattan;
    j["count_evaluated"] = r.count_evaluated;
    j["count_excluded"] = r.count_excluded;
    return j.dump(2) + "\n";
}

} // namespace evgaze
