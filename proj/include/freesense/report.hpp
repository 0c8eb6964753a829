#pragma once

#include <freesense/classifier.hpp>
#include <freesense/csi_model.hpp>
#include <freesense/segmentation.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace freesense {

inline void write_subject_sweep(std::ostream& os, std::span<const SubjectSweepRow> rows) {
    os << "subjects,subsets,probes,mean_accuracy,min_accuracy,max_accuracy\n";
    for (const auto& r : rows)
        os << r.subjects << ',' << r.subsets << ',' << r.probes << ',' << csv::format_exact(r.mean_accuracy) << ','
           << csv::format_exact(r.min_accuracy) << ',' << csv::format_exact(r.max_accuracy) << '\n';
}

inline void write_train_sweep(std::ostream& os, std::span<const TrainSizeRow> rows) {
    os << "train,probes,accuracy\n";
    for (const auto& r : rows) os << r.train << ',' << r.probes << ',' << csv::format_exact(r.accuracy) << '\n';
}

/// Rows are true subjects, columns predictions; `no_feature` counts probes
/// that never produced a usable segment.
inline void write_confusion(std::ostream& os, const EvalReport& report) {
    os << "subject";
    for (const auto& l : report.labels) os << ',' << l;
    os << ",no_feature\n";
    for (std::size_t i = 0; i < report.labels.size(); ++i) {
        os << report.labels[i];
        for (auto c : report.confusion[i]) os << ',' << c;
        os << '\n';
    }
}

/// Per-probe results; `distance` is the nearest neighbour's.
inline void write_predictions(std::ostream& os, std::span<const ProbeResult> probes) {
    os << "subject,index,direction,predicted,distance\n";
    for (const auto& p : probes) {
        os << p.subject << ',' << p.index << ',' << p.direction << ',';
        if (p.result) os << p.result->predicted << ',' << csv::format_exact(p.result->neighbors.front().distance);
        else os << ',';
        os << '\n';
    }
}

/// Accuracy per walking-direction tag, for corpora whose labels carry one.
inline void write_direction_accuracy(std::ostream& os, std::span<const ProbeResult> probes) {
    std::map<std::string, std::pair<std::size_t, std::size_t>> tally; // direction -> (correct, total)
    for (const auto& p : probes) {
        auto& [correct, total] = tally[p.direction];
        ++total;
        if (p.result && p.result->predicted == p.subject) ++correct;
    }
    os << "direction,probes,accuracy\n";
    for (const auto& [dir, t] : tally)
        os << dir << ',' << t.second << ','
           << csv::format_exact(static_cast<double>(t.first) / static_cast<double>(t.second)) << '\n';
}

struct SegmentationRow {
    std::string method;
    DetectionCounts counts;
};

inline void write_segmentation_rows(std::ostream& os, std::span<const SegmentationRow> rows) {
    os << "method,correct,false_detections,truths,detections,detection_ratio,error_ratio\n";
    for (const auto& r : rows)
        os << r.method << ',' << r.counts.correct << ',' << r.counts.false_detections << ',' << r.counts.truths << ','
           << r.counts.detections << ',' << csv::format_exact(r.counts.detection_ratio()) << ','
           << csv::format_exact(r.counts.error_ratio()) << '\n';
}

// ---------------------------------------------------------------------------
// SVG line charts
// ---------------------------------------------------------------------------

struct ChartSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct ChartSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::optional<std::pair<double, double>> y_range; // fixed axis range
};

namespace detail {

inline std::string fmt(double v, int decimals = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

inline std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace detail

inline void write_line_chart(std::ostream& os, const ChartSpec& spec, std::span<const ChartSeries> series) {
    constexpr double width = 640, height = 400, left = 70, right = 20, top = 40, bottom = 60;
    const double pw = width - left - right, ph = height - top - bottom;

    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    bool any = false;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!any) { x0 = x1 = s.x[i]; y0 = y1 = s.y[i]; any = true; }
            x0 = std::min(x0, s.x[i]); x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]); y1 = std::max(y1, s.y[i]);
        }
    if (spec.y_range) std::tie(y0, y1) = *spec.y_range;
    if (x1 <= x0) { x0 -= 0.5; x1 += 0.5; }
    if (y1 <= y0) { y0 -= 0.5; y1 += 0.5; }
    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

    using detail::fmt;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width, 0) << "\" height=\"" << fmt(height, 0)
       << "\" viewBox=\"0 0 " << fmt(width, 0) << ' ' << fmt(height, 0) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << fmt(width / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
       << detail::xml_escape(spec.title) << "</text>\n";

    for (int t = 0; t <= 5; ++t) {
        const double y = y0 + (y1 - y0) * t / 5.0;
        os << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(py(y)) << "\" x2=\"" << fmt(left + pw) << "\" y2=\""
           << fmt(py(y)) << "\" stroke=\"#ddd\"/>\n";
        os << "<text x=\"" << fmt(left - 6) << "\" y=\"" << fmt(py(y) + 4) << "\" text-anchor=\"end\">" << fmt(y, 2)
           << "</text>\n";
    }
    std::vector<double> ticks;
    for (const auto& s : series) ticks.insert(ticks.end(), s.x.begin(), s.x.end());
    std::ranges::sort(ticks);
    ticks.erase(std::unique(ticks.begin(), ticks.end()), ticks.end());
    for (double x : ticks)
        os << "<text x=\"" << fmt(px(x)) << "\" y=\"" << fmt(top + ph + 18) << "\" text-anchor=\"middle\">"
           << fmt(x, x == std::round(x) ? 0 : 2) << "</text>\n";
    os << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(top + ph) << "\" x2=\"" << fmt(left + pw) << "\" y2=\""
       << fmt(top + ph) << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(top) << "\" x2=\"" << fmt(left) << "\" y2=\""
       << fmt(top + ph) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"" << fmt(height - 14) << "\" text-anchor=\"middle\">"
       << detail::xml_escape(spec.x_label) << "</text>\n";
    os << "<text x=\"16\" y=\"" << fmt(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << fmt(top + ph / 2) << ")\">" << detail::xml_escape(spec.y_label) << "</text>\n";

    static constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* colour = palette[s % std::size(palette)];
        os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < series[s].x.size(); ++i)
            os << (i ? " " : "") << fmt(px(series[s].x[i])) << ',' << fmt(py(series[s].y[i]));
        os << "\"/>\n";
        for (std::size_t i = 0; i < series[s].x.size(); ++i)
            os << "<circle cx=\"" << fmt(px(series[s].x[i])) << "\" cy=\"" << fmt(py(series[s].y[i]))
               << "\" r=\"3\" fill=\"" << colour << "\"/>\n";
        os << "<text x=\"" << fmt(left + pw - 4) << "\" y=\"" << fmt(top + 14 + 16.0 * static_cast<double>(s))
           << "\" text-anchor=\"end\" fill=\"" << colour << "\">" << detail::xml_escape(series[s].name) << "</text>\n";
    }
    os << "</svg>\n";
}

} // namespace freesense
