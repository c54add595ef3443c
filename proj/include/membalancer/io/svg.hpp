// Copyright 2026 The membalancer-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Minimal hand-written SVG plots with a fixed 640x480 viewBox.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "membalancer/io/csv.hpp"
#include "membalancer/metrics.hpp"
#include "membalancer/simulator.hpp"

namespace membalancer::svg {

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
    bool line = false;
};

struct Plot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
};

namespace detail {

inline constexpr double kWidth = 640, kHeight = 480;
inline constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;
inline constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                          "#9467bd", "#8c564b", "#e377c2", "#17becf"};

inline std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        default: out += ch;
        }
    }
    return out;
}

} // namespace detail

inline void write(std::ostream& out, const Plot& plot) {
    using namespace detail;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : plot.series) {
        for (const auto& [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y))
                continue;
            x0 = std::min(x0, x), x1 = std::max(x1, x);
            y0 = std::min(y0, y), y1 = std::max(y1, y);
        }
    }
    if (!(x0 <= x1)) {
        x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    }
    y0 = std::min(y0, 0.0);
    if (x1 == x0)
        x1 = x0 + 1;
    if (y1 == y0)
        y1 = y0 + 1;
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto sx = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
    auto sy = [&](double y) { return kTop + ph - (y - y0) / (y1 - y0) * ph; };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 640 480\" width=\"640\" height=\"480\">\n";
    out << "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
    out << "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << escape(plot.title) << "</text>\n";
    out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
        out << "<text x=\"" << sx(xv) << "\" y=\"" << kHeight - kBottom + 16
            << "\" text-anchor=\"middle\" font-size=\"11\">" << tick(xv) << "</text>\n";
        out << "<text x=\"" << kLeft - 6 << "\" y=\"" << sy(yv) + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
            << tick(yv) << "</text>\n";
    }
    out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\" font-size=\"13\">"
        << escape(plot.x_label) << "</text>\n";
    out << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
        << kTop + ph / 2 << ")\">" << escape(plot.y_label) << "</text>\n";

    std::size_t longest = 0;
    for (const auto& s : plot.series)
        longest = std::max(longest, s.label.size());
    const double legend_w = 7.0 * static_cast<double>(longest) + 12.0;
    const double legend_h = 16.0 * static_cast<double>(plot.series.size()) + 6.0;

    for (std::size_t i = 0; i < plot.series.size(); ++i) {
        const auto& s = plot.series[i];
        const char* color = kColors[i % std::size(kColors)];
        if (s.line) {
            out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            for (const auto& [x, y] : s.points) {
                if (std::isfinite(x) && std::isfinite(y) && y >= y0 && y <= y1)
                    out << sx(x) << ',' << sy(y) << ' ';
            }
            out << "\"/>\n";
        } else {
            for (const auto& [x, y] : s.points) {
                if (std::isfinite(x) && std::isfinite(y))
                    out << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"3.5\" fill=\"" << color
                        << "\"/>\n";
            }
        }
    }
    out << "<rect x=\"" << kLeft + pw - 2 - legend_w << "\" y=\"" << kTop + 2 << "\" width=\"" << legend_w
        << "\" height=\"" << legend_h << "\" fill=\"white\" fill-opacity=\"0.85\"/>\n";
    for (std::size_t i = 0; i < plot.series.size(); ++i) {
        out << "<text x=\"" << kLeft + pw - 8 << "\" y=\"" << kTop + 16 + 16 * i
            << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << kColors[i % std::size(kColors)] << "\">"
            << escape(plot.series[i].label) << "</text>\n";
    }
    out << "</svg>\n";
}

/// Usage horizontal, GC time vertical; optional fitted hyperbola per series.
inline Plot sweep_plot(const std::vector<std::pair<std::string, SweepResult>>& sweeps, bool with_fit) {
    Plot plot{"GC time vs. average heap usage", "average heap usage (MB)", "total GC time (s)", {}};
    for (const auto& [label, points] : sweeps) {
        Series s{label, {}, false};
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& p : points) {
            s.points.emplace_back(p.avg_heap_usage, p.total_gc_time);
            lo = std::min(lo, p.avg_heap_usage);
            hi = std::max(hi, p.avg_heap_usage);
        }
        plot.series.push_back(std::move(s));
        if (!with_fit)
            continue;
        try {
            const auto fit = fit_tradeoff(points);
            Series curve{label + " fit", {}, true};
            for (int i = 0; i <= 100; ++i) {
                const double u = lo + (hi - lo) * i / 100.0;
                curve.points.emplace_back(u, fit.predict(u));
            }
            plot.series.push_back(std::move(curve));
        } catch (const FitError&) {
            // Too few distinct points; plot the scatter only.
        }
    }
    return plot;
}

/// Usage and limit over time, one pair of lines per heap.
inline Plot timeline_plot(const std::vector<LogRecord>& log) {
    Plot plot{"heap usage and limit over time", "time (s)", "memory (MB)", {}};
    std::map<int, std::pair<Series, Series>> by_heap;
    for (const auto& r : log) {
        auto& [usage, limit] = by_heap[r.heap_id];
        if (usage.label.empty()) {
            usage = {"heap " + std::to_string(r.heap_id) + " usage", {}, true};
            limit = {"heap " + std::to_string(r.heap_id) + " limit", {}, true};
        }
        usage.points.emplace_back(r.time_s, r.usage_mb);
        limit.points.emplace_back(r.time_s, r.limit_mb);
    }
    for (auto& [id, pair] : by_heap) {
        plot.series.push_back(std::move(pair.first));
        plot.series.push_back(std::move(pair.second));
    }
    return plot;
}

} // namespace membalancer::svg
