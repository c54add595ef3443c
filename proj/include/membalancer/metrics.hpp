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

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "membalancer/errors.hpp"

namespace membalancer {

struct SweepPoint {
    double param = 0.0;          ///< c in %/MB or alpha, depending on the sweep
    double avg_heap_usage = 0.0; ///< MB
    double total_gc_time = 0.0;  ///< s
    long gc_count = 0;
    std::string run_id;

    friend bool operator==(const SweepPoint&, const SweepPoint&) = default;
};

using SweepResult = std::vector<SweepPoint>;

/// Weakly better in both coordinates and strictly better in one.
inline bool dominates(const SweepPoint& a, const SweepPoint& b) {
    return a.avg_heap_usage <= b.avg_heap_usage && a.total_gc_time <= b.total_gc_time &&
           (a.avg_heap_usage < b.avg_heap_usage || a.total_gc_time < b.total_gc_time);
}

/// Dominance that requires the strict coordinate to win by at least
/// `margin`, relative to b's value.
inline bool dominates_with_margin(const SweepPoint& a, const SweepPoint& b, double margin) {
    if (!(a.avg_heap_usage <= b.avg_heap_usage && a.total_gc_time <= b.total_gc_time))
        return false;
    return a.avg_heap_usage <= b.avg_heap_usage * (1.0 - margin) ||
           a.total_gc_time <= b.total_gc_time * (1.0 - margin);
}

/// Non-dominated subset sorted by usage (then GC time). Duplicate points
/// are kept once.
inline SweepResult pareto_frontier(const SweepResult& points) {
    SweepResult out;
    for (const auto& p : points) {
        const bool dominated = std::any_of(points.begin(), points.end(),
                                           [&](const SweepPoint& q) { return dominates(q, p); });
        const bool duplicate = std::any_of(out.begin(), out.end(), [&](const SweepPoint& q) {
            return q.avg_heap_usage == p.avg_heap_usage && q.total_gc_time == p.total_gc_time;
        });
        if (!dominated && !duplicate)
            out.push_back(p);
    }
    std::sort(out.begin(), out.end(), [](const SweepPoint& a, const SweepPoint& b) {
        if (a.avg_heap_usage != b.avg_heap_usage)
            return a.avg_heap_usage < b.avg_heap_usage;
        return a.total_gc_time < b.total_gc_time;
    });
    return out;
}

/// Rescales so that the baseline sweep's mean point sits at (1, 1).
inline SweepResult normalize_to_baseline(const SweepResult& points, const SweepResult& baseline) {
    if (baseline.empty())
        throw FitError("cannot normalize against an empty baseline");
    double usage = 0.0, gc = 0.0;
    for (const auto& p : baseline) {
        usage += p.avg_heap_usage;
        gc += p.total_gc_time;
    }
    usage /= static_cast<double>(baseline.size());
    gc /= static_cast<double>(baseline.size());
    if (!(usage > 0.0) || !(gc > 0.0))
        throw FitError("baseline mean must be positive in both coordinates");
    SweepResult out = points;
    for (auto& p : out) {
        p.avg_heap_usage /= usage;
        p.total_gc_time /= gc;
    }
    return out;
}

/// gc_time ~= k / (usage - m0).
struct TradeoffFit {
    double k = 0.0;
    double m0 = 0.0;
    double residual = 0.0; ///< sqrt(SSE / sum y^2)

    [[nodiscard]] double predict(double usage) const { return k / (usage - m0); }
};

namespace detail {

struct FitAt {
    double k = 0.0;
    double sse = std::numeric_limits<double>::infinity();
};

// For a fixed m0 the model is linear in k, so k has a closed form.
inline FitAt fit_k(const SweepResult& points, double m0) {
    double sxy = 0.0, sxx = 0.0;
    for (const auto& p : points) {
        const double x = 1.0 / (p.avg_heap_usage - m0);
        sxy += x * p.total_gc_time;
        sxx += x * x;
    }
    FitAt out;
    out.k = sxy / sxx;
    out.sse = 0.0;
    for (const auto& p : points) {
        const double r = p.total_gc_time - out.k / (p.avg_heap_usage - m0);
        out.sse += r * r;
    }
    return out;
}

} // namespace detail

/// Least-squares hyperbola fit. The offset m0 is parameterized by the gap
/// d = min(usage) - m0 > 0; a log-spaced scan over d brackets the minimum
/// and golden-section search on log d refines it.
inline TradeoffFit fit_tradeoff(const SweepResult& points) {
    std::set<double> distinct;
    double min_usage = std::numeric_limits<double>::infinity();
    double max_usage = -std::numeric_limits<double>::infinity();
    double sum_y2 = 0.0;
    for (const auto& p : points) {
        if (!std::isfinite(p.avg_heap_usage) || !std::isfinite(p.total_gc_time))
            throw FitError("sweep point is not finite");
        distinct.insert(p.avg_heap_usage);
        min_usage = std::min(min_usage, p.avg_heap_usage);
        max_usage = std::max(max_usage, p.avg_heap_usage);
        sum_y2 += p.total_gc_time * p.total_gc_time;
    }
    if (distinct.size() < 3)
        throw FitError("trade-off fit needs at least 3 distinct usage values");
    if (!(sum_y2 > 0.0))
        throw FitError("trade-off fit needs non-zero GC time");

    const double span = max_usage - min_usage;
    const auto sse_at_log_gap = [&](double log_gap) {
        return detail::fit_k(points, min_usage - std::exp(log_gap)).sse;
    };

    constexpr int kScan = 400;
    const double lo = std::log(span * 1e-9);
    const double hi = std::log(span * 1e6 + std::abs(min_usage) * 1e3);
    std::size_t best = 0;
    std::vector<double> grid(kScan + 1), values(kScan + 1);
    for (int i = 0; i <= kScan; ++i) {
        grid[i] = lo + (hi - lo) * i / kScan;
        values[i] = sse_at_log_gap(grid[i]);
        if (values[i] < values[best])
            best = static_cast<std::size_t>(i);
    }

    double a = grid[best == 0 ? 0 : best - 1];
    double b = grid[std::min<std::size_t>(best + 1, kScan)];
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
    double f1 = sse_at_log_gap(x1), f2 = sse_at_log_gap(x2);
    for (int iter = 0; iter < 200 && (b - a) > 1e-15 * std::max(1.0, std::abs(a)); ++iter) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = sse_at_log_gap(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = sse_at_log_gap(x2);
        }
    }
    const double log_gap = f1 <= f2 ? x1 : x2;

    TradeoffFit fit;
    fit.m0 = min_usage - std::exp(log_gap);
    const auto at = detail::fit_k(points, fit.m0);
    fit.k = at.k;
    fit.residual = std::sqrt(at.sse / sum_y2);
    if (!(fit.k > 0.0))
        throw FitError("fitted trade-off has non-positive scale");
    return fit;
}

} // namespace membalancer
