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

// Analytic heap-sizing model.
//
// One GC cycle on a heap with live memory L, allocation rate g, collector
// speed s and limit M consists of (M - L) / g seconds of mutator time
// followed by L / s seconds of collection. The amortized cost of the heap
// is therefore
//
//     ratio(M) = (L / s) * (g / (M - L))
//
// and a set of heaps sharing a memory budget minimizes the sum of ratios
// exactly when -d ratio / d M is the same constant c for every heap. Solving
// for M gives the square-root rule M = L + sqrt(L g / (c s)), which only
// needs per-heap quantities.
//
// Units everywhere: MB, seconds, MB/s. The trade-off parameter c is a
// fraction of runtime per MB (1 %/MB == 0.01 / MB).

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "membalancer/errors.hpp"

namespace membalancer {

struct HeapParams {
    double live = 0.0;       ///< L, MB
    double alloc_rate = 0.0; ///< g, MB/s
    double gc_speed = 1.0;   ///< s, MB/s
};

inline void validate(const HeapParams& p) {
    if (!(p.live >= 0.0) || !std::isfinite(p.live))
        throw DomainError("live memory must be finite and >= 0");
    if (!(p.alloc_rate >= 0.0) || !std::isfinite(p.alloc_rate))
        throw DomainError("allocation rate must be finite and >= 0");
    if (!(p.gc_speed > 0.0) || !std::isfinite(p.gc_speed))
        throw DomainError("gc speed must be finite and > 0");
}

/// Exchange rate between memory and GC time, stored as a fraction per MB.
class TradeoffParam {
public:
    static TradeoffParam per_mb(double value) { return TradeoffParam(value); }
    static TradeoffParam percent_per_mb(double value) { return TradeoffParam(value / 100.0); }

    [[nodiscard]] double per_mb() const noexcept { return value_; }
    [[nodiscard]] double percent_per_mb() const noexcept { return value_ * 100.0; }

    friend bool operator==(TradeoffParam, TradeoffParam) = default;

private:
    explicit TradeoffParam(double value) : value_(value) {
        if (!(value > 0.0) || !std::isfinite(value))
            throw DomainError("trade-off parameter c must be finite and > 0");
    }

    double value_;
};

struct Allocation {
    std::vector<double> limits; ///< MB, one per heap
    double total_ratio = 0.0;   ///< objective value at `limits`
};

inline double gc_ratio(const HeapParams& p, double limit) {
    validate(p);
    if (!(limit > p.live))
        throw DomainError("limit below live memory");
    if (p.alloc_rate == 0.0)
        return 0.0;
    return (p.live / p.gc_speed) * (p.alloc_rate / (limit - p.live));
}

/// -d ratio / d limit; non-negative.
inline double ratio_derivative(const HeapParams& p, double limit) {
    validate(p);
    if (!(limit > p.live))
        throw DomainError("limit below live memory");
    const double extra = limit - p.live;
    return p.live * p.alloc_rate / (p.gc_speed * extra * extra);
}

/// Square-root rule: L + sqrt(L g / (c s)).
inline double sqrt_limit(const HeapParams& p, TradeoffParam c) {
    validate(p);
    return p.live + std::sqrt(p.live * p.alloc_rate / (c.per_mb() * p.gc_speed));
}

/// Square-root rule without the t_m >> t_g approximation; the extra term
/// shrinks by s / (s + g).
inline double exact_sqrt_limit(const HeapParams& p, TradeoffParam c) {
    validate(p);
    const double extra = std::sqrt(p.live * p.alloc_rate / (c.per_mb() * p.gc_speed));
    return p.live + (p.gc_speed / (p.gc_speed + p.alloc_rate)) * extra;
}

inline double proportional_limit(const HeapParams& p, double alpha) {
    validate(p);
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw DomainError("proportional alpha must be finite and > 0");
    return (alpha + 1.0) * p.live;
}

/// The exchange rate a proportional rule settles at: g / (s alpha^2 L).
/// It depends on every heap parameter, which is why identically tuned
/// proportional rules disagree on c across heaps.
inline double implied_c_of_proportional(const HeapParams& p, double alpha) {
    validate(p);
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw DomainError("proportional alpha must be finite and > 0");
    if (p.live == 0.0)
        throw DomainError("implied c undefined for zero live memory");
    return p.alloc_rate / (p.gc_speed * alpha * alpha * p.live);
}

inline TradeoffParam weighted_c(TradeoffParam base, double weight) {
    if (!(weight > 0.0) || !std::isfinite(weight))
        throw DomainError("heap weight must be finite and > 0");
    return TradeoffParam::per_mb(base.per_mb() / weight);
}

namespace detail {

inline double total_live(std::span<const HeapParams> heaps) {
    double sum = 0.0;
    for (const auto& h : heaps) {
        validate(h);
        sum += h.live;
    }
    return sum;
}

inline double sum_ratio(std::span<const HeapParams> heaps, std::span<const double> limits) {
    double sum = 0.0;
    for (std::size_t i = 0; i < heaps.size(); ++i) {
        if (heaps[i].alloc_rate > 0.0)
            sum += gc_ratio(heaps[i], limits[i]);
    }
    return sum;
}

} // namespace detail

/// Optimal split of `total_memory` across heaps: every heap gets its live
/// memory plus a share of the remainder proportional to sqrt(L g / s).
/// Heaps that do not allocate get no extra memory; if none allocate, the
/// remainder is split evenly.
inline Allocation closed_form_allocation(std::span<const HeapParams> heaps, double total_memory) {
    if (heaps.empty())
        throw DomainError("allocation needs at least one heap");
    const double live = detail::total_live(heaps);
    if (!(total_memory > live))
        throw InfeasibleError("memory budget does not exceed total live memory");

    std::vector<double> weights;
    weights.reserve(heaps.size());
    double weight_sum = 0.0;
    for (const auto& h : heaps) {
        weights.push_back(std::sqrt(h.live * h.alloc_rate / h.gc_speed));
        weight_sum += weights.back();
    }

    const double spare = total_memory - live;
    Allocation out;
    out.limits.reserve(heaps.size());
    for (std::size_t i = 0; i < heaps.size(); ++i) {
        const double share = weight_sum > 0.0 ? weights[i] / weight_sum
                                              : 1.0 / static_cast<double>(heaps.size());
        out.limits.push_back(heaps[i].live + spare * share);
    }
    out.total_ratio = detail::sum_ratio(heaps, out.limits);
    return out;
}

/// Exhaustive grid search used as the optimality oracle.
///
/// Candidate limits are live_i + k_i * grid_step with k_i >= 1 and
/// sum(k_i) == floor((total_memory - sum(live)) / grid_step), so every
/// candidate uses the budget to within one grid step. Minimizes
/// sum(weight_i * ratio_i) (weights default to 1); ties go to the
/// lexicographically smallest limit vector. The reported total_ratio is
/// the minimized (weighted) objective.
inline Allocation brute_force_allocation(std::span<const HeapParams> heaps, double total_memory,
                                         double grid_step, std::span<const double> weights = {}) {
    const std::size_t n = heaps.size();
    if (n < 2 || n > 4)
        throw DomainError("brute-force allocation supports 2 to 4 heaps");
    if (!(grid_step > 0.0) || !std::isfinite(grid_step))
        throw DomainError("grid step must be finite and > 0");
    if (!weights.empty() && weights.size() != n)
        throw DomainError("weights must match the heap count");
    for (double w : weights) {
        if (!(w > 0.0) || !std::isfinite(w))
            throw DomainError("heap weight must be finite and > 0");
    }
    const double live = detail::total_live(heaps);
    if (!(total_memory > live))
        throw InfeasibleError("memory budget does not exceed total live memory");

    // Small epsilon so budgets that are exact multiples of the step survive
    // the division.
    const double steps_real = (total_memory - live) / grid_step;
    const auto steps = static_cast<std::size_t>(std::floor(steps_real * (1.0 + 1e-12) + 1e-9));
    if (steps < n)
        throw InfeasibleError("grid step too coarse to give every heap memory above its live size");

    // table[i][k] = weighted ratio of heap i with k extra steps (k >= 1).
    const std::size_t max_k = steps - (n - 1);
    std::vector<std::vector<double>> table(n, std::vector<double>(max_k + 1, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        table[i][0] = std::numeric_limits<double>::infinity();
        for (std::size_t k = 1; k <= max_k; ++k) {
            const double limit = heaps[i].live + static_cast<double>(k) * grid_step;
            table[i][k] = heaps[i].alloc_rate > 0.0 ? w * gc_ratio(heaps[i], limit) : 0.0;
        }
    }

    std::vector<std::size_t> current(n, 0), best(n, 0);
    double best_value = std::numeric_limits<double>::infinity();

    // Lexicographic enumeration; the last two coordinates are handled in a
    // flat loop since that is where all the work is.
    auto search = [&](auto&& self, std::size_t depth, std::size_t remaining, double partial) -> void {
        const std::size_t heaps_left = n - depth;
        if (heaps_left == 2) {
            const auto& a = table[depth];
            const auto& b = table[depth + 1];
            for (std::size_t k = 1; k + 1 <= remaining; ++k) {
                const double value = partial + a[k] + b[remaining - k];
                if (value < best_value) {
                    best_value = value;
                    current[depth] = k;
                    current[depth + 1] = remaining - k;
                    best = current;
                }
            }
            return;
        }
        for (std::size_t k = 1; k + (heaps_left - 1) <= remaining; ++k) {
            current[depth] = k;
            self(self, depth + 1, remaining - k, partial + table[depth][k]);
        }
    };
    search(search, 0, steps, 0.0);

    Allocation out;
    out.limits.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.limits.push_back(heaps[i].live + static_cast<double>(best[i]) * grid_step);
    out.total_ratio = best_value;
    return out;
}

} // namespace membalancer
