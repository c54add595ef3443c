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

// Online square-root heap limit controller plus the baseline rules it is
// compared against.
//
// The controller keeps exponentially smoothed numerators and denominators
// for the allocation rate (fed by heartbeats and by GCs) and the collection
// speed (fed by GCs). Smoothing the two halves of each rate separately
// keeps long intervals from being drowned out by short ones.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>

#include "membalancer/errors.hpp"
#include "membalancer/model.hpp"

namespace membalancer {

struct ControllerConfig {
    TradeoffParam c = TradeoffParam::percent_per_mb(1.0);
    double alpha_g = 0.95;         ///< smoothing for allocation samples
    double alpha_s = 0.5;          ///< smoothing for collection samples
    double e_min = 2.0;            ///< MB, floor on the extra term
    double m_nursery = 10.0;       ///< MB, added on top of the computed limit
    double heartbeat_period = 1.0; ///< s

    void validate() const {
        if (!(alpha_g >= 0.0 && alpha_g < 1.0))
            throw ConfigError("alpha_g must lie in [0, 1)");
        if (!(alpha_s >= 0.0 && alpha_s < 1.0))
            throw ConfigError("alpha_s must lie in [0, 1)");
        if (!(e_min >= 0.0) || !std::isfinite(e_min))
            throw ConfigError("e_min must be finite and >= 0");
        if (!(m_nursery >= 0.0) || !std::isfinite(m_nursery))
            throw ConfigError("m_nursery must be finite and >= 0");
        if (!(heartbeat_period > 0.0) || !std::isfinite(heartbeat_period))
            throw ConfigError("heartbeat period must be finite and > 0");
    }
};

struct ControllerState {
    double s_m_star = 0.0; ///< MB processed per GC, smoothed
    double s_t_star = 0.0; ///< s per GC, smoothed
    double L_star = 0.0;   ///< MB live after the last GC
    double g_m_star = 0.0; ///< MB allocated per sample, smoothed
    double g_t_star = 0.0; ///< s per sample, smoothed
    double published_limit = 0.0;
    bool seen_gc = false;
    bool seen_heartbeat = false;

    [[nodiscard]] bool warm() const noexcept { return seen_gc && seen_heartbeat; }

    /// Smoothed allocation rate, MB/s (0 before the first sample).
    [[nodiscard]] double alloc_rate() const noexcept {
        return g_t_star > 0.0 ? g_m_star / g_t_star : 0.0;
    }
    /// Smoothed collection speed, MB/s (0 before the first GC).
    [[nodiscard]] double gc_speed() const noexcept {
        return s_t_star > 0.0 ? s_m_star / s_t_star : 0.0;
    }
};

namespace detail {
inline double ewma(double alpha, double previous, double sample) {
    return alpha * previous + (1.0 - alpha) * sample;
}
} // namespace detail

/// Folds one completed collection into the state. `bytes_processed` is the
/// amount of memory the collector worked through in `gc_duration`; the
/// ratio of their smoothed values is the collector speed estimate.
[[nodiscard]] inline ControllerState on_gc(ControllerState state, const ControllerConfig& cfg,
                                           double bytes_processed, double gc_duration,
                                           double live_after) {
    if (!(gc_duration > 0.0) || !std::isfinite(gc_duration))
        throw MeasurementError("gc duration must be finite and > 0");
    if (!(bytes_processed >= 0.0) || !std::isfinite(bytes_processed))
        throw MeasurementError("bytes processed must be finite and >= 0");
    if (!(live_after >= 0.0) || !std::isfinite(live_after))
        throw MeasurementError("live memory must be finite and >= 0");
    state.s_m_star = detail::ewma(cfg.alpha_s, state.s_m_star, bytes_processed);
    state.s_t_star = detail::ewma(cfg.alpha_s, state.s_t_star, gc_duration);
    state.L_star = live_after;
    state.seen_gc = true;
    return state;
}

[[nodiscard]] inline ControllerState on_heartbeat(ControllerState state, const ControllerConfig& cfg,
                                                  double bytes_allocated, double interval) {
    if (!(interval > 0.0) || !std::isfinite(interval))
        throw MeasurementError("heartbeat interval must be finite and > 0");
    if (!(bytes_allocated >= 0.0) || !std::isfinite(bytes_allocated))
        throw MeasurementError("bytes allocated must be finite and >= 0");
    state.g_m_star = detail::ewma(cfg.alpha_g, state.g_m_star, bytes_allocated);
    state.g_t_star = detail::ewma(cfg.alpha_g, state.g_t_star, interval);
    state.seen_heartbeat = true;
    return state;
}

namespace detail {

// sqrt((L / c) * g / s) with g and s as ratios of smoothed halves.
inline double extra_memory(const ControllerState& state, const ControllerConfig& cfg) {
    if (state.L_star == 0.0 || state.g_m_star == 0.0)
        return 0.0;
    if (state.s_m_star == 0.0)
        return std::numeric_limits<double>::infinity();
    const double g = state.g_m_star / state.g_t_star;
    const double s = state.s_m_star / state.s_t_star;
    return std::sqrt(state.L_star / cfg.c.per_mb() * g / s);
}

inline double finish_limit(ControllerState& state, const ControllerConfig& cfg, double extra) {
    if (!state.warm())
        throw NotWarmError("heap limit requested before one GC and one heartbeat were observed");
    const double limit = state.L_star + std::max(extra, cfg.e_min) + cfg.m_nursery;
    if (!std::isfinite(limit))
        throw MeasurementError("heap limit is not finite; collector speed estimate is zero");
    state.published_limit = limit;
    return limit;
}

} // namespace detail

/// L* + max(E, e_min) + m_nursery, published into `state`.
inline double compute_limit(ControllerState& state, const ControllerConfig& cfg) {
    return detail::finish_limit(state, cfg, detail::extra_memory(state, cfg));
}

/// Same as compute_limit with the extra term scaled by s / (s + g).
inline double compute_exact_limit(ControllerState& state, const ControllerConfig& cfg) {
    double extra = detail::extra_memory(state, cfg);
    const double g = state.alloc_rate();
    const double s = state.gc_speed();
    if (s > 0.0)
        extra *= s / (s + g);
    return detail::finish_limit(state, cfg, extra);
}

/// Default limit before the estimators are warm.
inline double initial_limit(const ControllerConfig& cfg, double initial_live) {
    return initial_live + cfg.e_min + cfg.m_nursery;
}

/// Heap limit readable from another thread while a single writer updates it.
class PublishedLimit {
public:
    explicit PublishedLimit(double initial = 0.0) : value_(initial) {}

    void store(double limit) noexcept { value_.store(limit, std::memory_order_release); }
    [[nodiscard]] double load() const noexcept { return value_.load(std::memory_order_acquire); }

private:
    std::atomic<double> value_;
};

// ---------------------------------------------------------------------------
// Heap limit rules

struct SquareRootRule {
    ControllerConfig config;
};

struct ExactSquareRootRule {
    ControllerConfig config;
};

/// M = (alpha + 1) L.
struct ProportionalRule {
    double alpha = 1.0;
};

/// Steers the observed GC time fraction toward `rho` by scaling the
/// previous limit up or down by (1 + adjust_gain) after every collection.
/// Capped at (cap_alpha + 1) L and floored at L + min_extra.
struct GcTimeTargetRule {
    double rho = 0.03;
    double adjust_gain = 0.1;
    double cap_alpha = 3.0;
    double min_extra = 2.0;
};

/// M = L + k sqrt(L).
struct RacketRule {
    double k = 2.0;
};

struct FixedRule {
    double limit = 0.0;
};

using HeapLimitRule = std::variant<SquareRootRule, ExactSquareRootRule, ProportionalRule,
                                   GcTimeTargetRule, RacketRule, FixedRule>;

inline std::string_view rule_name(const HeapLimitRule& rule) {
    constexpr std::string_view names[] = {"sqrt",           "exact-sqrt", "proportional",
                                          "gc-time-target", "racket",     "fixed"};
    return names[rule.index()];
}

inline void validate(const HeapLimitRule& rule) {
    std::visit(
        [](const auto& r) {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, SquareRootRule> || std::is_same_v<T, ExactSquareRootRule>) {
                r.config.validate();
            } else if constexpr (std::is_same_v<T, ProportionalRule>) {
                if (!(r.alpha > 0.0) || !std::isfinite(r.alpha))
                    throw ConfigError("proportional alpha must be finite and > 0");
            } else if constexpr (std::is_same_v<T, GcTimeTargetRule>) {
                if (!(r.rho > 0.0 && r.rho < 1.0))
                    throw ConfigError("gc-time-target rho must lie in (0, 1)");
                if (!(r.adjust_gain > 0.0) || !std::isfinite(r.adjust_gain))
                    throw ConfigError("gc-time-target adjust_gain must be finite and > 0");
                if (!(r.cap_alpha > 0.0) || !std::isfinite(r.cap_alpha))
                    throw ConfigError("gc-time-target cap_alpha must be finite and > 0");
                if (!(r.min_extra >= 0.0) || !std::isfinite(r.min_extra))
                    throw ConfigError("gc-time-target min_extra must be finite and >= 0");
            } else if constexpr (std::is_same_v<T, RacketRule>) {
                if (!(r.k > 0.0) || !std::isfinite(r.k))
                    throw ConfigError("racket k must be finite and > 0");
            } else {
                if (!(r.limit > 0.0) || !std::isfinite(r.limit))
                    throw ConfigError("fixed limit must be finite and > 0");
            }
        },
        rule);
}

/// Estimator settings a rule runs with. Baselines still track g and s for
/// logging, using the default smoothing constants.
inline ControllerConfig estimator_config(const HeapLimitRule& rule) {
    if (const auto* r = std::get_if<SquareRootRule>(&rule))
        return r->config;
    if (const auto* r = std::get_if<ExactSquareRootRule>(&rule))
        return r->config;
    return ControllerConfig{};
}

enum class RuleTrigger { gc, heartbeat };

/// What a rule may look at besides the estimator state.
struct RuleContext {
    RuleTrigger trigger = RuleTrigger::gc;
    double previous_limit = 0.0; ///< MB
    double total_gc_time = 0.0;  ///< s, this heap
    double elapsed_time = 0.0;   ///< s of wall clock since the heap started
};

/// Limit before any GC has been observed, given the starting live size.
inline double initial_limit(const HeapLimitRule& rule, double initial_live) {
    return std::visit(
        [&](const auto& r) -> double {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, SquareRootRule> || std::is_same_v<T, ExactSquareRootRule>)
                return initial_limit(r.config, initial_live);
            else if constexpr (std::is_same_v<T, ProportionalRule>)
                return (r.alpha + 1.0) * initial_live;
            else if constexpr (std::is_same_v<T, GcTimeTargetRule>)
                return initial_live + r.min_extra + ControllerConfig{}.m_nursery;
            else if constexpr (std::is_same_v<T, RacketRule>)
                return initial_live + r.k * std::sqrt(initial_live);
            else
                return r.limit;
        },
        rule);
}

/// Recomputes the heap limit for `rule`, publishing it into `state`.
/// Throws NotWarmError for square-root rules that are not warm yet.
inline double apply_rule(const HeapLimitRule& rule, ControllerState& state, const RuleContext& ctx) {
    const double live = state.L_star;
    const double limit = std::visit(
        [&](const auto& r) -> double {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, SquareRootRule>) {
                return compute_limit(state, r.config);
            } else if constexpr (std::is_same_v<T, ExactSquareRootRule>) {
                return compute_exact_limit(state, r.config);
            } else if constexpr (std::is_same_v<T, ProportionalRule>) {
                return (r.alpha + 1.0) * live;
            } else if constexpr (std::is_same_v<T, GcTimeTargetRule>) {
                if (ctx.trigger != RuleTrigger::gc)
                    return ctx.previous_limit;
                const double fraction = ctx.elapsed_time > 0.0 ? ctx.total_gc_time / ctx.elapsed_time : 0.0;
                double next = fraction > r.rho ? ctx.previous_limit * (1.0 + r.adjust_gain)
                                               : ctx.previous_limit / (1.0 + r.adjust_gain);
                next = std::min(next, (r.cap_alpha + 1.0) * live);
                return std::max(next, live + r.min_extra);
            } else if constexpr (std::is_same_v<T, RacketRule>) {
                return live + r.k * std::sqrt(live);
            } else {
                return r.limit;
            }
        },
        rule);
    state.published_limit = limit;
    return limit;
}

} // namespace membalancer
