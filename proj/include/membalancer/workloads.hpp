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
#include <charconv>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "membalancer/errors.hpp"

namespace membalancer {

/// Constant-rate stretch of mutator behavior. Live memory during the phase
/// is base_live + leak_rate * (time since phase start).
struct Phase {
    double duration = 1.0;   ///< s
    double alloc_rate = 0.0; ///< MB/s
    double base_live = 0.0;  ///< MB
    double leak_rate = 0.0;  ///< MB/s, retained part of the allocation
    double gc_speed = 1.0;   ///< MB/s

    friend bool operator==(const Phase&, const Phase&) = default;
};

struct WorkloadSpec {
    std::string name;
    std::vector<Phase> phases;
    int repeat = 1; ///< the phase list runs this many times back to back

    friend bool operator==(const WorkloadSpec&, const WorkloadSpec&) = default;
};

inline void validate(const WorkloadSpec& spec) {
    if (spec.phases.empty())
        throw ConfigError("workload '" + spec.name + "' has no phases");
    if (spec.repeat < 1)
        throw ConfigError("workload '" + spec.name + "' repeat count must be >= 1");
    for (const auto& p : spec.phases) {
        if (!(p.duration > 0.0) || !std::isfinite(p.duration))
            throw ConfigError("workload '" + spec.name + "': phase duration must be finite and > 0");
        if (!(p.alloc_rate >= 0.0) || !std::isfinite(p.alloc_rate))
            throw ConfigError("workload '" + spec.name + "': negative allocation rate");
        if (!(p.base_live >= 0.0) || !std::isfinite(p.base_live))
            throw ConfigError("workload '" + spec.name + "': negative live memory");
        if (!(p.leak_rate >= 0.0) || !std::isfinite(p.leak_rate))
            throw ConfigError("workload '" + spec.name + "': negative leak rate");
        // Leaked memory is allocated memory that stays reachable.
        if (p.leak_rate > p.alloc_rate)
            throw ConfigError("workload '" + spec.name + "': leak rate exceeds allocation rate");
        if (!(p.gc_speed > 0.0) || !std::isfinite(p.gc_speed))
            throw ConfigError("workload '" + spec.name + "': gc speed must be finite and > 0");
    }
}

inline double total_duration(const WorkloadSpec& spec) {
    double sum = 0.0;
    for (const auto& p : spec.phases)
        sum += p.duration;
    return sum * spec.repeat;
}

struct TimedPhase {
    double start = 0.0;
    Phase phase;
};

/// The phase schedule with repeats unrolled.
inline std::vector<TimedPhase> unrolled_phases(const WorkloadSpec& spec) {
    std::vector<TimedPhase> out;
    out.reserve(spec.phases.size() * static_cast<std::size_t>(std::max(spec.repeat, 0)));
    double start = 0.0;
    for (int r = 0; r < spec.repeat; ++r) {
        for (const auto& p : spec.phases) {
            out.push_back({start, p});
            start += p.duration;
        }
    }
    return out;
}

/// Phases that begin before `horizon` seconds.
inline std::vector<TimedPhase> phases_within(const WorkloadSpec& spec, double horizon) {
    auto all = unrolled_phases(spec);
    std::vector<TimedPhase> out;
    for (const auto& tp : all) {
        if (tp.start < horizon)
            out.push_back(tp);
    }
    return out;
}

namespace detail {

// Index of the phase in effect at t; the last phase is held past the end.
inline std::size_t phase_index_at(const std::vector<TimedPhase>& phases, double t) {
    std::size_t idx = 0;
    while (idx + 1 < phases.size() && phases[idx + 1].start <= t)
        ++idx;
    return idx;
}

inline double live_in_phase(const TimedPhase& tp, double t) {
    return tp.phase.base_live + tp.phase.leak_rate * (t - tp.start);
}

} // namespace detail

inline double live_memory_at(const WorkloadSpec& spec, double t) {
    validate(spec);
    const double end = total_duration(spec);
    if (!(t >= 0.0) || t > end)
        throw DomainError("time outside the workload schedule");
    const auto phases = unrolled_phases(spec);
    return detail::live_in_phase(phases[detail::phase_index_at(phases, t)], t);
}

// ---------------------------------------------------------------------------
// Presets

inline constexpr double kPdfjsLeakRate = 1.0; ///< MB/s, ramps 60 MB to 96 MB

inline std::vector<std::string> preset_names() {
    return {"case-study-trio", "fig1-pair", "idle-burst", "heterogeneous-4", "homogeneous-N"};
}

namespace detail {

inline WorkloadSpec constant_workload(std::string name, double duration, double live, double alloc,
                                      double speed) {
    return {std::move(name), {Phase{duration, alloc, live, 0.0, speed}}, 1};
}

inline std::vector<WorkloadSpec> case_study_trio() {
    WorkloadSpec pdfjs{"pdfjs",
                       {Phase{36.0, 34.0, 60.0, kPdfjsLeakRate, 383.0},
                        Phase{64.0, 34.0, 96.0, 0.0, 383.0}},
                       1};
    return {constant_workload("splay", 100.0, 31.0, 633.0, 525.0),
            constant_workload("typescript", 100.0, 30.0, 57.0, 440.0), std::move(pdfjs)};
}

} // namespace detail

/// Named workload sets. "homogeneous-N" takes a heap count suffix, e.g.
/// "homogeneous-3".
inline std::vector<WorkloadSpec> preset(std::string_view name) {
    if (name == "case-study-trio")
        return detail::case_study_trio();
    if (name == "fig1-pair") {
        // A small heap that allocates fast and collects slowly next to a
        // large, quiet heap: proportional rules starve the first.
        return {detail::constant_workload("small-hot", 120.0, 10.0, 200.0, 400.0),
                detail::constant_workload("large-cold", 120.0, 80.0, 20.0, 800.0)};
    }
    if (name == "idle-burst") {
        return {WorkloadSpec{"idle-burst",
                             {Phase{30.0, 40.0, 50.0, 0.0, 200.0}, Phase{60.0, 0.0, 50.0, 0.0, 200.0}},
                             2}};
    }
    if (name == "heterogeneous-4") {
        return {detail::constant_workload("small-short-lived", 120.0, 8.0, 120.0, 300.0),
                detail::constant_workload("small-long-lived", 120.0, 16.0, 15.0, 300.0),
                detail::constant_workload("large-short-lived", 120.0, 64.0, 80.0, 250.0),
                detail::constant_workload("large-long-lived", 120.0, 128.0, 400.0, 250.0)};
    }
    constexpr std::string_view homogeneous = "homogeneous-";
    if (name.starts_with(homogeneous)) {
        const auto digits = name.substr(homogeneous.size());
        int count = 0;
        const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), count);
        if (ec == std::errc{} && ptr == digits.data() + digits.size() && count >= 1 && count <= 64) {
            std::vector<WorkloadSpec> out;
            for (int i = 0; i < count; ++i)
                out.push_back(detail::constant_workload("homogeneous", 120.0, 30.0, 60.0, 300.0));
            return out;
        }
    }
    std::string available;
    for (const auto& n : preset_names())
        available += (available.empty() ? "" : ", ") + n;
    throw ConfigError("unknown workload preset '" + std::string(name) + "'; available: " + available);
}

// ---------------------------------------------------------------------------
// Random workloads

struct Range {
    double min = 0.0;
    double max = 0.0;
};

struct WorkloadBounds {
    Range live{1.0, 100.0};
    Range alloc_rate{1.0, 1000.0};
    Range gc_speed{100.0, 1000.0};
    Range leak_fraction{0.0, 0.0}; ///< leak_rate as a fraction of alloc_rate
    Range phase_duration{10.0, 60.0};
    int min_phases = 1;
    int max_phases = 1;

    void validate() const {
        auto check = [](const Range& r, const char* what, bool positive_min) {
            if (!std::isfinite(r.min) || !std::isfinite(r.max) || r.min > r.max || r.min < 0.0 ||
                (positive_min && !(r.min > 0.0)))
                throw ConfigError(std::string("invalid bounds for ") + what);
        };
        check(live, "live", false);
        check(alloc_rate, "alloc_rate", false);
        check(gc_speed, "gc_speed", true);
        check(leak_fraction, "leak_fraction", false);
        check(phase_duration, "phase_duration", true);
        if (leak_fraction.max > 1.0)
            throw ConfigError("leak_fraction cannot exceed 1");
        if (min_phases < 1 || min_phases > max_phases)
            throw ConfigError("invalid phase count bounds");
    }
};

namespace detail {

// Portable uniform draw: std::uniform_real_distribution differs between
// standard libraries and would make seeds non-reproducible.
inline double unit_draw(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double draw(std::mt19937_64& rng, const Range& r) {
    return r.min + (r.max - r.min) * unit_draw(rng);
}

} // namespace detail

inline WorkloadSpec random_workload(std::uint64_t seed, const WorkloadBounds& bounds = {}) {
    bounds.validate();
    std::mt19937_64 rng(seed);
    const auto span = static_cast<std::uint64_t>(bounds.max_phases - bounds.min_phases + 1);
    const int count = bounds.min_phases + static_cast<int>(rng() % span);
    WorkloadSpec spec{"random-" + std::to_string(seed), {}, 1};
    for (int i = 0; i < count; ++i) {
        Phase p;
        p.duration = detail::draw(rng, bounds.phase_duration);
        p.alloc_rate = detail::draw(rng, bounds.alloc_rate);
        p.base_live = detail::draw(rng, bounds.live);
        p.leak_rate = p.alloc_rate * detail::draw(rng, bounds.leak_fraction);
        p.gc_speed = detail::draw(rng, bounds.gc_speed);
        spec.phases.push_back(p);
    }
    return spec;
}

} // namespace membalancer
