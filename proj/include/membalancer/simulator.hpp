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

// Deterministic discrete-event simulation of independent stop-the-world
// mark-compact heaps.
//
// Each heap alternates between mutating (usage grows at the phase's
// allocation rate) and collecting (mutator paused for live / gc_speed
// seconds; usage drops to live at the end). A collection starts when usage
// reaches the heap's current limit. Heartbeats fire on a fixed wall-clock
// grid, GC pauses included, and may move the limit in either direction; a
// limit below current usage starts a collection at once.
//
// Measurement conventions fed to the controller:
//  * allocation samples count mutator time only; a GC closes the running
//    sample at gc_start and delivers it after on_gc, and heartbeats that
//    land inside a pause see only the mutator time before it;
//  * collector samples report the live memory traversed and the pause,
//    so their ratio is the phase's gc_speed.
//
// Events at equal times are ordered gc_end < phase_change < heartbeat <
// sample < gc_start; events at or after the run duration are not processed.
// Past the end of its schedule a workload holds its last phase.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "membalancer/controller.hpp"
#include "membalancer/errors.hpp"
#include "membalancer/workloads.hpp"

namespace membalancer {

struct HeapSetup {
    WorkloadSpec workload;
    HeapLimitRule rule;
};

enum class LogEvent { gc, heartbeat, sample };

inline const char* to_string(LogEvent e) {
    switch (e) {
    case LogEvent::gc:
        return "gc";
    case LogEvent::heartbeat:
        return "heartbeat";
    case LogEvent::sample:
        return "sample";
    }
    return "?";
}

struct LogRecord {
    double time_s = 0.0;
    int heap_id = 0;
    LogEvent event = LogEvent::sample;
    double live_mb = 0.0;
    double g_mb_per_s = 0.0; ///< smoothed estimate
    double s_mb_per_s = 0.0; ///< smoothed estimate
    double limit_mb = 0.0;
    double usage_mb = 0.0;
    double gc_pause_s = 0.0; ///< gc events only

    friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

struct HeapMetrics {
    std::string name;
    double total_gc_time = 0.0;  ///< s
    double avg_heap_usage = 0.0; ///< MB, mean over samples
    long gc_count = 0;
    double allocated = 0.0; ///< MB
    double collected = 0.0; ///< MB
    double initial_usage = 0.0;
    double final_usage = 0.0;
    double final_live = 0.0;
    double final_limit = 0.0;
    ControllerState final_state;
    bool oom = false;
    double oom_time = 0.0;
};

struct RunMetrics {
    double total_gc_time = 0.0;
    double avg_heap_usage = 0.0; ///< MB, per-sample sum across heaps, averaged
    long gc_count = 0;
    std::vector<HeapMetrics> per_heap;
    std::vector<LogRecord> log;

    [[nodiscard]] bool any_oom() const {
        return std::any_of(per_heap.begin(), per_heap.end(), [](const HeapMetrics& h) { return h.oom; });
    }
};

struct RunOptions {
    double duration = 0.0;      ///< s
    double sample_period = 1.0; ///< s
    bool record_log = true;
};

namespace detail {

enum class EventKind { gc_end = 0, phase_change = 1, heartbeat = 2, sample = 3, gc_start = 4 };

struct NextEvent {
    double time = std::numeric_limits<double>::infinity();
    EventKind kind = EventKind::sample;
    std::ptrdiff_t heap = -1;

    [[nodiscard]] bool before(const NextEvent& other) const {
        if (time != other.time)
            return time < other.time;
        if (kind != other.kind)
            return static_cast<int>(kind) < static_cast<int>(other.kind);
        return heap < other.heap;
    }
};

class HeapRuntime {
public:
    enum class Mode { mutating, collecting, halted };

    HeapRuntime(int id, const HeapSetup& setup)
        : id_(id), rule_(setup.rule), config_(estimator_config(setup.rule)),
          phases_(unrolled_phases(setup.workload)) {
        metrics_.name = setup.workload.name;
        usage_ = live_at(0.0);
        metrics_.initial_usage = usage_;
        limit_ = initial_limit(rule_, usage_);
        state_.published_limit = limit_;
    }

    [[nodiscard]] const ControllerState& state() const { return state_; }

    void collect_candidates(NextEvent& best) const {
        const auto offer = [&](double time, EventKind kind) {
            NextEvent e{time, kind, id_};
            if (e.before(best))
                best = e;
        };
        if (mode_ == Mode::halted)
            return;
        if (mode_ == Mode::collecting)
            offer(gc_end_time_, EventKind::gc_end);
        if (phase_ + 1 < phases_.size())
            offer(phases_[phase_ + 1].start, EventKind::phase_change);
        offer(static_cast<double>(heartbeat_index_) * config_.heartbeat_period, EventKind::heartbeat);
        if (mode_ == Mode::mutating) {
            const double rate = phases_[phase_].phase.alloc_rate;
            if (usage_ >= limit_)
                offer(clock_, EventKind::gc_start);
            else if (rate > 0.0)
                offer(clock_ + (limit_ - usage_) / rate, EventKind::gc_start);
        }
    }

    void advance(double t) {
        const double dt = t - clock_;
        if (mode_ == Mode::mutating && dt > 0.0) {
            const double bytes = phases_[phase_].phase.alloc_rate * dt;
            usage_ += bytes;
            metrics_.allocated += bytes;
            sample_bytes_ += bytes;
            sample_time_ += dt;
        }
        clock_ = std::max(clock_, t);
    }

    void handle(EventKind kind, std::vector<LogRecord>* log) {
        switch (kind) {
        case EventKind::gc_start:
            start_gc();
            break;
        case EventKind::gc_end:
            finish_gc(log);
            break;
        case EventKind::phase_change:
            change_phase();
            break;
        case EventKind::heartbeat:
            heartbeat(log);
            break;
        case EventKind::sample:
            break;
        }
    }

    // Samples read usage without advancing, so other heaps' events never
    // change this heap's arithmetic.
    void sample(double t, std::vector<LogRecord>* log) {
        double usage = usage_;
        if (mode_ == Mode::mutating && t > clock_)
            usage += phases_[phase_].phase.alloc_rate * (t - clock_);
        usage_sum_ += usage;
        ++sample_count_;
        if (log)
            log->push_back({t, id_, LogEvent::sample, live_at(t), state_.alloc_rate(), state_.gc_speed(),
                            limit_, usage, 0.0});
    }

    HeapMetrics finish() {
        metrics_.avg_heap_usage =
            sample_count_ > 0 ? usage_sum_ / static_cast<double>(sample_count_) : metrics_.initial_usage;
        metrics_.final_usage = usage_;
        metrics_.final_live = live_at(clock_);
        metrics_.final_limit = limit_;
        metrics_.final_state = state_;
        return metrics_;
    }

private:
    [[nodiscard]] double live_at(double t) const { return live_in_phase(phases_[phase_], t); }

    [[nodiscard]] bool square_root_family() const {
        return std::holds_alternative<SquareRootRule>(rule_) ||
               std::holds_alternative<ExactSquareRootRule>(rule_);
    }

    void recompute(RuleTrigger trigger) {
        const bool ready = square_root_family() ? state_.warm() : state_.seen_gc;
        if (!ready)
            return;
        RuleContext ctx{trigger, limit_, metrics_.total_gc_time, clock_};
        limit_ = apply_rule(rule_, state_, ctx);
    }

    void deliver_alloc_sample() {
        if (sample_time_ > 0.0)
            state_ = on_heartbeat(state_, config_, sample_bytes_, sample_time_);
        sample_bytes_ = 0.0;
        sample_time_ = 0.0;
    }

    void start_gc() {
        gc_live_ = live_at(clock_);
        gc_pause_ = gc_live_ / phases_[phase_].phase.gc_speed;
        gc_end_time_ = clock_ + gc_pause_;
        mode_ = Mode::collecting;
        ++metrics_.gc_count;
        metrics_.total_gc_time += gc_pause_;
    }

    void finish_gc(std::vector<LogRecord>* log) {
        const double live = live_at(clock_);
        if (live > usage_) {
            metrics_.allocated += live - usage_;
            usage_ = live;
        }
        metrics_.collected += usage_ - live;
        usage_ = live;

        if (gc_pause_ > 0.0) {
            state_ = on_gc(state_, config_, gc_live_, gc_pause_, live);
        } else {
            state_.L_star = live;
            state_.seen_gc = true;
        }
        deliver_alloc_sample();
        mode_ = Mode::mutating;
        recompute(RuleTrigger::gc);
        if (log)
            log->push_back(record(LogEvent::gc, gc_pause_));

        if (usage_ >= limit_) {
            mode_ = Mode::halted;
            metrics_.oom = true;
            metrics_.oom_time = clock_;
        }
    }

    void change_phase() {
        ++phase_;
        const double live = live_at(clock_);
        if (live > usage_) {
            metrics_.allocated += live - usage_;
            usage_ = live;
        }
    }

    void heartbeat(std::vector<LogRecord>* log) {
        ++heartbeat_index_;
        deliver_alloc_sample();
        recompute(RuleTrigger::heartbeat);
        if (log)
            log->push_back(record(LogEvent::heartbeat, 0.0));
    }

    [[nodiscard]] LogRecord record(LogEvent event, double pause) const {
        return {clock_, id_, event, live_at(clock_), state_.alloc_rate(), state_.gc_speed(),
                limit_, usage_, pause};
    }

    int id_;
    HeapLimitRule rule_;
    ControllerConfig config_;
    std::vector<TimedPhase> phases_;
    std::size_t phase_ = 0;

    Mode mode_ = Mode::mutating;
    double clock_ = 0.0;
    double usage_ = 0.0;
    double limit_ = 0.0;
    ControllerState state_;

    long heartbeat_index_ = 1;
    double sample_bytes_ = 0.0;
    double sample_time_ = 0.0;

    double gc_live_ = 0.0;
    double gc_pause_ = 0.0;
    double gc_end_time_ = 0.0;

    double usage_sum_ = 0.0;
    long sample_count_ = 0;
    HeapMetrics metrics_;
};

} // namespace detail

inline RunMetrics run(std::span<const HeapSetup> heaps, const RunOptions& options) {
    if (heaps.empty())
        throw ConfigError("simulation needs at least one heap");
    if (!(options.duration > 0.0) || !std::isfinite(options.duration))
        throw ConfigError("duration must be finite and > 0");
    if (!(options.sample_period > 0.0) || !std::isfinite(options.sample_period))
        throw ConfigError("sample period must be finite and > 0");
    for (const auto& h : heaps) {
        validate(h.workload);
        validate(h.rule);
    }

    std::vector<detail::HeapRuntime> runtimes;
    runtimes.reserve(heaps.size());
    for (std::size_t i = 0; i < heaps.size(); ++i)
        runtimes.emplace_back(static_cast<int>(i), heaps[i]);

    RunMetrics out;
    std::vector<LogRecord>* log = options.record_log ? &out.log : nullptr;
    long sample_index = 0;

    for (;;) {
        detail::NextEvent next{static_cast<double>(sample_index) * options.sample_period,
                               detail::EventKind::sample, -1};
        for (const auto& h : runtimes)
            h.collect_candidates(next);
        if (!(next.time < options.duration))
            break;
        if (next.kind == detail::EventKind::sample) {
            for (auto& h : runtimes)
                h.sample(next.time, log);
            ++sample_index;
        } else {
            auto& h = runtimes[static_cast<std::size_t>(next.heap)];
            h.advance(next.time);
            h.handle(next.kind, log);
        }
    }
    for (auto& h : runtimes)
        h.advance(options.duration);

    for (auto& h : runtimes) {
        out.per_heap.push_back(h.finish());
        const auto& m = out.per_heap.back();
        out.total_gc_time += m.total_gc_time;
        out.avg_heap_usage += m.avg_heap_usage;
        out.gc_count += m.gc_count;
    }
    return out;
}

inline RunMetrics run(std::span<const HeapSetup> heaps, double duration, double sample_period = 1.0) {
    return run(heaps, RunOptions{duration, sample_period, true});
}

} // namespace membalancer
