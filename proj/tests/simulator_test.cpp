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


#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "membalancer/simulator.hpp"

namespace {

using namespace membalancer;

WorkloadSpec constant(double live, double g, double s, double duration = 1000.0) {
    return {"w", {Phase{duration, g, live, 0.0, s}}, 1};
}

SquareRootRule sqrt_rule(double c_percent) {
    SquareRootRule r;
    r.config.c = TradeoffParam::percent_per_mb(c_percent);
    return r;
}

// Fixed limit, constant live: each cycle fills (M - L) at g, then pauses L / s.
struct CycleOracle {
    long gcs = 0;
    double gc_time = 0.0;
};

CycleOracle fixed_cycles(double live, double g, double s, double limit, double duration) {
    CycleOracle out;
    double t = 0.0;
    for (;;) {
        t += (limit - live) / g;
        if (!(t < duration))
            break;
        ++out.gcs;
        out.gc_time += live / s;
        t += live / s;
    }
    return out;
}

TEST(HandTrace, FixedLimitSingleHeap) {
    const std::vector<HeapSetup> setup{{constant(10.0, 5.0, 100.0, 21.0), FixedRule{20.0}}};
    const auto m = run(setup, 21.0);
    EXPECT_EQ(m.gc_count, 10);
    EXPECT_NEAR(m.total_gc_time, 1.0, 1e-12);
    const auto oracle = fixed_cycles(10.0, 5.0, 100.0, 20.0, 21.0);
    EXPECT_EQ(oracle.gcs, 10);
    EXPECT_NEAR(oracle.gc_time, 1.0, 1e-12);

    // GC k starts at 2.1 k - 0.1 and ends 0.1 s later.
    std::vector<double> ends;
    for (const auto& r : m.log) {
        if (r.event == LogEvent::gc) {
            ends.push_back(r.time_s);
            EXPECT_DOUBLE_EQ(r.usage_mb, 10.0);
            EXPECT_NEAR(r.gc_pause_s, 0.1, 1e-15);
        }
    }
    ASSERT_EQ(ends.size(), 9u); // the tenth finishes exactly at the horizon
    for (std::size_t k = 0; k < ends.size(); ++k)
        EXPECT_NEAR(ends[k], 2.1 * static_cast<double>(k + 1), 1e-9);
}

TEST(HandTrace, FixedLimitMatchesCycleOracle) {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> live(1, 50), g(1, 100), s(50, 500), extra(1, 40), dur(5, 120);
    for (int i = 0; i < 100; ++i) {
        const double L = live(rng), G = g(rng), S = s(rng), M = L + extra(rng), T = dur(rng);
        const std::vector<HeapSetup> setup{{constant(L, G, S, T), FixedRule{M}}};
        const auto m = run(setup, RunOptions{T, 1.0, false});
        const auto o = fixed_cycles(L, G, S, M, T);
        EXPECT_EQ(m.gc_count, o.gcs);
        EXPECT_NEAR(m.total_gc_time, o.gc_time, 1e-9);
    }
}

TEST(Simulator, IdleHeapNeverCollects) {
    const std::vector<HeapSetup> setup{{constant(40.0, 0.0, 200.0), sqrt_rule(1.0)}};
    const auto m = run(setup, 60.0);
    EXPECT_EQ(m.gc_count, 0);
    EXPECT_EQ(m.total_gc_time, 0.0);
    EXPECT_DOUBLE_EQ(m.avg_heap_usage, 40.0);
    EXPECT_DOUBLE_EQ(m.per_heap[0].final_limit, 52.0);
    EXPECT_FALSE(m.per_heap[0].final_state.warm());
}

TEST(Simulator, ConservationOnAllPresets) {
    for (const auto& name : {"case-study-trio", "fig1-pair", "idle-burst", "heterogeneous-4", "homogeneous-5"}) {
        for (const HeapLimitRule& rule : {HeapLimitRule{sqrt_rule(1.0)}, HeapLimitRule{ProportionalRule{1.0}},
                                          HeapLimitRule{RacketRule{2.0}}, HeapLimitRule{GcTimeTargetRule{}}}) {
            std::vector<HeapSetup> setup;
            for (auto& w : preset(name))
                setup.push_back({w, rule});
            const auto m = run(setup, RunOptions{150.0, 0.5, false});
            for (const auto& h : m.per_heap) {
                const double delta = h.final_usage - h.initial_usage;
                EXPECT_NEAR(h.allocated, h.collected + delta, 1e-6) << name << " " << h.name;
                EXPECT_GE(h.final_usage, h.final_live - 1e-9);
            }
        }
    }
}

TEST(Simulator, UsageNeverExceedsLimitBetweenCollections) {
    std::vector<HeapSetup> setup;
    for (auto& w : preset("heterogeneous-4"))
        setup.push_back({w, sqrt_rule(2.0)});
    const auto m = run(setup, 120.0);
    for (const auto& r : m.log) {
        if (r.event == LogEvent::gc) {
            EXPECT_LT(r.usage_mb, r.limit_mb);
        }
        EXPECT_GE(r.usage_mb, r.live_mb - 1e-9);
    }
}

TEST(Simulator, IdenticalHeapsBehaveIdentically) {
    std::vector<HeapSetup> setup(3, HeapSetup{constant(30.0, 60.0, 300.0), sqrt_rule(1.0)});
    const auto m = run(setup, 120.0);
    for (std::size_t i = 1; i < 3; ++i) {
        EXPECT_EQ(m.per_heap[i].gc_count, m.per_heap[0].gc_count);
        EXPECT_EQ(m.per_heap[i].total_gc_time, m.per_heap[0].total_gc_time);
        EXPECT_EQ(m.per_heap[i].avg_heap_usage, m.per_heap[0].avg_heap_usage);
        EXPECT_EQ(m.per_heap[i].final_limit, m.per_heap[0].final_limit);
    }
}

TEST(Simulator, HeapOrderDoesNotMatter) {
    std::vector<HeapSetup> setup;
    const auto trio = preset("case-study-trio");
    setup.push_back({trio[0], sqrt_rule(20.0)});
    setup.push_back({trio[1], ProportionalRule{1.0}});
    setup.push_back({trio[2], RacketRule{3.0}});
    setup.push_back({preset("idle-burst")[0], sqrt_rule(5.0)});
    const auto base = run(setup, RunOptions{100.0, 1.0, false});

    std::vector<std::size_t> order(setup.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 5; ++trial) {
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<HeapSetup> shuffled;
        for (auto i : order)
            shuffled.push_back(setup[i]);
        const auto m = run(shuffled, RunOptions{100.0, 1.0, false});
        for (std::size_t j = 0; j < order.size(); ++j) {
            const auto& a = m.per_heap[j];
            const auto& b = base.per_heap[order[j]];
            EXPECT_EQ(a.gc_count, b.gc_count);
            EXPECT_EQ(a.total_gc_time, b.total_gc_time);
            EXPECT_EQ(a.avg_heap_usage, b.avg_heap_usage);
            EXPECT_EQ(a.final_limit, b.final_limit);
        }
        EXPECT_NEAR(m.total_gc_time, base.total_gc_time, 1e-9);
    }
}

TEST(Simulator, Deterministic) {
    std::vector<HeapSetup> setup;
    for (auto& w : preset("heterogeneous-4"))
        setup.push_back({w, sqrt_rule(1.0)});
    const auto a = run(setup, 120.0);
    const auto b = run(setup, 120.0);
    EXPECT_EQ(a.log, b.log);
    EXPECT_EQ(a.total_gc_time, b.total_gc_time);
}

TEST(Simulator, GcTimeMatchesLoggedPauses) {
    std::vector<HeapSetup> setup;
    for (auto& w : preset("fig1-pair"))
        setup.push_back({w, sqrt_rule(1.0)});
    const auto m = run(setup, 120.0);
    double logged = 0.0;
    long count = 0;
    for (const auto& r : m.log) {
        if (r.event == LogEvent::gc) {
            logged += r.gc_pause_s;
            ++count;
        }
    }
    // A collection still running at the horizon is counted but not logged.
    EXPECT_GE(m.gc_count, count);
    EXPECT_LE(m.gc_count, count + 2);
    EXPECT_GE(m.total_gc_time + 1e-9, logged);
    EXPECT_LE(m.total_gc_time - logged, 2 * 80.0 / 800.0 + 1e-9);
}

TEST(Simulator, FixedLimitBelowGrowingLiveRunsOutOfMemory) {
    const std::vector<HeapSetup> setup{{WorkloadSpec{"leak", {Phase{60.0, 10.0, 10.0, 1.0, 100.0}}, 1},
                                        FixedRule{20.0}}};
    const auto m = run(setup, 60.0);
    ASSERT_TRUE(m.any_oom());
    EXPECT_GT(m.per_heap[0].oom_time, 9.0);
    EXPECT_LT(m.per_heap[0].oom_time, 12.0);
    // The heap stops allocating once halted.
    EXPECT_LT(m.per_heap[0].allocated, 10.0 * 12.0);
}

TEST(Simulator, SqrtRuleTracksGrowingLive) {
    const std::vector<HeapSetup> setup{{preset("case-study-trio")[2], sqrt_rule(20.0)}};
    const auto m = run(setup, 100.0);
    EXPECT_FALSE(m.any_oom());
    EXPECT_NEAR(m.per_heap[0].final_state.L_star, 96.0, 1e-9);
}

TEST(Simulator, HeartbeatsOnTheWallClockGrid) {
    const std::vector<HeapSetup> setup{{constant(30.0, 60.0, 300.0), sqrt_rule(1.0)}};
    const auto m = run(setup, 10.5);
    std::vector<double> beats;
    for (const auto& r : m.log) {
        if (r.event == LogEvent::heartbeat)
            beats.push_back(r.time_s);
    }
    ASSERT_EQ(beats.size(), 10u);
    for (std::size_t k = 0; k < beats.size(); ++k)
        EXPECT_DOUBLE_EQ(beats[k], static_cast<double>(k + 1));
}

TEST(Simulator, SamplesOnTheirGrid) {
    const std::vector<HeapSetup> setup{{constant(30.0, 60.0, 300.0), sqrt_rule(1.0)}};
    const auto m = run(setup, 10.0, 0.5);
    long samples = 0;
    for (const auto& r : m.log)
        samples += r.event == LogEvent::sample;
    EXPECT_EQ(samples, 20);
}

TEST(Simulator, RejectsBadInput) {
    const std::vector<HeapSetup> none;
    EXPECT_THROW(run(none, 10.0), ConfigError);
    const std::vector<HeapSetup> one{{constant(10.0, 5.0, 100.0), FixedRule{20.0}}};
    EXPECT_THROW(run(one, 0.0), ConfigError);
    EXPECT_THROW(run(one, 10.0, 0.0), ConfigError);
    const std::vector<HeapSetup> bad{{constant(10.0, 5.0, 100.0), FixedRule{-1.0}}};
    EXPECT_THROW(run(bad, 10.0), ConfigError);
}

TEST(Simulator, LargerCMeansLessMemoryMoreGc) {
    std::vector<double> usage, gc;
    for (double c : {0.5, 2.0, 8.0, 32.0}) {
        std::vector<HeapSetup> setup;
        for (auto& w : preset("heterogeneous-4"))
            setup.push_back({w, sqrt_rule(c)});
        const auto m = run(setup, RunOptions{120.0, 0.05, false});
        usage.push_back(m.avg_heap_usage);
        gc.push_back(m.total_gc_time);
    }
    for (std::size_t i = 1; i < usage.size(); ++i) {
        EXPECT_LT(usage[i], usage[i - 1]);
        EXPECT_GT(gc[i], gc[i - 1]);
    }
}

} // namespace
