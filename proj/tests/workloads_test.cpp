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


#include <fstream>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "membalancer/io/config.hpp"
#include "membalancer/workloads.hpp"

namespace {

using namespace membalancer;

TEST(Presets, MatchGoldenFile) {
    std::ifstream in(std::string(MEMBALANCER_GOLDEN_DIR) + "/presets.json");
    ASSERT_TRUE(in);
    const auto golden = nlohmann::json::parse(in);
    for (const auto& [name, expected] : golden.items()) {
        const nlohmann::json actual = preset(name);
        EXPECT_EQ(actual, expected) << name;
    }
}

TEST(Presets, AllValidate) {
    for (const auto& name : preset_names()) {
        const std::string concrete = name == "homogeneous-N" ? "homogeneous-8" : name;
        for (const auto& w : preset(concrete))
            EXPECT_NO_THROW(validate(w)) << concrete;
    }
}

TEST(Presets, HomogeneousCount) {
    EXPECT_EQ(preset("homogeneous-1").size(), 1u);
    EXPECT_EQ(preset("homogeneous-64").size(), 64u);
    EXPECT_THROW(preset("homogeneous-0"), ConfigError);
    EXPECT_THROW(preset("homogeneous-65"), ConfigError);
    EXPECT_THROW(preset("homogeneous-x"), ConfigError);
}

TEST(Presets, UnknownNameListsAvailable) {
    try {
        preset("nope");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("nope"), std::string::npos);
        for (const auto& name : preset_names())
            EXPECT_NE(msg.find(name), std::string::npos) << name;
    }
}

TEST(LiveMemory, PdfjsRampsThenHolds) {
    const auto pdfjs = preset("case-study-trio")[2];
    EXPECT_DOUBLE_EQ(live_memory_at(pdfjs, 0.0), 60.0);
    EXPECT_DOUBLE_EQ(live_memory_at(pdfjs, 18.0), 78.0);
    EXPECT_DOUBLE_EQ(live_memory_at(pdfjs, 36.0), 96.0);
    EXPECT_DOUBLE_EQ(live_memory_at(pdfjs, 100.0), 96.0);
}

TEST(LiveMemory, LeakWithinPhase) {
    const WorkloadSpec w{"leaky", {Phase{20.0, 10.0, 96.0, 0.5, 100.0}}, 1};
    EXPECT_DOUBLE_EQ(live_memory_at(w, 10.0), 101.0);
    EXPECT_THROW(live_memory_at(w, 20.5), DomainError);
    EXPECT_THROW(live_memory_at(w, -1.0), DomainError);
}

TEST(Schedule, IdleBurstUnrolls) {
    const auto w = preset("idle-burst")[0];
    EXPECT_DOUBLE_EQ(total_duration(w), 180.0);
    const auto phases = phases_within(w, 180.0);
    ASSERT_EQ(phases.size(), 4u);
    int active = 0, idle = 0;
    for (const auto& tp : phases)
        (tp.phase.alloc_rate > 0.0 ? active : idle)++;
    EXPECT_EQ(active, 2);
    EXPECT_EQ(idle, 2);
    EXPECT_DOUBLE_EQ(phases[1].start, 30.0);
    EXPECT_DOUBLE_EQ(phases[2].start, 90.0);
    EXPECT_DOUBLE_EQ(phases[3].start, 120.0);
    EXPECT_EQ(phases_within(w, 90.0).size(), 2u);
}

TEST(Validate, RejectsBadSpecs) {
    EXPECT_THROW(validate(WorkloadSpec{"e", {}, 1}), ConfigError);
    EXPECT_THROW(validate(WorkloadSpec{"r", {Phase{1, 1, 1, 0, 1}}, 0}), ConfigError);
    EXPECT_THROW(validate(WorkloadSpec{"d", {Phase{0, 1, 1, 0, 1}}, 1}), ConfigError);
    EXPECT_THROW(validate(WorkloadSpec{"g", {Phase{1, -1, 1, 0, 1}}, 1}), ConfigError);
    EXPECT_THROW(validate(WorkloadSpec{"l", {Phase{1, 1, -1, 0, 1}}, 1}), ConfigError);
    EXPECT_THROW(validate(WorkloadSpec{"k", {Phase{1, 1, 1, 2, 1}}, 1}), ConfigError);
    EXPECT_THROW(validate(WorkloadSpec{"s", {Phase{1, 1, 1, 0, 0}}, 1}), ConfigError);
}

TEST(RandomWorkload, DeterministicAndWithinBounds) {
    WorkloadBounds b;
    b.leak_fraction = {0.0, 0.2};
    b.min_phases = 1;
    b.max_phases = 4;
    std::set<std::size_t> counts;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const auto w = random_workload(seed, b);
        const auto again = random_workload(seed, b);
        ASSERT_EQ(nlohmann::json(w), nlohmann::json(again));
        EXPECT_NO_THROW(validate(w));
        counts.insert(w.phases.size());
        for (const auto& p : w.phases) {
            EXPECT_GE(p.base_live, 1.0);
            EXPECT_LE(p.base_live, 100.0);
            EXPECT_GE(p.alloc_rate, 1.0);
            EXPECT_LE(p.alloc_rate, 1000.0);
            EXPECT_GE(p.gc_speed, 100.0);
            EXPECT_LE(p.gc_speed, 1000.0);
            EXPECT_LE(p.leak_rate, 0.2 * p.alloc_rate + 1e-12);
            EXPECT_GE(p.duration, 10.0);
            EXPECT_LE(p.duration, 60.0);
        }
    }
    EXPECT_EQ(counts, (std::set<std::size_t>{1, 2, 3, 4}));
    EXPECT_NE(nlohmann::json(random_workload(1, b)), nlohmann::json(random_workload(2, b)));
}

TEST(RandomWorkload, FrozenSeed) {
    // Draws use raw mt19937_64 output, so these are the same on every
    // standard library.
    const auto w = random_workload(42);
    ASSERT_EQ(w.phases.size(), 1u);
    EXPECT_EQ(w.name, "random-42");
    std::mt19937_64 rng(42);
    (void)rng(); // phase count
    auto u = [&] { return static_cast<double>(rng() >> 11) / 9007199254740992.0; };
    EXPECT_DOUBLE_EQ(w.phases[0].duration, 10.0 + 50.0 * u());
    EXPECT_DOUBLE_EQ(w.phases[0].alloc_rate, 1.0 + 999.0 * u());
    EXPECT_DOUBLE_EQ(w.phases[0].base_live, 1.0 + 99.0 * u());
    (void)u(); // leak fraction
    EXPECT_DOUBLE_EQ(w.phases[0].gc_speed, 100.0 + 900.0 * u());
}

TEST(RandomWorkload, RejectsBadBounds) {
    WorkloadBounds b;
    b.gc_speed = {0.0, 10.0};
    EXPECT_THROW(random_workload(1, b), ConfigError);
    b = {};
    b.live = {10.0, 1.0};
    EXPECT_THROW(random_workload(1, b), ConfigError);
    b = {};
    b.leak_fraction = {0.0, 1.5};
    EXPECT_THROW(random_workload(1, b), ConfigError);
    b = {};
    b.min_phases = 3;
    b.max_phases = 2;
    EXPECT_THROW(random_workload(1, b), ConfigError);
}

} // namespace
