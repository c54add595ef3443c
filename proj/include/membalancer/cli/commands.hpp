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

// Subcommand bodies for the membalancer tool. Argument parsing lives in
// tools/membalancer.cpp; everything here takes parsed values so it can be
// exercised from tests.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "membalancer/io/config.hpp"
#include "membalancer/io/csv.hpp"
#include "membalancer/io/svg.hpp"
#include "membalancer/metrics.hpp"
#include "membalancer/model.hpp"
#include "membalancer/simulator.hpp"

namespace membalancer::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kConfigError = 1, kOutOfMemory = 3 };

namespace detail {

inline std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write '" + path.string() + "'");
    return out;
}

inline std::string fmt(double v, int precision = 3) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

} // namespace detail

/// One simulation per sweep value. Runs execute in parallel and share
/// nothing; results come back in the order of `sweep.values`.
inline SweepResult run_sweep(const ExperimentConfig& cfg, const SweepConfig& sweep) {
    auto one = [&](double value) {
        ExperimentConfig variant = cfg;
        for (auto& h : variant.heaps)
            h.rule = sweep_rule(sweep, h.rule, value);
        const auto setups = heap_setups(variant);
        const auto m = run(setups, RunOptions{cfg.duration, cfg.sample_period, false});
        return SweepPoint{value, m.avg_heap_usage, m.total_gc_time, m.gc_count,
                          sweep.rule + "-" + sweep.parameter + "=" + csv::format_number(value)};
    };

    SweepResult out(sweep.values.size());
    const std::size_t width = std::max(1u, std::thread::hardware_concurrency());
    for (std::size_t start = 0; start < sweep.values.size(); start += width) {
        std::vector<std::future<SweepPoint>> batch;
        const std::size_t end = std::min(sweep.values.size(), start + width);
        for (std::size_t i = start; i < end; ++i)
            batch.push_back(std::async(std::launch::async, one, sweep.values[i]));
        for (std::size_t i = start; i < end; ++i)
            out[i] = batch[i - start].get();
    }
    return out;
}

inline std::vector<std::string> rule_names(const ExperimentConfig& cfg) {
    std::vector<std::string> out;
    for (const auto& h : cfg.heaps)
        out.emplace_back(rule_name(h.rule));
    return out;
}

inline int cmd_simulate(const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream& out) {
    validate(cfg);
    const auto setups = heap_setups(cfg);
    const auto metrics = run(setups, RunOptions{cfg.duration, cfg.sample_period, true});

    {
        auto log = detail::open_output(out_dir / cfg.outputs.log);
        csv::write_log(log, metrics.log);
    }
    {
        auto summary = detail::open_output(out_dir / cfg.outputs.summary);
        csv::write_summary(summary, metrics, rule_names(cfg));
    }

    const auto rules = rule_names(cfg);
    out << std::left << std::setw(6) << "heap" << std::setw(20) << "name" << std::setw(16) << "rule"
        << std::right << std::setw(8) << "gcs" << std::setw(14) << "gc_time_s" << std::setw(16)
        << "avg_usage_mb" << std::setw(16) << "final_limit_mb" << '\n';
    for (std::size_t i = 0; i < metrics.per_heap.size(); ++i) {
        const auto& h = metrics.per_heap[i];
        out << std::left << std::setw(6) << i << std::setw(20) << h.name << std::setw(16) << rules[i]
            << std::right << std::setw(8) << h.gc_count << std::setw(14) << detail::fmt(h.total_gc_time)
            << std::setw(16) << detail::fmt(h.avg_heap_usage) << std::setw(16) << detail::fmt(h.final_limit)
            << (h.oom ? "  OUT OF MEMORY" : "") << '\n';
    }
    out << std::left << std::setw(42) << "total" << std::right << std::setw(8) << metrics.gc_count
        << std::setw(14) << detail::fmt(metrics.total_gc_time) << std::setw(16)
        << detail::fmt(metrics.avg_heap_usage) << '\n';
    return metrics.any_oom() ? kOutOfMemory : kOk;
}

inline int cmd_sweep(const ExperimentConfig& cfg, const fs::path& out_dir, bool svg, std::ostream& out) {
    validate(cfg);
    if (cfg.sweeps.empty())
        throw ConfigError("config has no sweep section");

    std::vector<std::pair<std::string, SweepResult>> results;
    for (const auto& sweep : cfg.sweeps)
        results.emplace_back(sweep.rule + " (" + sweep.parameter + ")", run_sweep(cfg, sweep));

    const fs::path base = cfg.outputs.sweep;
    auto path_for = [&](std::size_t i, const std::string& suffix) {
        if (cfg.sweeps.size() == 1 && suffix.empty())
            return out_dir / base;
        const auto& s = cfg.sweeps[i];
        return out_dir / (base.stem().string() + "_" + s.rule + "_" + s.parameter + suffix +
                          base.extension().string());
    };

    const SweepResult* baseline = nullptr;
    for (std::size_t i = 0; i < cfg.sweeps.size(); ++i) {
        if (cfg.sweeps[i].baseline)
            baseline = &results[i].second;
    }
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto path = path_for(i, "");
        auto file = detail::open_output(path);
        csv::write_sweep(file, results[i].second);
        out << "wrote " << path.string() << " (" << results[i].second.size() << " runs)\n";
        if (baseline != nullptr) {
            const auto npath = path_for(i, "_normalized");
            auto nfile = detail::open_output(npath);
            csv::write_sweep(nfile, normalize_to_baseline(results[i].second, *baseline));
            out << "wrote " << npath.string() << '\n';
        }
    }
    if (svg) {
        const auto path = out_dir / cfg.outputs.svg;
        auto file = detail::open_output(path);
        svg::write(file, svg::sweep_plot(results, true));
        out << "wrote " << path.string() << '\n';
    }
    return kOk;
}

inline int cmd_oracle(const OracleConfig& oc, std::ostream& out) {
    if (oc.heaps.size() < 2 || oc.heaps.size() > 4)
        throw ConfigError("oracle needs 2 to 4 heaps");
    const auto closed = closed_form_allocation(oc.heaps, oc.total_memory);
    const auto brute = brute_force_allocation(oc.heaps, oc.total_memory, oc.grid_step);
    const double gap = (brute.total_ratio - closed.total_ratio) / brute.total_ratio;

    out << std::left << std::setw(6) << "heap" << std::right << std::setw(12) << "live_mb" << std::setw(16)
        << "closed_form_mb" << std::setw(16) << "brute_force_mb" << std::setw(16) << "dratio_dM" << '\n';
    for (std::size_t i = 0; i < oc.heaps.size(); ++i) {
        const auto& h = oc.heaps[i];
        out << std::left << std::setw(6) << i << std::right << std::setw(12) << detail::fmt(h.live)
            << std::setw(16) << detail::fmt(closed.limits[i], 4) << std::setw(16)
            << detail::fmt(brute.limits[i], 4) << std::setw(16)
            << csv::format_number(ratio_derivative(h, closed.limits[i])) << '\n';
    }
    out << "sum ratio closed-form: " << csv::format_number(closed.total_ratio) << '\n';
    out << "sum ratio brute-force: " << csv::format_number(brute.total_ratio) << '\n';
    out << "relative gap: " << csv::format_number(gap) << '\n';

    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t i = 0; i < oc.heaps.size(); ++i) {
        if (oc.heaps[i].alloc_rate == 0.0)
            continue;
        const double d = ratio_derivative(oc.heaps[i], closed.limits[i]);
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    if (hi > 0.0)
        out << "derivative spread (max/min - 1): " << csv::format_number(hi / lo - 1.0) << '\n';
    return kOk;
}

/// Renders a sweep CSV as a scatter with fitted curve, or a log CSV as a
/// usage/limit timeline.
inline int cmd_plot(const fs::path& input, const fs::path& output, std::ostream& out) {
    std::ifstream in(input);
    if (!in)
        throw ConfigError("cannot open '" + input.string() + "'");
    std::string header;
    std::getline(in, header);
    in.clear();
    in.seekg(0);

    svg::Plot plot;
    if (header == csv::kSweepHeader)
        plot = svg::sweep_plot({{input.stem().string(), csv::read_sweep(in)}}, true);
    else if (header == csv::kLogHeader)
        plot = svg::timeline_plot(csv::read_log(in));
    else
        throw ConfigError("'" + input.string() + "' is neither a sweep CSV nor a log CSV");

    auto file = detail::open_output(output);
    svg::write(file, plot);
    out << "wrote " << output.string() << '\n';
    return kOk;
}

} // namespace membalancer::cli
