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

// CSV emission and parsing. Every real number is written with six
// significant digits ("%.6g"), so a parsed file equals the in-memory
// values rounded to six digits and re-emits byte for byte.

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "membalancer/errors.hpp"
#include "membalancer/metrics.hpp"
#include "membalancer/simulator.hpp"

namespace membalancer::csv {

inline constexpr std::string_view kLogHeader =
    "time_s,heap_id,event,live_mb,g_mb_per_s,s_mb_per_s,limit_mb,usage_mb,gc_pause_s";
inline constexpr std::string_view kSweepHeader = "param_value,avg_heap_usage_mb,total_gc_time_s,gc_count";

inline std::string format_number(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", value);
    return buf;
}

/// The value a number takes after a write/parse cycle.
inline double quantize(double value) { return std::strtod(format_number(value).c_str(), nullptr); }

namespace detail {

inline std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ','))
        out.push_back(field);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

inline double to_double(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0')
        throw ConfigError("malformed number '" + s + "' in CSV");
    return v;
}

inline long to_long(const std::string& s) {
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (s.empty() || *end != '\0')
        throw ConfigError("malformed integer '" + s + "' in CSV");
    return v;
}

inline std::vector<std::vector<std::string>> read_rows(std::istream& in, std::string_view header) {
    std::string line;
    if (!std::getline(in, line) || line != header)
        throw ConfigError("unexpected CSV header; expected '" + std::string(header) + "'");
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        rows.push_back(split(line));
    }
    return rows;
}

inline LogEvent event_from_string(const std::string& s) {
    if (s == "gc")
        return LogEvent::gc;
    if (s == "heartbeat")
        return LogEvent::heartbeat;
    if (s == "sample")
        return LogEvent::sample;
    throw ConfigError("unknown log event '" + s + "'");
}

} // namespace detail

inline void write_log(std::ostream& out, const std::vector<LogRecord>& log) {
    out << kLogHeader << '\n';
    for (const auto& r : log) {
        out << format_number(r.time_s) << ',' << r.heap_id << ',' << to_string(r.event) << ','
            << format_number(r.live_mb) << ',' << format_number(r.g_mb_per_s) << ','
            << format_number(r.s_mb_per_s) << ',' << format_number(r.limit_mb) << ','
            << format_number(r.usage_mb) << ',';
        if (r.event == LogEvent::gc)
            out << format_number(r.gc_pause_s);
        out << '\n';
    }
}

inline std::vector<LogRecord> read_log(std::istream& in) {
    std::vector<LogRecord> out;
    for (const auto& f : detail::read_rows(in, kLogHeader)) {
        if (f.size() != 9)
            throw ConfigError("log row has wrong field count");
        LogRecord r;
        r.time_s = detail::to_double(f[0]);
        r.heap_id = static_cast<int>(detail::to_long(f[1]));
        r.event = detail::event_from_string(f[2]);
        r.live_mb = detail::to_double(f[3]);
        r.g_mb_per_s = detail::to_double(f[4]);
        r.s_mb_per_s = detail::to_double(f[5]);
        r.limit_mb = detail::to_double(f[6]);
        r.usage_mb = detail::to_double(f[7]);
        r.gc_pause_s = f[8].empty() ? 0.0 : detail::to_double(f[8]);
        out.push_back(r);
    }
    return out;
}

inline void write_sweep(std::ostream& out, const SweepResult& points) {
    out << kSweepHeader << '\n';
    for (const auto& p : points) {
        out << format_number(p.param) << ',' << format_number(p.avg_heap_usage) << ','
            << format_number(p.total_gc_time) << ',' << p.gc_count << '\n';
    }
}

inline SweepResult read_sweep(std::istream& in) {
    SweepResult out;
    for (const auto& f : detail::read_rows(in, kSweepHeader)) {
        if (f.size() != 4)
            throw ConfigError("sweep row has wrong field count");
        out.push_back({detail::to_double(f[0]), detail::to_double(f[1]), detail::to_double(f[2]),
                       detail::to_long(f[3]), ""});
    }
    return out;
}

inline void write_summary(std::ostream& out, const RunMetrics& m, const std::vector<std::string>& rules) {
    out << "heap_id,name,rule,gc_count,total_gc_time_s,avg_heap_usage_mb,allocated_mb,collected_mb,"
           "final_limit_mb,oom\n";
    for (std::size_t i = 0; i < m.per_heap.size(); ++i) {
        const auto& h = m.per_heap[i];
        out << i << ',' << h.name << ',' << (i < rules.size() ? rules[i] : "") << ',' << h.gc_count << ','
            << format_number(h.total_gc_time) << ',' << format_number(h.avg_heap_usage) << ','
            << format_number(h.allocated) << ',' << format_number(h.collected) << ','
            << format_number(h.final_limit) << ',' << (h.oom ? 1 : 0) << '\n';
    }
    out << "total,,," << m.gc_count << ',' << format_number(m.total_gc_time) << ','
        << format_number(m.avg_heap_usage) << ",,,," << (m.any_oom() ? 1 : 0) << '\n';
}

} // namespace membalancer::csv
