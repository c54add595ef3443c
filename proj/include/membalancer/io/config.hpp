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

// JSON experiment configuration. The schema is documented in
// docs/config.md. The trade-off parameter c is always in %/MB here.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "membalancer/controller.hpp"
#include "membalancer/errors.hpp"
#include "membalancer/model.hpp"
#include "membalancer/simulator.hpp"
#include "membalancer/workloads.hpp"

namespace membalancer {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Workloads

inline void to_json(json& j, const Phase& p) {
    j = json{{"duration_s", p.duration},
             {"alloc_rate_mb_s", p.alloc_rate},
             {"base_live_mb", p.base_live},
             {"leak_rate_mb_s", p.leak_rate},
             {"gc_speed_mb_s", p.gc_speed}};
}

inline void from_json(const json& j, Phase& p) {
    p.duration = j.at("duration_s").get<double>();
    p.alloc_rate = j.at("alloc_rate_mb_s").get<double>();
    p.base_live = j.at("base_live_mb").get<double>();
    p.leak_rate = j.value("leak_rate_mb_s", 0.0);
    p.gc_speed = j.at("gc_speed_mb_s").get<double>();
}

inline void to_json(json& j, const WorkloadSpec& w) {
    j = json{{"name", w.name}, {"phases", w.phases}, {"repeat", w.repeat}};
}

inline void from_json(const json& j, WorkloadSpec& w) {
    w.name = j.value("name", std::string("inline"));
    w.phases = j.at("phases").get<std::vector<Phase>>();
    w.repeat = j.value("repeat", 1);
}

namespace detail {

inline Range range_from_json(const json& j, const char* key, Range fallback) {
    if (!j.contains(key))
        return fallback;
    const auto& r = j.at(key);
    if (!r.is_array() || r.size() != 2)
        throw ConfigError(std::string("bound '") + key + "' must be a [min, max] pair");
    return {r[0].get<double>(), r[1].get<double>()};
}

} // namespace detail

inline WorkloadBounds bounds_from_json(const json& j) {
    WorkloadBounds b;
    b.live = detail::range_from_json(j, "live_mb", b.live);
    b.alloc_rate = detail::range_from_json(j, "alloc_rate_mb_s", b.alloc_rate);
    b.gc_speed = detail::range_from_json(j, "gc_speed_mb_s", b.gc_speed);
    b.leak_fraction = detail::range_from_json(j, "leak_fraction", b.leak_fraction);
    b.phase_duration = detail::range_from_json(j, "phase_duration_s", b.phase_duration);
    b.min_phases = j.value("min_phases", b.min_phases);
    b.max_phases = j.value("max_phases", b.max_phases);
    return b;
}

// ---------------------------------------------------------------------------
// Rules

/// Rule kind names accepted in configs and on the command line.
inline HeapLimitRule default_rule(const std::string& kind) {
    if (kind == "sqrt")
        return SquareRootRule{};
    if (kind == "exact-sqrt")
        return ExactSquareRootRule{};
    if (kind == "proportional")
        return ProportionalRule{};
    if (kind == "gc-time-target")
        return GcTimeTargetRule{};
    if (kind == "racket")
        return RacketRule{};
    if (kind == "fixed")
        throw ConfigError("rule 'fixed' needs an explicit limit_mb");
    throw ConfigError("unknown rule '" + kind +
                      "'; expected sqrt, exact-sqrt, proportional, gc-time-target, racket or fixed");
}

namespace detail {

inline ControllerConfig controller_from_json(const json& j) {
    ControllerConfig cfg;
    cfg.c = TradeoffParam::percent_per_mb(j.value("c", cfg.c.percent_per_mb()));
    cfg.alpha_g = j.value("alpha_g", cfg.alpha_g);
    cfg.alpha_s = j.value("alpha_s", cfg.alpha_s);
    cfg.e_min = j.value("e_min_mb", cfg.e_min);
    cfg.m_nursery = j.value("nursery_mb", cfg.m_nursery);
    cfg.heartbeat_period = j.value("heartbeat_s", cfg.heartbeat_period);
    return cfg;
}

inline json controller_to_json(const ControllerConfig& cfg) {
    return json{{"c", cfg.c.percent_per_mb()}, {"alpha_g", cfg.alpha_g},   {"alpha_s", cfg.alpha_s},
                {"e_min_mb", cfg.e_min},       {"nursery_mb", cfg.m_nursery}, {"heartbeat_s", cfg.heartbeat_period}};
}

} // namespace detail

inline HeapLimitRule rule_from_json(const json& j) {
    if (j.is_string())
        return default_rule(j.get<std::string>());
    const auto kind = j.at("kind").get<std::string>();
    HeapLimitRule rule;
    try {
        if (kind == "sqrt") {
            rule = SquareRootRule{detail::controller_from_json(j)};
        } else if (kind == "exact-sqrt") {
            rule = ExactSquareRootRule{detail::controller_from_json(j)};
        } else if (kind == "proportional") {
            rule = ProportionalRule{j.value("alpha", 1.0)};
        } else if (kind == "gc-time-target") {
            GcTimeTargetRule r;
            r.rho = j.value("rho", r.rho);
            r.adjust_gain = j.value("adjust_gain", r.adjust_gain);
            r.cap_alpha = j.value("cap_alpha", r.cap_alpha);
            r.min_extra = j.value("min_extra_mb", r.min_extra);
            rule = r;
        } else if (kind == "racket") {
            rule = RacketRule{j.value("k", 2.0)};
        } else if (kind == "fixed") {
            rule = FixedRule{j.at("limit_mb").get<double>()};
        } else {
            rule = default_rule(kind);
        }
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    validate(rule);
    return rule;
}

inline json rule_to_json(const HeapLimitRule& rule) {
    json out = std::visit(
        [](const auto& r) -> json {
            using T = std::decay_t<decltype(r)>;
            json j;
            if constexpr (std::is_same_v<T, SquareRootRule> || std::is_same_v<T, ExactSquareRootRule>) {
                j = detail::controller_to_json(r.config);
            } else if constexpr (std::is_same_v<T, ProportionalRule>) {
                j["alpha"] = r.alpha;
            } else if constexpr (std::is_same_v<T, GcTimeTargetRule>) {
                j = json{{"rho", r.rho}, {"adjust_gain", r.adjust_gain}, {"cap_alpha", r.cap_alpha},
                         {"min_extra_mb", r.min_extra}};
            } else if constexpr (std::is_same_v<T, RacketRule>) {
                j["k"] = r.k;
            } else {
                j["limit_mb"] = r.limit;
            }
            return j;
        },
        rule);
    out["kind"] = std::string(rule_name(rule));
    return out;
}

// ---------------------------------------------------------------------------
// Experiment configuration

struct HeapConfig {
    WorkloadSpec workload;
    HeapLimitRule rule = SquareRootRule{};
    double weight = 1.0;
};

struct SweepConfig {
    std::string parameter;      ///< "c" (%/MB), "alpha" or "k"
    std::vector<double> values;
    std::string rule;           ///< rule family the parameter drives
    bool baseline = false;      ///< normalization reference
};

struct OracleConfig {
    std::vector<HeapParams> heaps;
    double total_memory = 0.0;
    double grid_step = 0.01;
};

struct OutputPaths {
    std::string log = "log.csv";
    std::string summary = "summary.csv";
    std::string sweep = "sweep.csv";
    std::string svg = "sweep.svg";
};

struct ExperimentConfig {
    std::vector<HeapConfig> heaps;
    double duration = 0.0;
    double sample_period = 1.0;
    std::vector<SweepConfig> sweeps;
    std::uint64_t seed = 0;
    OutputPaths outputs;
    std::optional<OracleConfig> oracle;
};

/// Values from the command line and environment that override the file.
struct Overrides {
    std::optional<double> duration;
    std::optional<std::uint64_t> seed;
    std::optional<double> c_percent; ///< --c, wins over the environment
    std::optional<std::string> rule;
    std::optional<double> env_c_percent; ///< MEMBALANCER_C
};

inline std::optional<double> c_from_environment() {
    const char* raw = std::getenv("MEMBALANCER_C");
    if (raw == nullptr || *raw == '\0')
        return std::nullopt;
    char* end = nullptr;
    const double value = std::strtod(raw, &end);
    if (end == raw || *end != '\0' || !(value > 0.0) || !std::isfinite(value))
        throw ConfigError("MEMBALANCER_C must be a positive number in %/MB");
    return value;
}

namespace detail {

inline std::vector<WorkloadSpec> workloads_from_json(const json& j, std::uint64_t seed) {
    if (j.is_string()) {
        // "preset" or "preset#index"
        const auto text = j.get<std::string>();
        const auto hash = text.find('#');
        auto specs = preset(text.substr(0, hash));
        if (hash == std::string::npos)
            return specs;
        const auto index = std::stoul(text.substr(hash + 1));
        if (index >= specs.size())
            throw ConfigError("preset index out of range in '" + text + "'");
        return {specs[index]};
    }
    if (j.contains("random")) {
        const auto offset = j.value("seed_offset", std::uint64_t{0});
        return {random_workload(seed + offset, bounds_from_json(j.at("random")))};
    }
    return {j.get<WorkloadSpec>()};
}

} // namespace detail

inline ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig cfg;
    try {
        cfg.duration = j.value("duration_s", 0.0);
        cfg.sample_period = j.value("sample_period_s", 1.0);
        cfg.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("heaps")) {
            for (const auto& h : j.at("heaps")) {
                const auto rule = h.contains("rule") ? rule_from_json(h.at("rule")) : HeapLimitRule{SquareRootRule{}};
                const double weight = h.value("weight", 1.0);
                if (!(weight > 0.0) || !std::isfinite(weight))
                    throw ConfigError("heap weight must be finite and > 0");
                for (auto& w : detail::workloads_from_json(h.at("workload"), cfg.seed)) {
                    if (h.contains("name"))
                        w.name = h.at("name").get<std::string>();
                    cfg.heaps.push_back({std::move(w), rule, weight});
                }
            }
        }
        if (j.contains("sweep")) {
            const auto& s = j.at("sweep");
            const auto entries = s.is_array() ? s : json::array({s});
            for (const auto& e : entries) {
                SweepConfig sc;
                sc.parameter = e.at("parameter").get<std::string>();
                sc.values = e.at("values").get<std::vector<double>>();
                const std::string fallback =
                    sc.parameter == "c" ? "sqrt" : sc.parameter == "alpha" ? "proportional" : "racket";
                sc.rule = e.value("rule", fallback);
                sc.baseline = e.value("baseline", false);
                cfg.sweeps.push_back(std::move(sc));
            }
        }
        if (j.contains("oracle")) {
            const auto& o = j.at("oracle");
            OracleConfig oc;
            for (const auto& h : o.at("heaps"))
                oc.heaps.push_back({h.at("live_mb").get<double>(), h.at("alloc_rate_mb_s").get<double>(),
                                    h.at("gc_speed_mb_s").get<double>()});
            oc.total_memory = o.at("total_memory_mb").get<double>();
            oc.grid_step = o.value("grid_step_mb", oc.grid_step);
            cfg.oracle = std::move(oc);
        }
        if (j.contains("outputs")) {
            const auto& o = j.at("outputs");
            cfg.outputs.log = o.value("log", cfg.outputs.log);
            cfg.outputs.summary = o.value("summary", cfg.outputs.summary);
            cfg.outputs.sweep = o.value("sweep", cfg.outputs.sweep);
            cfg.outputs.svg = o.value("svg", cfg.outputs.svg);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse '" + path + "': " + e.what());
    }
    return config_from_json(j);
}

namespace detail {

inline void set_c(HeapLimitRule& rule, double c_percent) {
    if (auto* r = std::get_if<SquareRootRule>(&rule))
        r->config.c = TradeoffParam::percent_per_mb(c_percent);
    else if (auto* r = std::get_if<ExactSquareRootRule>(&rule))
        r->config.c = TradeoffParam::percent_per_mb(c_percent);
}

} // namespace detail

/// Applies command-line and environment overrides. Precedence for c:
/// --c, then MEMBALANCER_C, then the file.
inline void apply_overrides(ExperimentConfig& cfg, const Overrides& o) {
    if (o.duration)
        cfg.duration = *o.duration;
    if (o.seed)
        cfg.seed = *o.seed;
    if (o.rule) {
        for (auto& h : cfg.heaps) {
            if (rule_name(h.rule) != *o.rule)
                h.rule = default_rule(*o.rule);
        }
    }
    const auto c = o.c_percent ? o.c_percent : o.env_c_percent;
    if (c) {
        if (!(*c > 0.0) || !std::isfinite(*c))
            throw ConfigError("c must be a positive number in %/MB");
        for (auto& h : cfg.heaps)
            detail::set_c(h.rule, *c);
    }
}

inline void validate(const ExperimentConfig& cfg) {
    if (!(cfg.duration > 0.0) || !std::isfinite(cfg.duration))
        throw ConfigError("duration must be finite and > 0");
    if (!(cfg.sample_period > 0.0) || !std::isfinite(cfg.sample_period))
        throw ConfigError("sample period must be finite and > 0");
    if (cfg.heaps.empty())
        throw ConfigError("config lists no heaps");
    for (const auto& h : cfg.heaps) {
        validate(h.workload);
        validate(h.rule);
    }
    for (const auto& s : cfg.sweeps) {
        if (s.parameter != "c" && s.parameter != "alpha" && s.parameter != "k")
            throw ConfigError("sweep parameter must be c, alpha or k");
        if (s.values.empty())
            throw ConfigError("sweep value list is empty");
        for (double v : s.values) {
            if (!(v > 0.0) || !std::isfinite(v))
                throw ConfigError("sweep values must be finite and > 0");
        }
    }
}

/// Simulator input, with per-heap weights folded into c.
inline std::vector<HeapSetup> heap_setups(const ExperimentConfig& cfg) {
    std::vector<HeapSetup> out;
    out.reserve(cfg.heaps.size());
    for (const auto& h : cfg.heaps) {
        HeapSetup s{h.workload, h.rule};
        if (auto* r = std::get_if<SquareRootRule>(&s.rule))
            r->config.c = weighted_c(r->config.c, h.weight);
        else if (auto* r = std::get_if<ExactSquareRootRule>(&s.rule))
            r->config.c = weighted_c(r->config.c, h.weight);
        out.push_back(std::move(s));
    }
    return out;
}

/// Rule of the sweep's family with its parameter set to `value`, keeping
/// any estimator settings the heap already had.
inline HeapLimitRule sweep_rule(const SweepConfig& sweep, const HeapLimitRule& base, double value) {
    HeapLimitRule rule = base;
    if (rule_name(rule) != sweep.rule)
        rule = default_rule(sweep.rule);
    if (sweep.parameter == "c") {
        if (!std::holds_alternative<SquareRootRule>(rule) && !std::holds_alternative<ExactSquareRootRule>(rule))
            throw ConfigError("sweeping c requires the sqrt or exact-sqrt rule");
        detail::set_c(rule, value);
    } else if (sweep.parameter == "alpha") {
        auto* r = std::get_if<ProportionalRule>(&rule);
        if (r == nullptr)
            throw ConfigError("sweeping alpha requires the proportional rule");
        r->alpha = value;
    } else {
        auto* r = std::get_if<RacketRule>(&rule);
        if (r == nullptr)
            throw ConfigError("sweeping k requires the racket rule");
        r->k = value;
    }
    return rule;
}

} // namespace membalancer
