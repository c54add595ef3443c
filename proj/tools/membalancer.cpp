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

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "membalancer/cli/commands.hpp"

namespace {

using namespace membalancer;

struct CommonFlags {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    std::optional<double> duration;
    std::optional<double> c;
    std::optional<std::string> rule;
    bool svg = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool needs_config) {
    auto* opt = cmd->add_option("--config", f.config, "experiment config (JSON)");
    if (needs_config)
        opt->required();
    cmd->add_option("--out", f.out, "output directory")->capture_default_str();
    cmd->add_option("--seed", f.seed, "seed for random workloads");
    cmd->add_option("--duration", f.duration, "simulated seconds");
    cmd->add_option("--c", f.c, "trade-off parameter c in %/MB (overrides MEMBALANCER_C)");
    cmd->add_option("--rule", f.rule, "force every heap onto this rule: sqrt, exact-sqrt, proportional, "
                                      "gc-time-target, racket");
}

ExperimentConfig load_with_overrides(const CommonFlags& f) {
    auto cfg = load_config(f.config);
    Overrides o;
    o.duration = f.duration;
    o.seed = f.seed;
    o.c_percent = f.c;
    o.rule = f.rule;
    o.env_c_percent = c_from_environment();
    apply_overrides(cfg, o);
    return cfg;
}

HeapParams parse_heap(const std::string& text) {
    std::istringstream in(text);
    HeapParams p;
    char comma1 = 0, comma2 = 0;
    if (!(in >> p.live >> comma1 >> p.alloc_rate >> comma2 >> p.gc_speed) || comma1 != ',' || comma2 != ',')
        throw ConfigError("--heap expects LIVE,ALLOC_RATE,GC_SPEED (MB, MB/s, MB/s), got '" + text + "'");
    return p;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Heap limit simulator and square-root rule toolkit"};
    app.require_subcommand(1);

    CommonFlags sim_flags;
    auto* simulate = app.add_subcommand("simulate", "run one simulation, write log and summary CSVs");
    add_common(simulate, sim_flags, true);

    CommonFlags sweep_flags;
    auto* sweep = app.add_subcommand("sweep", "run a parameter sweep, write sweep CSV (and SVG)");
    add_common(sweep, sweep_flags, true);
    sweep->add_flag("--svg", sweep_flags.svg, "also write an SVG scatter with fitted curves");

    CommonFlags oracle_flags;
    std::vector<std::string> oracle_heaps;
    std::optional<double> oracle_total;
    double oracle_step = 0.01;
    auto* oracle = app.add_subcommand("oracle", "compare closed-form and brute-force memory allocation");
    oracle->add_option("--config", oracle_flags.config, "config with an 'oracle' section");
    oracle->add_option("--heap", oracle_heaps, "LIVE,ALLOC_RATE,GC_SPEED; repeat for each heap");
    oracle->add_option("--total", oracle_total, "memory budget, MB");
    oracle->add_option("--step", oracle_step, "grid step, MB")->capture_default_str();

    std::string plot_input, plot_output = "plot.svg";
    auto* plot = app.add_subcommand("plot", "render a sweep CSV or log CSV as SVG");
    plot->add_option("--input", plot_input, "sweep or log CSV")->required();
    plot->add_option("--out", plot_output, "output SVG path")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate)
            return cli::cmd_simulate(load_with_overrides(sim_flags), sim_flags.out, std::cout);
        if (*sweep)
            return cli::cmd_sweep(load_with_overrides(sweep_flags), sweep_flags.out, sweep_flags.svg, std::cout);
        if (*oracle) {
            OracleConfig oc;
            if (!oracle_flags.config.empty()) {
                auto cfg = load_config(oracle_flags.config);
                if (!cfg.oracle)
                    throw ConfigError("config has no 'oracle' section");
                oc = *cfg.oracle;
            }
            if (!oracle_heaps.empty()) {
                oc.heaps.clear();
                for (const auto& h : oracle_heaps)
                    oc.heaps.push_back(parse_heap(h));
            }
            if (oracle_total)
                oc.total_memory = *oracle_total;
            if (oracle->count("--step") > 0 || oracle_flags.config.empty())
                oc.grid_step = oracle_step;
            return cli::cmd_oracle(oc, std::cout);
        }
        if (*plot)
            return cli::cmd_plot(plot_input, plot_output, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kConfigError;
    }
    return cli::kConfigError;
}
