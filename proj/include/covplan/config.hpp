#pragma once
// Run configuration and its flat key=value file format (dotted section
// prefixes, '#' comments). parse(emit(cfg)) returns cfg exactly; doubles are
// written in shortest round-trip form.

#include <cstdint>
#include <string>

#include "covplan/env.hpp"
#include "covplan/explore.hpp"
#include "covplan/pso.hpp"
#include "covplan/sac.hpp"

namespace covplan {

struct RunConfig {
    EnvConfig env;
    SacConfig sac;
    PsoConfig pso;
    ExplorationConfig explore;
    int64_t episodes = 1;
    uint64_t seed = 0;
    std::string output_dir = "out";
    int64_t log_every = 1;

    void validate() const;  // throws std::invalid_argument
    bool operator==(const RunConfig&) const = default;
};

// Throws std::invalid_argument on unknown keys or malformed values.
RunConfig parse_config_text(const std::string& text);
RunConfig load_config_file(const std::string& path);
std::string emit_config(const RunConfig& config);

// 15x15 map, 2 agents, trimmed SAC and PSO budgets; finishes a full
// training run in minutes on a laptop.
RunConfig desk_preset();
// The paper's environment and PSO settings (30x30, 3 agents, 50 particles,
// 100 iterations, horizon 50).
RunConfig paper_preset();

}  // namespace covplan
