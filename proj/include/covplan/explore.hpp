#pragma once
// Epsilon-greedy action selection where the exploratory branch is a
// PSO-planned joint action instead of a random one, plus the two baselines
// (policy only, epsilon-random). One epsilon coin per env step for the whole
// team; PSO plans are cached and consumed across triggered steps, replanning
// once the cache runs out.

#include <cstdint>
#include <string>
#include <vector>

#include "covplan/env.hpp"
#include "covplan/pso.hpp"
#include "covplan/rng.hpp"
#include "covplan/sac.hpp"

namespace covplan {

enum class ExploreMode : uint8_t { PolicyOnly = 0, EpsilonRandom = 1, EpsilonPso = 2 };

const char* to_string(ExploreMode mode);
ExploreMode explore_mode_from_string(const std::string& name);

struct ExplorationConfig {
    ExploreMode mode = ExploreMode::EpsilonPso;
    double epsilon_start = 0.3;
    double epsilon_end = 0.05;
    int64_t epsilon_decay_steps = 10000;  // env steps
    // Triggered steps consumed from one plan before replanning;
    // 0 means the full PSO horizon.
    int replan_interval = 0;
    // When true the cursor follows the env step count instead of the number
    // of triggered steps, so untriggered steps skip plan entries.
    bool plan_follow_env = false;

    void validate() const;  // throws std::invalid_argument
    bool operator==(const ExplorationConfig&) const = default;
};

// Linear from epsilon_start to epsilon_end over epsilon_decay_steps,
// constant afterwards.
double epsilon_at(int64_t env_step, const ExplorationConfig& config);

enum class ActionSource : uint8_t { Policy = 0, Random = 1, Pso = 2 };

const char* to_string(ActionSource source);

struct PlanCache {
    std::vector<JointAction> plan;
    size_t cursor = 0;
    int64_t origin_step = 0;    // env step at which the plan was produced
    int64_t episode_id = -1;    // plans never survive an episode boundary
    int64_t pso_runs = 0;       // total PSO invocations, for accounting

    void invalidate();
};

struct SelectResult {
    JointAction actions;
    ActionSource source = ActionSource::Policy;
};

// One team decision. Draws the epsilon coin from policy_rng (one draw per
// env step regardless of mode), samples the per-agent policies in ascending
// index order on the policy branch, and runs/consumes the cached PSO plan on
// the heuristic branch.
SelectResult select_actions(const CoverageState& state, const std::vector<SacAgent>& agents,
                            PlanCache& cache, int64_t env_step, int64_t episode_id,
                            const ExplorationConfig& config, const PsoConfig& pso_config,
                            const EnvConfig& env_config, Rng& policy_rng, Rng& pso_rng);

}  // namespace covplan
