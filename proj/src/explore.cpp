#include "covplan/explore.hpp"

#include <algorithm>
#include <stdexcept>

namespace covplan {

const char* to_string(ExploreMode mode) {
    switch (mode) {
        case ExploreMode::PolicyOnly: return "policy_only";
        case ExploreMode::EpsilonRandom: return "epsilon_random";
        case ExploreMode::EpsilonPso: return "epsilon_pso";
    }
    return "unknown";
}

ExploreMode explore_mode_from_string(const std::string& name) {
    if (name == "policy_only") return ExploreMode::PolicyOnly;
    if (name == "epsilon_random") return ExploreMode::EpsilonRandom;
    if (name == "epsilon_pso") return ExploreMode::EpsilonPso;
    throw std::invalid_argument("explore: unknown mode '" + name + "'");
}

const char* to_string(ActionSource source) {
    switch (source) {
        case ActionSource::Policy: return "policy";
        case ActionSource::Random: return "random";
        case ActionSource::Pso: return "pso";
    }
    return "unknown";
}

void ExplorationConfig::validate() const {
    if (epsilon_start < 0.0 || epsilon_start > 1.0 || epsilon_end < 0.0 || epsilon_end > epsilon_start)
        throw std::invalid_argument("explore: need 0 <= epsilon_end <= epsilon_start <= 1");
    if (epsilon_decay_steps < 1) throw std::invalid_argument("explore: decay steps must be >= 1");
    if (replan_interval < 0) throw std::invalid_argument("explore: replan_interval must be >= 0");
}

double epsilon_at(int64_t env_step, const ExplorationConfig& config) {
    if (env_step >= config.epsilon_decay_steps) return config.epsilon_end;
    const double frac = static_cast<double>(env_step) / static_cast<double>(config.epsilon_decay_steps);
    return config.epsilon_start + frac * (config.epsilon_end - config.epsilon_start);
}

void PlanCache::invalidate() {
    plan.clear();
    cursor = 0;
    origin_step = 0;
    episode_id = -1;
}

namespace {

JointAction sample_policy_actions(const CoverageState& state, const std::vector<SacAgent>& agents,
                                  const EnvConfig& env_config, Rng& policy_rng) {
    JointAction actions;
    actions.reserve(agents.size());
    for (size_t i = 0; i < agents.size(); ++i) {
        const Observation obs = observe(state, static_cast<int>(i), env_config);
        const ActionSample s = sample_action(agents[i], obs, policy_rng);
        actions.emplace_back(s.action[0], s.action[1]);
    }
    return actions;
}

}  // namespace

SelectResult select_actions(const CoverageState& state, const std::vector<SacAgent>& agents,
                            PlanCache& cache, int64_t env_step, int64_t episode_id,
                            const ExplorationConfig& config, const PsoConfig& pso_config,
                            const EnvConfig& env_config, Rng& policy_rng, Rng& pso_rng) {
    // One coin per env step, drawn in every mode so streams stay aligned.
    const double coin = policy_rng.uniform();
    const double eps = epsilon_at(env_step, config);

    if (config.mode == ExploreMode::PolicyOnly || coin >= eps) {
        return {sample_policy_actions(state, agents, env_config, policy_rng), ActionSource::Policy};
    }

    if (config.mode == ExploreMode::EpsilonRandom) {
        JointAction actions;
        actions.reserve(agents.size());
        for (size_t i = 0; i < agents.size(); ++i) {
            const double lin = policy_rng.uniform();
            const double ang = policy_rng.uniform();
            actions.emplace_back(lin, ang);
        }
        return {std::move(actions), ActionSource::Random};
    }

    // epsilon_pso: consume the cached plan, replanning when it is spent.
    const size_t budget = config.replan_interval > 0
                              ? std::min<size_t>(config.replan_interval, pso_config.horizon)
                              : static_cast<size_t>(pso_config.horizon);
    size_t next_index = cache.cursor;
    if (config.plan_follow_env && cache.episode_id == episode_id) {
        next_index = static_cast<size_t>(env_step - cache.origin_step);
    }
    const bool valid = cache.episode_id == episode_id && next_index < cache.plan.size() &&
                       next_index < budget;
    if (!valid) {
        cache.plan = propose_plan(state, env_config, pso_config, pso_rng);
        cache.origin_step = env_step;
        cache.episode_id = episode_id;
        cache.pso_runs += 1;
        next_index = 0;
    }
    cache.cursor = next_index + 1;
    return {cache.plan[next_index], ActionSource::Pso};
}

}  // namespace covplan
