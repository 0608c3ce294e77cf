#include "covplan/pso.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace covplan {

void PsoConfig::validate() const {
    if (num_particles < 1) throw std::invalid_argument("pso: num_particles must be >= 1");
    if (num_iterations < 1) throw std::invalid_argument("pso: num_iterations must be >= 1");
    if (horizon < 1) throw std::invalid_argument("pso: horizon must be >= 1");
    if (inertia < 0.0 || inertia > 1.0) throw std::invalid_argument("pso: inertia must be in [0,1]");
    if (cognitive < 0.0 || social < 0.0)
        throw std::invalid_argument("pso: cognitive and social must be >= 0");
    if (velocity_clamp <= 0.0) throw std::invalid_argument("pso: velocity_clamp must be > 0");
    for (const auto& [lo, hi] : bounds) {
        if (!(lo < hi)) throw std::invalid_argument("pso: each bound must satisfy lo < hi");
    }
}

std::vector<Particle> init_swarm(const PsoConfig& config, Rng& rng) {
    const size_t dim = config.bounds.size();
    std::vector<Particle> swarm(config.num_particles);
    for (Particle& p : swarm) {
        p.position.resize(dim);
        p.velocity.resize(dim);
        for (size_t d = 0; d < dim; ++d) {
            p.position[d] = rng.uniform(config.bounds[d].first, config.bounds[d].second);
        }
        for (size_t d = 0; d < dim; ++d) {
            const double vmax =
                config.velocity_clamp * (config.bounds[d].second - config.bounds[d].first);
            p.velocity[d] = rng.uniform(-vmax, vmax);
        }
        p.best_position = p.position;
        p.best_fitness = -std::numeric_limits<double>::infinity();
    }
    return swarm;
}

void update_particle(Particle& p, const std::vector<double>& gbest, const PsoConfig& config,
                     const double* r1, const double* r2) {
    const size_t dim = p.position.size();
    for (size_t d = 0; d < dim; ++d) {
        const auto [lo, hi] = config.bounds[d];
        const double vmax = config.velocity_clamp * (hi - lo);
        double v = config.inertia * p.velocity[d] +
                   config.cognitive * r1[d] * (p.best_position[d] - p.position[d]) +
                   config.social * r2[d] * (gbest[d] - p.position[d]);
        v = std::clamp(v, -vmax, vmax);
        p.velocity[d] = v;
        p.position[d] = std::clamp(p.position[d] + v, lo, hi);
    }
}

void evaluate_swarm_serial(const FitnessFn& fitness, const std::vector<Particle>& swarm,
                           std::vector<double>& fitness_out) {
    fitness_out.resize(swarm.size());
    for (size_t i = 0; i < swarm.size(); ++i) fitness_out[i] = fitness(swarm[i].position);
}

void evaluate_swarm_parallel(const FitnessFn& fitness, const std::vector<Particle>& swarm,
                             std::vector<double>& fitness_out) {
    fitness_out.resize(swarm.size());
    std::exception_ptr first_error = nullptr;
    const int n = static_cast<int>(swarm.size());
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        try {
            fitness_out[i] = fitness(swarm[i].position);
        } catch (...) {
#pragma omp critical
            if (!first_error) first_error = std::current_exception();
        }
    }
    if (first_error) std::rethrow_exception(first_error);
}

namespace {

std::string describe_position(size_t index, const std::vector<double>& pos) {
    std::ostringstream os;
    os << "pso: non-finite fitness at particle " << index << ", position [";
    for (size_t d = 0; d < pos.size(); ++d) {
        if (d) os << ", ";
        os << pos[d];
        if (d >= 7 && pos.size() > 9) {
            os << ", ...";
            break;
        }
    }
    os << "]";
    return os.str();
}

void check_finite(const std::vector<Particle>& swarm, const std::vector<double>& fit) {
    for (size_t i = 0; i < fit.size(); ++i) {
        if (!std::isfinite(fit[i])) throw std::runtime_error(describe_position(i, swarm[i].position));
    }
}

}  // namespace

SwarmResult optimize(const FitnessFn& fitness, const PsoConfig& config, Rng& rng) {
    config.validate();
    const size_t dim = config.bounds.size();
    if (dim == 0) throw std::invalid_argument("pso: bounds must define at least one dimension");

    std::vector<Particle> swarm = init_swarm(config, rng);
    std::vector<double> fit;

    const auto evaluate = [&](const std::vector<Particle>& s, std::vector<double>& out) {
        if (config.parallel_eval) {
            evaluate_swarm_parallel(fitness, s, out);
        } else {
            evaluate_swarm_serial(fitness, s, out);
        }
        check_finite(s, out);
    };

    evaluate(swarm, fit);

    SwarmResult result;
    result.gbest_fitness = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < swarm.size(); ++i) {
        swarm[i].best_fitness = fit[i];
        if (fit[i] > result.gbest_fitness) {
            result.gbest_fitness = fit[i];
            result.gbest_position = swarm[i].position;
        }
    }
    result.fitness_history.reserve(config.num_iterations + 1);
    result.fitness_history.push_back(result.gbest_fitness);

    // r1/r2 for the whole swarm drawn up front each iteration, in particle
    // order, so the parallel evaluation cannot perturb the stream.
    std::vector<double> r1(swarm.size() * dim), r2(swarm.size() * dim);
    for (int it = 0; it < config.num_iterations; ++it) {
        for (size_t i = 0; i < swarm.size(); ++i) {
            for (size_t d = 0; d < dim; ++d) {
                r1[i * dim + d] = rng.uniform();
                r2[i * dim + d] = rng.uniform();
            }
        }
        for (size_t i = 0; i < swarm.size(); ++i) {
            update_particle(swarm[i], result.gbest_position, config, &r1[i * dim], &r2[i * dim]);
        }

        evaluate(swarm, fit);

        for (size_t i = 0; i < swarm.size(); ++i) {
            if (fit[i] > swarm[i].best_fitness) {
                swarm[i].best_fitness = fit[i];
                swarm[i].best_position = swarm[i].position;
            }
            if (fit[i] > result.gbest_fitness) {
                result.gbest_fitness = fit[i];
                result.gbest_position = swarm[i].position;
            }
        }
        result.fitness_history.push_back(result.gbest_fitness);
    }
    return result;
}

std::vector<JointAction> decode_plan(const std::vector<double>& plan, int num_agents, int horizon) {
    if (static_cast<int>(plan.size()) != 2 * num_agents * horizon)
        throw std::invalid_argument("pso: plan dimension must be 2 * num_agents * horizon");
    std::vector<JointAction> actions(horizon);
    for (int t = 0; t < horizon; ++t) {
        actions[t].reserve(num_agents);
        for (int i = 0; i < num_agents; ++i) {
            const int base = t * 2 * num_agents + 2 * i;
            actions[t].emplace_back(plan[base], plan[base + 1]);
        }
    }
    return actions;
}

double plan_fitness(const CoverageState& state, const std::vector<double>& plan,
                    const EnvConfig& env_config, int horizon) {
    const std::vector<JointAction> actions = decode_plan(plan, env_config.num_agents, horizon);
    CoverageState rollout = clone_state(state);
    std::vector<double> rewards;
    double total = 0.0;
    for (int t = 0; t < horizon; ++t) {
        if (is_terminal(rollout, env_config)) break;
        step_in_place(rollout, actions[t], env_config, &rewards, nullptr);
        for (double r : rewards) total += r;
    }
    return total;
}

std::vector<JointAction> propose_plan(const CoverageState& state, const EnvConfig& env_config,
                                      const PsoConfig& pso_config, Rng& rng) {
    if (is_terminal(state, env_config)) throw std::runtime_error("episode finished");
    PsoConfig cfg = pso_config;
    cfg.bounds.assign(static_cast<size_t>(2 * env_config.num_agents * cfg.horizon), {0.0, 1.0});
    const FitnessFn fitness = [&](const std::vector<double>& plan) {
        return plan_fitness(state, plan, env_config, cfg.horizon);
    };
    const SwarmResult result = optimize(fitness, cfg, rng);
    return decode_plan(result.gbest_position, env_config.num_agents, cfg.horizon);
}

}  // namespace covplan
