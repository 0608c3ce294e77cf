#pragma once
// Global-best particle swarm optimization (maximization convention), plus
// the coverage-plan fitness it drives: a particle encodes the team's
// open-loop action plan over a fixed horizon, and its fitness is the summed
// environment reward of simulating that plan from a copied state.
//
// Fitness evaluations within one iteration are independent; the swarm can
// evaluate them serially (reference path) or with OpenMP. Random draws are
// made in fixed particle order before evaluation, so both paths produce
// bit-identical results.

#include <functional>
#include <utility>
#include <vector>

#include "covplan/env.hpp"
#include "covplan/rng.hpp"

namespace covplan {

struct PsoConfig {
    int num_particles = 50;
    int num_iterations = 100;
    int horizon = 50;           // plan length in env steps
    double inertia = 0.8;       // w
    double cognitive = 2.0;     // c1
    double social = 2.0;        // c2
    double velocity_clamp = 0.2;  // per-dimension fraction of the range
    std::vector<std::pair<double, double>> bounds;  // per-dimension [lo, hi]
    bool parallel_eval = true;

    void validate() const;  // throws std::invalid_argument
    bool operator==(const PsoConfig&) const = default;
};

struct Particle {
    std::vector<double> position;
    std::vector<double> velocity;
    std::vector<double> best_position;
    double best_fitness = 0.0;
};

struct SwarmResult {
    std::vector<double> gbest_position;
    double gbest_fitness = 0.0;
    // gbest after the initial evaluation, then after each iteration;
    // monotonically non-decreasing.
    std::vector<double> fitness_history;
};

using FitnessFn = std::function<double(const std::vector<double>&)>;

// Positions uniform in bounds; velocities uniform in
// [-velocity_clamp*range, +velocity_clamp*range]. Draw order: per particle,
// positions for all dimensions then velocities for all dimensions.
std::vector<Particle> init_swarm(const PsoConfig& config, Rng& rng);

// v <- w*v + c1*r1.*(pbest - x) + c2*r2.*(gbest - x), then velocity clamp,
// then x <- clamp(x + v, bounds). r1/r2 are per-dimension uniform[0,1].
void update_particle(Particle& p, const std::vector<double>& gbest, const PsoConfig& config,
                     const double* r1, const double* r2);

// Serial reference and OpenMP evaluation of all particle positions.
// Both fill fitness_out[i] = fitness(swarm[i].position).
void evaluate_swarm_serial(const FitnessFn& fitness, const std::vector<Particle>& swarm,
                           std::vector<double>& fitness_out);
void evaluate_swarm_parallel(const FitnessFn& fitness, const std::vector<Particle>& swarm,
                             std::vector<double>& fitness_out);

// Maximizes. Throws std::runtime_error if the fitness function returns a
// non-finite value, identifying the offending position.
SwarmResult optimize(const FitnessFn& fitness, const PsoConfig& config, Rng& rng);

// Plan layout: step-major, then agent, then [lin, ang];
// dimension = 2 * num_agents * horizon.
std::vector<JointAction> decode_plan(const std::vector<double>& plan, int num_agents, int horizon);

// Simulates the plan on a deep copy of state for up to `horizon` steps
// (stopping early if the episode ends) and returns the total team reward.
double plan_fitness(const CoverageState& state, const std::vector<double>& plan,
                    const EnvConfig& env_config, int horizon);

// Runs optimize() over plan_fitness from the given state and decodes the
// best particle into a horizon-length joint-action sequence.
std::vector<JointAction> propose_plan(const CoverageState& state, const EnvConfig& env_config,
                                      const PsoConfig& pso_config, Rng& rng);

}  // namespace covplan
