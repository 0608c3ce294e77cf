#pragma once
// 2D continuous-pose, discrete-coverage simulator. A team of agents moves
// over a grid of unit cells; each agent senses a forward-looking circular
// sector and marks the cells whose centers fall inside it as covered.
//
// step() is a pure function of (state, actions, config): no hidden
// randomness, identical inputs give bit-identical outputs.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "covplan/rng.hpp"

namespace covplan {

struct EnvConfig {
    int width = 30;
    int height = 30;
    int num_agents = 3;
    double max_linear_speed = 5.0;       // units per step
    double max_angular_speed_deg = 30.0; // degrees per step
    double sensor_radius = 2.0;          // units
    // Angular acceptance each side of the heading. The sensor sweeps
    // [-sensor_half_angle, +sensor_half_angle]; 60 gives the geometry whose
    // per-step footprint maxes out at exactly 7 cells.
    double sensor_half_angle_deg = 60.0;
    double collision_radius = 1.0;
    int max_steps = 200;
    double reward_collision = -5.0;
    double reward_oob = -5.0;
    double reward_new_pixel = 1.0;

    int total_cells() const { return width * height; }
    int obs_dim() const { return 6 + 2 * (num_agents - 1) + width * height; }
    void validate() const;  // throws std::invalid_argument
    bool operator==(const EnvConfig&) const = default;
};

struct AgentPose {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;  // radians in [0, 2*pi)
};

// Normalized control pair; both components clamped to [0,1] on construction.
struct Action {
    double lin = 0.0;
    double ang = 0.0;

    Action() = default;
    Action(double lin_raw, double ang_raw);
};

using JointAction = std::vector<Action>;
using Observation = std::vector<double>;

struct CoverageState {
    std::vector<AgentPose> poses;
    std::vector<uint8_t> covered;  // row-major, y outer, x inner
    std::vector<Action> last_actions;
    int step_count = 0;
    int covered_count = 0;
};

struct AgentEvents {
    bool collided = false;
    bool out_of_bounds = false;
    int new_pixels = 0;
};

struct StepResult {
    std::vector<Observation> observations;
    std::vector<double> rewards;
    bool done = false;
    std::vector<AgentEvents> info;
};

// Wrap an angle into [0, 2*pi).
double wrap_angle(double theta);
// Wrap an angle difference into [-pi, pi].
double wrap_signed(double delta);

bool fully_covered(const CoverageState& state, const EnvConfig& config);
bool is_terminal(const CoverageState& state, const EnvConfig& config);

// Agents start side by side on a random anchor row, sharing one random
// heading; cells sensed from the initial poses count as covered.
std::pair<CoverageState, std::vector<Observation>> reset(const EnvConfig& config, Rng& rng);

// Turn first, then translate along the new heading. Result is not clamped;
// step() handles bounds.
AgentPose kinematics(const AgentPose& pose, const Action& action, const EnvConfig& config);

// Indices (row-major) of the cells whose center lies inside the sensor
// sector: distance <= sensor_radius and |bearing - theta| <= half angle,
// both boundaries inclusive. Off-map cells are excluded.
std::vector<int> footprint(const AgentPose& pose, const EnvConfig& config);

// Advance one step in place. Observations are not built; pass null for
// outputs you do not need. Simultaneous claims on a cell go to the lowest
// agent index. Throws std::runtime_error on a terminal state.
void step_in_place(CoverageState& state, const JointAction& actions, const EnvConfig& config,
                   std::vector<double>* rewards_out, std::vector<AgentEvents>* info_out);

std::pair<CoverageState, StepResult> step(const CoverageState& state, const JointAction& actions,
                                          const EnvConfig& config);

// Layout: x/W, y/H, sin(theta), cos(theta), last lin, last ang, then other
// agents' normalized positions in ascending index order, then the coverage
// bitmap as 0/1 values.
Observation observe(const CoverageState& state, int agent_index, const EnvConfig& config);

CoverageState clone_state(const CoverageState& state);

// '0'/'1' characters, row-major, y outer, x inner.
std::string bitmap_to_string(const CoverageState& state, const EnvConfig& config);

}  // namespace covplan
