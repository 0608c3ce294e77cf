#include "covplan/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace covplan {

namespace {
constexpr double kPi = 3.14159265358979323846;

double deg2rad(double deg) { return deg * kPi / 180.0; }

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }
}  // namespace

void EnvConfig::validate() const {
    if (width < 1 || height < 1) throw std::invalid_argument("env: width and height must be >= 1");
    if (num_agents < 1) throw std::invalid_argument("env: num_agents must be >= 1");
    if (max_linear_speed <= 0.0 || max_angular_speed_deg <= 0.0)
        throw std::invalid_argument("env: speeds must be > 0");
    if (sensor_radius <= 0.0) throw std::invalid_argument("env: sensor_radius must be > 0");
    if (sensor_half_angle_deg <= 0.0 || sensor_half_angle_deg > 180.0)
        throw std::invalid_argument("env: sensor_half_angle_deg must be in (0, 180]");
    if (collision_radius <= 0.0) throw std::invalid_argument("env: collision_radius must be > 0");
    if (max_steps < 1) throw std::invalid_argument("env: max_steps must be >= 1");
    if (num_agents > width)
        throw std::invalid_argument("env: num_agents must fit on one row (num_agents <= width)");
}

Action::Action(double lin_raw, double ang_raw) : lin(clamp01(lin_raw)), ang(clamp01(ang_raw)) {}

double wrap_angle(double theta) {
    double t = std::fmod(theta, kTwoPi);
    if (t < 0.0) t += kTwoPi;
    return t;
}

double wrap_signed(double delta) {
    double d = std::fmod(delta + kPi, kTwoPi);
    if (d < 0.0) d += kTwoPi;
    return d - kPi;
}

bool fully_covered(const CoverageState& state, const EnvConfig& config) {
    return state.covered_count == config.total_cells();
}

bool is_terminal(const CoverageState& state, const EnvConfig& config) {
    return fully_covered(state, config) || state.step_count >= config.max_steps;
}

AgentPose kinematics(const AgentPose& pose, const Action& action, const EnvConfig& config) {
    // ang in [0,1] maps to a signed turn: 0.5 keeps the heading.
    const double turn = (2.0 * action.ang - 1.0) * deg2rad(config.max_angular_speed_deg);
    AgentPose out;
    out.theta = wrap_angle(pose.theta + turn);
    out.x = pose.x + action.lin * config.max_linear_speed * std::cos(out.theta);
    out.y = pose.y + action.lin * config.max_linear_speed * std::sin(out.theta);
    return out;
}

std::vector<int> footprint(const AgentPose& pose, const EnvConfig& config) {
    const double r = config.sensor_radius;
    const double half = deg2rad(config.sensor_half_angle_deg);
    // Cell (ix,iy) has its center at (ix+0.5, iy+0.5); only cells within the
    // sensor's bounding box can qualify.
    const int ix0 = std::max(0, static_cast<int>(std::floor(pose.x - r - 0.5)));
    const int ix1 = std::min(config.width - 1, static_cast<int>(std::ceil(pose.x + r - 0.5)));
    const int iy0 = std::max(0, static_cast<int>(std::floor(pose.y - r - 0.5)));
    const int iy1 = std::min(config.height - 1, static_cast<int>(std::ceil(pose.y + r - 0.5)));

    std::vector<int> cells;
    for (int iy = iy0; iy <= iy1; ++iy) {
        for (int ix = ix0; ix <= ix1; ++ix) {
            const double dx = ix + 0.5 - pose.x;
            const double dy = iy + 0.5 - pose.y;
            if (dx * dx + dy * dy > r * r) continue;
            const double bearing = std::atan2(dy, dx);
            if (std::abs(wrap_signed(bearing - pose.theta)) > half) continue;
            cells.push_back(iy * config.width + ix);
        }
    }
    return cells;
}

std::pair<CoverageState, std::vector<Observation>> reset(const EnvConfig& config, Rng& rng) {
    config.validate();

    // Anchor cell, resampled until the whole row of agents fits.
    int ax = 0;
    int ay = 0;
    while (true) {
        ax = static_cast<int>(rng.uniform_index(static_cast<uint64_t>(config.width)));
        ay = static_cast<int>(rng.uniform_index(static_cast<uint64_t>(config.height)));
        if (ax + 0.5 + (config.num_agents - 1) <= config.width) break;
    }
    const double theta = rng.uniform(0.0, kTwoPi);

    CoverageState state;
    state.poses.resize(config.num_agents);
    for (int i = 0; i < config.num_agents; ++i) {
        state.poses[i] = AgentPose{ax + 0.5 + i, ay + 0.5, theta};
    }
    state.covered.assign(config.total_cells(), 0);
    state.last_actions.assign(config.num_agents, Action{});
    state.step_count = 0;
    state.covered_count = 0;

    // Initial poses sense the map before the first action.
    for (const AgentPose& pose : state.poses) {
        for (int cell : footprint(pose, config)) {
            if (!state.covered[cell]) {
                state.covered[cell] = 1;
                ++state.covered_count;
            }
        }
    }

    std::vector<Observation> observations(config.num_agents);
    for (int i = 0; i < config.num_agents; ++i) observations[i] = observe(state, i, config);
    return {std::move(state), std::move(observations)};
}

void step_in_place(CoverageState& state, const JointAction& actions, const EnvConfig& config,
                   std::vector<double>* rewards_out, std::vector<AgentEvents>* info_out) {
    const int n = config.num_agents;
    if (static_cast<int>(actions.size()) != n)
        throw std::invalid_argument("step: joint action size does not match num_agents");
    if (is_terminal(state, config)) throw std::runtime_error("episode finished");

    std::vector<AgentEvents> events(n);

    for (int i = 0; i < n; ++i) {
        AgentPose raw = kinematics(state.poses[i], actions[i], config);
        const bool oob = raw.x < 0.0 || raw.x > config.width || raw.y < 0.0 || raw.y > config.height;
        raw.x = std::clamp(raw.x, 0.0, static_cast<double>(config.width));
        raw.y = std::clamp(raw.y, 0.0, static_cast<double>(config.height));
        state.poses[i] = raw;
        events[i].out_of_bounds = oob;
    }

    // Collisions after the whole team has moved.
    const double cr2 = config.collision_radius * config.collision_radius;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double dx = state.poses[i].x - state.poses[j].x;
            const double dy = state.poses[i].y - state.poses[j].y;
            if (dx * dx + dy * dy < cr2) {
                events[i].collided = true;
                events[j].collided = true;
            }
        }
    }

    // New pixels, lowest index claims first.
    for (int i = 0; i < n; ++i) {
        int claimed = 0;
        for (int cell : footprint(state.poses[i], config)) {
            if (!state.covered[cell]) {
                state.covered[cell] = 1;
                ++claimed;
            }
        }
        state.covered_count += claimed;
        events[i].new_pixels = claimed;
    }

    state.last_actions = actions;
    ++state.step_count;

    if (rewards_out) {
        rewards_out->resize(n);
        for (int i = 0; i < n; ++i) {
            (*rewards_out)[i] = config.reward_new_pixel * events[i].new_pixels +
                                (events[i].collided ? config.reward_collision : 0.0) +
                                (events[i].out_of_bounds ? config.reward_oob : 0.0);
        }
    }
    if (info_out) *info_out = std::move(events);
}

std::pair<CoverageState, StepResult> step(const CoverageState& state, const JointAction& actions,
                                          const EnvConfig& config) {
    CoverageState next = state;
    StepResult result;
    step_in_place(next, actions, config, &result.rewards, &result.info);
    result.done = is_terminal(next, config);
    result.observations.resize(config.num_agents);
    for (int i = 0; i < config.num_agents; ++i) result.observations[i] = observe(next, i, config);
    return {std::move(next), std::move(result)};
}

Observation observe(const CoverageState& state, int agent_index, const EnvConfig& config) {
    if (agent_index < 0 || agent_index >= config.num_agents)
        throw std::out_of_range("observe: agent_index out of range");

    Observation v;
    v.reserve(config.obs_dim());
    const AgentPose& self = state.poses[agent_index];
    v.push_back(self.x / config.width);
    v.push_back(self.y / config.height);
    v.push_back(std::sin(self.theta));
    v.push_back(std::cos(self.theta));
    v.push_back(state.last_actions[agent_index].lin);
    v.push_back(state.last_actions[agent_index].ang);
    for (int j = 0; j < config.num_agents; ++j) {
        if (j == agent_index) continue;
        v.push_back(state.poses[j].x / config.width);
        v.push_back(state.poses[j].y / config.height);
    }
    for (uint8_t cell : state.covered) v.push_back(cell ? 1.0 : 0.0);
    return v;
}

CoverageState clone_state(const CoverageState& state) { return state; }

std::string bitmap_to_string(const CoverageState& state, const EnvConfig& config) {
    std::string s;
    s.reserve(state.covered.size());
    (void)config;
    for (uint8_t cell : state.covered) s.push_back(cell ? '1' : '0');
    return s;
}

}  // namespace covplan
