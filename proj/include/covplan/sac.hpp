#pragma once
// Per-agent soft actor-critic with a fixed entropy temperature: Gaussian
// tanh-squashed policy, twin critics with slowly tracking targets, and a
// uniform FIFO replay buffer. Each agent owns its networks and buffer;
// nothing is shared between agents.
//
// Actions live in [0,1]^2 as the environment executes them; updates
// reconstruct pre-squash values via atanh(2a-1).

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "covplan/env.hpp"
#include "covplan/mlp.hpp"
#include "covplan/rng.hpp"

namespace covplan {

struct SacConfig {
    double gamma = 0.99;
    double tau = 0.005;
    double alpha = 0.2;  // fixed entropy temperature
    int batch_size = 256;
    size_t buffer_capacity = 1000000;
    double actor_lr = 3e-4;
    double critic_lr = 3e-4;
    int updates_per_env_step = 1;
    int warmup_steps = 1000;
    double log_std_min = -20.0;
    double log_std_max = 2.0;
    std::vector<int> hidden_sizes = {128, 128};

    void validate() const;  // throws std::invalid_argument
    bool operator==(const SacConfig&) const = default;
};

// Observations stored as float32 to keep large buffers affordable; training
// math runs in double.
struct Transition {
    std::vector<float> state;
    std::array<float, 2> action;
    float reward = 0.0f;
    std::vector<float> next_state;
    bool done = false;  // true only on full-coverage termination
};

class ReplayBuffer {
public:
    explicit ReplayBuffer(size_t capacity);

    void push(Transition t);  // overwrites the oldest entry when full
    // n indices uniform with replacement; throws if occupancy < n.
    std::vector<size_t> sample_indices(size_t n, Rng& rng) const;
    const Transition& at(size_t index) const { return storage_[index]; }
    size_t size() const { return storage_.size(); }
    size_t capacity() const { return capacity_; }

private:
    size_t capacity_;
    size_t cursor_ = 0;
    std::vector<Transition> storage_;
};

struct Batch {
    Eigen::MatrixXd states;       // obs_dim x B
    Eigen::MatrixXd actions;      // 2 x B
    Eigen::VectorXd rewards;      // B
    Eigen::MatrixXd next_states;  // obs_dim x B
    Eigen::VectorXd done;         // B, 0 or 1
    Eigen::Index size() const { return rewards.size(); }
};

Batch assemble_batch(const ReplayBuffer& buffer, size_t n, Rng& rng);

struct SacAgent {
    SacConfig config;
    int obs_dim = 0;
    static constexpr int kActionDim = 2;
    Mlp actor;  // obs -> [mean; log_std]
    Mlp critic1, critic2;   // [obs; action] -> scalar
    Mlp target1, target2;   // frozen copies tracking the critics
    AdamState actor_opt, critic1_opt, critic2_opt;
    ReplayBuffer buffer;
};

// Builds nets (actor, critic1, critic2 in that order from rng) and targets
// as exact copies of the critics.
SacAgent make_sac_agent(int obs_dim, const SacConfig& config, Rng& rng);

struct ActionSample {
    std::array<double, 2> action;      // executed, in [0,1]
    double log_prob;                   // density of the executed action
    std::array<double, 2> pre_squash;  // u = mean + std * noise
};

ActionSample sample_action(const SacAgent& agent, const Observation& obs, Rng& rng);
// Deterministic head: executed action from the mean, no noise.
std::array<double, 2> greedy_action(const SacAgent& agent, const Observation& obs);

// y = r + gamma * (1 - done) * (min(target1, target2)(s', a') - alpha * log pi(a'|s'))
// with a' freshly sampled from the actor; next_noise is 2 x B standard
// normal.
Eigen::VectorXd compute_critic_targets(const SacAgent& agent, const Batch& batch,
                                       const Eigen::MatrixXd& next_noise);

// One MSE regression step of both critics toward the targets; returns the
// mean of the two critic losses.
double critic_update(SacAgent& agent, const Batch& batch, const Eigen::MatrixXd& next_noise);
double critic_update(SacAgent& agent, const Batch& batch, Rng& rng);

// loss = mean(alpha * log pi(a|s) - min(critic1, critic2)(s, a)) with a
// reparameterized through tanh(mean + std * noise). Pure in the agent;
// gradients cover actor parameters only.
std::pair<double, GradBundle> actor_loss_and_grads(const SacAgent& agent, const Batch& batch,
                                                   const Eigen::MatrixXd& noise);

double actor_update(SacAgent& agent, const Batch& batch, const Eigen::MatrixXd& noise);
double actor_update(SacAgent& agent, const Batch& batch, Rng& rng);

// target <- tau * critic + (1 - tau) * target, both targets.
void target_update(SacAgent& agent);

// Draws a 2 x B standard-normal matrix column by column (dim inner).
Eigen::MatrixXd draw_action_noise(Eigen::Index batch, Rng& rng);

// Versioned container: config, the five nets, the three optimizer states.
void save_agent(const SacAgent& agent, std::ostream& out);
SacAgent load_agent(std::istream& in);

}  // namespace covplan
