#include "covplan/sac.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <utility>

namespace covplan {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2*pi)
constexpr double kLog2 = 0.69314718055994530942;
constexpr double kTanhEps = 1e-6;

struct PolicyHead {
    Eigen::MatrixXd mean;       // 2 x B
    Eigen::MatrixXd log_std;    // clamped
    Eigen::MatrixXd std_dev;    // exp(log_std)
    Eigen::ArrayXXd pass_mask;  // 1 where the clamp is inactive
};

PolicyHead split_head(const Eigen::MatrixXd& raw, const SacConfig& cfg) {
    PolicyHead h;
    h.mean = raw.topRows(SacAgent::kActionDim);
    const Eigen::ArrayXXd ls_raw = raw.bottomRows(SacAgent::kActionDim).array();
    h.pass_mask = (ls_raw > cfg.log_std_min && ls_raw < cfg.log_std_max).cast<double>();
    h.log_std = ls_raw.min(cfg.log_std_max).max(cfg.log_std_min).matrix();
    h.std_dev = h.log_std.array().exp().matrix();
    return h;
}

// Per-dimension log density of the executed action, from the reparameterized
// noise and the squash output tanh(u).
Eigen::ArrayXXd log_prob_terms(const PolicyHead& head, const Eigen::ArrayXXd& noise,
                               const Eigen::ArrayXXd& tanh_u) {
    return -kHalfLog2Pi - head.log_std.array() - 0.5 * noise.square() -
           (1.0 - tanh_u.square() + kTanhEps).log() + kLog2;
}

Eigen::MatrixXd critic_input(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) {
    Eigen::MatrixXd z(states.rows() + actions.rows(), states.cols());
    z.topRows(states.rows()) = states;
    z.bottomRows(actions.rows()) = actions;
    return z;
}

}  // namespace

void SacConfig::validate() const {
    if (gamma <= 0.0 || gamma >= 1.0) throw std::invalid_argument("sac: gamma must be in (0,1)");
    if (tau <= 0.0 || tau > 1.0) throw std::invalid_argument("sac: tau must be in (0,1]");
    if (alpha < 0.0) throw std::invalid_argument("sac: alpha must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("sac: batch_size must be >= 1");
    if (buffer_capacity < 1) throw std::invalid_argument("sac: buffer_capacity must be >= 1");
    if (actor_lr <= 0.0 || critic_lr <= 0.0) throw std::invalid_argument("sac: learning rates must be > 0");
    if (updates_per_env_step < 0) throw std::invalid_argument("sac: updates_per_env_step must be >= 0");
    if (warmup_steps < 0) throw std::invalid_argument("sac: warmup_steps must be >= 0");
    if (log_std_min >= log_std_max) throw std::invalid_argument("sac: log_std bounds out of order");
    for (int h : hidden_sizes) {
        if (h < 1) throw std::invalid_argument("sac: hidden sizes must be >= 1");
    }
}

ReplayBuffer::ReplayBuffer(size_t capacity) : capacity_(capacity) {
    if (capacity < 1) throw std::invalid_argument("replay: capacity must be >= 1");
}

void ReplayBuffer::push(Transition t) {
    if (storage_.size() < capacity_) {
        storage_.push_back(std::move(t));
    } else {
        storage_[cursor_] = std::move(t);
    }
    cursor_ = (cursor_ + 1) % capacity_;
}

std::vector<size_t> ReplayBuffer::sample_indices(size_t n, Rng& rng) const {
    if (n > storage_.size()) throw std::runtime_error("replay: sample larger than buffer occupancy");
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = rng.uniform_index(storage_.size());
    return idx;
}

Batch assemble_batch(const ReplayBuffer& buffer, size_t n, Rng& rng) {
    const std::vector<size_t> idx = buffer.sample_indices(n, rng);
    const Transition& first = buffer.at(idx[0]);
    const Eigen::Index obs_dim = static_cast<Eigen::Index>(first.state.size());
    Batch b;
    b.states.resize(obs_dim, static_cast<Eigen::Index>(n));
    b.next_states.resize(obs_dim, static_cast<Eigen::Index>(n));
    b.actions.resize(SacAgent::kActionDim, static_cast<Eigen::Index>(n));
    b.rewards.resize(static_cast<Eigen::Index>(n));
    b.done.resize(static_cast<Eigen::Index>(n));
    for (size_t i = 0; i < n; ++i) {
        const Transition& t = buffer.at(idx[i]);
        const Eigen::Index col = static_cast<Eigen::Index>(i);
        for (Eigen::Index d = 0; d < obs_dim; ++d) {
            b.states(d, col) = t.state[d];
            b.next_states(d, col) = t.next_state[d];
        }
        b.actions(0, col) = t.action[0];
        b.actions(1, col) = t.action[1];
        b.rewards(col) = t.reward;
        b.done(col) = t.done ? 1.0 : 0.0;
    }
    return b;
}

SacAgent make_sac_agent(int obs_dim, const SacConfig& config, Rng& rng) {
    config.validate();
    if (obs_dim < 1) throw std::invalid_argument("sac: obs_dim must be >= 1");

    std::vector<int> actor_sizes{obs_dim};
    actor_sizes.insert(actor_sizes.end(), config.hidden_sizes.begin(), config.hidden_sizes.end());
    actor_sizes.push_back(2 * SacAgent::kActionDim);  // mean and log_std

    std::vector<int> critic_sizes{obs_dim + SacAgent::kActionDim};
    critic_sizes.insert(critic_sizes.end(), config.hidden_sizes.begin(), config.hidden_sizes.end());
    critic_sizes.push_back(1);

    SacAgent agent{config,
                   obs_dim,
                   make_mlp(actor_sizes, Activation::Relu, rng),
                   make_mlp(critic_sizes, Activation::Relu, rng),
                   make_mlp(critic_sizes, Activation::Relu, rng),
                   Mlp{},
                   Mlp{},
                   AdamState{},
                   AdamState{},
                   AdamState{},
                   ReplayBuffer(config.buffer_capacity)};
    agent.target1 = agent.critic1;
    agent.target2 = agent.critic2;
    agent.actor_opt = make_adam(agent.actor, config.actor_lr);
    agent.critic1_opt = make_adam(agent.critic1, config.critic_lr);
    agent.critic2_opt = make_adam(agent.critic2, config.critic_lr);
    return agent;
}

Eigen::MatrixXd draw_action_noise(Eigen::Index batch, Rng& rng) {
    Eigen::MatrixXd noise(SacAgent::kActionDim, batch);
    for (Eigen::Index b = 0; b < batch; ++b) {
        for (Eigen::Index d = 0; d < SacAgent::kActionDim; ++d) noise(d, b) = rng.normal();
    }
    return noise;
}

ActionSample sample_action(const SacAgent& agent, const Observation& obs, Rng& rng) {
    const Eigen::Map<const Eigen::VectorXd> x(obs.data(), static_cast<Eigen::Index>(obs.size()));
    const Eigen::MatrixXd raw = forward_batch(agent.actor, x);
    if (!raw.allFinite()) throw std::runtime_error("sac: non-finite actor output");
    const PolicyHead head = split_head(raw, agent.config);

    ActionSample out{};
    out.log_prob = 0.0;
    for (int d = 0; d < SacAgent::kActionDim; ++d) {
        const double xi = rng.normal();
        const double u = head.mean(d, 0) + head.std_dev(d, 0) * xi;
        const double t = std::tanh(u);
        out.pre_squash[d] = u;
        out.action[d] = 0.5 * (t + 1.0);
        out.log_prob += -kHalfLog2Pi - head.log_std(d, 0) - 0.5 * xi * xi -
                        std::log(1.0 - t * t + kTanhEps) + kLog2;
    }
    return out;
}

std::array<double, 2> greedy_action(const SacAgent& agent, const Observation& obs) {
    const Eigen::Map<const Eigen::VectorXd> x(obs.data(), static_cast<Eigen::Index>(obs.size()));
    const Eigen::MatrixXd raw = forward_batch(agent.actor, x);
    if (!raw.allFinite()) throw std::runtime_error("sac: non-finite actor output");
    return {0.5 * (std::tanh(raw(0, 0)) + 1.0), 0.5 * (std::tanh(raw(1, 0)) + 1.0)};
}

Eigen::VectorXd compute_critic_targets(const SacAgent& agent, const Batch& batch,
                                       const Eigen::MatrixXd& next_noise) {
    const SacConfig& cfg = agent.config;
    const PolicyHead head = split_head(forward_batch(agent.actor, batch.next_states), cfg);
    const Eigen::ArrayXXd noise = next_noise.array();
    const Eigen::ArrayXXd u = head.mean.array() + head.std_dev.array() * noise;
    const Eigen::ArrayXXd t = u.tanh();
    const Eigen::MatrixXd next_actions = (0.5 * (t + 1.0)).matrix();

    const Eigen::VectorXd log_pi = log_prob_terms(head, noise, t).colwise().sum().transpose();

    const Eigen::MatrixXd z = critic_input(batch.next_states, next_actions);
    const Eigen::RowVectorXd q1 = forward_batch(agent.target1, z);
    const Eigen::RowVectorXd q2 = forward_batch(agent.target2, z);
    const Eigen::VectorXd q_min = q1.cwiseMin(q2).transpose();

    return batch.rewards.array() +
           cfg.gamma * (1.0 - batch.done.array()) * (q_min.array() - cfg.alpha * log_pi.array());
}

double critic_update(SacAgent& agent, const Batch& batch, const Eigen::MatrixXd& next_noise) {
    const Eigen::VectorXd y = compute_critic_targets(agent, batch, next_noise);
    const Eigen::MatrixXd z = critic_input(batch.states, batch.actions);
    const double inv_b = 1.0 / static_cast<double>(batch.size());

    double total_loss = 0.0;
    const auto regress = [&](Mlp& critic, AdamState& opt) {
        const Eigen::RowVectorXd q = forward_batch(critic, z);
        const Eigen::RowVectorXd diff = q - y.transpose();
        total_loss += diff.squaredNorm() * inv_b;
        const Eigen::MatrixXd upstream = (2.0 * inv_b) * diff;
        GradBundle grads = backward_batch(critic, z, upstream);
        adam_step(critic, grads, opt);
    };
    regress(agent.critic1, agent.critic1_opt);
    regress(agent.critic2, agent.critic2_opt);
    return 0.5 * total_loss;
}

double critic_update(SacAgent& agent, const Batch& batch, Rng& rng) {
    return critic_update(agent, batch, draw_action_noise(batch.size(), rng));
}

std::pair<double, GradBundle> actor_loss_and_grads(const SacAgent& agent, const Batch& batch,
                                                   const Eigen::MatrixXd& noise) {
    const SacConfig& cfg = agent.config;
    const Eigen::Index b_size = batch.size();
    const double inv_b = 1.0 / static_cast<double>(b_size);

    const PolicyHead head = split_head(forward_batch(agent.actor, batch.states), cfg);
    const Eigen::ArrayXXd xi = noise.array();
    const Eigen::ArrayXXd u = head.mean.array() + head.std_dev.array() * xi;
    const Eigen::ArrayXXd t = u.tanh();
    const Eigen::ArrayXXd one_m_t2 = 1.0 - t.square();
    const Eigen::ArrayXXd denom = one_m_t2 + kTanhEps;
    const Eigen::MatrixXd actions = (0.5 * (t + 1.0)).matrix();

    const Eigen::VectorXd log_pi = log_prob_terms(head, xi, t).colwise().sum().transpose();

    const Eigen::MatrixXd z = critic_input(batch.states, actions);
    const Eigen::RowVectorXd q1 = forward_batch(agent.critic1, z);
    const Eigen::RowVectorXd q2 = forward_batch(agent.critic2, z);
    const Eigen::RowVectorXd q_min = q1.cwiseMin(q2);

    const double loss = inv_b * (cfg.alpha * log_pi.sum() - q_min.sum());

    // dL/da through whichever critic realizes the min (ties to critic1).
    const Eigen::RowVectorXd min_mask = (q1.array() <= q2.array()).cast<double>();
    const Eigen::MatrixXd up1 = (-inv_b) * min_mask;
    const Eigen::MatrixXd up2 = (-inv_b) * (1.0 - min_mask.array()).matrix();
    const Eigen::MatrixXd dz =
        backward_batch(agent.critic1, z, up1).input_grads + backward_batch(agent.critic2, z, up2).input_grads;
    const Eigen::ArrayXXd dl_da = dz.bottomRows(SacAgent::kActionDim).array();

    // Chain through a = (tanh(u)+1)/2 and the entropy term's tanh correction.
    const Eigen::ArrayXXd dl_du =
        dl_da * (0.5 * one_m_t2) + (cfg.alpha * inv_b) * (2.0 * t * one_m_t2 / denom);

    const Eigen::ArrayXXd dl_dmean = dl_du;
    const Eigen::ArrayXXd dl_dlogstd =
        (dl_du * head.std_dev.array() * xi - cfg.alpha * inv_b) * head.pass_mask;

    Eigen::MatrixXd upstream(2 * SacAgent::kActionDim, b_size);
    upstream.topRows(SacAgent::kActionDim) = dl_dmean.matrix();
    upstream.bottomRows(SacAgent::kActionDim) = dl_dlogstd.matrix();

    GradBundle grads = backward_batch(agent.actor, batch.states, upstream);
    return {loss, std::move(grads)};
}

double actor_update(SacAgent& agent, const Batch& batch, const Eigen::MatrixXd& noise) {
    auto [loss, grads] = actor_loss_and_grads(agent, batch, noise);
    adam_step(agent.actor, grads, agent.actor_opt);
    return loss;
}

double actor_update(SacAgent& agent, const Batch& batch, Rng& rng) {
    return actor_update(agent, batch, draw_action_noise(batch.size(), rng));
}

void target_update(SacAgent& agent) {
    const double tau = agent.config.tau;
    const auto track = [tau](Mlp& target, const Mlp& critic) {
        for (size_t l = 0; l < critic.weights.size(); ++l) {
            target.weights[l] = tau * critic.weights[l] + (1.0 - tau) * target.weights[l];
            target.biases[l] = tau * critic.biases[l] + (1.0 - tau) * target.biases[l];
        }
    };
    track(agent.target1, agent.critic1);
    track(agent.target2, agent.critic2);
}

// --- checkpoint io ---

namespace {

constexpr char kAgentMagic[4] = {'C', 'A', 'G', 'T'};
constexpr uint32_t kAgentVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw std::runtime_error("checkpoint: truncated stream");
    return value;
}

}  // namespace

void save_agent(const SacAgent& agent, std::ostream& out) {
    out.write(kAgentMagic, 4);
    write_pod(out, kAgentVersion);
    const SacConfig& c = agent.config;
    write_pod(out, c.gamma);
    write_pod(out, c.tau);
    write_pod(out, c.alpha);
    write_pod(out, static_cast<int64_t>(c.batch_size));
    write_pod(out, static_cast<uint64_t>(c.buffer_capacity));
    write_pod(out, c.actor_lr);
    write_pod(out, c.critic_lr);
    write_pod(out, static_cast<int64_t>(c.updates_per_env_step));
    write_pod(out, static_cast<int64_t>(c.warmup_steps));
    write_pod(out, c.log_std_min);
    write_pod(out, c.log_std_max);
    write_pod(out, static_cast<uint32_t>(c.hidden_sizes.size()));
    for (int h : c.hidden_sizes) write_pod(out, static_cast<uint32_t>(h));
    write_pod(out, static_cast<int64_t>(agent.obs_dim));

    save_mlp(agent.actor, out);
    save_mlp(agent.critic1, out);
    save_mlp(agent.critic2, out);
    save_mlp(agent.target1, out);
    save_mlp(agent.target2, out);
    save_adam(agent.actor_opt, out);
    save_adam(agent.critic1_opt, out);
    save_adam(agent.critic2_opt, out);
}

SacAgent load_agent(std::istream& in) {
    char buf[4];
    in.read(buf, 4);
    if (!in || std::memcmp(buf, kAgentMagic, 4) != 0)
        throw std::runtime_error("checkpoint: bad magic for agent");
    if (read_pod<uint32_t>(in) != kAgentVersion)
        throw std::runtime_error("checkpoint: unsupported agent version");

    SacConfig c;
    c.gamma = read_pod<double>(in);
    c.tau = read_pod<double>(in);
    c.alpha = read_pod<double>(in);
    c.batch_size = static_cast<int>(read_pod<int64_t>(in));
    c.buffer_capacity = static_cast<size_t>(read_pod<uint64_t>(in));
    c.actor_lr = read_pod<double>(in);
    c.critic_lr = read_pod<double>(in);
    c.updates_per_env_step = static_cast<int>(read_pod<int64_t>(in));
    c.warmup_steps = static_cast<int>(read_pod<int64_t>(in));
    c.log_std_min = read_pod<double>(in);
    c.log_std_max = read_pod<double>(in);
    const uint32_t n_hidden = read_pod<uint32_t>(in);
    if (n_hidden > 64) throw std::runtime_error("checkpoint: implausible hidden layer count");
    c.hidden_sizes.resize(n_hidden);
    for (uint32_t i = 0; i < n_hidden; ++i) c.hidden_sizes[i] = static_cast<int>(read_pod<uint32_t>(in));
    const int obs_dim = static_cast<int>(read_pod<int64_t>(in));

    SacAgent agent{c,       obs_dim, load_mlp(in), load_mlp(in), load_mlp(in),
                   load_mlp(in), load_mlp(in), load_adam(in), load_adam(in), load_adam(in),
                   ReplayBuffer(c.buffer_capacity)};
    return agent;
}

}  // namespace covplan
