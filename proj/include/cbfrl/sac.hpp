#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cbfrl/environment.hpp"
#include "cbfrl/mlp.hpp"

namespace cbfrl {

enum class StoreAction { executed, proposed };

struct SacConfig {
    std::vector<int> hidden{64, 64};
    double lr = 3e-4;
    double gamma = 0.99;
    double tau = 0.005;
    int batch_size = 256;
    std::size_t buffer_capacity = 100000;
    int warmup_steps = 1000;
    int updates_per_step = 1;
    double target_entropy = -1.0;
    double initial_alpha = 1.0;
    double omega_max = 0.7;
    double log_std_min = -5.0;
    double log_std_max = 2.0;
    StoreAction store_action = StoreAction::executed;

    void validate() const;
};

// One environment transition. Both the policy's proposal and the executed
// angular velocity are kept; SacConfig::store_action picks the one that trains.
// Truncation is recorded apart from termination so that it still bootstraps.
struct Transition {
    Eigen::Vector4d obs = Eigen::Vector4d::Zero();
    double omega_proposed = 0.0;
    double omega_executed = 0.0;
    double pre_squash = 0.0;
    double reward = 0.0;
    Eigen::Vector4d next_obs = Eigen::Vector4d::Zero();
    bool terminated = false;
    bool truncated = false;
};

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(const Transition& t);
    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& operator[](std::size_t i) const { return data_[i]; }

    // Uniform sampling with replacement; requires size() >= batch.
    std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const;

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> data_;
};

// Column-major training batch. Actions are normalized to [-1, 1] (omega / omega_max).
struct Batch {
    nn::Matrix obs;       // 4 x N
    nn::Vector action;    // N
    nn::Vector reward;    // N
    nn::Matrix next_obs;  // 4 x N
    nn::Vector terminated;  // N, 1.0 where no bootstrap
};

Batch make_batch(const ReplayBuffer& buffer, const std::vector<std::size_t>& indices, const SacConfig& cfg);

// Squashed-Gaussian policy head evaluated with externally supplied standard
// normal noise, so that every loss is a deterministic function of the parameters.
struct PolicySample {
    nn::Vector mean;       // pre-squash mean
    nn::Vector log_std;
    nn::Vector pre_squash; // mean + std * noise
    nn::Vector action;     // tanh(pre_squash) in [-1, 1]
    nn::Vector log_prob;   // density of omega = omega_max * action
};

PolicySample policy_sample(const nn::Mlp& actor, const nn::Matrix& obs, const nn::Vector& noise,
                           const SacConfig& cfg, nn::Tape* tape = nullptr);

// Critic input: observation rows followed by the normalized action row.
nn::Matrix critic_input(const nn::Matrix& obs, const nn::Vector& action);

// r + gamma (1 - terminated) (min target Q(s', a') - alpha log pi(a'|s')), a' drawn with next_noise.
nn::Vector critic_targets(const nn::Mlp& actor, const nn::Mlp& target1, const nn::Mlp& target2, const Batch& batch,
                          const nn::Vector& next_noise, double alpha, const SacConfig& cfg);

// 0.5 mean (Q1 - y)^2 + 0.5 mean (Q2 - y)^2 with gradients added into g1, g2.
double critic_loss(const nn::Mlp& critic1, const nn::Mlp& critic2, const Batch& batch, const nn::Vector& targets,
                   nn::Mlp* g1, nn::Mlp* g2);

// mean(alpha log pi(a|s) - min(Q1, Q2)(s, a)), a reparameterized with `noise`.
// Gradient with respect to the actor is added into `grad`; log-probabilities are
// returned through `log_probs` when requested.
double actor_loss(const nn::Mlp& actor, const nn::Mlp& critic1, const nn::Mlp& critic2, const nn::Matrix& obs,
                  const nn::Vector& noise, double alpha, const SacConfig& cfg, nn::Mlp* grad,
                  nn::Vector* log_probs = nullptr);

// -log_alpha * mean(log pi + target_entropy); gradient with respect to log_alpha.
double temperature_loss(double log_alpha, const nn::Vector& log_probs, double target_entropy, double* grad);

struct UpdateStats {
    double critic_loss = 0.0;
    double actor_loss = 0.0;
    double temperature_loss = 0.0;
    double alpha = 0.0;
};

class NonFiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ActionSample {
    double omega = 0.0;
    double log_prob = 0.0;
    double pre_squash = 0.0;
};

// Soft actor-critic learner over the angular velocity.
class SacAgent {
public:
    SacAgent(const SacConfig& cfg, Rng& init_rng);

    const SacConfig& config() const { return cfg_; }

    ActionSample sample_action(const Observation& obs, Rng& rng) const;
    // omega_max * tanh(mean); the deterministic action used for evaluation.
    double mean_action(const Observation& obs) const;
    double critic_value(int which, const Observation& obs, double omega) const;
    // min over the twin critics of Q(s, mean action).
    double estimate_state_value(const Observation& obs) const;

    // One gradient step on critics, actor and temperature, then Polyak averaging.
    // Throws NonFiniteError if any loss or parameter turns non-finite.
    UpdateStats update(const Batch& batch, Rng& rng);

    double alpha() const;

    nn::Mlp actor;
    nn::Mlp critic1;
    nn::Mlp critic2;
    nn::Mlp target1;
    nn::Mlp target2;
    double log_alpha = 0.0;

private:
    SacConfig cfg_;
    nn::Adam actor_opt_;
    nn::Adam critic1_opt_;
    nn::Adam critic2_opt_;
    nn::ScalarAdam alpha_opt_;
};

}  // namespace cbfrl
