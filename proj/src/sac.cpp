#include "cbfrl/sac.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace cbfrl {

using nn::Matrix;
using nn::Mlp;
using nn::Vector;

namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

// log(1 - tanh(u)^2) without cancellation for large |u|.
double log_one_minus_tanh_sq(double u) { return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u)); }

Vector standard_normal(std::size_t n, Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = dist(rng);
    return v;
}

Matrix column(const Observation& obs) { return obs.as_vector(); }

// Batch activations sit right at glibc's default mmap threshold, so every temporary
// would otherwise round-trip through mmap and fault its pages back in.
void keep_heap_resident() {
#if defined(__GLIBC__)
    static const bool once = [] {
        mallopt(M_MMAP_THRESHOLD, 64 << 20);
        mallopt(M_TRIM_THRESHOLD, 256 << 20);
        return true;
    }();
    (void)once;
#endif
}

}  // namespace

void SacConfig::validate() const {
    const auto require = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(std::string("invalid SacConfig: ") + what);
    };
    require(!hidden.empty(), "hidden must not be empty");
    for (int h : hidden) require(h > 0, "hidden sizes must be > 0");
    require(lr > 0.0, "lr must be > 0");
    require(gamma >= 0.0 && gamma < 1.0, "gamma must be in [0, 1)");
    require(tau > 0.0 && tau <= 1.0, "tau must be in (0, 1]");
    require(batch_size >= 1, "batch_size must be >= 1");
    require(buffer_capacity >= static_cast<std::size_t>(batch_size), "buffer_capacity must be >= batch_size");
    require(warmup_steps >= 0, "warmup_steps must be >= 0");
    require(updates_per_step >= 0, "updates_per_step must be >= 0");
    require(initial_alpha > 0.0, "initial_alpha must be > 0");
    require(omega_max > 0.0, "omega_max must be > 0");
    require(log_std_min < log_std_max, "log_std_min must be < log_std_max");
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("ReplayBuffer capacity must be > 0");
    data_.reserve(capacity);
}

void ReplayBuffer::push(const Transition& t) {
    if (data_.size() < capacity_) {
        data_.push_back(t);
    } else {
        data_[next_] = t;
    }
    next_ = (next_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch, Rng& rng) const {
    if (data_.size() < batch || batch == 0) throw std::logic_error("ReplayBuffer: not enough transitions to sample");
    std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
    std::vector<std::size_t> idx(batch);
    for (auto& i : idx) i = pick(rng);
    return idx;
}

Batch make_batch(const ReplayBuffer& buffer, const std::vector<std::size_t>& indices, const SacConfig& cfg) {
    const auto n = static_cast<Eigen::Index>(indices.size());
    Batch b{Matrix(4, n), Vector(n), Vector(n), Matrix(4, n), Vector(n)};
    for (Eigen::Index j = 0; j < n; ++j) {
        const Transition& t = buffer[indices[static_cast<std::size_t>(j)]];
        const double omega = cfg.store_action == StoreAction::executed ? t.omega_executed : t.omega_proposed;
        b.obs.col(j) = t.obs;
        b.action(j) = std::clamp(omega / cfg.omega_max, -1.0, 1.0);
        b.reward(j) = t.reward;
        b.next_obs.col(j) = t.next_obs;
        b.terminated(j) = t.terminated ? 1.0 : 0.0;
    }
    return b;
}

PolicySample policy_sample(const Mlp& actor, const Matrix& obs, const Vector& noise, const SacConfig& cfg,
                           nn::Tape* tape) {
    nn::Tape local;
    const Matrix out = actor.forward(obs, tape ? *tape : local);
    const Eigen::Index n = out.cols();
    const double half_span = 0.5 * (cfg.log_std_max - cfg.log_std_min);
    const double log_norm = 0.5 * std::log(2.0 * std::numbers::pi) + std::log(cfg.omega_max);

    PolicySample ps{out.row(0).transpose(), Vector(n), Vector(n), Vector(n), Vector(n)};
    for (Eigen::Index j = 0; j < n; ++j) {
        const double log_std = cfg.log_std_min + half_span * (std::tanh(out(1, j)) + 1.0);
        const double u = ps.mean(j) + std::exp(log_std) * noise(j);
        ps.log_std(j) = log_std;
        ps.pre_squash(j) = u;
        ps.action(j) = std::tanh(u);
        ps.log_prob(j) = -0.5 * noise(j) * noise(j) - log_std - log_norm - log_one_minus_tanh_sq(u);
    }
    return ps;
}

Matrix critic_input(const Matrix& obs, const Vector& action) {
    Matrix x(obs.rows() + 1, obs.cols());
    x.topRows(obs.rows()) = obs;
    x.bottomRows(1) = action.transpose();
    return x;
}

Vector critic_targets(const Mlp& actor, const Mlp& target1, const Mlp& target2, const Batch& batch,
                      const Vector& next_noise, double alpha, const SacConfig& cfg) {
    const PolicySample next = policy_sample(actor, batch.next_obs, next_noise, cfg);
    const Matrix x = critic_input(batch.next_obs, next.action);
    const Vector q = target1.forward(x).row(0).transpose().cwiseMin(target2.forward(x).row(0).transpose());
    const Vector soft = q - alpha * next.log_prob;
    return batch.reward + cfg.gamma * (1.0 - batch.terminated.array()).matrix().cwiseProduct(soft);
}

double critic_loss(const Mlp& critic1, const Mlp& critic2, const Batch& batch, const Vector& targets, Mlp* g1,
                   Mlp* g2) {
    const Matrix x = critic_input(batch.obs, batch.action);
    const double n = static_cast<double>(batch.obs.cols());
    double loss = 0.0;
    const auto one = [&](const Mlp& critic, Mlp* grad) {
        nn::Tape tape;
        const Matrix err = critic.forward(x, tape) - targets.transpose();
        loss += 0.5 * err.squaredNorm() / n;
        if (grad) critic.backward(tape, err / n, grad);
    };
    one(critic1, g1);
    one(critic2, g2);
    return loss;
}

double actor_loss(const Mlp& actor, const Mlp& critic1, const Mlp& critic2, const Matrix& obs, const Vector& noise,
                  double alpha, const SacConfig& cfg, Mlp* grad, Vector* log_probs) {
    nn::Tape actor_tape;
    const PolicySample ps = policy_sample(actor, obs, noise, cfg, &actor_tape);
    const Matrix x = critic_input(obs, ps.action);
    nn::Tape t1, t2;
    const Matrix q1 = critic1.forward(x, t1);
    const Matrix q2 = critic2.forward(x, t2);
    const Eigen::Index n = obs.cols();
    const double inv_n = 1.0 / static_cast<double>(n);

    double loss = 0.0;
    Matrix g1 = Matrix::Zero(1, n);
    Matrix g2 = Matrix::Zero(1, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const bool first = q1(0, j) <= q2(0, j);
        loss += alpha * ps.log_prob(j) - (first ? q1(0, j) : q2(0, j));
        (first ? g1 : g2)(0, j) = -inv_n;
    }
    loss *= inv_n;
    if (log_probs) *log_probs = ps.log_prob;

    if (grad) {
        const Eigen::Index a_row = obs.rows();
        const Matrix dx1 = critic1.backward(t1, g1, nullptr);
        const Matrix dx2 = critic2.backward(t2, g2, nullptr);
        const double half_span = 0.5 * (cfg.log_std_max - cfg.log_std_min);
        const Matrix raw_out = actor.layers.back().weight * actor_tape.inputs.back() +
                               actor.layers.back().bias.replicate(1, n);
        Matrix gout(2, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            const double a = ps.action(j);
            const double d_action = dx1(a_row, j) + dx2(a_row, j);
            // log pi carries -log(1 - tanh(u)^2), whose u-derivative is 2 tanh(u).
            const double d_pre = alpha * inv_n * 2.0 * a + d_action * (1.0 - a * a);
            const double std_dev = std::exp(ps.log_std(j));
            const double d_log_std = d_pre * std_dev * noise(j) - alpha * inv_n;
            const double t = std::tanh(raw_out(1, j));
            gout(0, j) = d_pre;
            gout(1, j) = d_log_std * half_span * (1.0 - t * t);
        }
        actor.backward(actor_tape, gout, grad);
    }
    return loss;
}

double temperature_loss(double log_alpha, const Vector& log_probs, double target_entropy, double* grad) {
    const double mean_term = (log_probs.array() + target_entropy).mean();
    if (grad) *grad = -mean_term;
    return -log_alpha * mean_term;
}

SacAgent::SacAgent(const SacConfig& cfg, Rng& init_rng) : cfg_(cfg) {
    cfg_.validate();
    keep_heap_resident();
    std::vector<int> actor_sizes{4};
    actor_sizes.insert(actor_sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    actor_sizes.push_back(2);
    std::vector<int> critic_sizes{5};
    critic_sizes.insert(critic_sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    critic_sizes.push_back(1);

    actor = Mlp(actor_sizes, init_rng);
    critic1 = Mlp(critic_sizes, init_rng);
    critic2 = Mlp(critic_sizes, init_rng);
    target1 = critic1;
    target2 = critic2;
    log_alpha = std::log(cfg.initial_alpha);

    const nn::AdamConfig adam{cfg.lr};
    actor_opt_ = nn::Adam(actor, adam);
    critic1_opt_ = nn::Adam(critic1, adam);
    critic2_opt_ = nn::Adam(critic2, adam);
    alpha_opt_ = nn::ScalarAdam(adam);
}

double SacAgent::alpha() const { return std::exp(log_alpha); }

ActionSample SacAgent::sample_action(const Observation& obs, Rng& rng) const {
    const Vector noise = standard_normal(1, rng);
    const PolicySample ps = policy_sample(actor, column(obs), noise, cfg_);
    return {cfg_.omega_max * ps.action(0), ps.log_prob(0), ps.pre_squash(0)};
}

double SacAgent::mean_action(const Observation& obs) const {
    const Matrix out = actor.forward(column(obs));
    return cfg_.omega_max * std::tanh(out(0, 0));
}

double SacAgent::critic_value(int which, const Observation& obs, double omega) const {
    const Mlp& critic = which == 0 ? critic1 : critic2;
    Vector a(1);
    a(0) = omega / cfg_.omega_max;
    return critic.forward(critic_input(column(obs), a))(0, 0);
}

double SacAgent::estimate_state_value(const Observation& obs) const {
    const double omega = mean_action(obs);
    return std::min(critic_value(0, obs, omega), critic_value(1, obs, omega));
}

UpdateStats SacAgent::update(const Batch& batch, Rng& rng) {
    const auto n = static_cast<std::size_t>(batch.obs.cols());
    const Vector next_noise = standard_normal(n, rng);
    const Vector noise = standard_normal(n, rng);

    UpdateStats stats;
    stats.alpha = alpha();

    const Vector y = critic_targets(actor, target1, target2, batch, next_noise, stats.alpha, cfg_);
    Mlp g1 = Mlp::zeros_like(critic1);
    Mlp g2 = Mlp::zeros_like(critic2);
    stats.critic_loss = critic_loss(critic1, critic2, batch, y, &g1, &g2);
    critic1_opt_.step(critic1, g1);
    critic2_opt_.step(critic2, g2);

    Mlp ga = Mlp::zeros_like(actor);
    Vector log_probs;
    stats.actor_loss = actor_loss(actor, critic1, critic2, batch.obs, noise, stats.alpha, cfg_, &ga, &log_probs);
    actor_opt_.step(actor, ga);

    double g_alpha = 0.0;
    stats.temperature_loss = temperature_loss(log_alpha, log_probs, cfg_.target_entropy, &g_alpha);
    alpha_opt_.step(log_alpha, g_alpha);

    target1.polyak_from(critic1, cfg_.tau);
    target2.polyak_from(critic2, cfg_.tau);

    if (!std::isfinite(stats.critic_loss) || !std::isfinite(stats.actor_loss) ||
        !std::isfinite(stats.temperature_loss) || !std::isfinite(log_alpha) || !critic1.all_finite() ||
        !critic2.all_finite() || !actor.all_finite()) {
        throw NonFiniteError("non-finite SAC update: critic_loss=" + std::to_string(stats.critic_loss) +
                             " actor_loss=" + std::to_string(stats.actor_loss) +
                             " temperature_loss=" + std::to_string(stats.temperature_loss) +
                             " log_alpha=" + std::to_string(log_alpha));
    }
    return stats;
}

}  // namespace cbfrl
