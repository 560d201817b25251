#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "cbfrl/sac.hpp"

namespace gradcheck {

using namespace cbfrl;
using nn::Matrix;
using nn::Mlp;
using nn::Vector;

inline Batch random_batch(int n, Rng& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Batch b{Matrix(4, n), Vector(n), Vector(n), Matrix(4, n), Vector(n)};
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < 4; ++i) {
            b.obs(i, j) = u(rng);
            b.next_obs(i, j) = u(rng);
        }
        b.action(j) = u(rng);
        b.reward(j) = 5.0 * u(rng);
        b.terminated(j) = u(rng) > 0.5 ? 1.0 : 0.0;
    }
    return b;
}

inline Vector normals(int n, Rng& rng) {
    std::normal_distribution<double> d(0.0, 1.0);
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = d(rng);
    return v;
}

// Central finite differences of f over the flat parameters of `net`.
inline std::vector<double> numeric_gradient(Mlp& net, const std::function<double()>& f, double step = 1e-6) {
    std::vector<double> theta = net.flat();
    std::vector<double> g(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double keep = theta[i];
        theta[i] = keep + step;
        net.assign_flat(theta);
        const double fp = f();
        theta[i] = keep - step;
        net.assign_flat(theta);
        const double fm = f();
        theta[i] = keep;
        g[i] = (fp - fm) / (2.0 * step);
    }
    net.assign_flat(theta);
    return g;
}

inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double denom = std::sqrt(na) + std::sqrt(nb);
    return denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
}

// Worst relative error between analytic and central-difference gradients.
struct GradientReport {
    double critic = 0.0;
    double actor = 0.0;
    double temperature = 0.0;
};

// Small random networks and batches, one fresh agent per draw.
inline GradientReport check_gradients(int draws, std::uint64_t seed) {
    Rng rng(seed);
    SacConfig cfg;
    cfg.hidden = {8, 8};
    cfg.batch_size = 6;
    cfg.buffer_capacity = 64;
    GradientReport r;
    for (int draw = 0; draw < draws; ++draw) {
        SacAgent agent(cfg, rng);
        const Batch b = random_batch(cfg.batch_size, rng);
        const Vector noise = normals(cfg.batch_size, rng);
        const double alpha = 0.05 + std::exp(-2.0 * std::abs(noise(0)));
        const Vector y = critic_targets(agent.actor, agent.target1, agent.target2, b, normals(cfg.batch_size, rng),
                                        alpha, cfg);

        Mlp g1 = Mlp::zeros_like(agent.critic1), g2 = Mlp::zeros_like(agent.critic2);
        critic_loss(agent.critic1, agent.critic2, b, y, &g1, &g2);
        auto fd1 = numeric_gradient(agent.critic1,
                                    [&] { return critic_loss(agent.critic1, agent.critic2, b, y, nullptr, nullptr); });
        auto fd2 = numeric_gradient(agent.critic2,
                                    [&] { return critic_loss(agent.critic1, agent.critic2, b, y, nullptr, nullptr); });
        r.critic = std::max({r.critic, relative_error(g1.flat(), fd1), relative_error(g2.flat(), fd2)});

        Mlp ga = Mlp::zeros_like(agent.actor);
        Vector log_probs;
        actor_loss(agent.actor, agent.critic1, agent.critic2, b.obs, noise, alpha, cfg, &ga, &log_probs);
        auto fda = numeric_gradient(agent.actor, [&] {
            return actor_loss(agent.actor, agent.critic1, agent.critic2, b.obs, noise, alpha, cfg, nullptr);
        });
        r.actor = std::max(r.actor, relative_error(ga.flat(), fda));

        double g_alpha = 0.0;
        const double log_alpha = std::log(alpha);
        temperature_loss(log_alpha, log_probs, cfg.target_entropy, &g_alpha);
        const double h = 1e-6;
        const double fd_alpha = (temperature_loss(log_alpha + h, log_probs, cfg.target_entropy, nullptr) -
                                 temperature_loss(log_alpha - h, log_probs, cfg.target_entropy, nullptr)) /
                                (2 * h);
        r.temperature = std::max(r.temperature, relative_error({g_alpha}, {fd_alpha}));
    }
    return r;
}

}  // namespace gradcheck
