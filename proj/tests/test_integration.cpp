#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cbfrl/environment.hpp"
#include "cbfrl/integration.hpp"

using namespace cbfrl;

namespace {

const UnicycleState hand_state{0.0, 0.46, 0.0};

ModeConfig mode_of(Mode m, std::int64_t total = 1000) { return {m, total, 1.0}; }

bool same(const Control& a, const Control& b) { return a.v == b.v && a.omega == b.omega; }

}  // namespace

TEST_CASE("mode names round-trip") {
    for (Mode m : {Mode::sac, Mode::filter, Mode::reward, Mode::decay}) CHECK(parse_mode(to_string(m)) == m);
    CHECK_THROWS_AS(parse_mode("shield"), std::invalid_argument);
}

TEST_CASE("decay schedule") {
    CHECK(decay_beta(0, 1000) == 1.0);
    CHECK(decay_beta(1000, 1000) == 0.0);
    CHECK(decay_beta(500, 1000) == 0.5);
    CHECK(decay_beta(2000, 1000) == 0.0);
    CHECK(decay_beta(-5, 1000) == 1.0);
    double prev = 1.0;
    for (std::int64_t t = 0; t <= 1000; ++t) {
        const double b = decay_beta(t, 1000);
        CHECK(b <= prev);
        CHECK(b >= 0.0);
        prev = b;
    }
    CHECK_THROWS(decay_beta(0, 0));
}

TEST_CASE("guardrail inactive leaves the proposal in every mode") {
    const UnicycleState far{0.7, 0.7, 1.0};
    for (Mode m : {Mode::sac, Mode::filter, Mode::reward, Mode::decay}) {
        const auto res = resolve_action(mode_of(m), far, -0.3, CbfParams{}, 10);
        CHECK_FALSE(res.cbf_active);
        CHECK(res.executed.v == 0.2);
        CHECK(res.executed.omega == -0.3);
        CHECK_FALSE(res.cbf.has_value());
    }
}

TEST_CASE("filter mode on the hand-solved instance") {
    const auto res = resolve_action(mode_of(Mode::filter), hand_state, 0.0, CbfParams{}, 0);
    REQUIRE(res.cbf_active);
    CHECK(res.executed.v == doctest::Approx(0.2).epsilon(1e-3));
    CHECK(res.executed.omega == doctest::Approx(0.3457).epsilon(1e-3));
    CHECK(same(res.executed, solve_safe_control(hand_state, {0.2, 0.0}, CbfParams{}).control));
}

TEST_CASE("decay mode blends both components") {
    const auto res = resolve_action(mode_of(Mode::decay, 1000), hand_state, 0.0, CbfParams{}, 500);
    REQUIRE(res.cbf);
    CHECK(res.beta == 0.5);
    CHECK(res.executed.omega == doctest::Approx(0.1728).epsilon(1e-3));
    CHECK(res.executed.omega == 0.5 * res.cbf->omega);
    CHECK(res.executed.v == 0.5 * res.cbf->v + 0.5 * 0.2);
}

TEST_CASE("reward mode never overrides") {
    const auto res = resolve_action(mode_of(Mode::reward), hand_state, 0.1, CbfParams{}, 0);
    REQUIRE(res.cbf_active);
    REQUIRE(res.cbf);
    CHECK(res.executed.v == 0.2);
    CHECK(res.executed.omega == 0.1);
}

TEST_CASE("shaped reward") {
    const CbfParams p;
    const auto reward_res = resolve_action(mode_of(Mode::reward), hand_state, 0.0, p, 0);
    const double shaped = shaped_reward(mode_of(Mode::reward), 0.0, reward_res, 0.2);
    CHECK(shaped == doctest::Approx(-0.3457).epsilon(1e-3));
    CHECK(shaped == -(std::abs(reward_res.cbf->v - 0.2) + std::abs(reward_res.cbf->omega)));

    ModeConfig scaled = mode_of(Mode::reward);
    scaled.reward_penalty_scale = 2.0;
    CHECK(shaped_reward(scaled, 1.0, reward_res, 0.2) == doctest::Approx(1.0 + 2.0 * shaped));

    const auto filter_res = resolve_action(mode_of(Mode::filter), hand_state, 0.0, p, 0);
    CHECK(shaped_reward(mode_of(Mode::filter), -10.0, filter_res, 0.2) == -10.0);
    const auto calm = resolve_action(mode_of(Mode::reward), {0.7, 0.7, 0.0}, 0.0, p, 0);
    CHECK(shaped_reward(mode_of(Mode::reward), 10.0, calm, 0.2) == 10.0);
}

TEST_CASE("mode invariants over random activated states") {
    Rng rng(99);
    std::uniform_real_distribution<double> pos(-0.5, 0.5), ang(-M_PI, M_PI), om(-0.7, 0.7);
    const CbfParams p;
    const std::int64_t T = 1000;
    int activated = 0;
    for (int i = 0; i < 1000; ++i) {
        const UnicycleState s{pos(rng), pos(rng), ang(rng)};
        const double w = om(rng);
        const auto sac = resolve_action(mode_of(Mode::sac, T), s, w, p, 17);
        const auto filter = resolve_action(mode_of(Mode::filter, T), s, w, p, 17);
        const auto decay_end = resolve_action(mode_of(Mode::decay, T), s, w, p, T);
        const auto decay_start = resolve_action(mode_of(Mode::decay, T), s, w, p, 0);
        const auto reward = resolve_action(mode_of(Mode::reward, T), s, w, p, 17);
        CHECK(same(sac.executed, sac.proposed));
        CHECK(same(decay_end.executed, sac.executed));
        CHECK(same(decay_start.executed, filter.executed));
        CHECK(same(reward.executed, reward.proposed));
        if (filter.cbf_active) {
            ++activated;
            CHECK(same(filter.executed, solve_safe_control(s, {0.2, w}, p).control));
        }
        CHECK(p.v_bounds.contains(decay_start.executed.v));
        CHECK(p.omega_bounds.contains(decay_start.executed.omega));
    }
    CHECK(activated > 100);
}

TEST_CASE("random policy under the filter never collides") {
    WorldConfig cfg;
    const CbfParams base;
    Rng rng(4);
    std::uniform_real_distribution<double> om(-0.7, 0.7);
    int collisions = 0;
    int active_steps = 0;
    for (int e = 0; e < 10; ++e) {
        World w = reset(cfg, base, rng);
        const CbfParams p = barrier_for(w, base);
        for (int t = 0; t < cfg.max_steps; ++t) {
            const auto res = resolve_action(mode_of(Mode::filter), w.agent, om(rng), p, t);
            active_steps += res.cbf_active ? 1 : 0;
            const auto out = env_step(w, res.executed, cfg);
            collisions += out.info.collision ? 1 : 0;
            if (out.terminated || out.truncated) break;
        }
    }
    CHECK(collisions == 0);
    CHECK(active_steps > 0);
}
