#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cbfrl/evaluation.hpp"

using namespace cbfrl;

namespace {

EpisodeLog log_with(int steps, int active) {
    EpisodeLog log;
    for (int i = 0; i < steps; ++i) {
        EpisodeStep s;
        s.cbf_active = i < active;
        log.steps.push_back(s);
    }
    return log;
}

// Proportional heading controller towards the goal, ignoring the obstacle.
double seek_goal(const Observation& o) {
    return std::clamp(2.0 * std::atan2(o.goal_rel.y(), o.goal_rel.x()), -0.7, 0.7);
}

World scene(UnicycleState agent, Eigen::Vector2d goal, Eigen::Vector2d obstacle) {
    World w;
    w.agent = agent;
    w.goal = goal;
    w.obstacle = obstacle;
    return w;
}

SacAgent small_agent(std::uint64_t seed) {
    SacConfig cfg;
    cfg.hidden = {16, 16};
    Rng rng(seed);
    return SacAgent(cfg, rng);
}

}  // namespace

TEST_CASE("activation percentage") {
    CHECK(activation_percentage(log_with(10, 0)) == 0.0);
    CHECK(activation_percentage(log_with(10, 10)) == 100.0);
    CHECK(activation_percentage(log_with(1000, 250)) == 25.0);
    CHECK_THROWS_AS(activation_percentage(EpisodeLog{}), std::invalid_argument);
}

TEST_CASE("activation percentage is additive under step weighting") {
    const EpisodeLog a = log_with(300, 30), b = log_with(700, 350);
    EpisodeLog joined = a;
    joined.steps.insert(joined.steps.end(), b.steps.begin(), b.steps.end());
    const double weighted = (300 * activation_percentage(a) + 700 * activation_percentage(b)) / 1000.0;
    CHECK(activation_percentage(joined) == doctest::Approx(weighted));
}

TEST_CASE("goal-seeking policy with a clear path collects the goal reward") {
    const WorldConfig cfg;
    const World w = scene({-0.5, -0.5, 0.0}, {0.5, -0.5}, {0.0, 0.5});
    const EpisodeLog log = run_episode(w, seek_goal, cfg, CbfParams{}, false);
    CHECK(log.outcome == Outcome::goal);
    CHECK(log.total_reward() == 10.0);
    CHECK(log.collision_steps == 0);
    CHECK(log.steps.back().reward == 10.0);
}

TEST_CASE("driving through the obstacle is penalized and the filter prevents it") {
    const WorldConfig cfg;
    const World w = scene({-0.6, 0.0, 0.0}, {0.6, 0.0}, {0.0, 0.0});
    const Policy straight = [](const Observation&) { return 0.0; };
    const EpisodeLog open = run_episode(w, straight, cfg, CbfParams{}, false);
    CHECK(open.collision_steps > 0);
    CHECK(open.total_reward() < 0.0);
    const EpisodeLog guarded = run_episode(w, straight, cfg, CbfParams{}, true);
    CHECK(guarded.collision_steps == 0);
    CHECK(activation_percentage(guarded) > 0.0);
}

TEST_CASE("start at the goal ends after one step") {
    const WorldConfig cfg;
    const World w = scene({0.3, 0.3, 0.0}, {0.3, 0.3}, {-0.4, -0.4});
    const EpisodeLog log = run_episode(w, seek_goal, cfg, CbfParams{}, true);
    CHECK(log.steps.size() == 1);
    CHECK(log.outcome == Outcome::goal);
}

TEST_CASE("evaluate_policy is reproducible and seed dependent") {
    const WorldConfig cfg;
    const EvalSummary a = evaluate_policy(seek_goal, cfg, CbfParams{}, 6, true, 11);
    const EvalSummary b = evaluate_policy(seek_goal, cfg, CbfParams{}, 6, true, 11);
    CHECK(a.mean_reward == b.mean_reward);
    CHECK(a.mean_length == b.mean_length);
    CHECK(a.activation_pct == b.activation_pct);
    CHECK(a.collision_steps == 0);
    CHECK(a.activation_pct >= 0.0);
    CHECK(a.activation_pct <= 100.0);
    const EvalSummary c = evaluate_policy(seek_goal, cfg, CbfParams{}, 6, true, 12);
    CHECK(c.mean_length != a.mean_length);
    CHECK_THROWS(evaluate_policy(seek_goal, cfg, CbfParams{}, 0, true, 11));
}

TEST_CASE("heatmap heading rule") {
    const UnicycleState s = facing_obstacle({1.0, 0.0}, {0.0, 0.0});
    CHECK(s.theta == doctest::Approx(M_PI));
    CHECK(facing_obstacle({0.0, -1.0}, {0.0, 0.0}).theta == doctest::Approx(M_PI / 2));
    CHECK(facing_obstacle({0.2, 0.3}, {0.2, 0.3}).theta == 0.0);
}

TEST_CASE("heatmap of zero critics is zero and covers the arena") {
    SacAgent agent = small_agent(1);
    for (auto* c : {&agent.critic1, &agent.critic2}) {
        c->layers.back().weight.setZero();
        c->layers.back().bias.setZero();
    }
    const HeatmapGrid g = value_heatmap({&agent}, HeatmapLayout{}, 15, 0.75);
    REQUIRE(g.edges.size() == 16);
    CHECK(g.edges.front() == -0.75);
    CHECK(g.edges.back() == doctest::Approx(0.75));
    CHECK(g.values.rows() == 15);
    CHECK(g.values.cols() == 15);
    CHECK(g.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("heatmap averages agents independent of their order") {
    const SacAgent a = small_agent(1), b = small_agent(2), c = small_agent(3);
    const HeatmapGrid ab = value_heatmap({&a, &b}, HeatmapLayout{}, 7, 0.75);
    const HeatmapGrid ba = value_heatmap({&b, &a}, HeatmapLayout{}, 7, 0.75);
    CHECK(ab.values == ba.values);
    const HeatmapGrid abc = value_heatmap({&a, &b, &c}, HeatmapLayout{}, 7, 0.75);
    const HeatmapGrid cab = value_heatmap({&c, &a, &b}, HeatmapLayout{}, 7, 0.75);
    CHECK((abc.values - cab.values).cwiseAbs().maxCoeff() < 1e-12);
    const HeatmapGrid only_a = value_heatmap({&a}, HeatmapLayout{}, 7, 0.75);
    const HeatmapGrid only_b = value_heatmap({&b}, HeatmapLayout{}, 7, 0.75);
    CHECK((ab.values - 0.5 * (only_a.values + only_b.values)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(ab.values.allFinite());

    // Center bin of an odd grid sits on the obstacle and uses heading 0.
    World w;
    w.goal = HeatmapLayout{}.goal;
    w.obstacle = HeatmapLayout{}.obstacle;
    w.agent = {0.0, 0.0, 0.0};
    CHECK(only_a.values(3, 3) == doctest::Approx(a.estimate_state_value(observe(w))).epsilon(1e-12));
}

TEST_CASE("heatmap csv layout") {
    const SacAgent a = small_agent(5);
    const HeatmapGrid g = value_heatmap({&a}, HeatmapLayout{}, 4, 0.75);
    std::ostringstream out;
    write_heatmap_csv(out, g);
    std::istringstream in(out.str());
    std::string line;
    int rows = 0;
    std::getline(in, line);
    CHECK(std::count(line.begin(), line.end(), ',') == 4);
    while (std::getline(in, line)) {
        CHECK(std::count(line.begin(), line.end(), ',') == 3);
        ++rows;
    }
    CHECK(rows == 4);
}

TEST_CASE("trajectory records are complete and deterministic") {
    const WorldConfig cfg;
    const std::vector<UnicycleState> starts{{-0.6, 0.0, 0.0}, {0.45, 0.45, 0.0}, {0.5, -0.6, 2.0}};
    const Policy straight = [](const Observation&) { return 0.0; };
    HeatmapLayout layout;
    std::ostringstream a, b;
    record_trajectories(a, straight, layout, starts, cfg, CbfParams{}, true);
    record_trajectories(b, straight, layout, starts, cfg, CbfParams{}, true);
    CHECK(a.str() == b.str());

    std::istringstream in(a.str());
    std::string line;
    int second_episode = 0;
    while (std::getline(in, line)) {
        const auto rec = nlohmann::json::parse(line);
        for (const char* key : {"t", "x", "y", "theta", "v", "omega", "h", "cbf_active", "reward"})
            CHECK(rec.contains(key));
        if (rec["episode"] == 1) ++second_episode;
    }
    CHECK(second_episode == 1);
}
