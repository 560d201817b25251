#include "cbfrl/config.hpp"

#include <fstream>
#include <functional>
#include <limits>
#include <map>

namespace cbfrl {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

using Setter = std::function<void(const json&, const std::string&)>;
using Fields = std::map<std::string, Setter>;

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ConfigError(path + ": " + what); }

double as_double(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
}

std::int64_t as_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    return v.get<std::int64_t>();
}

std::uint64_t as_uint(const json& v, const std::string& path) {
    if (!v.is_number_unsigned()) fail(path, "expected a non-negative integer");
    return v.get<std::uint64_t>();
}

bool as_bool(const json& v, const std::string& path) {
    if (!v.is_boolean()) fail(path, "expected true or false");
    return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
}

Eigen::Vector2d as_pair(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2) fail(path, "expected a two-element array");
    return {as_double(v[0], path + "[0]"), as_double(v[1], path + "[1]")};
}

Interval as_interval(const json& v, const std::string& path) {
    const Eigen::Vector2d p = as_pair(v, path);
    return {p.x(), p.y()};
}

void apply(const json& section, const std::string& prefix, const Fields& fields) {
    if (!section.is_object()) fail(prefix, "expected an object");
    for (const auto& [key, value] : section.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        const auto it = fields.find(key);
        if (it == fields.end()) fail(path, "unknown key");
        it->second(value, path);
    }
}

Setter real(double& target) {
    return [&target](const json& v, const std::string& p) { target = as_double(v, p); };
}

Setter integer(int& target) {
    return [&target](const json& v, const std::string& p) {
        const std::int64_t x = as_int(v, p);
        if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) fail(p, "out of range");
        target = static_cast<int>(x);
    };
}

Setter integer64(std::int64_t& target) {
    return [&target](const json& v, const std::string& p) { target = as_int(v, p); };
}

Setter pair(Eigen::Vector2d& target) {
    return [&target](const json& v, const std::string& p) { target = as_pair(v, p); };
}

Setter interval(Interval& target) {
    return [&target](const json& v, const std::string& p) { target = as_interval(v, p); };
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

ordered_json pair_json(const Eigen::Vector2d& p) { return ordered_json::array({p.x(), p.y()}); }
ordered_json interval_json(const Interval& i) { return ordered_json::array({i.lo, i.hi}); }

}  // namespace

void RunConfig::validate() {
    try {
        world.validate();
        cbf.v_des = world.v_des;
        cbf.validate();
        require(cbf.omega_bounds.lo == -cbf.omega_bounds.hi, "cbf.omega_bounds must be symmetric about 0");
        sac.omega_max = cbf.omega_bounds.hi;
        sac.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    require(train.steps > 0, "train.steps must be > 0");
    require(train.eval_interval > 0, "train.eval_interval must be > 0");
    require(train.eval_episodes >= 1, "train.eval_episodes must be >= 1");
    require(train.reward_penalty_scale >= 0.0, "train.reward_penalty_scale must be >= 0");
    require(heatmap_bins >= 1, "heatmap.bins must be >= 1");
    require(world.in_arena(heatmap_layout.goal), "heatmap.goal must lie in the arena");
    require(world.in_arena(heatmap_layout.obstacle), "heatmap.obstacle must lie in the arena");
    require(bridge.port >= 0 && bridge.port <= 65535, "bridge.port must be in [0, 65535]");
    require(bridge.watchdog_ms > 0, "bridge.watchdog_ms must be > 0");
    require(!bridge.host.empty(), "bridge.host must not be empty");
}

ordered_json to_json(const RunConfig& c) {
    ordered_json j;
    j["world"] = {{"arena_half_extent", c.world.arena_half_extent},
                  {"obstacle_radius", c.world.obstacle_radius},
                  {"goal_radius", c.world.goal_radius},
                  {"agent_radius", c.world.agent_radius},
                  {"v_des", c.world.v_des},
                  {"dt", c.world.dt},
                  {"max_steps", c.world.max_steps},
                  {"goal_reward", c.world.goal_reward},
                  {"collision_reward", c.world.collision_reward},
                  {"min_separation",
                   {{"agent_obstacle", c.world.min_separation.agent_obstacle},
                    {"goal_obstacle", c.world.min_separation.goal_obstacle},
                    {"agent_goal", c.world.min_separation.agent_goal}}}};
    j["cbf"] = {{"delta", c.cbf.delta},
                {"epsilon", c.cbf.epsilon},
                {"alpha_gain", c.cbf.alpha_gain},
                {"kappa", c.cbf.kappa},
                {"v_bounds", interval_json(c.cbf.v_bounds)},
                {"omega_bounds", interval_json(c.cbf.omega_bounds)},
                {"slack_weight", c.cbf.slack_weight}};
    j["sac"] = {{"hidden", c.sac.hidden},
                {"lr", c.sac.lr},
                {"gamma", c.sac.gamma},
                {"tau", c.sac.tau},
                {"batch_size", c.sac.batch_size},
                {"buffer_capacity", c.sac.buffer_capacity},
                {"warmup_steps", c.sac.warmup_steps},
                {"updates_per_step", c.sac.updates_per_step},
                {"target_entropy", c.sac.target_entropy},
                {"initial_alpha", c.sac.initial_alpha},
                {"log_std_min", c.sac.log_std_min},
                {"log_std_max", c.sac.log_std_max},
                {"store_action", c.sac.store_action == StoreAction::executed ? "executed" : "proposed"}};
    j["train"] = {{"mode", to_string(c.train.mode)},
                  {"steps", c.train.steps},
                  {"seed", c.train.seed},
                  {"eval_interval", c.train.eval_interval},
                  {"eval_episodes", c.train.eval_episodes},
                  {"reward_penalty_scale", c.train.reward_penalty_scale}};
    j["heatmap"] = {{"bins", c.heatmap_bins},
                    {"goal", pair_json(c.heatmap_layout.goal)},
                    {"obstacle", pair_json(c.heatmap_layout.obstacle)}};
    j["bridge"] = {{"host", c.bridge.host},
                   {"port", c.bridge.port},
                   {"watchdog_ms", c.bridge.watchdog_ms},
                   {"cbf_on", c.bridge.cbf_on}};
    return j;
}

void merge_json(RunConfig& c, const json& doc) {
    auto& w = c.world;
    const Fields separation{{"agent_obstacle", real(w.min_separation.agent_obstacle)},
                            {"goal_obstacle", real(w.min_separation.goal_obstacle)},
                            {"agent_goal", real(w.min_separation.agent_goal)}};
    const Fields world{{"arena_half_extent", real(w.arena_half_extent)},
                       {"obstacle_radius", real(w.obstacle_radius)},
                       {"goal_radius", real(w.goal_radius)},
                       {"agent_radius", real(w.agent_radius)},
                       {"v_des", real(w.v_des)},
                       {"dt", real(w.dt)},
                       {"max_steps", integer(w.max_steps)},
                       {"goal_reward", real(w.goal_reward)},
                       {"collision_reward", real(w.collision_reward)},
                       {"min_separation", [&](const json& v, const std::string& p) { apply(v, p, separation); }}};
    const Fields cbf{{"delta", real(c.cbf.delta)},
                     {"epsilon", real(c.cbf.epsilon)},
                     {"alpha_gain", real(c.cbf.alpha_gain)},
                     {"kappa", real(c.cbf.kappa)},
                     {"v_bounds", interval(c.cbf.v_bounds)},
                     {"omega_bounds", interval(c.cbf.omega_bounds)},
                     {"slack_weight", real(c.cbf.slack_weight)}};
    auto& s = c.sac;
    const Fields sac{{"hidden",
                      [&](const json& v, const std::string& p) {
                          if (!v.is_array() || v.empty()) fail(p, "expected a non-empty array of layer widths");
                          std::vector<int> sizes;
                          for (std::size_t i = 0; i < v.size(); ++i) {
                              int width = 0;
                              integer(width)(v[i], p + "[" + std::to_string(i) + "]");
                              sizes.push_back(width);
                          }
                          s.hidden = sizes;
                      }},
                     {"lr", real(s.lr)},
                     {"gamma", real(s.gamma)},
                     {"tau", real(s.tau)},
                     {"batch_size", integer(s.batch_size)},
                     {"buffer_capacity",
                      [&](const json& v, const std::string& p) { s.buffer_capacity = as_uint(v, p); }},
                     {"warmup_steps", integer(s.warmup_steps)},
                     {"updates_per_step", integer(s.updates_per_step)},
                     {"target_entropy", real(s.target_entropy)},
                     {"initial_alpha", real(s.initial_alpha)},
                     {"log_std_min", real(s.log_std_min)},
                     {"log_std_max", real(s.log_std_max)},
                     {"store_action", [&](const json& v, const std::string& p) {
                          const std::string name = as_string(v, p);
                          if (name == "executed") s.store_action = StoreAction::executed;
                          else if (name == "proposed") s.store_action = StoreAction::proposed;
                          else fail(p, "expected \"executed\" or \"proposed\"");
                      }}};
    auto& t = c.train;
    const Fields train{{"mode",
                        [&](const json& v, const std::string& p) {
                            try {
                                t.mode = parse_mode(as_string(v, p));
                            } catch (const std::invalid_argument& e) {
                                fail(p, e.what());
                            }
                        }},
                       {"steps", integer64(t.steps)},
                       {"seed", [&](const json& v, const std::string& p) { t.seed = as_uint(v, p); }},
                       {"eval_interval", integer64(t.eval_interval)},
                       {"eval_episodes", integer(t.eval_episodes)},
                       {"reward_penalty_scale", real(t.reward_penalty_scale)}};
    const Fields heatmap{{"bins", integer(c.heatmap_bins)},
                         {"goal", pair(c.heatmap_layout.goal)},
                         {"obstacle", pair(c.heatmap_layout.obstacle)}};
    auto& b = c.bridge;
    const Fields bridge{{"host", [&](const json& v, const std::string& p) { b.host = as_string(v, p); }},
                        {"port", integer(b.port)},
                        {"watchdog_ms", integer(b.watchdog_ms)},
                        {"cbf_on", [&](const json& v, const std::string& p) { b.cbf_on = as_bool(v, p); }}};
    const auto section = [](const Fields& f) {
        return [&f](const json& v, const std::string& p) { apply(v, p, f); };
    };
    const Fields top{{"world", section(world)}, {"cbf", section(cbf)},         {"sac", section(sac)},
                     {"train", section(train)}, {"heatmap", section(heatmap)}, {"bridge", section(bridge)}};
    apply(doc, "", top);
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    RunConfig cfg;
    merge_json(cfg, doc);
    cfg.validate();
    return cfg;
}

void write_resolved(const RunConfig& cfg, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << to_json(cfg).dump(2) << '\n';
}

}  // namespace cbfrl
