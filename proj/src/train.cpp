#include "cbfrl/train.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cbfrl/checkpoint.hpp"
#include "cbfrl/evaluation.hpp"

namespace cbfrl {

namespace fs = std::filesystem;

std::string format_log_row(const LogRow& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%" PRId64 ",%" PRIu64 ",%s,%.10g,%.10g,%.10g,%.10g", r.step, r.seed,
                  to_string(r.mode).c_str(), r.avg_reward_with_cbf, r.avg_reward_without_cbf, r.activation_pct,
                  r.episode_length_mean);
    return buf;
}

std::vector<LogRow> read_log(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kLogHeader) throw std::runtime_error(path.string() + ": bad header");
    std::vector<LogRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell[7];
        for (auto& c : cell)
            if (!std::getline(ss, c, ',')) throw std::runtime_error(path.string() + ": short row '" + line + "'");
        LogRow r;
        r.step = std::stoll(cell[0]);
        r.seed = std::stoull(cell[1]);
        r.mode = parse_mode(cell[2]);
        r.avg_reward_with_cbf = std::stod(cell[3]);
        r.avg_reward_without_cbf = std::stod(cell[4]);
        r.activation_pct = std::stod(cell[5]);
        r.episode_length_mean = std::stod(cell[6]);
        rows.push_back(r);
    }
    return rows;
}

Rng stream_rng(std::uint64_t seed, Stream stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return Rng(seq);
}

std::uint64_t eval_seed(std::uint64_t seed) { return stream_rng(seed, Stream::eval)(); }

LogRow evaluate_row(const SacAgent& agent, const RunConfig& cfg, std::int64_t step) {
    const Policy policy = mean_policy(agent);
    const std::uint64_t layouts = eval_seed(cfg.train.seed);
    const EvalSummary with = evaluate_policy(policy, cfg.world, cfg.cbf, cfg.train.eval_episodes, true, layouts);
    const EvalSummary without = evaluate_policy(policy, cfg.world, cfg.cbf, cfg.train.eval_episodes, false, layouts);
    LogRow row;
    row.step = step;
    row.seed = cfg.train.seed;
    row.mode = cfg.train.mode;
    row.avg_reward_with_cbf = with.mean_reward;
    row.avg_reward_without_cbf = without.mean_reward;
    row.activation_pct = with.activation_pct;
    row.episode_length_mean = with.mean_length;
    return row;
}

std::vector<LogRow> train(const RunConfig& cfg, const fs::path& out_dir, const ProgressFn& progress) {
    fs::create_directories(out_dir / "checkpoints");
    write_resolved(cfg, out_dir / "config.resolved");
    std::ofstream log(out_dir / "log.csv");
    if (!log) throw std::runtime_error("cannot write " + (out_dir / "log.csv").string());
    log << kLogHeader << '\n';

    const std::uint64_t seed = cfg.train.seed;
    Rng init_rng = stream_rng(seed, Stream::init);
    Rng env_rng = stream_rng(seed, Stream::env);
    Rng action_rng = stream_rng(seed, Stream::action);
    Rng update_rng = stream_rng(seed, Stream::update);

    SacAgent agent(cfg.sac, init_rng);
    ReplayBuffer buffer(cfg.sac.buffer_capacity);
    const ModeConfig mode = cfg.mode_config();
    const double omega_max = cfg.sac.omega_max;
    std::uniform_real_distribution<double> warmup_omega(-omega_max, omega_max);

    World world = reset(cfg.world, cfg.cbf, env_rng);
    CbfParams barrier = barrier_for(world, cfg.cbf);
    std::vector<LogRow> rows;

    for (std::int64_t t = 0; t < cfg.train.steps; ++t) {
        const Observation obs = observe(world);
        double omega = 0.0;
        double pre_squash = 0.0;
        if (t < cfg.sac.warmup_steps) {
            omega = warmup_omega(action_rng);
            pre_squash = std::atanh(std::clamp(omega / omega_max, -1.0 + 1e-12, 1.0 - 1e-12));
        } else {
            const ActionSample a = agent.sample_action(obs, action_rng);
            omega = a.omega;
            pre_squash = a.pre_squash;
        }

        const ActionResolution res = resolve_action(mode, world.agent, omega, barrier, t);
        const StepResult out = env_step(world, res.executed, cfg.world);
        if (!std::isfinite(world.agent.x) || !std::isfinite(world.agent.y) || !std::isfinite(world.agent.theta))
            throw NonFiniteError("non-finite agent state at step " + std::to_string(t));

        Transition tr;
        tr.obs = obs.as_vector();
        tr.omega_proposed = omega;
        tr.omega_executed = res.executed.omega;
        tr.pre_squash = pre_squash;
        tr.reward = shaped_reward(mode, out.reward, res, cfg.world.v_des);
        tr.next_obs = out.observation.as_vector();
        tr.terminated = out.terminated;
        tr.truncated = out.truncated;
        buffer.push(tr);

        if (t >= cfg.sac.warmup_steps && buffer.size() >= static_cast<std::size_t>(cfg.sac.batch_size)) {
            for (int k = 0; k < cfg.sac.updates_per_step; ++k) {
                const auto idx = buffer.sample_indices(static_cast<std::size_t>(cfg.sac.batch_size), update_rng);
                try {
                    agent.update(make_batch(buffer, idx, cfg.sac), update_rng);
                } catch (const NonFiniteError& e) {
                    throw NonFiniteError(std::string(e.what()) + " at step " + std::to_string(t));
                }
            }
        }

        if (out.terminated || out.truncated) {
            world = reset(cfg.world, cfg.cbf, env_rng);
            barrier = barrier_for(world, cfg.cbf);
        }

        const std::int64_t done = t + 1;
        if (done % cfg.train.eval_interval == 0 || done == cfg.train.steps) {
            const LogRow row = evaluate_row(agent, cfg, done);
            log << format_log_row(row) << '\n' << std::flush;
            rows.push_back(row);
            char name[64];
            std::snprintf(name, sizeof name, "step_%08" PRId64 ".json", done);
            save_checkpoint(out_dir / "checkpoints" / name, agent, cfg, done);
            if (progress) progress(row);
        }
    }
    save_checkpoint(out_dir / "checkpoints" / "final.json", agent, cfg, cfg.train.steps);
    return rows;
}

}  // namespace cbfrl
