#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <pthread.h>

#include <nlohmann/json.hpp>

#include "cbfrl/bridge.hpp"
#include "cbfrl/checkpoint.hpp"
#include "cbfrl/config.hpp"
#include "cbfrl/evaluation.hpp"
#include "cbfrl/qp_oracle.hpp"
#include "cbfrl/train.hpp"

namespace fs = std::filesystem;
using namespace cbfrl;

namespace {

// Errors leave the tool as a single "error: <kind>: <message>" line.
struct Failure {
    std::string kind;
    std::string message;
};

bool parse_switch(const std::string& value) { return value == "on"; }

const auto on_off = CLI::IsMember({"on", "off"});

void print_row(const LogRow& r) {
    std::printf("%s\n", format_log_row(r).c_str());
    std::fflush(stdout);
}

int run_train(const std::optional<std::string>& config_path, const std::optional<std::string>& mode,
              const std::optional<std::uint64_t>& seed, const std::optional<std::int64_t>& steps,
              const std::string& out) {
    RunConfig cfg;
    if (config_path) cfg = load_config(*config_path);
    if (mode) cfg.train.mode = parse_mode(*mode);
    if (seed) cfg.train.seed = *seed;
    if (steps) cfg.train.steps = *steps;
    cfg.validate();
    std::puts(kLogHeader);
    train(cfg, out, [](const LogRow& r) { print_row(r); });
    return 0;
}

int run_eval(const std::string& checkpoint, std::optional<int> episodes, const std::string& cbf) {
    const LoadedCheckpoint ck = load_checkpoint(checkpoint);
    const int n = episodes.value_or(ck.config.train.eval_episodes);
    if (n < 1) throw Failure{"usage", "--episodes must be >= 1"};
    const bool cbf_on = parse_switch(cbf);
    const EvalSummary s = evaluate_policy(mean_policy(*ck.agent), ck.config.world, ck.config.cbf, n, cbf_on,
                                          eval_seed(ck.config.train.seed));
    std::printf("step=%lld episodes=%d cbf=%s mean_reward=%.10g activation_pct=%.10g episode_length_mean=%.10g "
                "collision_steps=%d goals=%d\n",
                static_cast<long long>(ck.step), s.episodes, cbf.c_str(), s.mean_reward, s.activation_pct,
                s.mean_length, s.collision_steps, s.goals);
    return 0;
}

int run_heatmap(const std::string& dir, std::optional<int> bins, const std::string& out) {
    std::vector<fs::path> files;
    if (!fs::is_directory(dir)) throw Failure{"checkpoint", dir + " is not a directory"};
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    if (files.empty()) throw Failure{"checkpoint", "no *.json checkpoints in " + dir};
    std::sort(files.begin(), files.end());
    std::vector<LoadedCheckpoint> loaded;
    for (const auto& f : files) loaded.push_back(load_checkpoint(f));
    RunConfig cfg = loaded.front().config;
    if (bins) cfg.heatmap_bins = *bins;
    cfg.validate();
    std::vector<const SacAgent*> agents;
    for (const auto& l : loaded) agents.push_back(l.agent.get());
    const HeatmapGrid grid = value_heatmap(agents, cfg.heatmap_layout, cfg.heatmap_bins, cfg.world.arena_half_extent);
    fs::create_directories(out);
    std::ofstream f(fs::path(out) / "heatmap.csv");
    write_heatmap_csv(f, grid);
    write_resolved(cfg, fs::path(out) / "config.resolved");
    std::printf("heatmap %s agents=%zu bins=%d\n", (fs::path(out) / "heatmap.csv").c_str(), agents.size(),
                cfg.heatmap_bins);
    return 0;
}

// Start-pose file: {"goal": [x, y], "obstacle": [x, y], "poses": [[x, y, theta], ...]};
// goal and obstacle default to the heatmap layout.
int run_trajectories(const std::string& checkpoint, const std::string& starts, const std::string& cbf,
                     const std::string& out) {
    const LoadedCheckpoint ck = load_checkpoint(checkpoint);
    std::ifstream in(starts);
    if (!in) throw Failure{"io", "cannot open " + starts};
    HeatmapLayout layout = ck.config.heatmap_layout;
    std::vector<UnicycleState> poses;
    try {
        const auto doc = nlohmann::json::parse(in);
        if (doc.contains("goal")) layout.goal = {doc["goal"].at(0).get<double>(), doc["goal"].at(1).get<double>()};
        if (doc.contains("obstacle"))
            layout.obstacle = {doc["obstacle"].at(0).get<double>(), doc["obstacle"].at(1).get<double>()};
        for (const auto& p : doc.at("poses")) {
            if (p.size() != 3) throw Failure{"config", starts + ": every pose needs x, y, theta"};
            poses.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw Failure{"config", starts + ": " + e.what()};
    }
    fs::create_directories(out);
    const fs::path path = fs::path(out) / "trajectories.jsonl";
    std::ofstream f(path);
    record_trajectories(f, mean_policy(*ck.agent), layout, poses, ck.config.world, ck.config.cbf, parse_switch(cbf));
    write_resolved(ck.config, fs::path(out) / "config.resolved");
    std::printf("trajectories %s episodes=%zu\n", path.c_str(), poses.size());
    return 0;
}

int run_serve(const std::string& checkpoint, std::optional<int> port, std::optional<std::string> cbf,
              std::optional<std::string> host) {
    const LoadedCheckpoint ck = load_checkpoint(checkpoint);
    ServeOptions opt;
    opt.host = host.value_or(ck.config.bridge.host);
    opt.port = port.value_or(ck.config.bridge.port);
    opt.watchdog_ms = ck.config.bridge.watchdog_ms;
    opt.cbf_on = cbf ? parse_switch(*cbf) : ck.config.bridge.cbf_on;

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    BridgeServer server(opt, mean_policy(*ck.agent), ck.config.cbf, ck.config.world);
    const int bound = server.start();
    std::printf("serving %s:%d cbf=%s watchdog_ms=%d\n", opt.host.c_str(), bound, opt.cbf_on ? "on" : "off",
                opt.watchdog_ms);
    std::fflush(stdout);
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
    return 0;
}

int run_qp_check(std::size_t instances, unsigned long long seed, double resolution) {
    const OracleSuiteReport r = run_oracle_suite(instances, seed, resolution);
    std::printf("instances=%zu max_objective_gap=%.3e min_constraint_residual=%.3e seconds=%.2f\n", r.instances,
                r.max_objective_gap, r.min_constraint_residual, r.seconds);
    if (r.max_objective_gap > 1e-6) throw Failure{"qp-check", "objective gap above 1e-6"};
    if (r.min_constraint_residual < -1e-9) throw Failure{"qp-check", "constraint residual below -1e-9"};
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Control-barrier-function guarded soft actor-critic"};
    app.require_subcommand(1);

    auto* train_cmd = app.add_subcommand("train", "Train one seed in one mode");
    std::optional<std::string> config_path, mode;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> steps;
    std::string out;
    train_cmd->add_option("--mode", mode, "sac, filter, reward or decay")
        ->check(CLI::IsMember({"sac", "filter", "reward", "decay"}));
    train_cmd->add_option("--seed", seed);
    train_cmd->add_option("--steps", steps)->check(CLI::PositiveNumber);
    train_cmd->add_option("--config", config_path)->check(CLI::ExistingFile);
    train_cmd->add_option("--out", out)->required();

    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint with deterministic actions");
    std::string checkpoint, cbf = "on";
    std::optional<int> episodes;
    eval_cmd->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--episodes", episodes);
    eval_cmd->add_option("--cbf", cbf)->check(on_off);

    auto* heat_cmd = app.add_subcommand("heatmap", "Critic value heatmap averaged over checkpoints");
    std::string checkpoints_dir, heat_out = ".";
    std::optional<int> bins;
    heat_cmd->add_option("--checkpoints", checkpoints_dir)->required();
    heat_cmd->add_option("--bins", bins)->check(CLI::PositiveNumber);
    heat_cmd->add_option("--out", heat_out);

    auto* traj_cmd = app.add_subcommand("trajectories", "Roll out from fixed start poses");
    std::string traj_ck, starts, traj_cbf = "on", traj_out = ".";
    traj_cmd->add_option("--checkpoint", traj_ck)->required()->check(CLI::ExistingFile);
    traj_cmd->add_option("--starts", starts)->required()->check(CLI::ExistingFile);
    traj_cmd->add_option("--cbf", traj_cbf)->check(on_off);
    traj_cmd->add_option("--out", traj_out);

    auto* serve_cmd = app.add_subcommand("serve", "Pose-in, command-out TCP bridge");
    std::string serve_ck;
    std::optional<int> port;
    std::optional<std::string> serve_cbf, host;
    serve_cmd->add_option("--checkpoint", serve_ck)->required()->check(CLI::ExistingFile);
    serve_cmd->add_option("--port", port)->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--host", host);
    serve_cmd->add_option("--cbf", serve_cbf)->check(on_off);

    auto* qp_cmd = app.add_subcommand("qp-check", "Compare the safety QP against the grid oracle");
    std::size_t instances = 1000;
    unsigned long long qp_seed = 1;
    double resolution = 1e-9;
    qp_cmd->add_option("--instances", instances)->check(CLI::PositiveNumber);
    qp_cmd->add_option("--seed", qp_seed);
    qp_cmd->add_option("--resolution", resolution)->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "error: usage: %s\n", e.what());
        return 2;
    }

    try {
        if (*train_cmd) return run_train(config_path, mode, seed, steps, out);
        if (*eval_cmd) return run_eval(checkpoint, episodes, cbf);
        if (*heat_cmd) return run_heatmap(checkpoints_dir, bins, heat_out);
        if (*traj_cmd) return run_trajectories(traj_ck, starts, traj_cbf, traj_out);
        if (*serve_cmd) return run_serve(serve_ck, port, serve_cbf, host);
        if (*qp_cmd) return run_qp_check(instances, qp_seed, resolution);
    } catch (const Failure& f) {
        std::fprintf(stderr, "error: %s: %s\n", f.kind.c_str(), f.message.c_str());
        return 1;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: config: %s\n", e.what());
        return 1;
    } catch (const CheckpointError& e) {
        std::fprintf(stderr, "error: checkpoint: %s\n", e.what());
        return 1;
    } catch (const BridgeError& e) {
        std::fprintf(stderr, "error: bridge: %s\n", e.what());
        return 1;
    } catch (const NonFiniteError& e) {
        std::fprintf(stderr, "error: diverged: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: runtime: %s\n", e.what());
        return 1;
    }
    return 2;
}
