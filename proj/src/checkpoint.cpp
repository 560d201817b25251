#include "cbfrl/checkpoint.hpp"

#include <fstream>

namespace cbfrl {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kFormat = "cbfrl-checkpoint";

ordered_json network_json(const nn::Mlp& net) { return {{"sizes", net.sizes()}, {"params", net.flat()}}; }

void read_network(const json& doc, const char* name, nn::Mlp& net) {
    if (!doc.contains(name)) throw CheckpointError(std::string("checkpoint lacks network '") + name + "'");
    const json& entry = doc.at(name);
    if (entry.at("sizes").get<std::vector<int>>() != net.sizes())
        throw CheckpointError(std::string("network '") + name + "' does not match the configured layer sizes");
    const auto params = entry.at("params").get<std::vector<double>>();
    if (params.size() != net.parameter_count())
        throw CheckpointError(std::string("network '") + name + "' has the wrong parameter count");
    net.assign_flat(params);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const SacAgent& agent, const RunConfig& cfg,
                     std::int64_t step) {
    ordered_json doc;
    doc["format"] = kFormat;
    doc["version"] = kCheckpointVersion;
    doc["step"] = step;
    doc["config"] = to_json(cfg);
    doc["log_alpha"] = agent.log_alpha;
    doc["networks"] = {{"actor", network_json(agent.actor)},
                       {"critic1", network_json(agent.critic1)},
                       {"critic2", network_json(agent.critic2)},
                       {"target1", network_json(agent.target1)},
                       {"target2", network_json(agent.target2)}};
    const auto tmp = std::filesystem::path(path).concat(".tmp");
    {
        std::ofstream out(tmp);
        if (!out) throw CheckpointError("cannot write " + tmp.string());
        out << doc.dump() << '\n';
        if (!out) throw CheckpointError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
    LoadedCheckpoint out;
    try {
        const json doc = json::parse(in);
        if (doc.value("format", "") != kFormat) throw CheckpointError(path.string() + " is not a cbfrl checkpoint");
        if (doc.at("version").get<int>() != kCheckpointVersion)
            throw CheckpointError(path.string() + ": unsupported checkpoint version");
        merge_json(out.config, doc.at("config"));
        out.config.validate();
        out.step = doc.at("step").get<std::int64_t>();
        Rng unused(0);
        out.agent = std::make_unique<SacAgent>(out.config.sac, unused);
        const json& nets = doc.at("networks");
        read_network(nets, "actor", out.agent->actor);
        read_network(nets, "critic1", out.agent->critic1);
        read_network(nets, "critic2", out.agent->critic2);
        read_network(nets, "target1", out.agent->target1);
        read_network(nets, "target2", out.agent->target2);
        out.agent->log_alpha = doc.at("log_alpha").get<double>();
    } catch (const json::exception& e) {
        throw CheckpointError(path.string() + ": " + e.what());
    } catch (const ConfigError& e) {
        throw CheckpointError(path.string() + ": " + e.what());
    }
    return out;
}

}  // namespace cbfrl
