#pragma once

#include <atomic>
#include <cstdint>
#include <list>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>

#include <Eigen/Core>

#include "cbfrl/cbf.hpp"
#include "cbfrl/environment.hpp"
#include "cbfrl/evaluation.hpp"

namespace cbfrl {

class BridgeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PoseMessage {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;
    Eigen::Vector2d goal = Eigen::Vector2d::Zero();
    Eigen::Vector2d obstacle = Eigen::Vector2d::Zero();
    double timestamp = 0.0;  // milliseconds
};

struct CommandMessage {
    double v = 0.0;
    double omega = 0.0;
    bool cbf_active = false;
    double h = 0.0;
    bool out_of_bounds = false;
};

// Parses one request line. Throws BridgeError on malformed JSON, missing or
// mistyped fields, and non-finite values.
PoseMessage parse_pose(const std::string& line);

std::string command_line(const CommandMessage& cmd, const char* fault = nullptr);
std::string error_line(const std::string& message);

// Pose in, command out. Outside the arena the command is (0, 0) with
// out_of_bounds set. Otherwise the deterministic policy proposes omega and,
// with cbf_on, the filter rule of resolve_action decides the command.
CommandMessage handle_pose(const PoseMessage& msg, const Policy& policy, const CbfParams& cbf,
                           const WorldConfig& world, bool cbf_on);

struct ServeOptions {
    std::string host = "127.0.0.1";
    int port = 0;  // 0 picks a free port
    int watchdog_ms = 500;
    bool cbf_on = true;
};

// Newline-delimited JSON over TCP, one thread per connection. Each pose gets one
// reply in request order. Once a pose has arrived, a gap longer than the watchdog
// period produces one stop command carrying "fault":"watchdog".
class BridgeServer {
public:
    BridgeServer(ServeOptions options, Policy policy, CbfParams cbf, WorldConfig world);
    ~BridgeServer();

    BridgeServer(const BridgeServer&) = delete;
    BridgeServer& operator=(const BridgeServer&) = delete;

    // Binds and starts accepting. Returns the bound port. Throws BridgeError on bind failure.
    int start();
    // Stops accepting, closes every connection and joins all threads.
    void stop();

    int port() const { return port_; }

private:
    void accept_loop();
    void serve_connection(int fd, int id);

    ServeOptions options_;
    Policy policy_;
    CbfParams cbf_;
    WorldConfig world_;
    int listen_fd_ = -1;
    int port_ = 0;
    std::atomic<bool> running_{false};
    std::thread acceptor_;
    std::mutex workers_mutex_;
    std::list<std::thread> workers_;
};

}  // namespace cbfrl
