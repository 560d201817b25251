#include "cbfrl/bridge.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <iostream>

#include <nlohmann/json.hpp>

#include "cbfrl/integration.hpp"

namespace cbfrl {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

double finite_number(const json& doc, const char* key) {
    if (!doc.contains(key)) throw BridgeError(std::string("missing field '") + key + "'");
    const json& v = doc.at(key);
    if (!v.is_number()) throw BridgeError(std::string("field '") + key + "' must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw BridgeError(std::string("field '") + key + "' is not finite");
    return x;
}

Eigen::Vector2d finite_pair(const json& doc, const char* key) {
    if (!doc.contains(key)) throw BridgeError(std::string("missing field '") + key + "'");
    const json& v = doc.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw BridgeError(std::string("field '") + key + "' must be a two-number array");
    const Eigen::Vector2d p{v[0].get<double>(), v[1].get<double>()};
    if (!p.allFinite()) throw BridgeError(std::string("field '") + key + "' is not finite");
    return p;
}

std::mutex log_mutex;

void log_line(const std::string& text) {
    const std::lock_guard lock(log_mutex);
    std::cerr << "bridge: " << text << std::endl;
}

bool send_all(int fd, const std::string& data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
        const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        sent += static_cast<std::size_t>(n);
    }
    return true;
}

}  // namespace

PoseMessage parse_pose(const std::string& line) {
    json doc;
    try {
        doc = json::parse(line);
    } catch (const json::exception&) {
        throw BridgeError("malformed message");
    }
    if (!doc.is_object()) throw BridgeError("message must be a JSON object");
    PoseMessage m;
    m.x = finite_number(doc, "x");
    m.y = finite_number(doc, "y");
    m.theta = finite_number(doc, "theta");
    m.goal = finite_pair(doc, "goal");
    m.obstacle = finite_pair(doc, "obstacle");
    m.timestamp = finite_number(doc, "timestamp");
    return m;
}

std::string command_line(const CommandMessage& cmd, const char* fault) {
    nlohmann::ordered_json j{{"v", cmd.v},
                             {"omega", cmd.omega},
                             {"cbf_active", cmd.cbf_active},
                             {"h", cmd.h},
                             {"out_of_bounds", cmd.out_of_bounds}};
    if (fault) j["fault"] = fault;
    return j.dump() + "\n";
}

std::string error_line(const std::string& message) { return json{{"error", message}}.dump() + "\n"; }

CommandMessage handle_pose(const PoseMessage& msg, const Policy& policy, const CbfParams& cbf,
                           const WorldConfig& world_cfg, bool cbf_on) {
    World world;
    world.agent = {msg.x, msg.y, wrap_angle(msg.theta)};
    world.goal = msg.goal;
    world.obstacle = msg.obstacle;
    const CbfParams barrier = barrier_for(world, cbf);

    CommandMessage cmd;
    if (!world_cfg.in_arena(world.agent.position())) {
        cmd.h = barrier_value(world.agent, barrier);
        cmd.out_of_bounds = true;
        return cmd;
    }
    const double omega = cbf.omega_bounds.clamp(policy(observe(world)));
    const ModeConfig mode{cbf_on ? Mode::filter : Mode::sac, 1, 0.0};
    const ActionResolution res = resolve_action(mode, world.agent, omega, barrier, 0);
    cmd.v = res.executed.v;
    cmd.omega = res.executed.omega;
    cmd.h = res.h;
    cmd.cbf_active = cbf_on && res.cbf_active;
    return cmd;
}

BridgeServer::BridgeServer(ServeOptions options, Policy policy, CbfParams cbf, WorldConfig world)
    : options_(std::move(options)), policy_(std::move(policy)), cbf_(std::move(cbf)), world_(std::move(world)) {
    if (options_.watchdog_ms <= 0) throw BridgeError("watchdog period must be > 0");
}

BridgeServer::~BridgeServer() { stop(); }

int BridgeServer::start() {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE | AI_NUMERICSERV;
    addrinfo* found = nullptr;
    const std::string service = std::to_string(options_.port);
    if (const int rc = ::getaddrinfo(options_.host.c_str(), service.c_str(), &hints, &found); rc != 0)
        throw BridgeError("cannot resolve " + options_.host + ": " + ::gai_strerror(rc));

    std::string last_error = "no usable address";
    for (addrinfo* ai = found; ai; ai = ai->ai_next) {
        const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        const int yes = 1;
        ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
        if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 16) == 0) {
            listen_fd_ = fd;
            break;
        }
        last_error = std::strerror(errno);
        ::close(fd);
    }
    ::freeaddrinfo(found);
    if (listen_fd_ < 0) throw BridgeError("cannot bind " + options_.host + ":" + service + ": " + last_error);

    sockaddr_storage addr{};
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = addr.ss_family == AF_INET6 ? ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port)
                                       : ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
    running_ = true;
    acceptor_ = std::thread([this] { accept_loop(); });
    return port_;
}

void BridgeServer::stop() {
    if (!running_.exchange(false)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    if (acceptor_.joinable()) acceptor_.join();
    ::close(listen_fd_);
    listen_fd_ = -1;
    std::list<std::thread> workers;
    {
        const std::lock_guard lock(workers_mutex_);
        workers.swap(workers_);
    }
    for (auto& w : workers) w.join();
}

void BridgeServer::accept_loop() {
    int next_id = 0;
    while (running_) {
        pollfd p{listen_fd_, POLLIN, 0};
        const int rc = ::poll(&p, 1, 100);
        if (rc <= 0 || !running_) continue;
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) continue;
        const int id = next_id++;
        const std::lock_guard lock(workers_mutex_);
        workers_.emplace_back([this, fd, id] { serve_connection(fd, id); });
    }
}

void BridgeServer::serve_connection(int fd, int id) {
    const auto period = std::chrono::milliseconds(options_.watchdog_ms);
    std::string pending;
    std::optional<Clock::time_point> deadline;
    std::optional<double> last_timestamp;
    bool open = true;
    char buf[4096];

    while (open && running_) {
        int wait_ms = 100;
        if (deadline) {
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(*deadline - Clock::now()).count();
            wait_ms = static_cast<int>(std::clamp<long long>(left + 1, 0, 100));
        }
        pollfd p{fd, POLLIN, 0};
        const int rc = ::poll(&p, 1, wait_ms);
        if (rc > 0) {
            const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
            if (n <= 0) {
                if (n < 0 && errno == EINTR) continue;
                break;
            }
            pending.append(buf, static_cast<std::size_t>(n));
            std::size_t nl;
            while (open && (nl = pending.find('\n')) != std::string::npos) {
                std::string line = pending.substr(0, nl);
                pending.erase(0, nl + 1);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (line.empty()) continue;
                std::string reply;
                try {
                    const PoseMessage msg = parse_pose(line);
                    if (last_timestamp && msg.timestamp < *last_timestamp)
                        throw BridgeError("timestamp went backwards");
                    last_timestamp = msg.timestamp;
                    reply = command_line(handle_pose(msg, policy_, cbf_, world_, options_.cbf_on));
                    deadline = Clock::now() + period;
                } catch (const BridgeError& e) {
                    reply = error_line(e.what());
                }
                open = send_all(fd, reply);
            }
        } else if (rc < 0 && errno != EINTR) {
            break;
        }
        if (open && deadline && Clock::now() >= *deadline) {
            log_line("connection " + std::to_string(id) + ": no pose within " +
                     std::to_string(options_.watchdog_ms) + " ms, stop commanded");
            open = send_all(fd, command_line(CommandMessage{}, "watchdog"));
            deadline.reset();
        }
    }
    ::close(fd);
}

}  // namespace cbfrl
