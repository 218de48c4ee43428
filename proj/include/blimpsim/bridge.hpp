#pragma once

// Real-time teleop bridge. A single simulation thread owns the Simulation and
// advances it in fixed dt steps paced against the wall clock; lag is absorbed
// by running several fixed steps (bounded by max_catchup_steps, anything
// beyond that is dropped), never by a larger step. Client I/O threads only
// move lines through bounded queues.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <iostream>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "blimpsim/protocol.hpp"
#include "blimpsim/runner.hpp"

namespace blimpsim {

// Drops the oldest element when full.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}

  void push(T value) {
    {
      std::lock_guard lock(mutex_);
      if (closed_) return;
      if (items_.size() >= capacity_) items_.pop_front();
      items_.push_back(std::move(value));
    }
    cv_.notify_one();
  }

  std::optional<T> try_pop() {
    std::lock_guard lock(mutex_);
    if (items_.empty()) return std::nullopt;
    T v = std::move(items_.front());
    items_.pop_front();
    return v;
  }

  // Blocks until an item arrives or the queue is closed.
  std::optional<T> pop_wait() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T v = std::move(items_.front());
    items_.pop_front();
    return v;
  }

  void close() {
    {
      std::lock_guard lock(mutex_);
      closed_ = true;
    }
    cv_.notify_all();
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return items_.size();
  }

 private:
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<T> items_;
  bool closed_ = false;
};

struct BridgeOptions {
  std::string host = "127.0.0.1";
  int port = 7878;              // 0 picks a free port
  double state_rate_hz = 30.0;
  double time_scale = 1.0;      // simulated seconds per wall-clock second
  int max_catchup_steps = 20;
  std::size_t queue_capacity = 64;
  std::ostream* warnings = &std::cerr;
};

class BridgeServer {
 public:
  explicit BridgeServer(ScenarioConfig config, BridgeOptions options = {})
      : options_(std::move(options)),
        sim_(std::move(config)),
        control_(options_.queue_capacity) {
    if (!(options_.state_rate_hz > 0.0)) throw InvalidArgument("state_rate_hz must be > 0");
    if (!(options_.time_scale > 0.0)) throw InvalidArgument("time_scale must be > 0");
  }

  BridgeServer(const BridgeServer&) = delete;
  BridgeServer& operator=(const BridgeServer&) = delete;

  ~BridgeServer() { stop(); }

  // Binds and launches the threads. Throws std::runtime_error if the port is taken.
  void start() {
    if (running_) return;
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
    int yes = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(options_.port));
    if (::inet_pton(AF_INET, options_.host.c_str(), &addr.sin_addr) != 1) {
      close_listen();
      throw std::runtime_error("bad bind address '" + options_.host + "'");
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 ||
        ::listen(listen_fd_, 8) < 0) {
      const std::string why = std::strerror(errno);
      close_listen();
      throw std::runtime_error("cannot listen on " + options_.host + ":" +
                               std::to_string(options_.port) + ": " + why);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);

    stop_ = false;
    running_ = true;
    sim_thread_ = std::thread([this] { simulation_loop(); });
    accept_thread_ = std::thread([this] { accept_loop(); });
  }

  void stop() {
    if (!running_.exchange(false)) return;
    stop_ = true;
    if (accept_thread_.joinable()) accept_thread_.join();
    if (sim_thread_.joinable()) sim_thread_.join();
    close_listen();
    std::lock_guard lock(clients_mutex_);
    for (auto& c : clients_) c->shutdown();
    clients_.clear();
  }

  int port() const { return port_; }
  bool running() const { return running_; }

  BlimpState state() const {
    std::lock_guard lock(sim_mutex_);
    return sim_.state();
  }

  // Manual inputs applied so far, stamped with the simulation time of the
  // step they first took effect in. Replaying this trace headless
  // reproduces the served trajectory while the bridge stayed in manual mode.
  CommandTrace recorded_trace() const {
    std::lock_guard lock(sim_mutex_);
    return trace_;
  }

  double largest_step() const {
    std::lock_guard lock(sim_mutex_);
    return largest_step_;
  }

  std::size_t client_count() const {
    std::lock_guard lock(clients_mutex_);
    std::size_t n = 0;
    for (const auto& c : clients_) n += c->alive ? 1 : 0;
    return n;
  }

  std::size_t warning_count() const { return warnings_; }

 private:
  struct Client {
    int fd;
    BoundedQueue<std::string> outbound;
    std::atomic<bool> alive{true};
    std::thread reader;
    std::thread writer;

    Client(int fd_, std::size_t capacity) : fd(fd_), outbound(capacity) {}

    void shutdown() {
      alive = false;
      ::shutdown(fd, SHUT_RDWR);
      outbound.close();
      if (reader.joinable()) reader.join();
      if (writer.joinable()) writer.join();
      ::close(fd);
    }
  };

  void close_listen() {
    if (listen_fd_ >= 0) ::close(listen_fd_);
    listen_fd_ = -1;
  }

  void warn(const std::string& what) {
    ++warnings_;
    if (!options_.warnings) return;
    std::lock_guard lock(warn_mutex_);
    *options_.warnings << "bridge: " << what << '\n';
  }

  void accept_loop() {
    while (!stop_) {
      pollfd p{listen_fd_, POLLIN, 0};
      if (::poll(&p, 1, 50) <= 0) {
        reap_clients();
        continue;
      }
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) continue;
      int yes = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &yes, sizeof yes);
      auto client = std::make_shared<Client>(fd, options_.queue_capacity);
      client->outbound.push(protocol::encode(protocol::Hello{protocol::kVersion, sim_.config().name}));
      client->writer = std::thread([this, c = client.get()] { write_loop(*c); });
      client->reader = std::thread([this, c = client.get()] { read_loop(*c); });
      std::lock_guard lock(clients_mutex_);
      clients_.push_back(std::move(client));
    }
  }

  void reap_clients() {
    std::vector<std::shared_ptr<Client>> dead;
    {
      std::lock_guard lock(clients_mutex_);
      for (auto it = clients_.begin(); it != clients_.end();) {
        if (!(*it)->alive) {
          dead.push_back(*it);
          it = clients_.erase(it);
        } else {
          ++it;
        }
      }
    }
    for (auto& c : dead) c->shutdown();
  }

  void write_loop(Client& c) {
    while (auto line = c.outbound.pop_wait()) {
      line->push_back('\n');
      std::size_t sent = 0;
      while (sent < line->size()) {
        const ssize_t n = ::send(c.fd, line->data() + sent, line->size() - sent, MSG_NOSIGNAL);
        if (n <= 0) {
          c.alive = false;
          c.outbound.close();
          return;
        }
        sent += static_cast<std::size_t>(n);
      }
    }
  }

  void read_loop(Client& c) {
    static constexpr std::size_t kMaxLine = 64 * 1024;
    std::string buffer;
    char chunk[4096];
    while (c.alive) {
      const ssize_t n = ::recv(c.fd, chunk, sizeof chunk, 0);
      if (n <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(n));
      std::size_t nl;
      while ((nl = buffer.find('\n')) != std::string::npos) {
        std::string line = buffer.substr(0, nl);
        buffer.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) handle_line(line);
      }
      if (buffer.size() > kMaxLine) {
        warn("dropping oversized line");
        buffer.clear();
      }
    }
    c.alive = false;
    c.outbound.close();
  }

  void handle_line(const std::string& line) {
    protocol::Message msg;
    try {
      msg = protocol::decode(line);
    } catch (const protocol::UnknownType& e) {
      warn(std::string("ignoring message: ") + e.what());
      return;
    } catch (const ProtocolError& e) {
      warn(e.what());
      return;
    }
    if (const auto* cmd = std::get_if<protocol::Cmd>(&msg)) {
      std::lock_guard lock(cmd_mutex_);
      latest_cmd_ = cmd->input;  // latest wins
    } else if (std::holds_alternative<protocol::Mode>(msg) ||
               std::holds_alternative<protocol::Goal>(msg) ||
               std::holds_alternative<protocol::Reset>(msg)) {
      control_.push(std::move(msg));
    } else {
      warn("ignoring server-to-client message type from client");
    }
  }

  // Called with sim_mutex_ held.
  void apply_inbound() {
    while (auto msg = control_.try_pop()) {
      if (const auto* m = std::get_if<protocol::Mode>(&*msg)) {
        sim_.set_mode(m->mode);
      } else if (const auto* g = std::get_if<protocol::Goal>(&*msg)) {
        sim_.set_goal(g->position);
      } else if (std::holds_alternative<protocol::Reset>(*msg)) {
        sim_.reset();
        trace_.clear();
      }
    }
    std::optional<ManualInput> cmd;
    {
      std::lock_guard lock(cmd_mutex_);
      cmd.swap(latest_cmd_);
    }
    if (cmd && !(trace_.size() && trace_.back().input == *cmd)) {
      sim_.set_manual_input(*cmd);
      trace_.push_back({sim_.state().time, *cmd});
    }
  }

  protocol::State snapshot() const {
    const LogRow& row = sim_.last_row();
    protocol::State s;
    s.t = row.state.time;
    s.position = row.state.position;
    s.velocity = row.state.velocity;
    s.attitude = row.state.attitude;
    s.angular_velocity = row.state.angular_velocity;
    s.command = row.command;
    s.wind = row.wind;
    s.mode = sim_.mode();
    s.contact = row.contact;
    return s;
  }

  void broadcast(const std::string& line) {
    std::lock_guard lock(clients_mutex_);
    for (auto& c : clients_)
      if (c->alive) c->outbound.push(line);
  }

  void simulation_loop() {
    using Clock = std::chrono::steady_clock;
    const double dt = sim_.config().dt;
    const auto origin = Clock::now();
    const auto period = std::chrono::duration_cast<Clock::duration>(
        std::chrono::duration<double>(1.0 / options_.state_rate_hz));
    auto next_broadcast = origin;
    long steps_done = 0;

    while (!stop_) {
      const auto now = Clock::now();
      const double sim_elapsed =
          std::chrono::duration<double>(now - origin).count() * options_.time_scale;
      const auto due = static_cast<long>(sim_elapsed / dt);
      if (due - steps_done > options_.max_catchup_steps) steps_done = due - options_.max_catchup_steps;

      std::string line;
      {
        std::lock_guard lock(sim_mutex_);
        for (; steps_done < due; ++steps_done) {
          apply_inbound();
          try {
            sim_.advance();
            largest_step_ = std::max(largest_step_, dt);
          } catch (const std::exception& e) {
            warn(std::string("simulation aborted, resetting: ") + e.what());
            sim_.reset();
            trace_.clear();
          }
        }
        if (now >= next_broadcast) line = protocol::encode(snapshot());
      }
      if (!line.empty()) {
        broadcast(line);
        next_broadcast += period;
        if (next_broadcast < now) next_broadcast = now + period;
      }

      const auto next_step = origin + std::chrono::duration_cast<Clock::duration>(
                                          std::chrono::duration<double>((steps_done + 1) * dt /
                                                                        options_.time_scale));
      std::this_thread::sleep_until(std::min(next_step, next_broadcast));
    }
  }

  BridgeOptions options_;

  mutable std::mutex sim_mutex_;
  Simulation sim_;
  CommandTrace trace_;
  double largest_step_ = 0.0;

  std::mutex cmd_mutex_;
  std::optional<ManualInput> latest_cmd_;
  BoundedQueue<protocol::Message> control_;

  mutable std::mutex clients_mutex_;
  std::list<std::shared_ptr<Client>> clients_;

  std::mutex warn_mutex_;
  std::atomic<std::size_t> warnings_{0};

  int listen_fd_ = -1;
  std::atomic<int> port_{0};
  std::atomic<bool> stop_{false};
  std::atomic<bool> running_{false};
  std::thread sim_thread_;
  std::thread accept_thread_;
};

}  // namespace blimpsim
