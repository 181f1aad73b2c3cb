#pragma once

// Live network service: operators stream IMU frames in, the processing node
// recognises gestures and drives the simulated robot, and acknowledgements,
// mode changes and telemetry flow back out.
//
// Threads: accept loop, one reader and one writer per TCP connection,
// recognition stage, controller stage, simulator tick loop, and the HTTP
// bridge. Stages talk through bounded queues; the robot only ever sees the
// latest velocity command.
//
// Transports:
//   TCP     raw framed byte stream (wire.hpp)
//   HTTP    bridge for browsers, one encoded frame per request/response body:
//             POST /bridge/open               -> {"session": <id>}
//             POST /bridge/<id>/send          body = one frame
//             GET  /bridge/<id>/recv?timeout_ms=N  -> one frame, or 204
//             POST /bridge/<id>/close
//             GET  /health
//           plus static files from ServiceOptions::static_dir at "/".

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
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "wristop/config.hpp"
#include "wristop/errors.hpp"
#include "wristop/gesture.hpp"
#include "wristop/pipeline.hpp"
#include "wristop/robot_sim.hpp"
#include "wristop/scenario.hpp"
#include "wristop/telemetry.hpp"
#include "wristop/wire.hpp"

namespace wristop::service {

using Clock = std::chrono::steady_clock;
using Frame = std::vector<std::uint8_t>;

/// Multi-producer queue that drops its oldest entry when full.
template <class T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}

  bool push(T value) {
    {
      std::lock_guard lock(mutex_);
      if (closed_) return false;
      if (items_.size() == capacity_) {
        items_.pop_front();
        ++dropped_;
      }
      items_.push_back(std::move(value));
    }
    ready_.notify_one();
    return true;
  }

  /// Waits until an item arrives, the deadline passes, or the queue closes.
  std::optional<T> pop_until(Clock::time_point deadline) {
    std::unique_lock lock(mutex_);
    ready_.wait_until(lock, deadline, [this] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T value = std::move(items_.front());
    items_.pop_front();
    return value;
  }

  void close() {
    {
      std::lock_guard lock(mutex_);
      closed_ = true;
    }
    ready_.notify_all();
  }

  bool closed() const {
    std::lock_guard lock(mutex_);
    return closed_;
  }

  std::size_t dropped() const {
    std::lock_guard lock(mutex_);
    return dropped_;
  }

 private:
  mutable std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<T> items_;
  std::size_t capacity_;
  std::size_t dropped_{0};
  bool closed_{false};
};

enum class Transport { Tcp, Bridge };

/// One connected peer. Outbound frames carry a due time so an injected link
/// latency delays delivery without reordering.
class Session {
 public:
  Session(std::uint64_t id, Transport transport) : id_(id), transport_(transport), outbound_(256) {}

  std::uint64_t id() const { return id_; }
  Transport transport() const { return transport_; }

  std::optional<wire::Role> role() const {
    std::lock_guard lock(mutex_);
    return role_;
  }
  void set_role(wire::Role r) {
    std::lock_guard lock(mutex_);
    role_ = r;
  }

  void send(Frame frame, Clock::time_point due) { outbound_.push({due, std::move(frame)}); }

  /// Next frame once it is due, or nullopt at the deadline / on close.
  std::optional<Frame> next_frame(Clock::time_point deadline) {
    auto item = outbound_.pop_until(deadline);
    if (!item) return std::nullopt;
    std::this_thread::sleep_until(item->due);
    return std::move(item->frame);
  }

  void close() { outbound_.close(); }
  bool closed() const { return outbound_.closed(); }

 private:
  struct Outbound {
    Clock::time_point due;
    Frame frame;
  };

  std::uint64_t id_;
  Transport transport_;
  mutable std::mutex mutex_;
  std::optional<wire::Role> role_;
  BoundedQueue<Outbound> outbound_;
};

/// Session registry plus the routing table.
class Hub {
 public:
  Hub(std::chrono::milliseconds latency, std::function<void(const ImuSample&)> to_pipeline)
      : latency_(latency), to_pipeline_(std::move(to_pipeline)) {}

  std::shared_ptr<Session> open(Transport transport) {
    std::lock_guard lock(mutex_);
    auto s = std::make_shared<Session>(next_id_++, transport);
    sessions_[s->id()] = s;
    return s;
  }

  std::shared_ptr<Session> find(std::uint64_t id) const {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  void close(std::uint64_t id) {
    std::shared_ptr<Session> s;
    {
      std::lock_guard lock(mutex_);
      const auto it = sessions_.find(id);
      if (it == sessions_.end()) return;
      s = it->second;
      sessions_.erase(it);
    }
    s->close();
  }

  void close_all() {
    std::map<std::uint64_t, std::shared_ptr<Session>> all;
    {
      std::lock_guard lock(mutex_);
      all.swap(sessions_);
    }
    for (auto& [id, s] : all) s->close();
  }

  std::size_t session_count() const {
    std::lock_guard lock(mutex_);
    return sessions_.size();
  }

  void set_mode(OperationalMode m) { mode_.store(m); }

  /// A message from a remote peer. Throws ProtocolError when the peer broke
  /// the role rules; the caller must then drop the connection.
  void inbound(Session& from, const wire::Message& msg) {
    const auto role = from.role();
    const auto kind = wire::kind_of(msg);
    const auto dest = wire::route(role ? std::optional(wire::party_of(*role)) : std::nullopt, kind);
    if (kind == wire::Kind::Hello) {
      const wire::Role r = std::get<wire::HelloMsg>(msg).role;
      {
        std::lock_guard lock(mutex_);
        if (r == wire::Role::Operator) {
          for (const auto& [id, s] : sessions_) {
            if (s.get() != &from && s->role() == wire::Role::Operator) {
              throw ProtocolError("protocol violation: an operator is already connected");
            }
          }
        }
        from.set_role(r);
      }
      if (r != wire::Role::Robot) from.send(wire::encode(wire::ModeMsg{mode_.load()}), Clock::now() + latency_);
      return;
    }
    if (dest.pipeline) to_pipeline_(wire::from_message(std::get<wire::ImuSampleMsg>(msg)));
    deliver(dest, msg);
  }

  /// A message produced by the processing node or the simulator.
  void publish(const wire::Message& msg) { deliver(wire::route(wire::Party::Pipeline, wire::kind_of(msg)), msg); }

 private:
  void deliver(const wire::Destinations& dest, const wire::Message& msg) {
    if (!dest.robot && !dest.operator_ && !dest.viewers) return;
    const Frame frame = wire::encode(msg);
    const auto due = Clock::now() + latency_;
    std::lock_guard lock(mutex_);
    for (const auto& [id, s] : sessions_) {
      const auto r = s->role();
      if (!r) continue;
      if ((*r == wire::Role::Robot && dest.robot) || (*r == wire::Role::Operator && dest.operator_) ||
          (*r == wire::Role::Viewer && dest.viewers)) {
        s->send(frame, due);
      }
    }
  }

  std::chrono::milliseconds latency_;
  std::function<void(const ImuSample&)> to_pipeline_;
  mutable std::mutex mutex_;
  std::map<std::uint64_t, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_{1};
  std::atomic<OperationalMode> mode_{OperationalMode::Autonomous};
};

struct ServiceOptions {
  Config config{};
  std::vector<GestureTemplate> templates;
  Scenario scenario;
  std::string bind_address{"127.0.0.1"};
  std::uint16_t port{0};                     // 0 picks a free port
  std::optional<std::uint16_t> bridge_port;  // nullopt disables the HTTP bridge; 0 picks a free port
  std::string static_dir;
  double tick_hz{50.0};
  double telemetry_hz{10.0};
  std::chrono::milliseconds latency{0};
};

class Service {
 public:
  explicit Service(ServiceOptions options)
      : options_(std::move(options)),
        imu_queue_(1024),
        recognition_queue_(1024),
        hub_(options_.latency, [this](const ImuSample& s) { imu_queue_.push(s); }),
        recognizer_(options_.config, options_.templates),
        controller_(options_.config),
        world_(options_.scenario.world) {
    if (!(options_.tick_hz > 0.0) || !(options_.telemetry_hz > 0.0)) {
      throw ArgumentError("service: tick and telemetry rates must be positive");
    }
    reset_progress(world_);
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;
  ~Service() { stop(); }

  void start() {
    open_listener();
    running_ = true;
    threads_.emplace_back([this] { accept_loop(); });
    threads_.emplace_back([this] { recognition_loop(); });
    threads_.emplace_back([this] { controller_loop(); });
    threads_.emplace_back([this] { simulation_loop(); });
    if (options_.bridge_port) start_bridge();
  }

  void stop() {
    if (!running_.exchange(false)) return;
    if (bridge_) bridge_->stop();
    imu_queue_.close();
    recognition_queue_.close();
    hub_.close_all();
    for (auto& t : threads_) {
      if (t.joinable()) t.join();
    }
    std::vector<std::thread> conns;
    {
      std::lock_guard lock(conn_mutex_);
      conns.swap(connection_threads_);
    }
    for (auto& t : conns) {
      if (t.joinable()) t.join();
    }
    if (listen_fd_ >= 0) {
      ::close(listen_fd_);
      listen_fd_ = -1;
    }
  }

  /// Blocks until stop() is called from another thread.
  void wait() {
    while (running_) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }

  std::uint16_t tcp_port() const { return tcp_port_; }
  std::uint16_t bridge_port() const { return bridge_port_; }
  Hub& hub() { return hub_; }

  std::string latest_telemetry() const {
    std::lock_guard lock(world_mutex_);
    return latest_telemetry_;
  }

  OperationalMode mode() const { return mode_.load(); }

 private:
  // -- TCP ------------------------------------------------------------------

  void open_listener() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw Error(std::string("socket: ") + std::strerror(errno));
    int yes = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(options_.port);
    if (::inet_pton(AF_INET, options_.bind_address.c_str(), &addr.sin_addr) != 1) {
      throw ArgumentError("service: bad bind address '" + options_.bind_address + "'");
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 16) < 0) {
      const std::string why = std::strerror(errno);
      ::close(listen_fd_);
      listen_fd_ = -1;
      throw Error("service: cannot listen on port " + std::to_string(options_.port) + ": " + why);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    tcp_port_ = ntohs(addr.sin_port);
  }

  void accept_loop() {
    while (running_) {
      pollfd pfd{listen_fd_, POLLIN, 0};
      if (::poll(&pfd, 1, 100) <= 0) continue;
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) continue;
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      std::lock_guard lock(conn_mutex_);
      connection_threads_.emplace_back([this, fd] { serve_connection(fd); });
    }
  }

  void serve_connection(int fd) {
    auto session = hub_.open(Transport::Tcp);
    std::thread writer([this, fd, session] {
      while (running_ && !session->closed()) {
        auto frame = session->next_frame(Clock::now() + std::chrono::milliseconds(100));
        if (!frame) continue;
        if (!send_all(fd, *frame)) break;
      }
      ::shutdown(fd, SHUT_RDWR);
    });

    wire::StreamDecoder decoder;
    std::uint8_t buf[4096];
    while (running_ && !session->closed()) {
      pollfd pfd{fd, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, 100);
      if (ready < 0) break;
      if (ready == 0) continue;
      const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
      if (n <= 0) break;
      decoder.feed(std::span<const std::uint8_t>(buf, static_cast<std::size_t>(n)));
      bool drop = false;
      while (auto r = decoder.next()) {
        if (r->status != wire::DecodeStatus::Ok) continue;  // unsupported kinds are skipped
        try {
          hub_.inbound(*session, *r->message);
        } catch (const ProtocolError&) {
          drop = true;
          break;
        }
      }
      if (drop) break;
    }
    hub_.close(session->id());
    ::shutdown(fd, SHUT_RDWR);
    writer.join();
    ::close(fd);
  }

  static bool send_all(int fd, const Frame& frame) {
    std::size_t sent = 0;
    while (sent < frame.size()) {
      const ssize_t n = ::send(fd, frame.data() + sent, frame.size() - sent, MSG_NOSIGNAL);
      if (n <= 0) return false;
      sent += static_cast<std::size_t>(n);
    }
    return true;
  }

  // -- HTTP bridge ------------------------------------------------------------

  void start_bridge() {
    bridge_ = std::make_unique<httplib::Server>();
    auto& srv = *bridge_;
    srv.Get("/health", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });
    srv.Post("/bridge/open", [this](const httplib::Request&, httplib::Response& res) {
      auto s = hub_.open(Transport::Bridge);
      res.set_content(nlohmann::json{{"session", s->id()}}.dump(), "application/json");
    });
    srv.Post(R"(/bridge/(\d+)/send)", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = hub_.find(std::stoull(req.matches[1].str()));
      if (!s) {
        res.status = 404;
        return;
      }
      const std::span<const std::uint8_t> body(reinterpret_cast<const std::uint8_t*>(req.body.data()), req.body.size());
      const auto r = wire::decode(body);
      if (r.status != wire::DecodeStatus::Ok || r.consumed != body.size()) {
        res.status = 400;
        res.set_content("expected exactly one valid frame", "text/plain");
        return;
      }
      try {
        hub_.inbound(*s, *r.message);
        res.status = 204;
      } catch (const ProtocolError& e) {
        hub_.close(s->id());
        res.status = 409;
        res.set_content(e.what(), "text/plain");
      }
    });
    srv.Get(R"(/bridge/(\d+)/recv)", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = hub_.find(std::stoull(req.matches[1].str()));
      if (!s) {
        res.status = 410;
        return;
      }
      long timeout_ms = 1000;
      if (req.has_param("timeout_ms")) timeout_ms = std::clamp(std::stol(req.get_param_value("timeout_ms")), 0L, 10000L);
      auto frame = s->next_frame(Clock::now() + std::chrono::milliseconds(timeout_ms));
      if (!frame) {
        res.status = s->closed() ? 410 : 204;
        return;
      }
      res.set_content(std::string(frame->begin(), frame->end()), "application/octet-stream");
    });
    srv.Post(R"(/bridge/(\d+)/close)", [this](const httplib::Request& req, httplib::Response& res) {
      hub_.close(std::stoull(req.matches[1].str()));
      res.status = 204;
    });
    if (!options_.static_dir.empty() && !srv.set_mount_point("/", options_.static_dir)) {
      throw DataError("service: static directory '" + options_.static_dir + "' does not exist");
    }
    const int port = *options_.bridge_port == 0 ? srv.bind_to_any_port(options_.bind_address)
                                                : (srv.bind_to_port(options_.bind_address, *options_.bridge_port)
                                                       ? *options_.bridge_port
                                                       : -1);
    if (port < 0) throw Error("service: cannot bind bridge port " + std::to_string(*options_.bridge_port));
    bridge_port_ = static_cast<std::uint16_t>(port);
    threads_.emplace_back([this] { bridge_->listen_after_bind(); });
  }

  // -- Stages -----------------------------------------------------------------

  void recognition_loop() {
    while (running_) {
      auto sample = imu_queue_.pop_until(Clock::now() + std::chrono::milliseconds(100));
      if (!sample) continue;
      try {
        recognition_queue_.push(recognizer_.process(*sample));
      } catch (const StaleSample&) {
        ++stale_samples_;
      }
    }
  }

  void controller_loop() {
    while (running_) {
      auto rec = recognition_queue_.pop_until(Clock::now() + std::chrono::milliseconds(100));
      if (!rec) continue;
      ControlOutput out = controller_.process(*rec);
      for (const auto& ev : out.events) {
        if (const auto* ack = std::get_if<VibrationAck>(&ev)) {
          hub_.publish(wire::GestureAckMsg{gesture_id(ack->gesture)});
        } else {
          const OperationalMode m = std::get<ModeChanged>(ev).mode;
          mode_.store(m);
          hub_.set_mode(m);
          hub_.publish(wire::ModeMsg{m});
        }
      }
      if (out.command) {
        {
          std::lock_guard lock(command_mutex_);
          latest_command_ = *out.command;
        }
        hub_.publish(wire::to_message(*out.command));
      }
    }
  }

  void simulation_loop() {
    const auto period = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / options_.tick_hz));
    const double dt = 1.0 / options_.tick_hz;
    const auto ticks_per_report = std::max<long>(1, std::lround(options_.tick_hz / options_.telemetry_hz));
    auto next = Clock::now();
    long tick = 0;
    std::optional<SimEvent> last_event;
    while (running_) {
      next += period;
      std::this_thread::sleep_until(next);
      VelocityCommand cmd;
      {
        std::lock_guard lock(command_mutex_);
        cmd = latest_command_;
      }
      std::string snapshot;
      {
        std::lock_guard lock(world_mutex_);
        for (const auto& e : step_world(world_, cmd, dt)) last_event = e;
        if (++tick % ticks_per_report == 0) {
          latest_telemetry_ = telemetry_snapshot(world_, options_.scenario.name, mode_.load(), cmd,
                                                 last_event ? &*last_event : nullptr)
                                  .dump();
          snapshot = latest_telemetry_;
        }
      }
      if (!snapshot.empty()) hub_.publish(wire::TelemetryMsg{snapshot});
    }
  }

  ServiceOptions options_;
  BoundedQueue<ImuSample> imu_queue_;
  BoundedQueue<Recognition> recognition_queue_;
  Hub hub_;
  Recognizer recognizer_;
  Controller controller_;

  mutable std::mutex world_mutex_;
  World world_;
  std::string latest_telemetry_;

  std::mutex command_mutex_;
  VelocityCommand latest_command_;
  std::atomic<OperationalMode> mode_{OperationalMode::Autonomous};
  std::atomic<std::size_t> stale_samples_{0};

  std::atomic<bool> running_{false};
  int listen_fd_{-1};
  std::uint16_t tcp_port_{0};
  std::uint16_t bridge_port_{0};
  std::unique_ptr<httplib::Server> bridge_;
  std::vector<std::thread> threads_;
  std::mutex conn_mutex_;
  std::vector<std::thread> connection_threads_;
};

// ---------------------------------------------------------------------------
// Minimal blocking TCP client, used by tools and tests.

class Client {
 public:
  Client(const std::string& host, std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (fd_ < 0 || ::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1 ||
        ::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
      const std::string why = std::strerror(errno);
      if (fd_ >= 0) ::close(fd_);
      throw Error("connect " + host + ":" + std::to_string(port) + ": " + why);
    }
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }
  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;
  ~Client() {
    if (fd_ >= 0) ::close(fd_);
  }

  void send(const wire::Message& msg) {
    const Frame frame = wire::encode(msg);
    std::size_t sent = 0;
    while (sent < frame.size()) {
      const ssize_t n = ::send(fd_, frame.data() + sent, frame.size() - sent, MSG_NOSIGNAL);
      if (n <= 0) throw ProtocolError("connection closed while sending");
      sent += static_cast<std::size_t>(n);
    }
  }

  /// Next message, or nullopt on timeout. Throws ProtocolError once the peer has closed.
  std::optional<wire::Message> receive(std::chrono::milliseconds timeout) {
    const auto deadline = Clock::now() + timeout;
    while (true) {
      if (auto r = decoder_.next()) {
        if (r->status == wire::DecodeStatus::Ok) return r->message;
        continue;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
      if (left <= 0) return std::nullopt;
      pollfd pfd{fd_, POLLIN, 0};
      if (::poll(&pfd, 1, static_cast<int>(left)) <= 0) return std::nullopt;
      std::uint8_t buf[4096];
      const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
      if (n <= 0) throw ProtocolError("connection closed by peer");
      decoder_.feed(std::span<const std::uint8_t>(buf, static_cast<std::size_t>(n)));
    }
  }

 private:
  int fd_{-1};
  wire::StreamDecoder decoder_;
};

}  // namespace wristop::service
