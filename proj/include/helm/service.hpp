#pragma once

// Network service: a simulated vessel driven by helm-link frames over raw
// TCP and WebSocket (/link). The simulation thread owns the vessel;
// connections hand decoded frames over through an ordered queue that is
// drained at the start of each control tick, and telemetry flows back as a
// one-way broadcast.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "helm/config.hpp"
#include "helm/mission.hpp"
#include "helm/protocol.hpp"

namespace helm::service {

using ClientId = std::uint64_t;

struct Inbound {
  ClientId client = 0;
  proto::Decoded frame;
};

/// A frame for one client, or for every client when `client` is empty.
struct Outbound {
  std::optional<ClientId> client;
  proto::Bytes bytes;
};

// Health bits carried in HEARTBEAT.
inline constexpr std::uint8_t kHealthPositionFix = 1u << 0;
inline constexpr std::uint8_t kHealthBatteryLow = 1u << 1;
inline constexpr std::uint8_t kHealthReturning = 1u << 2;
inline constexpr std::uint8_t kHealthShallowWater = 1u << 3;

// ---------------------------------------------------------------------------
// Core

/// The vessel plus command handling and telemetry scheduling. No I/O and no
/// locking: exactly one thread calls tick().
class ServiceCore {
 public:
  explicit ServiceCore(const cfg::Config& c, double home_east = 0.0, double home_north = 0.0)
      : c_(c),
        vessel_(c, home_east, home_north),
        heartbeat_every_(period_ticks(c.service.heartbeat_hz)),
        state_every_(period_ticks(c.service.state_hz)),
        obstacle_every_(period_ticks(c.service.obstacle_hz)) {}

  /// Applies `in` in order, then runs one control tick. Returns the ACKs for
  /// this tick's commands followed by any telemetry due.
  std::vector<Outbound> tick(const std::vector<Inbound>& in) {
    std::vector<Outbound> out;
    const double t = vessel_.time();
    for (const Inbound& f : in) {
      last_rx_ = t;
      const std::uint8_t id = proto::message_id(f.frame.message);
      if (const auto r = apply(f.frame.message, t))
        out.push_back({f.client, proto::encode(proto::Ack{id, static_cast<std::uint8_t>(*r)},
                                               f.frame.seq)});
    }

    const std::uint64_t k = vessel_.ticks();
    std::optional<double> link_age;
    if (last_rx_) link_age = t - *last_rx_;
    last_ = vessel_.tick(link_age);
    if (keep_records_) records_.push_back(last_);
    for (ctl::Event& e : vessel_.autopilot().drain_events()) events_.push_back(std::move(e));

    if (k % heartbeat_every_ == 0) out.push_back({std::nullopt, proto::encode(heartbeat(), seq_.next())});
    if (k % state_every_ == 0) out.push_back({std::nullopt, proto::encode(state(), seq_.next())});
    if (k % obstacle_every_ == 0 && c_.perception_enabled) {
      perception::SectorArray a;
      a.distances_cm = last_.sectors;
      a.timestamp = last_.t;
      out.push_back({std::nullopt, proto::encode(proto::make_obstacle(a), seq_.next())});
    }
    return out;
  }

  mission::VesselSim& vessel() { return vessel_; }
  const mission::Record& last_record() const { return last_; }
  void keep_records(bool on) { keep_records_ = on; }
  const std::vector<mission::Record>& records() const { return records_; }
  std::vector<ctl::Event> drain_events() {
    std::vector<ctl::Event> e;
    e.swap(events_);
    return e;
  }

  proto::Heartbeat heartbeat() const {
    const ctl::Autopilot& ap = vessel_.autopilot();
    std::uint8_t health = 0;
    if (vessel_.position_fix()) health |= kHealthPositionFix;
    if (vessel_.battery_fraction() < c_.autopilot.failsafe.battery_threshold) health |= kHealthBatteryLow;
    if (ap.rtl_latched()) health |= kHealthReturning;
    if (last_.shallow_water) health |= kHealthShallowWater;
    return {static_cast<std::uint8_t>(ap.mode()), static_cast<std::uint8_t>(ap.armed()), health};
  }

  /// Vessel state as the autopilot sees it (measured), with the commanded
  /// normalized thrust.
  proto::State state() const {
    const dyn::Measurement& m = last_.measured;
    const double rel = deg2rad(m.course_over_ground - m.psi);
    proto::Telemetry s;
    s.t = last_.t;
    s.x_east = m.x_east;
    s.y_north = m.y_north;
    s.psi = m.psi;
    s.u = m.speed_over_ground * std::cos(rel);
    s.v = m.speed_over_ground * std::sin(rel);
    s.r = m.yaw_rate;
    s.thrust_left = dyn::normalized_from_pwm(last_.control.pwm_left, c_.vessel.thruster);
    s.thrust_right = dyn::normalized_from_pwm(last_.control.pwm_right, c_.vessel.thruster);
    return proto::make_state(s);
  }

 private:
  static std::uint64_t period_ticks(double hz) {
    return static_cast<std::uint64_t>(std::llround(mission::kControlHz / hz));
  }

  using Ack = proto::AckResult;

  /// Result for a command; empty for frames that are not answered.
  std::optional<Ack> apply(const proto::Message& msg, double t) {
    ctl::Autopilot& ap = vessel_.autopilot();
    const ctl::Mode mode = ap.mode();
    auto switch_to = [&](ctl::Mode m, ctl::Setpoint sp) {
      return ap.set_mode(m, std::move(sp), t, "link command") ? Ack::Ok : Ack::Rejected;
    };

    if (const auto* m = std::get_if<proto::SetMode>(&msg)) {
      const auto target = ctl::mode_from_code(m->mode);
      if (!target) return Ack::Invalid;
      return switch_to(*target, ctl::NoSetpoint{});
    }
    if (const auto* w = std::get_if<proto::SetWaypoint>(&msg)) {
      if (w->accept_radius_cm == 0) return Ack::Invalid;
      if (mode != ctl::Mode::GuidedPosition && mode != ctl::Mode::Loiter) return Ack::Rejected;
      const double radius = w->accept_radius_cm / 100.0;
      return switch_to(ctl::Mode::GuidedPosition,
                       ctl::WaypointSetpoint{w->x_mm / 1000.0, w->y_mm / 1000.0, radius,
                                             c_.service.waypoint_speed, c_.autopilot.rtl_loiter_radius});
    }
    if (const auto* v = std::get_if<proto::SetVelHead>(&msg)) {
      if (v->heading_cdeg >= 36000) return Ack::Invalid;
      if (mode != ctl::Mode::GuidedVelocityHeading) return Ack::Rejected;
      return switch_to(mode, ctl::VelHeadSetpoint{v->speed_mms / 1000.0, v->heading_cdeg / 100.0});
    }
    if (const auto* th = std::get_if<proto::SetThrust>(&msg)) {
      if (std::abs(th->left_permille) > 1000 || std::abs(th->right_permille) > 1000)
        return Ack::Invalid;
      if (mode != ctl::Mode::Manual) return Ack::Rejected;
      return switch_to(mode, ctl::ManualSetpoint{th->left_permille / 1000.0,
                                                 th->right_permille / 1000.0});
    }
    if (const auto* a = std::get_if<proto::Arm>(&msg)) {
      if (a->flag > 1) return Ack::Invalid;
      return ap.arm(a->flag == 1, vessel_.position_fix(), t) ? Ack::Ok : Ack::Rejected;
    }
    if (std::holds_alternative<proto::Heartbeat>(msg)) return std::nullopt;  // keep-alive
    if (std::holds_alternative<proto::Opaque>(msg)) return Ack::Invalid;
    return std::nullopt;  // telemetry echoed back by a client: ignored
  }

  cfg::Config c_;
  mission::VesselSim vessel_;
  std::uint64_t heartbeat_every_;
  std::uint64_t state_every_;
  std::uint64_t obstacle_every_;
  proto::Sequencer seq_;
  std::optional<double> last_rx_;
  mission::Record last_;
  bool keep_records_ = false;
  std::vector<mission::Record> records_;
  std::vector<ctl::Event> events_;
};

// ---------------------------------------------------------------------------
// Transport

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

/// Ordered hand-off from connection handlers to the simulation thread.
class CommandQueue {
 public:
  void push(Inbound f) {
    std::lock_guard<std::mutex> lock(m_);
    q_.push_back(std::move(f));
  }
  std::vector<Inbound> drain() {
    std::lock_guard<std::mutex> lock(m_);
    std::vector<Inbound> out(std::make_move_iterator(q_.begin()), std::make_move_iterator(q_.end()));
    q_.clear();
    return out;
  }

 private:
  std::mutex m_;
  std::deque<Inbound> q_;
};

class Hub;

/// One connected client. All members run on the I/O thread.
class Session : public std::enable_shared_from_this<Session> {
 public:
  static constexpr std::size_t kMaxQueuedFrames = 2048;

  Session(Hub& hub, ClientId id) : hub_(hub), id_(id) {}
  virtual ~Session() = default;
  ClientId id() const { return id_; }

  void send(std::shared_ptr<const proto::Bytes> frame) {
    if (closed_) return;
    if (outbox_.size() >= kMaxQueuedFrames) {  // client cannot keep up
      close();
      return;
    }
    outbox_.push_back(std::move(frame));
    if (!writing_) write_next();
  }

  virtual void start() = 0;
  virtual void close() = 0;

 protected:
  virtual void write(std::shared_ptr<const proto::Bytes> frame) = 0;

  void received(std::span<const std::uint8_t> bytes);

  void write_done(beast::error_code ec) {
    writing_ = false;
    if (ec) {
      close();
      return;
    }
    outbox_.pop_front();
    if (!outbox_.empty()) write_next();
  }

  void finished();

  Hub& hub_;
  ClientId id_;
  bool closed_ = false;
  proto::StreamParser parser_;

 private:
  void write_next() {
    writing_ = true;
    write(outbox_.front());
  }

  std::deque<std::shared_ptr<const proto::Bytes>> outbox_;
  bool writing_ = false;
};

/// Registry of live sessions; lives on the I/O thread.
class Hub {
 public:
  explicit Hub(CommandQueue& q) : queue_(q) {}

  ClientId next_id() { return ++last_id_; }
  void add(const std::shared_ptr<Session>& s) { sessions_[s->id()] = s; }
  void remove(ClientId id) { sessions_.erase(id); }
  std::size_t size() const { return sessions_.size(); }
  CommandQueue& queue() { return queue_; }

  void deliver(const Outbound& o) {
    auto frame = std::make_shared<const proto::Bytes>(o.bytes);
    if (o.client) {
      if (auto it = sessions_.find(*o.client); it != sessions_.end())
        if (auto s = it->second.lock()) s->send(frame);
      return;
    }
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      auto s = it->second.lock();
      ++it;  // send() may close and unregister the session
      if (s) s->send(frame);
    }
  }

  void close_all() {
    auto copy = sessions_;
    for (auto& [id, w] : copy)
      if (auto s = w.lock()) s->close();
  }

 private:
  CommandQueue& queue_;
  ClientId last_id_ = 0;
  std::map<ClientId, std::weak_ptr<Session>> sessions_;
};

inline void Session::received(std::span<const std::uint8_t> bytes) {
  for (proto::Decoded& d : parser_.feed(bytes).frames) hub_.queue().push({id_, std::move(d)});
}

inline void Session::finished() {
  if (closed_) return;
  closed_ = true;
  hub_.remove(id_);
}

/// Raw byte stream: frames back to back.
class TcpSession : public Session {
 public:
  TcpSession(Hub& hub, ClientId id, tcp::socket socket)
      : Session(hub, id), socket_(std::move(socket)) {}

  void start() override {
    boost::system::error_code ignored;
    socket_.set_option(tcp::no_delay(true), ignored);
    read();
  }

  void close() override {
    boost::system::error_code ignored;
    socket_.shutdown(tcp::socket::shutdown_both, ignored);
    socket_.close(ignored);
    finished();
  }

 private:
  void read() {
    socket_.async_read_some(net::buffer(buf_),
                            [self = shared_from_this(), this](beast::error_code ec, std::size_t n) {
                              if (ec) {
                                close();
                                return;
                              }
                              received({buf_.data(), n});
                              read();
                            });
  }

  void write(std::shared_ptr<const proto::Bytes> frame) override {
    net::async_write(socket_, net::buffer(*frame),
                     [self = shared_from_this(), this, frame](beast::error_code ec, std::size_t) {
                       write_done(ec);
                     });
  }

  tcp::socket socket_;
  std::array<std::uint8_t, 1024> buf_{};
};

/// WebSocket on path /link; binary messages carry frame bytes (a message
/// may hold several frames or part of one).
class WsSession : public Session {
 public:
  static constexpr const char* kPath = "/link";

  WsSession(Hub& hub, ClientId id, tcp::socket socket)
      : Session(hub, id), ws_(std::move(socket)) {}

  void start() override {
    http::async_read(ws_.next_layer(), buf_, req_,
                     [self = shared_from_this(), this](beast::error_code ec, std::size_t) {
                       if (ec) {
                         close();
                         return;
                       }
                       if (!websocket::is_upgrade(req_) || req_.target() != kPath) {
                         reject();
                         return;
                       }
                       ws_.binary(true);
                       ws_.async_accept(req_, [self, this](beast::error_code ec2) {
                         if (ec2) {
                           close();
                           return;
                         }
                         open_ = true;
                         hub_.add(shared_from_this());
                         read();
                       });
                     });
  }

  void close() override {
    boost::system::error_code ignored;
    ws_.next_layer().shutdown(tcp::socket::shutdown_both, ignored);
    ws_.next_layer().close(ignored);
    finished();
  }

  bool open() const { return open_; }

 private:
  void reject() {
    auto res = std::make_shared<http::response<http::string_body>>(http::status::not_found,
                                                                   req_.version());
    res->set(http::field::content_type, "text/plain");
    res->body() = "helm-link WebSocket lives at /link\n";
    res->prepare_payload();
    http::async_write(ws_.next_layer(), *res,
                      [self = shared_from_this(), this, res](beast::error_code, std::size_t) {
                        close();
                      });
  }

  void read() {
    ws_.async_read(buf_, [self = shared_from_this(), this](beast::error_code ec, std::size_t) {
      if (ec) {
        close();
        return;
      }
      const auto data = buf_.cdata();
      received({static_cast<const std::uint8_t*>(data.data()), data.size()});
      buf_.consume(buf_.size());
      read();
    });
  }

  void write(std::shared_ptr<const proto::Bytes> frame) override {
    ws_.async_write(net::buffer(*frame),
                    [self = shared_from_this(), this, frame](beast::error_code ec, std::size_t) {
                      write_done(ec);
                    });
  }

  websocket::stream<tcp::socket> ws_;
  beast::flat_buffer buf_;
  http::request<http::string_body> req_;
  bool open_ = false;
};

// ---------------------------------------------------------------------------
// Service

/// Runs the simulation thread and one I/O thread. Ports of 0 pick free
/// ephemeral ports (see tcp_port(), websocket_port()). A timescale of 0 runs
/// unpaced.
class Service {
 public:
  explicit Service(const cfg::Config& c, double home_east = 0.0, double home_north = 0.0)
      : c_(c),
        core_(c, home_east, home_north),
        hub_(queue_),
        tcp_acceptor_(io_),
        ws_acceptor_(io_) {}

  ~Service() { stop(); }
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  void start() {
    open(tcp_acceptor_, c_.service.tcp_port);
    open(ws_acceptor_, c_.service.websocket_port);
    accept_tcp();
    accept_ws();
    running_ = true;
    io_thread_ = std::thread([this] { io_.run(); });
    sim_thread_ = std::thread([this] { sim_loop(); });
  }

  void stop() {
    if (!running_.exchange(false)) return;
    if (sim_thread_.joinable()) sim_thread_.join();
    net::post(io_, [this] {
      boost::system::error_code ignored;
      tcp_acceptor_.close(ignored);
      ws_acceptor_.close(ignored);
      hub_.close_all();
    });
    io_.stop();
    if (io_thread_.joinable()) io_thread_.join();
  }

  /// Blocks until stop() is called from elsewhere (signal handler thread).
  void wait() {
    if (sim_thread_.joinable()) sim_thread_.join();
  }

  std::uint16_t tcp_port() const { return tcp_acceptor_.local_endpoint().port(); }
  std::uint16_t websocket_port() const { return ws_acceptor_.local_endpoint().port(); }
  double sim_time() const { return sim_time_.load(); }

  /// Called on the simulation thread for every event (logging hook).
  void on_event(std::function<void(const ctl::Event&)> f) { on_event_ = std::move(f); }

 private:
  void open(tcp::acceptor& a, int port) {
    const tcp::endpoint ep(net::ip::address_v4::any(), static_cast<std::uint16_t>(port));
    a.open(ep.protocol());
    a.set_option(net::socket_base::reuse_address(true));
    a.bind(ep);
    a.listen();
  }

  void accept_tcp() {
    tcp_acceptor_.async_accept([this](beast::error_code ec, tcp::socket s) {
      if (ec) return;
      auto session = std::make_shared<TcpSession>(hub_, hub_.next_id(), std::move(s));
      hub_.add(session);
      session->start();
      accept_tcp();
    });
  }

  void accept_ws() {
    ws_acceptor_.async_accept([this](beast::error_code ec, tcp::socket s) {
      if (ec) return;
      std::make_shared<WsSession>(hub_, hub_.next_id(), std::move(s))->start();
      accept_ws();
    });
  }

  void sim_loop() {
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    const double scale = c_.service.timescale;
    std::uint64_t k = 0;
    while (running_) {
      std::vector<Outbound> out = core_.tick(queue_.drain());
      sim_time_ = core_.vessel().time();
      for (const ctl::Event& e : core_.drain_events())
        if (on_event_) on_event_(e);
      net::post(io_, [this, out = std::move(out)] {
        for (const Outbound& o : out) hub_.deliver(o);
      });
      ++k;
      if (scale > 0.0) {
        const auto due = start + std::chrono::duration_cast<clock::duration>(
                                     std::chrono::duration<double>(k * mission::kControlDt / scale));
        std::this_thread::sleep_until(due);
      } else if (k % 16 == 0) {
        std::this_thread::yield();
      }
    }
  }

  cfg::Config c_;
  ServiceCore core_;
  CommandQueue queue_;
  net::io_context io_;
  Hub hub_;
  tcp::acceptor tcp_acceptor_;
  tcp::acceptor ws_acceptor_;
  std::thread io_thread_;
  std::thread sim_thread_;
  std::atomic<bool> running_{false};
  std::atomic<double> sim_time_{0.0};
  std::function<void(const ctl::Event&)> on_event_;
};

}  // namespace helm::service
