#pragma once

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <memory>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "mindswarm/gateway/sequencer.hpp"

// Live session: one I/O thread for all sockets, one tick thread owning the
// sequencer. Sockets only enqueue lines; replies and snapshots are posted back.
namespace mindswarm::gateway {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace http = beast::http;
using tcp = asio::ip::tcp;

// Slow readers past this backlog are disconnected.
inline constexpr std::size_t kMaxQueuedWrites = 16384;

class Server;

namespace detail {

struct Inbound {
  enum Kind { opened, line, too_long, closed } what;
  int conn = 0;
  ConnectionKind kind = ConnectionKind::decoder;
  std::string text;
};

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  virtual ~Connection() = default;
  virtual void send(std::shared_ptr<const std::string> text) = 0;
  virtual void shutdown() = 0;
  int id = 0;
};

}  // namespace detail

class Server {
 public:
  Server(SessionConfig cfg, swarm::Simulator sim) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (!cfg_.log_path.empty()) {
      log_file_.open(cfg_.log_path, std::ios::out | std::ios::trunc);
      require(log_file_.is_open(), Errc::io, "cannot open session log '" + cfg_.log_path + "'");
    }
    seq_.emplace(cfg_, std::move(sim), log_file_.is_open() ? &log_file_ : nullptr);
    tcp_acceptor_.emplace(io_);
    ws_acceptor_.emplace(io_);
    bind(*tcp_acceptor_, cfg_.tcp);
    bind(*ws_acceptor_, cfg_.ws);
  }

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;
  ~Server() { stop(); }

  void start() {
    start_time_ = std::chrono::steady_clock::now();
    accept_tcp();
    accept_ws();
    io_thread_ = std::thread([this] { io_.run(); });
    tick_started_ = true;
    tick_thread_ = std::thread([this] { tick_loop(); });
  }

  /// Drains pending input, logs the session end, and closes every socket.
  void stop() {
    if (stopped_.exchange(true)) return;
    {
      std::lock_guard lk(mu_);
      stop_requested_ = true;
    }
    cv_.notify_all();
    if (tick_thread_.joinable()) tick_thread_.join();
    asio::post(io_, [this] {
      beast::error_code ec;
      tcp_acceptor_->close(ec);
      ws_acceptor_->close(ec);
      const auto open = conns_;  // shutdown() unregisters
      for (const auto& [id, c] : open)
        if (auto sp = c.lock()) sp->shutdown();
      conns_.clear();
    });
    if (io_thread_.joinable()) {
      // Give sockets a moment to flush, then stop regardless.
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
      io_.stop();
      io_thread_.join();
    }
    beast::error_code ec;
    tcp_acceptor_->close(ec);
    ws_acceptor_->close(ec);
    if (!tick_started_) seq_->finish(0);
    log_file_.flush();
  }

  unsigned short tcp_port() const { return tcp_port_; }
  unsigned short ws_port() const { return ws_port_; }

  std::uint64_t now_ms() const {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start_time_).count());
  }

  /// Tick counter; safe from any thread.
  std::int64_t ticks() const { return ticks_.load(); }

  /// Only valid after stop().
  const Sequencer& sequencer() const { return *seq_; }

  void enqueue(detail::Inbound in) {
    {
      std::lock_guard lk(mu_);
      inbox_.push_back(std::move(in));
    }
    cv_.notify_one();
  }

  void register_connection(const std::shared_ptr<detail::Connection>& c, ConnectionKind kind) {
    c->id = next_conn_++;
    conns_[c->id] = c;
    if (kind == ConnectionKind::operator_) subscribers_.push_back(c->id);
    enqueue({detail::Inbound::opened, c->id, kind, {}});
  }

  void unregister_connection(int id) {
    if (conns_.erase(id) == 0) return;
    std::erase(subscribers_, id);
    enqueue({detail::Inbound::closed, id, ConnectionKind::decoder, {}});
  }

  asio::io_context& io() { return io_; }

 private:
  void bind(tcp::acceptor& acc, const Endpoint& ep) {
    beast::error_code ec;
    const auto addr = asio::ip::make_address(ep.host, ec);
    require(!ec, Errc::bind_failed, "bad address '" + ep.host + "': " + ec.message());
    const tcp::endpoint endpoint(addr, ep.port);
    acc.open(endpoint.protocol(), ec);
    if (!ec) acc.set_option(asio::socket_base::reuse_address(true), ec);
    if (!ec) acc.bind(endpoint, ec);
    if (!ec) acc.listen(asio::socket_base::max_listen_connections, ec);
    require(!ec, Errc::bind_failed, "cannot listen on " + ep.str() + ": " + ec.message());
    (&acc == &*tcp_acceptor_ ? tcp_port_ : ws_port_) = acc.local_endpoint().port();
  }

  void accept_tcp();
  void accept_ws();

  void route(int conn, const WireMessage& m) {
    auto text = std::make_shared<const std::string>(encode(m));
    asio::post(io_, [this, conn, text] {
      if (auto it = conns_.find(conn); it != conns_.end())
        if (auto sp = it->second.lock()) sp->send(text);
    });
  }

  void broadcast(const WireMessage& m) {
    auto text = std::make_shared<const std::string>(encode(m));
    asio::post(io_, [this, text] {
      for (int id : subscribers_)
        if (auto it = conns_.find(id); it != conns_.end())
          if (auto sp = it->second.lock()) sp->send(text);
    });
  }

  void process(detail::Inbound& in) {
    auto& seq = *seq_;
    switch (in.what) {
      case detail::Inbound::opened:
        seq_ids_.emplace(in.conn, seq.open(in.kind));
        break;
      case detail::Inbound::closed:
        if (auto it = seq_ids_.find(in.conn); it != seq_ids_.end()) {
          seq.close(it->second);
          seq_ids_.erase(it);
        }
        break;
      case detail::Inbound::line:
      case detail::Inbound::too_long: {
        const auto it = seq_ids_.find(in.conn);
        if (it == seq_ids_.end()) break;
        if (in.what == detail::Inbound::too_long) {
          route(in.conn, seq.line_too_long(it->second, now_ms()));
        } else {
          for (auto& reply : seq.handle_line(it->second, in.text, now_ms())) route(in.conn, reply);
        }
        break;
      }
    }
  }

  void drain() {
    std::deque<detail::Inbound> batch;
    {
      std::lock_guard lk(mu_);
      batch.swap(inbox_);
    }
    for (auto& in : batch) process(in);
  }

  void tick_loop() {
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / cfg_.tick_hz));
    const double snapshot_every = cfg_.tick_hz / cfg_.snapshot_hz;
    double next_snapshot = 0.0;
    std::int64_t k = 0;
    for (;;) {
      const auto due = start_time_ + (k + 1) * period;
      {
        std::unique_lock lk(mu_);
        // Wake for input between ticks so acks are not held back a full period.
        while (!stop_requested_ && inbox_.empty() && clock::now() < due) cv_.wait_until(lk, due);
        if (stop_requested_) break;
      }
      drain();
      if (clock::now() < due) continue;
      ++k;
      seq_->tick(now_ms());
      ticks_.store(k);
      if (static_cast<double>(k) >= next_snapshot) {
        next_snapshot += snapshot_every;
        broadcast(seq_->snapshot(now_ms()));
      }
    }
    drain();
    seq_->finish(now_ms());
  }

  SessionConfig cfg_;
  std::ofstream log_file_;
  std::optional<Sequencer> seq_;
  asio::io_context io_;
  std::optional<tcp::acceptor> tcp_acceptor_, ws_acceptor_;
  unsigned short tcp_port_ = 0, ws_port_ = 0;
  std::chrono::steady_clock::time_point start_time_ = std::chrono::steady_clock::now();

  // I/O thread only.
  std::unordered_map<int, std::weak_ptr<detail::Connection>> conns_;
  std::vector<int> subscribers_;
  int next_conn_ = 1;

  // Tick thread only.
  std::unordered_map<int, int> seq_ids_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<detail::Inbound> inbox_;
  bool stop_requested_ = false;
  bool tick_started_ = false;
  std::atomic<bool> stopped_{false};
  std::atomic<std::int64_t> ticks_{0};
  std::thread io_thread_, tick_thread_;
};

namespace detail {

class TcpConnection : public Connection {
 public:
  TcpConnection(Server& srv, tcp::socket sock) : srv_(srv), sock_(std::move(sock)) {}

  void start() {
    srv_.register_connection(shared_from_this(), ConnectionKind::decoder);
    read();
  }

  void send(std::shared_ptr<const std::string> text) override {
    if (closed_) return;
    if (queue_.size() >= kMaxQueuedWrites) return close();
    queue_.push_back(std::move(text));
    if (inflight_.empty() && queue_.size() == 1) write();
  }

  void shutdown() override { close(); }

 private:
  void read() {
    sock_.async_read_some(asio::buffer(buf_), [self = shared(), this](beast::error_code ec, std::size_t n) {
      if (ec) return close();
      for (auto& f : framer_.feed({buf_.data(), n}))
        srv_.enqueue({f.too_long ? Inbound::too_long : Inbound::line, id, ConnectionKind::decoder, std::move(f.line)});
      read();
    });
  }

  // Everything queued goes out in one gathered write.
  void write() {
    inflight_.assign(queue_.begin(), queue_.end());
    queue_.clear();
    std::vector<asio::const_buffer> bufs;
    bufs.reserve(inflight_.size());
    for (const auto& t : inflight_) bufs.emplace_back(asio::buffer(*t));
    asio::async_write(sock_, bufs, [self = shared(), this](beast::error_code ec, std::size_t) {
      inflight_.clear();
      if (ec) return close();
      if (!queue_.empty()) write();
    });
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    beast::error_code ec;
    sock_.shutdown(tcp::socket::shutdown_both, ec);
    sock_.close(ec);
    queue_.clear();
    srv_.unregister_connection(id);
  }

  std::shared_ptr<TcpConnection> shared() { return std::static_pointer_cast<TcpConnection>(shared_from_this()); }

  Server& srv_;
  tcp::socket sock_;
  std::array<char, 4096> buf_{};
  LineFramer framer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  std::vector<std::shared_ptr<const std::string>> inflight_;
  bool closed_ = false;
};

class WsConnection : public Connection {
 public:
  WsConnection(Server& srv, tcp::socket sock) : srv_(srv), ws_(std::move(sock)) {}

  void start() {
    http::async_read(ws_.next_layer(), buffer_, req_, [self = shared(), this](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (req_.target() != "/ws" || !websocket::is_upgrade(req_)) return reject();
      ws_.read_message_max(64 * 1024);
      ws_.async_accept(req_, [self = shared(), this](beast::error_code ec2) {
        if (ec2) return;
        open_ = true;
        srv_.register_connection(shared_from_this(), ConnectionKind::operator_);
        read();
      });
    });
  }

  void send(std::shared_ptr<const std::string> text) override {
    if (!open_) return;
    if (queue_.size() >= kMaxQueuedWrites) return close();
    queue_.push_back(std::move(text));
    if (queue_.size() == 1) write();
  }

  void shutdown() override {
    if (!open_) return;
    ws_.async_close(websocket::close_code::going_away, [self = shared()](beast::error_code) {});
    open_ = false;
    srv_.unregister_connection(id);
  }

 private:
  void reject() {
    auto res = std::make_shared<http::response<http::string_body>>(http::status::not_found, req_.version());
    res->set(http::field::content_type, "text/plain");
    res->body() = "websocket endpoint is /ws\n";
    res->prepare_payload();
    http::async_write(ws_.next_layer(), *res, [self = shared(), res](beast::error_code, std::size_t) {
      beast::error_code ec;
      self->ws_.next_layer().shutdown(tcp::socket::shutdown_both, ec);
    });
  }

  void read() {
    ws_.async_read(frame_, [self = shared(), this](beast::error_code ec, std::size_t) {
      if (ec == websocket::error::message_too_big) {
        srv_.enqueue({Inbound::too_long, id, ConnectionKind::operator_, {}});
        return close();
      }
      if (ec) return close();
      std::string text = beast::buffers_to_string(frame_.data());
      frame_.consume(frame_.size());
      // One message per frame; a trailing newline is optional.
      if (text.empty() || text.back() != '\n') text.push_back('\n');
      for (auto& f : framer_.feed(text))
        srv_.enqueue({f.too_long ? Inbound::too_long : Inbound::line, id, ConnectionKind::operator_, std::move(f.line)});
      read();
    });
  }

  void write() {
    ws_.text(true);
    ws_.async_write(asio::buffer(*queue_.front()), [self = shared(), this](beast::error_code ec, std::size_t) {
      if (ec) return close();
      queue_.pop_front();
      if (!queue_.empty() && open_) write();
    });
  }

  void close() {
    if (!open_) return;
    open_ = false;
    beast::error_code ec;
    ws_.next_layer().shutdown(tcp::socket::shutdown_both, ec);
    ws_.next_layer().close(ec);
    queue_.clear();
    srv_.unregister_connection(id);
  }

  std::shared_ptr<WsConnection> shared() { return std::static_pointer_cast<WsConnection>(shared_from_this()); }

  Server& srv_;
  websocket::stream<tcp::socket> ws_;
  beast::flat_buffer buffer_, frame_;
  http::request<http::string_body> req_;
  LineFramer framer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  bool open_ = false;
};

}  // namespace detail

inline void Server::accept_tcp() {
  tcp_acceptor_->async_accept([this](beast::error_code ec, tcp::socket sock) {
    if (ec) return;
    std::make_shared<detail::TcpConnection>(*this, std::move(sock))->start();
    accept_tcp();
  });
}

inline void Server::accept_ws() {
  ws_acceptor_->async_accept([this](beast::error_code ec, tcp::socket sock) {
    if (ec) return;
    std::make_shared<detail::WsConnection>(*this, std::move(sock))->start();
    accept_ws();
  });
}

}  // namespace mindswarm::gateway
