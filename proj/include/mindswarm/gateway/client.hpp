#pragma once

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <mutex>
#include <memory>
#include <optional>
#include <thread>

#include "mindswarm/gateway/protocol.hpp"
#include "mindswarm/gateway/validation.hpp"

// Blocking clients with a background reader, for the replay tool and tests.
namespace mindswarm::gateway {

namespace detail {

/// Thread-safe queue of decoded replies.
class ReplyQueue {
 public:
  void push(DecodeResult r) {
    {
      std::lock_guard lk(mu_);
      items_.push_back(std::move(r));
    }
    cv_.notify_all();
  }

  void close() {
    {
      std::lock_guard lk(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }

  /// Next reply, or empty on timeout or once the stream has ended.
  std::optional<DecodeResult> pop(std::chrono::milliseconds timeout) {
    std::unique_lock lk(mu_);
    cv_.wait_for(lk, timeout, [&] { return !items_.empty() || closed_; });
    if (items_.empty()) return std::nullopt;
    auto r = std::move(items_.front());
    items_.pop_front();
    return r;
  }

  /// Next WireMessage satisfying pred; others are discarded.
  std::optional<WireMessage> wait_for(const std::function<bool(const WireMessage&)>& pred,
                                      std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) return std::nullopt;
      auto r = pop(left);
      if (!r) return std::nullopt;
      if (auto* m = std::get_if<WireMessage>(&*r); m && pred(*m)) return *m;
    }
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<DecodeResult> items_;
  bool closed_ = false;
};

}  // namespace detail

class TcpClient {
 public:
  explicit TcpClient(const Endpoint& ep, std::chrono::milliseconds timeout = std::chrono::milliseconds(2000))
      : sock_(io_) {
    namespace asio = boost::asio;
    boost::system::error_code ec;
    const auto addr = asio::ip::make_address(ep.host, ec);
    require(!ec, Errc::connect_failed, "bad address '" + ep.host + "'");
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    // Retry briefly so a gateway that is still binding does not fail the caller.
    for (;;) {
      sock_.connect({addr, ep.port}, ec);
      if (!ec) break;
      sock_.close();
      require(std::chrono::steady_clock::now() < deadline, Errc::connect_failed,
              "cannot connect to " + ep.str() + ": " + ec.message());
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    sock_.set_option(asio::ip::tcp::no_delay(true));
    reader_ = std::thread([this] { read_loop(); });
  }

  TcpClient(const TcpClient&) = delete;
  TcpClient& operator=(const TcpClient&) = delete;
  ~TcpClient() { close(); }

  void send_line(std::string_view line) {
    boost::system::error_code ec;
    boost::asio::write(sock_, boost::asio::buffer(line.data(), line.size()), ec);
    require(!ec, Errc::connect_failed, "send failed: " + ec.message());
  }

  void send(const WireMessage& m) { send_line(encode(m)); }

  detail::ReplyQueue& replies() { return replies_; }

  void close() {
    if (closed_) return;
    closed_ = true;
    boost::system::error_code ec;
    sock_.shutdown(boost::asio::ip::tcp::socket::shutdown_both, ec);
    if (reader_.joinable()) reader_.join();
    sock_.close(ec);
  }

 private:
  void read_loop() {
    boost::asio::streambuf buf;
    for (;;) {
      boost::system::error_code ec;
      boost::asio::read_until(sock_, buf, '\n', ec);
      if (ec) break;
      std::istream is(&buf);
      std::string line;
      std::getline(is, line);
      replies_.push(decode(line));
    }
    replies_.close();
  }

  boost::asio::io_context io_;
  boost::asio::ip::tcp::socket sock_;
  std::thread reader_;
  detail::ReplyQueue replies_;
  bool closed_ = false;
};

/// Operator-side WebSocket client speaking the same schema in text frames.
/// All stream operations run on one private I/O thread.
class WsClient {
 public:
  explicit WsClient(const Endpoint& ep, const std::string& path = "/ws",
                    std::chrono::milliseconds timeout = std::chrono::milliseconds(2000))
      : ws_(io_) {
    namespace asio = boost::asio;
    boost::system::error_code ec;
    const auto addr = asio::ip::make_address(ep.host, ec);
    require(!ec, Errc::connect_failed, "bad address '" + ep.host + "'");
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      ws_.next_layer().connect({addr, ep.port}, ec);
      if (!ec) break;
      ws_.next_layer().close();
      require(std::chrono::steady_clock::now() < deadline, Errc::connect_failed,
              "cannot connect to " + ep.str() + ": " + ec.message());
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    ws_.handshake(ep.host + ":" + std::to_string(ep.port), path, ec);
    require(!ec, Errc::connect_failed, "websocket handshake failed: " + ec.message());
    ws_.text(true);
    read();
    thread_ = std::thread([this] { io_.run(); });
  }

  WsClient(const WsClient&) = delete;
  WsClient& operator=(const WsClient&) = delete;
  ~WsClient() { close(); }

  void send(const WireMessage& m) {
    auto text = std::make_shared<std::string>(encode(m));
    text->pop_back();
    boost::asio::post(io_, [this, text] {
      queue_.push_back(text);
      if (queue_.size() == 1) write();
    });
  }

  detail::ReplyQueue& replies() { return replies_; }

  void close() {
    if (closed_) return;
    closed_ = true;
    boost::asio::post(io_, [this] {
      boost::system::error_code ec;
      ws_.next_layer().shutdown(boost::asio::ip::tcp::socket::shutdown_both, ec);
      ws_.next_layer().close(ec);
    });
    if (thread_.joinable()) thread_.join();
  }

 private:
  void read() {
    ws_.async_read(buf_, [this](boost::system::error_code ec, std::size_t) {
      if (ec) return replies_.close();
      replies_.push(decode(boost::beast::buffers_to_string(buf_.data())));
      buf_.consume(buf_.size());
      read();
    });
  }

  void write() {
    ws_.async_write(boost::asio::buffer(*queue_.front()), [this](boost::system::error_code ec, std::size_t) {
      if (ec) return queue_.clear();
      queue_.pop_front();
      if (!queue_.empty()) write();
    });
  }

  boost::asio::io_context io_;
  boost::beast::websocket::stream<boost::asio::ip::tcp::socket> ws_;
  boost::beast::flat_buffer buf_;
  std::deque<std::shared_ptr<std::string>> queue_;
  std::thread thread_;
  detail::ReplyQueue replies_;
  bool closed_ = false;
};

}  // namespace mindswarm::gateway
