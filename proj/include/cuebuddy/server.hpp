#pragma once

#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <thread>
#include <vector>

#include <boost/asio/bind_executor.hpp>
#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "cuebuddy/protocol.hpp"
#include "cuebuddy/session.hpp"

// HTTP + WebSocket front end for a SessionRegistry.
//
//   POST /glossaries             body: glossary JSONL     -> {"version": ...}
//   POST /sessions               body: session config     -> {"session_id": ...}
//   GET  /sessions/{id}                                   -> session status
//   WS   /sessions/{id}/ingest   text frames of transcript lines; one ack per line
//   WS   /sessions/{id}/subscribe  hello, then cues; accepts suppress messages
namespace cuebuddy::server {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace detail {

inline int http_status_for(const std::string& code) {
  if (code == "UnknownSession" || code == "UnknownGlossary") return 404;
  if (code == "SecondIngestRejected") return 409;
  return 400;
}

/// Writes queued text frames one at a time. Must be used from the owner's
/// strand.
template <class Owner>
class FrameWriter {
 public:
  explicit FrameWriter(Owner& owner) : owner_(owner) {}

  void send(std::string frame) {
    queue_.push_back(std::move(frame));
    if (queue_.size() == 1) write_next();
  }

  bool idle() const { return queue_.empty(); }

 private:
  void write_next() {
    owner_.ws().text(true);
    owner_.ws().async_write(
        net::buffer(queue_.front()),
        [self = owner_.shared_from_this(), this](beast::error_code ec, std::size_t) {
          if (ec) return self->fail(ec);
          queue_.pop_front();
          if (!queue_.empty()) write_next();
          else self->on_idle();
        });
  }

  Owner& owner_;
  std::deque<std::string> queue_;
};

class IngestConnection : public std::enable_shared_from_this<IngestConnection> {
 public:
  IngestConnection(tcp::socket&& socket, std::shared_ptr<Session> session,
                   Session::IngestLease lease)
      : ws_(std::move(socket)), session_(std::move(session)), lease_(std::move(lease)),
        writer_(*this) {}

  template <class Request>
  void start(Request req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, beast::bind_front_handler(&IngestConnection::on_accept,
                                                    shared_from_this()));
  }

  websocket::stream<beast::tcp_stream>& ws() { return ws_; }
  void fail(beast::error_code) {}
  void on_idle() {}

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    read();
  }

  void read() {
    ws_.async_read(buffer_,
                   beast::bind_front_handler(&IngestConnection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) return;  // closed; the lease is released with this object
    std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    pending_ += text;
    if (pending_.empty() || pending_.back() != '\n') pending_ += '\n';
    std::size_t pos;
    while ((pos = pending_.find('\n')) != std::string::npos) {
      std::string line = pending_.substr(0, pos);
      pending_.erase(0, pos + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      writer_.send(protocol::ack(session_->ingest_line(line)).dump());
    }
    read();
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::shared_ptr<Session> session_;
  Session::IngestLease lease_;
  FrameWriter<IngestConnection> writer_;
  std::string pending_;
};

class SubscribeConnection : public std::enable_shared_from_this<SubscribeConnection> {
 public:
  SubscribeConnection(tcp::socket&& socket, std::shared_ptr<Session> session)
      : ws_(std::move(socket)), session_(std::move(session)), writer_(*this) {}

  ~SubscribeConnection() {
    if (subscriber_) session_->unsubscribe(subscriber_->client_id());
  }

  template <class Request>
  void start(Request req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, beast::bind_front_handler(&SubscribeConnection::on_accept,
                                                    shared_from_this()));
  }

  websocket::stream<beast::tcp_stream>& ws() { return ws_; }

  void fail(beast::error_code) {
    if (subscriber_) subscriber_->close();
  }

  void on_idle() {
    if (closing_) {
      ws_.async_close(websocket::close_code::normal,
                      [self = shared_from_this()](beast::error_code) {});
    }
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    read();
  }

  void read() {
    ws_.async_read(buffer_,
                   beast::bind_front_handler(&SubscribeConnection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      if (subscriber_) subscriber_->close();
      return;
    }
    std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    handle(text);
    if (!closing_) read();
  }

  // Cues already queued for this client go out before the reply, so a reply
  // also tells the client it has seen everything emitted before its request.
  void handle(const std::string& text) {
    flush();
    try {
      auto message = protocol::parse_client_message(text);
      if (auto* hello = std::get_if<protocol::Hello>(&message)) {
        if (subscriber_) throw Error("BadMessage", "already subscribed");
        subscriber_ = session_->subscribe(hello->lang, hello->resume_from);
        writer_.send(protocol::welcome(session_->id(), subscriber_->client_id(), hello->lang).dump());
        std::weak_ptr<SubscribeConnection> weak = weak_from_this();
        subscriber_->set_notify([weak, executor = ws_.get_executor()] {
          net::post(executor, [weak] {
            if (auto self = weak.lock()) self->flush();
          });
        });
        flush();
        return;
      }
      const auto& suppress = std::get<protocol::Suppress>(message);
      if (!subscriber_) throw Error("BadMessage", "send hello first");
      bool added = session_->suppress_term(subscriber_->client_id(), suppress.term_id);
      writer_.send(protocol::suppressed(suppress.term_id, added).dump());
    } catch (const InvalidLanguage& e) {
      writer_.send(protocol::error(e.code(), e.what()).dump());
      closing_ = true;
    } catch (const Error& e) {
      writer_.send(protocol::error(e.code(), e.what()).dump());
    }
  }

  void flush() {
    if (!subscriber_) return;
    for (const auto& m : subscriber_->drain()) writer_.send(protocol::serialize(m));
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::shared_ptr<Session> session_;
  std::shared_ptr<Subscriber> subscriber_;
  FrameWriter<SubscribeConnection> writer_;
  bool closing_ = false;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket&& socket, SessionRegistry& registry, const SessionConfig& defaults)
      : stream_(std::move(socket)), registry_(registry), defaults_(defaults) {}

  void start() {
    net::dispatch(stream_.get_executor(),
                  beast::bind_front_handler(&HttpConnection::read, shared_from_this()));
  }

 private:
  void read() {
    parser_.emplace();
    parser_->body_limit(64 * 1024 * 1024);
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, *parser_,
                     beast::bind_front_handler(&HttpConnection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) return;
    auto req = parser_->release();
    if (websocket::is_upgrade(req)) return upgrade(std::move(req));
    respond(handle(req));
  }

  void upgrade(http::request<http::string_body> req) {
    static const std::regex route("^/sessions/([^/?]+)/(ingest|subscribe)(\\?.*)?$");
    std::smatch m;
    const std::string target(req.target());
    if (!std::regex_match(target, m, route))
      return respond(json_response(req, 404, protocol::error("NotFound", target)));
    try {
      auto session = registry_.session(m[1].str());
      stream_.expires_never();
      if (m[2] == "ingest") {
        auto lease = session->acquire_ingest();
        std::make_shared<IngestConnection>(stream_.release_socket(), std::move(session),
                                           std::move(lease))
            ->start(std::move(req));
      } else {
        std::make_shared<SubscribeConnection>(stream_.release_socket(), std::move(session))
            ->start(std::move(req));
      }
    } catch (const Error& e) {
      respond(json_response(req, http_status_for(e.code()), protocol::error(e.code(), e.what())));
    }
  }

  http::response<http::string_body> handle(const http::request<http::string_body>& req) {
    const std::string target(req.target());
    static const std::regex session_route("^/sessions/([^/?]+)$");
    std::smatch m;
    try {
      if (req.method() == http::verb::post && target == "/glossaries") {
        auto version = registry_.upload_glossary(req.body());
        return json_response(req, 201, {{"version", version}});
      }
      if (req.method() == http::verb::post && target == "/sessions") {
        auto session = registry_.create_session(protocol::parse_session_config(req.body(), defaults_));
        return json_response(req, 201, {{"session_id", session->id()}});
      }
      if (req.method() == http::verb::get && std::regex_match(target, m, session_route))
        return json_response(req, 200, registry_.session(m[1].str())->status());
    } catch (const Error& e) {
      return json_response(req, http_status_for(e.code()), protocol::error(e.code(), e.what()));
    }
    return json_response(req, 404, protocol::error("NotFound", req.method_string().to_string() +
                                                                   " " + target));
  }

  static http::response<http::string_body> json_response(
      const http::request<http::string_body>& req, unsigned status, const nlohmann::json& body) {
    http::response<http::string_body> res{static_cast<http::status>(status), req.version()};
    res.set(http::field::content_type, "application/json");
    res.keep_alive(req.keep_alive());
    res.body() = body.dump() + "\n";
    res.prepare_payload();
    return res;
  }

  void respond(http::response<http::string_body> res) {
    auto shared = std::make_shared<http::response<http::string_body>>(std::move(res));
    http::async_write(stream_, *shared,
                      [self = shared_from_this(), shared](beast::error_code ec, std::size_t) {
                        if (ec) return;
                        if (shared->need_eof()) {
                          beast::error_code ignored;
                          self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                          return;
                        }
                        self->read();
                      });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  std::optional<http::request_parser<http::string_body>> parser_;
  SessionRegistry& registry_;
  SessionConfig defaults_;
};

}  // namespace detail

/// Owns the acceptor and the I/O threads. stop() closes the listener,
/// flushes every session and joins the threads.
class Server {
 public:
  /// `defaults` fills fields missing from a `POST /sessions` body.
  Server(SessionRegistry& registry, const std::string& address, unsigned short port,
         SessionConfig defaults = {}, std::size_t threads = 2)
      : registry_(registry), defaults_(std::move(defaults)), acceptor_(net::make_strand(ioc_)), threads_(threads == 0 ? 1 : threads) {
    tcp::endpoint endpoint{net::ip::make_address(address), port};
    acceptor_.open(endpoint.protocol());
    acceptor_.set_option(net::socket_base::reuse_address(true));
    acceptor_.bind(endpoint);
    acceptor_.listen(net::socket_base::max_listen_connections);
  }

  ~Server() { stop(); }

  unsigned short port() const { return acceptor_.local_endpoint().port(); }

  void start() {
    accept();
    for (std::size_t i = 0; i < threads_; ++i) pool_.emplace_back([this] { ioc_.run(); });
  }

  /// Blocks until stop() is called from another thread or a signal handler.
  void wait() { join_all(); }

  void stop() {
    if (stopped_.exchange(true)) return;
    net::post(acceptor_.get_executor(), [this] {
      beast::error_code ignored;
      acceptor_.close(ignored);
    });
    registry_.shutdown();
    ioc_.stop();
    // From a handler (e.g. a signal) the pool is left for wait() to join.
    if (!ioc_.get_executor().running_in_this_thread()) join_all();
  }

  net::io_context& context() { return ioc_; }

 private:
  void join_all() {
    std::lock_guard lock(join_mutex_);
    for (auto& t : pool_)
      if (t.joinable()) t.join();
  }

  void accept() {
    acceptor_.async_accept(net::make_strand(ioc_), [this](beast::error_code ec, tcp::socket socket) {
      if (ec == net::error::operation_aborted || !acceptor_.is_open()) return;
      if (!ec) std::make_shared<detail::HttpConnection>(std::move(socket), registry_, defaults_)->start();
      accept();
    });
  }

  SessionRegistry& registry_;
  SessionConfig defaults_;
  net::io_context ioc_;
  tcp::acceptor acceptor_;
  std::size_t threads_;
  std::vector<std::thread> pool_;
  std::mutex join_mutex_;
  std::atomic<bool> stopped_{false};
};

}  // namespace cuebuddy::server
