#include "pikl/harness/server.h"

#include <filesystem>
#include <fstream>
#include <list>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast.hpp>

#include "pikl/errors.h"

namespace pikl::harness {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

class WebSocketTransport : public Transport {
 public:
  explicit WebSocketTransport(websocket::stream<tcp::socket>* ws) : ws_(ws) {}
  void Send(const std::string& text) override {
    std::lock_guard<std::mutex> lock(write_mu_);
    beast::error_code ec;
    ws_->text(true);
    ws_->write(asio::buffer(text), ec);
  }
  std::optional<std::string> Receive() override {
    beast::flat_buffer buf;
    beast::error_code ec;
    ws_->read(buf, ec);
    if (ec) return std::nullopt;
    return beast::buffers_to_string(buf.data());
  }
  void Close() override {
    beast::error_code ec;
    ws_->close(websocket::close_code::normal, ec);
  }

 private:
  websocket::stream<tcp::socket>* ws_;
  std::mutex write_mu_;
};

// Owns its io_context and stream; used by ConnectWebSocket.
class ClientTransport : public Transport {
 public:
  ClientTransport(const std::string& host, uint16_t port, const std::string& path)
      : ws_(ioc_), inner_(&ws_) {
    tcp::resolver resolver(ioc_);
    auto results = resolver.resolve(host, std::to_string(port));
    asio::connect(ws_.next_layer(), results.begin(), results.end());
    ws_.handshake(host, path);
  }
  ~ClientTransport() override { Close(); }
  void Send(const std::string& text) override { inner_.Send(text); }
  std::optional<std::string> Receive() override { return inner_.Receive(); }
  void Close() override {
    if (closed_.exchange(true)) return;
    beast::error_code ec;
    ws_.close(websocket::close_code::normal, ec);
  }

 private:
  asio::io_context ioc_;
  websocket::stream<tcp::socket> ws_;
  WebSocketTransport inner_;
  std::atomic<bool> closed_{false};
};

std::string MimeType(const std::string& path) {
  const std::string ext = std::filesystem::path(path).extension().string();
  if (ext == ".html") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  return "application/octet-stream";
}

}  // namespace

struct WebServer::Impl {
  ServerOptions options;
  SessionFn on_session;
  asio::io_context ioc;
  std::unique_ptr<tcp::acceptor> acceptor;
  std::thread accept_thread;
  std::mutex mu;
  std::condition_variable stopped_cv;
  bool stopped = false;
  std::list<std::thread> workers;
  std::list<tcp::socket*> open;
  std::atomic<int64_t> connections{0};

  void Serve(tcp::socket socket) {
    {
      std::lock_guard<std::mutex> lock(mu);
      if (stopped) return;
      open.push_back(&socket);
    }
    try {
      beast::flat_buffer buf;
      http::request<http::string_body> req;
      http::read(socket, buf, req);
      if (websocket::is_upgrade(req) && req.target() == options.ws_path) {
        websocket::stream<tcp::socket> ws(std::move(socket));
        {
          std::lock_guard<std::mutex> lock(mu);
          open.remove(&socket);
          open.push_back(&ws.next_layer());
        }
        ws.accept(req);
        WebSocketTransport t(&ws);
        const int64_t id = connections.fetch_add(1);
        try {
          on_session(t, id);
        } catch (const std::exception&) {
          // A broken session does not take the server down.
        }
        t.Close();
        std::lock_guard<std::mutex> lock(mu);
        open.remove(&ws.next_layer());
        return;
      }
      http::response<http::string_body> res;
      res.version(req.version());
      res.keep_alive(false);
      std::string target(req.target());
      if (const auto q = target.find('?'); q != std::string::npos) target.resize(q);
      if (target.empty() || target.back() == '/') target += "index.html";
      const bool traversal = target.find("..") != std::string::npos;
      const std::string file = options.web_dir + target;
      std::ifstream in(file, std::ios::binary);
      if (options.web_dir.empty() || traversal || req.method() != http::verb::get || !in ||
          std::filesystem::is_directory(file)) {
        res.result(http::status::not_found);
        res.set(http::field::content_type, "text/plain");
        res.body() = "not found\n";
      } else {
        std::ostringstream ss;
        ss << in.rdbuf();
        res.result(http::status::ok);
        res.set(http::field::content_type, MimeType(file));
        res.body() = ss.str();
      }
      res.prepare_payload();
      http::write(socket, res);
      beast::error_code ec;
      socket.shutdown(tcp::socket::shutdown_send, ec);
    } catch (const std::exception&) {
    }
    std::lock_guard<std::mutex> lock(mu);
    open.remove(&socket);
  }
};

WebServer::WebServer(ServerOptions options, SessionFn on_session) : impl_(std::make_unique<Impl>()) {
  impl_->options = std::move(options);
  impl_->on_session = std::move(on_session);
}

WebServer::~WebServer() { Stop(); }

void WebServer::Start() {
  Impl& m = *impl_;
  try {
    const tcp::endpoint ep(asio::ip::make_address(m.options.host), m.options.port);
    m.acceptor = std::make_unique<tcp::acceptor>(m.ioc);
    m.acceptor->open(ep.protocol());
    m.acceptor->set_option(asio::socket_base::reuse_address(true));
    m.acceptor->bind(ep);
    m.acceptor->listen();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("cannot listen on ") + m.options.host + ":" +
                      std::to_string(m.options.port) + ": " + e.what());
  }
  m.accept_thread = std::thread([&m] {
    while (true) {
      beast::error_code ec;
      tcp::socket socket(m.ioc);
      m.acceptor->accept(socket, ec);
      std::lock_guard<std::mutex> lock(m.mu);
      if (m.stopped) return;
      if (ec) continue;
      m.workers.emplace_back([&m, s = std::move(socket)]() mutable { m.Serve(std::move(s)); });
    }
  });
}

uint16_t WebServer::port() const { return impl_->acceptor->local_endpoint().port(); }

void WebServer::Wait() {
  std::unique_lock<std::mutex> lock(impl_->mu);
  impl_->stopped_cv.wait(lock, [&] { return impl_->stopped; });
}

void WebServer::Stop() {
  Impl& m = *impl_;
  uint16_t port = 0;
  {
    std::lock_guard<std::mutex> lock(m.mu);
    const bool running = !m.stopped && m.acceptor;
    m.stopped = true;
    m.stopped_cv.notify_all();
    if (!running) return;
    port = m.acceptor->local_endpoint().port();
    beast::error_code ec;
    for (tcp::socket* s : m.open) s->shutdown(tcp::socket::shutdown_both, ec);
  }
  // Wake the blocking accept; it sees `stopped` and returns.
  {
    asio::io_context ioc;
    tcp::socket poke(ioc);
    beast::error_code ec;
    poke.connect(tcp::endpoint(asio::ip::make_address(m.options.host), port), ec);
  }
  m.accept_thread.join();
  beast::error_code ec;
  m.acceptor->close(ec);
  std::list<std::thread> workers;
  {
    std::lock_guard<std::mutex> lock(m.mu);
    workers.swap(m.workers);
  }
  for (auto& t : workers) t.join();
}

std::unique_ptr<Transport> ConnectWebSocket(const std::string& host, uint16_t port,
                                            const std::string& path) {
  return std::make_unique<ClientTransport>(host, port, path);
}

std::pair<int, std::string> HttpGet(const std::string& host, uint16_t port,
                                    const std::string& target) {
  asio::io_context ioc;
  tcp::resolver resolver(ioc);
  tcp::socket socket(ioc);
  auto results = resolver.resolve(host, std::to_string(port));
  asio::connect(socket, results.begin(), results.end());
  http::request<http::empty_body> req(http::verb::get, target, 11);
  req.set(http::field::host, host);
  http::write(socket, req);
  beast::flat_buffer buf;
  http::response<http::string_body> res;
  http::read(socket, buf, res);
  beast::error_code ec;
  socket.shutdown(tcp::socket::shutdown_both, ec);
  return {res.result_int(), res.body()};
}

}  // namespace pikl::harness
