#ifndef PIKL_HARNESS_SERVER_H_
#define PIKL_HARNESS_SERVER_H_

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "pikl/harness/session.h"

namespace pikl::harness {

struct ServerOptions {
  std::string host = "127.0.0.1";
  uint16_t port = 8080;  // 0 picks a free port
  std::string web_dir;   // static files; empty disables them
  std::string ws_path = "/ws";
};

// HTTP static files plus one websocket session per connection. Each
// connection runs `on_session` on its own thread; sessions are independent.
class WebServer {
 public:
  using SessionFn = std::function<void(Transport& transport, int64_t connection)>;
  WebServer(ServerOptions options, SessionFn on_session);
  ~WebServer();

  // Binds and starts accepting in the background. Throws ConfigError when
  // the address cannot be bound.
  void Start();
  // Stops accepting, disconnects open sessions and joins their threads.
  void Stop();
  uint16_t port() const;
  // Blocks until Stop() is called from another thread.
  void Wait();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Client side of the websocket channel, for bots and tests.
std::unique_ptr<Transport> ConnectWebSocket(const std::string& host, uint16_t port,
                                            const std::string& path = "/ws");

// Fetches one file over HTTP; returns {status, body}.
std::pair<int, std::string> HttpGet(const std::string& host, uint16_t port,
                                    const std::string& target);

}  // namespace pikl::harness

#endif  // PIKL_HARNESS_SERVER_H_
