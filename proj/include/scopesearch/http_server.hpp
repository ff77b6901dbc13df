#pragma once

// JSON-over-HTTP front end under /v1. Authentication is a bearer token
// issued by POST /v1/users.

#include <memory>
#include <string>

#include "scopesearch/engine.hpp"

namespace httplib {
class Server;
}

namespace scopesearch {

class HttpServer {
 public:
  explicit HttpServer(Engine& engine);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Blocks until stop().
  bool listen(const std::string& host, int port);
  /// Returns the chosen port, or -1.
  int bind_to_any_port(const std::string& host);
  /// Blocks until stop(); pairs with bind_to_any_port.
  bool listen_after_bind();
  void wait_until_ready() const;
  void stop();

 private:
  void routes();

  Engine& engine_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace scopesearch
