#pragma once

#include <memory>
#include <string>

#include "dpcl/session.hpp"

namespace dpcl {

inline constexpr int kDefaultPort = 8479;

/// REST facade over a SessionStore. Handlers hold no state of their own.
class HttpService {
 public:
  explicit HttpService(SessionStore& store);
  ~HttpService();

  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Binds without serving. Port 0 picks a free port. Returns the bound port,
  /// or -1 when binding fails.
  int bind(const std::string& host, int port);
  /// Serves on the bound socket until stop().
  bool listen();
  void stop();
  /// Blocks until the server accepts connections.
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dpcl
